//! Graph mix-up: the target's explanation block joined with a partner's
//! label-irrelevant remainder by a few random cross edges.
//!
//! For a target `G_a` with explanation mask `M_a*` and a partner `G_b` with
//! `M_b*`, the merged graph has adjacency `[[A_a, A_conn], [A_connᵀ, A_b]]`,
//! mask `[[M_a*, M_conn], [M_connᵀ, I_b − M_b*]]` and features `[X_a; X_b]`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::index;
use rand::Rng;

use crate::error::{Error, Result};
use crate::gcn::GcnModel;
use crate::graph::{EdgeMask, Graph, GraphDataset};
use crate::linalg::{dot, round, Matrix};
use crate::rng;

/// Weight placed on sampled cross edges.
pub const DEFAULT_CONN_WEIGHT: f64 = 1.0;

/// Where an edge of the merged graph came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeSource {
    /// Edge `e` of the target graph.
    Target(usize),
    /// Edge `e` of the partner graph.
    Partner(usize),
    /// Sampled cross edge `k` (index into `conn_edges`).
    Conn(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct MixupResult {
    /// `n_a + n_b` nodes; label and id copied from the target.
    pub merged: Graph,
    pub mask: EdgeMask,
    /// Target node `v` sits at `index_map_a[v]` in the merged graph.
    pub index_map_a: Vec<usize>,
    pub index_map_b: Vec<usize>,
    /// Cross edges as `(target node, partner node)` in local indices, sorted.
    pub conn_edges: Vec<(usize, usize)>,
    /// Provenance of every merged edge, aligned with `merged.edges()`.
    pub edge_source: Vec<EdgeSource>,
}

/// Number of cross edges for a target with `target_edges` edges.
pub fn cross_edge_count(eta_fraction: f64, target_edges: usize) -> usize {
    let eta = round(eta_fraction * target_edges as f64);
    if eta < 1.0 {
        1
    } else {
        eta as usize
    }
}

/// Mix-up with the default cross-edge weight.
pub fn mixup_graphs(
    ga: &Graph,
    ma_star: &EdgeMask,
    gb: &Graph,
    mb_star: &EdgeMask,
    eta_fraction: f64,
    seed: u64,
) -> Result<MixupResult> {
    mixup_graphs_with(ga, ma_star, gb, mb_star, eta_fraction, seed, DEFAULT_CONN_WEIGHT)
}

/// Builds the merged graph. Cross edges are `η = max(1, round(eta_fraction·|E_a|))`
/// node pairs sampled uniformly without replacement from `V_a × V_b`.
pub fn mixup_graphs_with(
    ga: &Graph,
    ma_star: &EdgeMask,
    gb: &Graph,
    mb_star: &EdgeMask,
    eta_fraction: f64,
    seed: u64,
    conn_weight: f64,
) -> Result<MixupResult> {
    ma_star.check_conforms(ga)?;
    mb_star.check_conforms(gb)?;
    if ga.d() != gb.d() {
        return Err(Error::Conformance(format!(
            "feature dimensions differ: {} vs {}",
            ga.d(),
            gb.d()
        )));
    }
    if !(eta_fraction >= 0.0 && eta_fraction.is_finite()) {
        return Err(Error::Validation(format!("eta_fraction = {eta_fraction}")));
    }
    if !(0.0..=1.0).contains(&conn_weight) {
        return Err(Error::Validation(format!("conn_weight = {conn_weight}")));
    }
    let (na, nb) = (ga.n(), gb.n());
    let eta = cross_edge_count(eta_fraction, ga.num_edges());
    if eta > na * nb {
        return Err(Error::Range(format!("eta = {eta} exceeds {na} x {nb} node pairs")));
    }
    let mut rng = rng::stream(seed, &[rng::ROLE_MIXUP]);
    let mut conn_edges: Vec<(usize, usize)> = index::sample(&mut rng, na * nb, eta)
        .into_iter()
        .map(|p| (p / nb, p % nb))
        .collect();
    conn_edges.sort_unstable();

    let mut x = Matrix::zeros(na + nb, ga.d());
    x.as_mut_slice()[..na * ga.d()].copy_from_slice(ga.x().as_slice());
    x.as_mut_slice()[na * ga.d()..].copy_from_slice(gb.x().as_slice());
    let edges = ga
        .edges()
        .iter()
        .copied()
        .chain(gb.edges().iter().map(|&(i, j)| (i + na, j + na)))
        .chain(conn_edges.iter().map(|&(u, v)| (u, v + na)));
    let merged = Graph::new(ga.id, x, edges, ga.label)?;

    let mut weights = vec![0.0; merged.num_edges()];
    let mut edge_source = vec![EdgeSource::Conn(0); merged.num_edges()];
    let mut place = |i: usize, j: usize, w: f64, src: EdgeSource| -> Result<()> {
        let e = merged
            .edge_index(i, j)
            .ok_or_else(|| Error::Conformance(format!("merged edge ({i}, {j}) missing")))?;
        weights[e] = w;
        edge_source[e] = src;
        Ok(())
    };
    for (e, (&(i, j), &w)) in ga.edges().iter().zip(ma_star.weights()).enumerate() {
        place(i, j, w, EdgeSource::Target(e))?;
    }
    for (e, (&(i, j), &w)) in gb.edges().iter().zip(mb_star.weights()).enumerate() {
        place(i + na, j + na, 1.0 - w, EdgeSource::Partner(e))?;
    }
    for (k, &(u, v)) in conn_edges.iter().enumerate() {
        place(u, v + na, conn_weight, EdgeSource::Conn(k))?;
    }
    let mask = EdgeMask::for_graph(&merged, weights)?;
    Ok(MixupResult {
        merged,
        mask,
        index_map_a: (0..na).collect(),
        index_map_b: (na..na + nb).collect(),
        conn_edges,
        edge_source,
    })
}

impl MixupResult {
    /// Splits a gradient over merged edge weights into gradients over the
    /// target mask and the partner mask (the partner block enters as `1 − m`).
    pub fn split_edge_grad(&self, d_merged: &[f64], n_target_edges: usize, n_partner_edges: usize) -> (Vec<f64>, Vec<f64>) {
        let mut da = vec![0.0; n_target_edges];
        let mut db = vec![0.0; n_partner_edges];
        for (src, &d) in self.edge_source.iter().zip(d_merged) {
            match *src {
                EdgeSource::Target(e) => da[e] += d,
                EdgeSource::Partner(e) => db[e] -= d,
                EdgeSource::Conn(_) => {}
            }
        }
        (da, db)
    }
}

/// Orders two candidates by similarity `hᵀh'` to the target embedding:
/// returns `(positive, negative)`. Ties go to the smaller id.
pub fn order_by_similarity(target: &[f64], b: (u64, &[f64]), c: (u64, &[f64])) -> (u64, u64) {
    let sb = dot(target, b.1);
    let sc = dot(target, c.1);
    if sb > sc || (sb == sc && b.0 <= c.0) {
        (b.0, c.0)
    } else {
        (c.0, b.0)
    }
}

/// Draws two distinct entries of `pool` other than `exclude`.
pub fn sample_two(pool: &[usize], exclude: Option<usize>, rng: &mut impl Rng) -> Result<(usize, usize)> {
    let cands: Vec<usize> = pool.iter().copied().filter(|&i| Some(i) != exclude).collect();
    if cands.len() < 2 {
        return Err(Error::Sampling(format!(
            "need at least two candidate neighbors, have {}",
            cands.len()
        )));
    }
    let picked = index::sample(rng, cands.len(), 2);
    Ok((cands[picked.index(0)], cands[picked.index(1)]))
}

/// Samples two graphs from the explainer-training fold (excluding the
/// target) and returns them as `(positive, negative)` by embedding similarity.
pub fn sample_neighbors<'a>(
    target: &Graph,
    ds: &'a GraphDataset,
    model: &GcnModel,
    seed: u64,
) -> Result<(&'a Graph, &'a Graph)> {
    let pool = &ds.splits.explainer_train;
    if pool.len() < 3 {
        return Err(Error::Sampling(format!(
            "explainer-train split has {} graphs, need at least 3",
            pool.len()
        )));
    }
    let exclude = pool.iter().copied().find(|&i| ds.graphs[i].id == target.id);
    let mut rng = rng::stream(seed, &[rng::ROLE_NEIGHBORS, target.id]);
    let (b, c) = sample_two(pool, exclude, &mut rng)?;
    let (gb, gc) = (&ds.graphs[b], &ds.graphs[c]);
    let h = model.forward(target, None)?.embedding;
    let hb = model.forward(gb, None)?.embedding;
    let hc = model.forward(gc, None)?.embedding;
    let (pos, _) = order_by_similarity(&h, (gb.id, &hb), (gc.id, &hc));
    Ok(if pos == gb.id { (gb, gc) } else { (gc, gb) })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(id: u64, n: usize, edges: &[(usize, usize)]) -> Graph {
        Graph::new(id, Matrix::filled(n, 2, id as f64), edges.iter().copied(), 1.0 + id as f64).unwrap()
    }

    #[test]
    fn block_placement_three_plus_two() {
        let ga = small(1, 3, &[(0, 1), (1, 2)]);
        let gb = small(2, 2, &[(0, 1)]);
        let ma = EdgeMask::for_graph(&ga, vec![0.2, 0.7]).unwrap();
        let mb = EdgeMask::ones(&gb);
        let r = mixup_graphs(&ga, &ma, &gb, &mb, 0.03, 5).unwrap();
        assert_eq!(r.merged.n(), 5);
        assert_eq!(r.merged.label, ga.label);
        let dense = r.mask.to_dense(&r.merged).unwrap();
        let da = ma.to_dense(&ga).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(dense.get(i, j), da.get(i, j));
            }
        }
        // full partner explanation leaves an empty remainder block
        assert_eq!(dense.get(3, 4), 0.0);
        assert_eq!(r.conn_edges.len(), 1);
        assert_eq!(r.merged.x().row(4), gb.x().row(1));
    }

    #[test]
    fn eta_counts() {
        assert_eq!(cross_edge_count(0.03, 100), 3);
        assert_eq!(cross_edge_count(0.03, 10), 1);
        assert_eq!(cross_edge_count(0.0, 10), 1);
        assert_eq!(cross_edge_count(0.03, 50), 2);
    }

    #[test]
    fn errors() {
        let ga = small(1, 2, &[(0, 1)]);
        let gb = Graph::new(2, Matrix::filled(1, 3, 1.0), [], 0.0).unwrap();
        let r = mixup_graphs(&ga, &EdgeMask::ones(&ga), &gb, &EdgeMask::ones(&gb), 0.03, 0);
        assert!(matches!(r, Err(Error::Conformance(_))));
        let gb = small(2, 1, &[]);
        let r = mixup_graphs(&ga, &EdgeMask::ones(&ga), &gb, &EdgeMask::ones(&gb), 3.0, 0);
        assert!(matches!(r, Err(Error::Range(_))));
    }

    #[test]
    fn similarity_ordering() {
        let h = [1.0, 0.0];
        assert_eq!(order_by_similarity(&h, (7, &[5.0, 0.0]), (3, &[2.0, 0.0])), (7, 3));
        assert_eq!(order_by_similarity(&h, (7, &[1.0, 0.0]), (3, &[1.0, 9.0])), (3, 7));
        // orthogonal versus parallel
        assert_eq!(order_by_similarity(&h, (1, &[0.0, 4.0]), (2, &[0.5, 0.0])), (2, 1));
    }

    #[test]
    fn split_gradient_signs() {
        let ga = small(1, 3, &[(0, 1), (1, 2)]);
        let gb = small(2, 3, &[(0, 1), (0, 2)]);
        let r = mixup_graphs(&ga, &EdgeMask::ones(&ga), &gb, &EdgeMask::zeros(&gb), 0.5, 1).unwrap();
        let d = vec![1.0; r.merged.num_edges()];
        let (da, db) = r.split_edge_grad(&d, 2, 2);
        assert_eq!(da, vec![1.0, 1.0]);
        assert_eq!(db, vec![-1.0, -1.0]);
    }
}
