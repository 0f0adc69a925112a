//! Benchmark generators: BA-Motif-Volume, BA-Motif-Counting and Triangles,
//! plus the integrity checks used when loading the preprocessed Crippen file.
//!
//! All generators are pure functions of their [`GenConfig`]; graph `k` draws
//! from its own random stream keyed by `(seed, k)`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::error::{Error, Result};
use crate::graph::{EdgeMask, Graph, GraphDataset, Splits};
use crate::linalg::Matrix;
use crate::rng::{self, StreamRng};

pub const GENERATOR_VERSION: &str = "regxplain-datasets/1";

/// Edges of the 5-node house motif: a square `0-1-2-3` with roof node `4`.
pub const HOUSE_EDGES: [(usize, usize); 6] = [(0, 1), (1, 2), (2, 3), (0, 3), (0, 4), (1, 4)];

/// The four benchmark families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DatasetKind {
    BaMotifVolume,
    BaMotifCounting,
    Triangles,
    Crippen,
}

impl DatasetKind {
    pub const ALL: [DatasetKind; 4] = [
        DatasetKind::BaMotifVolume,
        DatasetKind::BaMotifCounting,
        DatasetKind::Triangles,
        DatasetKind::Crippen,
    ];

    pub fn name(self) -> &'static str {
        match self {
            DatasetKind::BaMotifVolume => "ba-motif-volume",
            DatasetKind::BaMotifCounting => "ba-motif-counting",
            DatasetKind::Triangles => "triangles",
            DatasetKind::Crippen => "crippen",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == name)
    }

    /// Whether explanations have a fixed size (top-k hardening) or not.
    pub fn fixed_size_explanations(self) -> bool {
        matches!(self, DatasetKind::BaMotifVolume)
    }
}

/// Generator parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct GenConfig {
    pub n_graphs: usize,
    pub seed: u64,
    /// BA base size for BA-Motif-Volume.
    pub base_size: usize,
    /// Inclusive BA base-size range for BA-Motif-Counting.
    pub base_size_range: (usize, usize),
    /// Edges added per new BA node.
    pub ba_attach: usize,
    pub motif_size: usize,
    pub feature_dim: usize,
    pub pad_to: usize,
    pub motif_count_range: (usize, usize),
    pub er_nodes: usize,
    pub er_prob: f64,
}

impl Default for GenConfig {
    fn default() -> Self {
        Self {
            n_graphs: 1000,
            seed: 0,
            base_size: 20,
            base_size_range: (10, 40),
            ba_attach: 1,
            motif_size: 5,
            feature_dim: 10,
            pad_to: 70,
            motif_count_range: (1, 10),
            er_nodes: 30,
            er_prob: 0.2,
        }
    }
}

impl GenConfig {
    pub fn triangles() -> Self {
        Self {
            n_graphs: 5000,
            ..Self::default()
        }
    }

    pub fn with_graphs(mut self, n: usize) -> Self {
        self.n_graphs = n;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("n_graphs", self.n_graphs),
            ("base_size", self.base_size),
            ("ba_attach", self.ba_attach),
            ("feature_dim", self.feature_dim),
            ("pad_to", self.pad_to),
            ("er_nodes", self.er_nodes),
            ("base_size_range.0", self.base_size_range.0),
            ("motif_count_range.0", self.motif_count_range.0),
        ];
        for (name, v) in positive {
            if v == 0 {
                return Err(Error::Validation(format!("{name} must be positive")));
            }
        }
        if self.motif_size != HOUSE_EDGES.len() - 1 {
            return Err(Error::Validation(format!(
                "motif_size must be 5 (house motif), got {}",
                self.motif_size
            )));
        }
        if !(self.er_prob > 0.0 && self.er_prob < 1.0) {
            return Err(Error::Validation(format!("er_prob {} not in (0, 1)", self.er_prob)));
        }
        if self.base_size_range.0 > self.base_size_range.1 {
            return Err(Error::Validation("empty base_size_range".into()));
        }
        if self.motif_count_range.0 > self.motif_count_range.1 {
            return Err(Error::Validation("empty motif_count_range".into()));
        }
        if self.base_size <= self.ba_attach || self.base_size_range.0 <= self.ba_attach {
            return Err(Error::Validation("BA base must exceed the attachment parameter".into()));
        }
        Ok(())
    }

    fn validate_padding(&self) -> Result<()> {
        let need = self.base_size_range.0 + self.motif_size * self.motif_count_range.1;
        if self.pad_to < need {
            return Err(Error::Validation(format!(
                "pad_to {} too small: smallest base plus {} motifs needs {need} nodes",
                self.pad_to, self.motif_count_range.1
            )));
        }
        Ok(())
    }
}

fn graph_rng(seed: u64, id: usize) -> StreamRng {
    rng::stream(seed, &[rng::ROLE_GRAPH, id as u64])
}

/// Barabási–Albert preferential attachment on `n` nodes with `m` edges per
/// new node, seeded with a star on `m + 1` nodes.
pub fn barabasi_albert(n: usize, m: usize, rng: &mut StreamRng) -> Vec<(usize, usize)> {
    let mut edges = Vec::new();
    let mut repeated: Vec<usize> = Vec::new();
    let start = (m + 1).min(n);
    for v in 1..start {
        edges.push((0, v));
        repeated.push(0);
        repeated.push(v);
    }
    for v in start..n {
        let mut targets: Vec<usize> = Vec::with_capacity(m);
        while targets.len() < m {
            let t = repeated[rng.gen_range(0..repeated.len())];
            if !targets.contains(&t) {
                targets.push(t);
            }
        }
        for t in targets {
            edges.push((t, v));
            repeated.push(t);
            repeated.push(v);
        }
    }
    edges
}

/// Attaches house motifs after `base_n` base nodes. Returns all edges, the
/// indices of the motif-internal edges in that list, and motif node lists.
fn attach_houses(
    base_edges: Vec<(usize, usize)>,
    base_n: usize,
    count: usize,
    rng: &mut StreamRng,
) -> (Vec<(usize, usize)>, Vec<(usize, usize)>, Vec<[usize; 5]>) {
    let mut edges = base_edges;
    let mut motif_edges = Vec::new();
    let mut motifs = Vec::new();
    for k in 0..count {
        let off = base_n + 5 * k;
        for &(a, b) in &HOUSE_EDGES {
            edges.push((off + a, off + b));
            motif_edges.push((off + a, off + b));
        }
        let anchor = rng.gen_range(0..base_n);
        let motif_node = off + rng.gen_range(0..5);
        edges.push((anchor, motif_node));
        motifs.push([off, off + 1, off + 2, off + 3, off + 4]);
    }
    (edges, motif_edges, motifs)
}

fn binary_mask(g: &Graph, positives: &[(usize, usize)]) -> Result<EdgeMask> {
    let mut w = vec![0.0; g.num_edges()];
    for &(i, j) in positives {
        let e = g
            .edge_index(i, j)
            .ok_or_else(|| Error::Validation(format!("gt edge ({i}, {j}) missing")))?;
        w[e] = 1.0;
    }
    EdgeMask::for_graph(g, w)
}

fn finish(name: &str, cfg: &GenConfig, graphs: Vec<Graph>) -> Result<GraphDataset> {
    let splits = Splits::ratio_8_1_1(graphs.len(), cfg.seed);
    GraphDataset::new(name, cfg.seed, GENERATOR_VERSION, graphs, splits)
}

/// One BA-Motif-Volume graph plus the node indices of its motif.
pub fn ba_motif_volume_graph(cfg: &GenConfig, id: usize) -> Result<(Graph, [usize; 5])> {
    let mut rng = graph_rng(cfg.seed, id);
    let base = barabasi_albert(cfg.base_size, cfg.ba_attach, &mut rng);
    let (edges, motif_edges, motifs) = attach_houses(base, cfg.base_size, 1, &mut rng);
    let n = cfg.base_size + cfg.motif_size;
    let mut x = Matrix::zeros(n, cfg.feature_dim);
    for v in x.as_mut_slice() {
        *v = rng.gen_range(0.0..=100.0);
    }
    let motif = motifs[0];
    let label: f64 = motif.iter().flat_map(|&v| x.row(v).iter()).sum();
    let g = Graph::new(id as u64, x, edges, label)?;
    let gt = binary_mask(&g, &motif_edges)?;
    Ok((g.with_gt_mask(gt)?, motif))
}

/// BA base graph plus one house motif; node features uniform in [0, 100];
/// label is the sum of every feature entry on the motif nodes.
pub fn gen_ba_motif_volume(cfg: &GenConfig) -> Result<GraphDataset> {
    cfg.validate()?;
    let graphs = (0..cfg.n_graphs)
        .map(|id| ba_motif_volume_graph(cfg, id).map(|(g, _)| g))
        .collect::<Result<Vec<_>>>()?;
    finish(DatasetKind::BaMotifVolume.name(), cfg, graphs)
}

/// One BA-Motif-Counting graph and its motif count.
pub fn ba_motif_counting_graph(cfg: &GenConfig, id: usize) -> Result<(Graph, usize)> {
    let mut rng = graph_rng(cfg.seed, id);
    let (klo, khi) = cfg.motif_count_range;
    let k = rng.gen_range(klo..=khi);
    let (blo, bhi) = cfg.base_size_range;
    let bhi = bhi.min(cfg.pad_to - cfg.motif_size * k);
    let base_n = rng.gen_range(blo..=bhi);
    let base = barabasi_albert(base_n, cfg.ba_attach, &mut rng);
    let (edges, motif_edges, _) = attach_houses(base, base_n, k, &mut rng);
    // remaining nodes up to pad_to stay isolated
    let x = Matrix::filled(cfg.pad_to, cfg.feature_dim, 1.0);
    let g = Graph::new(id as u64, x, edges, k as f64)?;
    let gt = binary_mask(&g, &motif_edges)?;
    Ok((g.with_gt_mask(gt)?, k))
}

/// BA base of random size with `k` house motifs, padded with isolated nodes
/// to `pad_to`; all-ones features; label `k`.
pub fn gen_ba_motif_counting(cfg: &GenConfig) -> Result<GraphDataset> {
    cfg.validate()?;
    cfg.validate_padding()?;
    let graphs = (0..cfg.n_graphs)
        .map(|id| ba_motif_counting_graph(cfg, id).map(|(g, _)| g))
        .collect::<Result<Vec<_>>>()?;
    finish(DatasetKind::BaMotifCounting.name(), cfg, graphs)
}

/// Erdős–Rényi `G(m, p)` edge list.
pub fn erdos_renyi(m: usize, p: f64, rng: &mut StreamRng) -> Vec<(usize, usize)> {
    let mut edges = Vec::new();
    for i in 0..m {
        for j in (i + 1)..m {
            if rng.gen::<f64>() < p {
                edges.push((i, j));
            }
        }
    }
    edges
}

/// Builds a Triangles-style graph from an arbitrary edge list: all-ones
/// features, label = triangle count, ground truth = edges on a triangle.
pub fn triangle_graph(
    id: u64,
    n: usize,
    d: usize,
    edges: impl IntoIterator<Item = (usize, usize)>,
) -> Result<Graph> {
    let g = Graph::new(id, Matrix::filled(n, d, 1.0), edges, 0.0)?;
    let label = count_triangles(&g) as f64;
    let gt = EdgeMask::for_graph(&g, triangle_edge_indicator(&g))?;
    let mut g = g.with_gt_mask(gt)?;
    g.label = label;
    Ok(g)
}

/// ER(`er_nodes`, `er_prob`) graphs labelled with their triangle count.
pub fn gen_triangles(cfg: &GenConfig) -> Result<GraphDataset> {
    cfg.validate()?;
    let graphs = (0..cfg.n_graphs)
        .map(|id| {
            let mut rng = graph_rng(cfg.seed, id);
            let edges = erdos_renyi(cfg.er_nodes, cfg.er_prob, &mut rng);
            triangle_graph(id as u64, cfg.er_nodes, cfg.feature_dim, edges)
        })
        .collect::<Result<Vec<_>>>()?;
    finish(DatasetKind::Triangles.name(), cfg, graphs)
}

/// Exact triangle count by enumerating edge/neighbor intersections.
pub fn count_triangles(g: &Graph) -> u64 {
    let nb = g.neighbors();
    let mut count = 0;
    for &(i, j) in g.edges() {
        // count k > j adjacent to both, so each triangle i<j<k is seen once
        count += nb[i]
            .iter()
            .filter(|&&k| k > j && nb[j].binary_search(&k).is_ok())
            .count() as u64;
    }
    count
}

/// 1.0 on every edge that closes at least one triangle, else 0.0.
pub fn triangle_edge_indicator(g: &Graph) -> Vec<f64> {
    let nb = g.neighbors();
    g.edges()
        .iter()
        .map(|&(i, j)| {
            let shared = nb[i].iter().any(|k| nb[j].binary_search(k).is_ok());
            if shared {
                1.0
            } else {
                0.0
            }
        })
        .collect()
}

/// Verifies that every ground-truth edge weight equals the mean of its
/// endpoint weights within `tol`.
pub fn check_endpoint_means(g: &Graph, node_weights: &[f64], tol: f64) -> Result<()> {
    if node_weights.len() != g.n() {
        return Err(Error::DataIntegrity(format!(
            "graph {}: {} node weights for {} nodes",
            g.id,
            node_weights.len(),
            g.n()
        )));
    }
    let gt = g
        .gt_mask()
        .ok_or_else(|| Error::DataIntegrity(format!("graph {} has no gt edges", g.id)))?;
    for (&(i, j), &w) in g.edges().iter().zip(gt.weights()) {
        let mean = 0.5 * (node_weights[i] + node_weights[j]);
        if (w - mean).abs() > tol {
            return Err(Error::DataIntegrity(format!(
                "graph {}: edge ({i}, {j}) weight {w} != endpoint mean {mean}",
                g.id
            )));
        }
    }
    Ok(())
}

/// Checks that features are one-hot rows.
pub fn check_one_hot(g: &Graph) -> Result<()> {
    for v in 0..g.n() {
        let row = g.x().row(v);
        let ones = row.iter().filter(|&&x| x == 1.0).count();
        let zeros = row.iter().filter(|&&x| x == 0.0).count();
        if ones != 1 || ones + zeros != row.len() {
            return Err(Error::DataIntegrity(format!(
                "graph {}: node {v} features are not one-hot",
                g.id
            )));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn complete(n: usize) -> Vec<(usize, usize)> {
        let mut e = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                e.push((i, j));
            }
        }
        e
    }

    #[test]
    fn triangle_fixtures() {
        assert_eq!(count_triangles(&triangle_graph(0, 3, 1, complete(3)).unwrap()), 1);
        assert_eq!(
            count_triangles(&triangle_graph(0, 4, 1, [(0, 1), (1, 2), (2, 3), (0, 3)]).unwrap()),
            0
        );
        assert_eq!(count_triangles(&triangle_graph(0, 4, 1, complete(4)).unwrap()), 4);
        let empty = triangle_graph(0, 5, 1, []).unwrap();
        assert_eq!(empty.label, 0.0);
        assert!(empty.gt_mask().unwrap().is_empty());
    }

    #[test]
    fn ba_is_a_tree_for_m1() {
        let mut r = rng::stream(1, &[]);
        let e = barabasi_albert(20, 1, &mut r);
        assert_eq!(e.len(), 19);
        let g = Graph::new(0, Matrix::filled(20, 1, 1.0), e, 0.0).unwrap();
        assert_eq!(count_triangles(&g), 0);
    }

    #[test]
    fn ba_with_m2_has_expected_edge_count() {
        let mut r = rng::stream(2, &[]);
        let e = barabasi_albert(30, 2, &mut r);
        // star on 3 nodes (2 edges) then 27 nodes × 2
        assert_eq!(e.len(), 2 + 27 * 2);
        Graph::new(0, Matrix::filled(30, 1, 1.0), e, 0.0).unwrap();
    }

    #[test]
    fn volume_graph_structure() {
        let cfg = GenConfig::default();
        let (g, motif) = ba_motif_volume_graph(&cfg, 3).unwrap();
        assert_eq!(g.n(), 25);
        assert_eq!(g.num_edges(), 19 + 6 + 1);
        assert_eq!(g.gt_mask().unwrap().edge_sum(), 6.0);
        let brute: f64 = motif
            .iter()
            .map(|&v| (0..g.d()).map(|c| g.x().get(v, c)).sum::<f64>())
            .sum();
        assert!((brute - g.label).abs() <= 1e-12 * g.label);
    }

    #[test]
    fn counting_padding_validation() {
        let cfg = GenConfig {
            pad_to: 30,
            ..GenConfig::default()
        };
        assert!(matches!(gen_ba_motif_counting(&cfg), Err(Error::Validation(_))));
    }

    #[test]
    fn counting_graphs_fit_padding() {
        let cfg = GenConfig::default().with_graphs(50);
        for id in 0..50 {
            let (g, k) = ba_motif_counting_graph(&cfg, id).unwrap();
            assert_eq!(g.n(), 70);
            assert_eq!(g.gt_mask().unwrap().edge_sum(), 6.0 * k as f64);
            assert_eq!(g.label, k as f64);
        }
    }

    #[test]
    fn config_validation() {
        let bad = GenConfig {
            er_prob: 1.0,
            ..GenConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = GenConfig {
            n_graphs: 0,
            ..GenConfig::default()
        };
        assert!(gen_triangles(&bad).is_err());
    }

    #[test]
    fn endpoint_mean_check() {
        let g = Graph::new(0, Matrix::filled(2, 1, 1.0), [(0, 1)], 0.0)
            .unwrap()
            .with_gt_mask(EdgeMask::new(2, vec![0.3]).unwrap())
            .unwrap();
        check_endpoint_means(&g, &[0.2, 0.4], 1e-9).unwrap();
        assert!(matches!(
            check_endpoint_means(&g, &[0.2, 0.5], 1e-9),
            Err(Error::DataIntegrity(_))
        ));
    }
}
