//! Graph data model and mask algebra.
//!
//! Graphs are undirected and simple. The edge set is stored once, as pairs
//! `(i, j)` with `i < j` in row-major (lexicographic) order, and every
//! [`EdgeMask`] is a weight vector aligned with that list. A mask is therefore
//! symmetric and supported on the adjacency by construction; the dense `n×n`
//! views are produced on demand.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::rng;

/// An undirected graph with node features and a scalar regression label.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    pub id: u64,
    n: usize,
    x: Matrix,
    edges: Vec<(usize, usize)>,
    pub label: f64,
    gt_mask: Option<EdgeMask>,
}

impl Graph {
    /// Builds a graph from an edge list. Pairs may come in either orientation;
    /// self loops, out-of-range endpoints and repeated edges are rejected.
    pub fn new(
        id: u64,
        x: Matrix,
        edges: impl IntoIterator<Item = (usize, usize)>,
        label: f64,
    ) -> Result<Self> {
        let n = x.rows();
        if n == 0 {
            return Err(Error::Validation(format!("graph {id} has no nodes")));
        }
        let mut list: Vec<(usize, usize)> = Vec::new();
        for (a, b) in edges {
            if a == b {
                return Err(Error::Validation(format!("graph {id}: self loop on node {a}")));
            }
            if a >= n || b >= n {
                return Err(Error::Validation(format!(
                    "graph {id}: edge ({a}, {b}) out of range for {n} nodes"
                )));
            }
            list.push(if a < b { (a, b) } else { (b, a) });
        }
        list.sort_unstable();
        let before = list.len();
        list.dedup();
        if list.len() != before {
            return Err(Error::Validation(format!("graph {id}: repeated edge")));
        }
        Ok(Self {
            id,
            n,
            x,
            edges: list,
            label,
            gt_mask: None,
        })
    }

    /// Builds a graph from a dense adjacency; it must be binary, symmetric and
    /// have an empty diagonal.
    pub fn from_adjacency(id: u64, x: Matrix, a: &Matrix, label: f64) -> Result<Self> {
        let n = x.rows();
        if a.rows() != n || a.cols() != n {
            return Err(Error::Conformance(format!(
                "adjacency is {}x{}, features have {n} rows",
                a.rows(),
                a.cols()
            )));
        }
        let mut edges = Vec::new();
        for i in 0..n {
            if a.get(i, i) != 0.0 {
                return Err(Error::Validation(format!("nonzero diagonal at {i}")));
            }
            for j in 0..n {
                let v = a.get(i, j);
                if v != 0.0 && v != 1.0 {
                    return Err(Error::Validation(format!("adjacency entry ({i}, {j}) = {v}")));
                }
                if v != a.get(j, i) {
                    return Err(Error::Validation(format!("adjacency asymmetric at ({i}, {j})")));
                }
                if i < j && v == 1.0 {
                    edges.push((i, j));
                }
            }
        }
        Self::new(id, x, edges, label)
    }

    /// Attaches a ground-truth explanation mask.
    pub fn with_gt_mask(mut self, mask: EdgeMask) -> Result<Self> {
        mask.check_conforms(&self)?;
        self.gt_mask = Some(mask);
        Ok(self)
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn d(&self) -> usize {
        self.x.cols()
    }

    #[inline]
    pub fn x(&self) -> &Matrix {
        &self.x
    }

    /// Undirected edges, `i < j`, lexicographic order.
    #[inline]
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    #[inline]
    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn gt_mask(&self) -> Option<&EdgeMask> {
        self.gt_mask.as_ref()
    }

    /// Position of edge `{i, j}` in [`Graph::edges`].
    pub fn edge_index(&self, i: usize, j: usize) -> Option<usize> {
        let key = if i < j { (i, j) } else { (j, i) };
        self.edges.binary_search(&key).ok()
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        i != j && self.edge_index(i, j).is_some()
    }

    /// Dense 0/1 adjacency.
    pub fn adjacency(&self) -> Matrix {
        let mut a = Matrix::zeros(self.n, self.n);
        for &(i, j) in &self.edges {
            a.set(i, j, 1.0);
            a.set(j, i, 1.0);
        }
        a
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.n];
        for &(i, j) in &self.edges {
            deg[i] += 1;
            deg[j] += 1;
        }
        deg
    }

    /// Neighbor lists, each sorted ascending.
    pub fn neighbors(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.n];
        for &(i, j) in &self.edges {
            adj[i].push(j);
            adj[j].push(i);
        }
        for a in &mut adj {
            a.sort_unstable();
        }
        adj
    }

    /// Copy of this graph without its ground-truth mask.
    pub fn without_gt(&self) -> Graph {
        Graph {
            gt_mask: None,
            ..self.clone()
        }
    }

    /// Relabels nodes so that old node `v` becomes `perm[v]`. Features, edges
    /// and the ground-truth mask move with their nodes.
    pub fn relabel(&self, perm: &[usize]) -> Result<Graph> {
        if perm.len() != self.n {
            return Err(Error::Conformance(format!(
                "permutation of length {} for {} nodes",
                perm.len(),
                self.n
            )));
        }
        let mut seen = vec![false; self.n];
        for &p in perm {
            if p >= self.n || seen[p] {
                return Err(Error::Validation(String::from("not a permutation")));
            }
            seen[p] = true;
        }
        let mut x = Matrix::zeros(self.n, self.d());
        for v in 0..self.n {
            x.row_mut(perm[v]).copy_from_slice(self.x.row(v));
        }
        let mut g = Graph::new(
            self.id,
            x,
            self.edges.iter().map(|&(i, j)| (perm[i], perm[j])),
            self.label,
        )?;
        if let Some(m) = &self.gt_mask {
            let relabeled = m.relabel(self, &g, perm)?;
            g = g.with_gt_mask(relabeled)?;
        }
        Ok(g)
    }
}

/// Symmetric `[0, 1]` edge weights supported on a graph's adjacency, stored
/// per undirected edge in the owning graph's edge order.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeMask {
    n: usize,
    weights: Vec<f64>,
}

impl EdgeMask {
    /// Wraps per-edge weights for a graph with `n` nodes.
    pub fn new(n: usize, weights: Vec<f64>) -> Result<Self> {
        for (e, &w) in weights.iter().enumerate() {
            if !(0.0..=1.0).contains(&w) {
                return Err(Error::Validation(format!("mask weight {w} on edge {e} outside [0, 1]")));
            }
        }
        Ok(Self { n, weights })
    }

    /// Mask with weights already known to lie in [0, 1] (clamped otherwise).
    pub(crate) fn from_weights_clamped(n: usize, weights: Vec<f64>) -> Self {
        let weights = weights.into_iter().map(|w| w.clamp(0.0, 1.0)).collect();
        Self { n, weights }
    }

    pub fn for_graph(g: &Graph, weights: Vec<f64>) -> Result<Self> {
        let m = Self::new(g.n(), weights)?;
        m.check_conforms(g)?;
        Ok(m)
    }

    pub fn filled(g: &Graph, value: f64) -> Result<Self> {
        Self::new(g.n(), vec![value; g.num_edges()])
    }

    pub fn ones(g: &Graph) -> Self {
        Self {
            n: g.n(),
            weights: vec![1.0; g.num_edges()],
        }
    }

    pub fn zeros(g: &Graph) -> Self {
        Self {
            n: g.n(),
            weights: vec![0.0; g.num_edges()],
        }
    }

    /// Reads a dense `n×n` matrix. Off-support entries must be zero; the
    /// result is symmetrized by averaging `(m + mᵀ) / 2`.
    pub fn from_dense(g: &Graph, m: &Matrix) -> Result<Self> {
        let n = g.n();
        if m.rows() != n || m.cols() != n {
            return Err(Error::Conformance(format!(
                "mask is {}x{}, graph has {n} nodes",
                m.rows(),
                m.cols()
            )));
        }
        for i in 0..n {
            for j in 0..n {
                let v = m.get(i, j);
                if !(0.0..=1.0).contains(&v) {
                    return Err(Error::Validation(format!("mask entry ({i}, {j}) = {v}")));
                }
                if v > 0.0 && !g.has_edge(i, j) {
                    return Err(Error::Conformance(format!(
                        "mask entry ({i}, {j}) = {v} on a non-edge"
                    )));
                }
            }
        }
        let weights = g
            .edges()
            .iter()
            .map(|&(i, j)| 0.5 * (m.get(i, j) + m.get(j, i)))
            .collect();
        Self::new(n, weights)
    }

    pub fn to_dense(&self, g: &Graph) -> Result<Matrix> {
        self.check_conforms(g)?;
        let mut m = Matrix::zeros(g.n(), g.n());
        for (&(i, j), &w) in g.edges().iter().zip(&self.weights) {
            m.set(i, j, w);
            m.set(j, i, w);
        }
        Ok(m)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Per-edge weights in the graph's edge order.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Sum of weights over undirected edges, each counted once.
    pub fn edge_sum(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn check_conforms(&self, g: &Graph) -> Result<()> {
        if self.n != g.n() || self.weights.len() != g.num_edges() {
            return Err(Error::Conformance(format!(
                "mask for {} nodes / {} edges applied to graph {} with {} nodes / {} edges",
                self.n,
                self.weights.len(),
                g.id,
                g.n(),
                g.num_edges()
            )));
        }
        Ok(())
    }

    fn relabel(&self, old: &Graph, new: &Graph, perm: &[usize]) -> Result<EdgeMask> {
        self.check_conforms(old)?;
        let mut w = vec![0.0; new.num_edges()];
        for (&(i, j), &v) in old.edges().iter().zip(&self.weights) {
            let e = new
                .edge_index(perm[i], perm[j])
                .ok_or_else(|| Error::Conformance(String::from("edge lost in relabel")))?;
            w[e] = v;
        }
        EdgeMask::new(new.n(), w)
    }
}

/// `a ⊙ m` as a dense weighted adjacency.
pub fn apply_mask(g: &Graph, m: &EdgeMask) -> Result<Matrix> {
    m.to_dense(g)
}

/// The label-irrelevant remainder: weight `1 − m` on every existing edge.
pub fn residual_mask(g: &Graph, m: &EdgeMask) -> Result<EdgeMask> {
    m.check_conforms(g)?;
    EdgeMask::new(g.n(), m.weights.iter().map(|w| 1.0 - w).collect())
}

/// An explanation: a mask plus its flat `(i, j, weight)` listing.
#[derive(Debug, Clone, PartialEq)]
pub struct Explanation {
    pub graph_id: u64,
    pub mask: EdgeMask,
    pub scores: Vec<(usize, usize, f64)>,
}

impl Explanation {
    pub fn new(g: &Graph, mask: EdgeMask) -> Result<Self> {
        mask.check_conforms(g)?;
        let scores = g
            .edges()
            .iter()
            .zip(mask.weights())
            .map(|(&(i, j), &w)| (i, j, w))
            .collect();
        Ok(Self {
            graph_id: g.id,
            mask,
            scores,
        })
    }

    /// Rebuilds an explanation from a score listing; the listing must match
    /// the graph's edges exactly.
    pub fn from_scores(g: &Graph, scores: Vec<(usize, usize, f64)>) -> Result<Self> {
        if scores.len() != g.num_edges() {
            return Err(Error::Conformance(format!(
                "{} scores for {} edges of graph {}",
                scores.len(),
                g.num_edges(),
                g.id
            )));
        }
        let mut w = vec![0.0; g.num_edges()];
        let mut seen = vec![false; g.num_edges()];
        for &(i, j, v) in &scores {
            let e = g.edge_index(i, j).filter(|_| i < j).ok_or_else(|| {
                Error::Conformance(format!("score on ({i}, {j}) is not an upper-triangular edge"))
            })?;
            if seen[e] {
                return Err(Error::Conformance(format!("duplicate score for ({i}, {j})")));
            }
            seen[e] = true;
            w[e] = v;
        }
        Self::new(g, EdgeMask::new(g.n(), w)?)
    }
}

/// The `k` highest-weighted edges, ties broken by lexicographic `(i, j)`.
/// Returned in lexicographic order.
pub fn threshold_topk(expl: &Explanation, k: usize) -> Result<Vec<(usize, usize)>> {
    if k == 0 || k > expl.scores.len() {
        return Err(Error::Range(format!(
            "k = {k} with {} edges",
            expl.scores.len()
        )));
    }
    let mut order: Vec<usize> = (0..expl.scores.len()).collect();
    // scores are already lexicographic, so a stable sort on weight keeps ties ordered
    order.sort_by(|&a, &b| expl.scores[b].2.total_cmp(&expl.scores[a].2));
    let mut picked: Vec<(usize, usize)> = order[..k]
        .iter()
        .map(|&e| (expl.scores[e].0, expl.scores[e].1))
        .collect();
    picked.sort_unstable();
    Ok(picked)
}

/// Binary mask keeping the top-`k` edges of `expl`.
pub fn topk_mask(g: &Graph, expl: &Explanation, k: usize) -> Result<EdgeMask> {
    let mut w = vec![0.0; g.num_edges()];
    for (i, j) in threshold_topk(expl, k)? {
        let e = g
            .edge_index(i, j)
            .ok_or_else(|| Error::Conformance(format!("({i}, {j}) not an edge of graph {}", g.id)))?;
        w[e] = 1.0;
    }
    EdgeMask::new(g.n(), w)
}

/// Index lists for the three data roles.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Splits {
    pub train: Vec<usize>,
    pub explainer_train: Vec<usize>,
    pub explainer_test: Vec<usize>,
}

impl Splits {
    /// Shuffled 8:1:1 split of `0..n`. The two explainer folds get
    /// `n / 10` graphs each, the GNN fold gets the rest.
    pub fn ratio_8_1_1(n: usize, seed: u64) -> Self {
        let mut idx: Vec<usize> = (0..n).collect();
        idx.shuffle(&mut rng::stream(seed, &[rng::ROLE_SPLIT]));
        let tenth = n / 10;
        let explainer_train = idx[..tenth].to_vec();
        let explainer_test = idx[tenth..2 * tenth].to_vec();
        let mut train = idx[2 * tenth..].to_vec();
        train.sort_unstable();
        let mut explainer_train = explainer_train;
        explainer_train.sort_unstable();
        let mut explainer_test = explainer_test;
        explainer_test.sort_unstable();
        Self {
            train,
            explainer_train,
            explainer_test,
        }
    }

    pub fn validate(&self, n_graphs: usize) -> Result<()> {
        let mut seen = vec![false; n_graphs];
        for &i in self
            .train
            .iter()
            .chain(&self.explainer_train)
            .chain(&self.explainer_test)
        {
            if i >= n_graphs {
                return Err(Error::Validation(format!("split index {i} >= {n_graphs}")));
            }
            if seen[i] {
                return Err(Error::Validation(format!("split index {i} appears twice")));
            }
            seen[i] = true;
        }
        Ok(())
    }
}

/// An ordered collection of graphs with its data splits.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphDataset {
    pub name: String,
    pub seed: u64,
    pub generator_version: String,
    pub graphs: Vec<Graph>,
    pub splits: Splits,
}

impl GraphDataset {
    pub fn new(
        name: impl Into<String>,
        seed: u64,
        generator_version: impl Into<String>,
        graphs: Vec<Graph>,
        splits: Splits,
    ) -> Result<Self> {
        splits.validate(graphs.len())?;
        Ok(Self {
            name: name.into(),
            seed,
            generator_version: generator_version.into(),
            graphs,
            splits,
        })
    }

    pub fn len(&self) -> usize {
        self.graphs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.graphs.is_empty()
    }

    pub fn subset<'a>(&'a self, idx: &'a [usize]) -> impl Iterator<Item = &'a Graph> + 'a {
        idx.iter().map(move |&i| &self.graphs[i])
    }

    /// Graph with the given id, if present.
    pub fn by_id(&self, id: u64) -> Option<&Graph> {
        self.graphs.iter().find(|g| g.id == id)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path3() -> Graph {
        Graph::new(0, Matrix::filled(3, 1, 1.0), [(0, 1), (1, 2)], 0.0).unwrap()
    }

    #[test]
    fn apply_mask_identity_and_annihilation() {
        let g = path3();
        assert_eq!(apply_mask(&g, &EdgeMask::ones(&g)).unwrap(), g.adjacency());
        assert_eq!(apply_mask(&g, &EdgeMask::zeros(&g)).unwrap(), Matrix::zeros(3, 3));
    }

    #[test]
    fn apply_mask_path_graph() {
        let g = path3();
        let m = EdgeMask::for_graph(&g, vec![0.5, 1.0]).unwrap();
        let w = apply_mask(&g, &m).unwrap();
        let expected = Matrix::from_rows(&[
            vec![0.0, 0.5, 0.0],
            vec![0.5, 0.0, 1.0],
            vec![0.0, 1.0, 0.0],
        ]);
        assert_eq!(w, expected);
    }

    #[test]
    fn residual_path_graph() {
        let g = path3();
        let m = EdgeMask::for_graph(&g, vec![0.3, 0.9]).unwrap();
        let r = residual_mask(&g, &m).unwrap();
        assert!((r.weights()[0] - 0.7).abs() < 1e-12);
        assert!((r.weights()[1] - 0.1).abs() < 1e-12);
        assert_eq!(residual_mask(&g, &EdgeMask::ones(&g)).unwrap(), EdgeMask::zeros(&g));
        assert_eq!(residual_mask(&g, &EdgeMask::zeros(&g)).unwrap(), EdgeMask::ones(&g));
    }

    #[test]
    fn mask_errors() {
        let g = path3();
        assert!(matches!(EdgeMask::new(3, vec![0.5, 1.5]), Err(Error::Validation(_))));
        let other = EdgeMask::new(4, vec![1.0, 1.0]).unwrap();
        assert!(matches!(apply_mask(&g, &other), Err(Error::Conformance(_))));
        let mut dense = Matrix::zeros(3, 3);
        dense.set(0, 2, 0.5);
        assert!(matches!(EdgeMask::from_dense(&g, &dense), Err(Error::Conformance(_))));
    }

    #[test]
    fn from_dense_symmetrizes() {
        let g = path3();
        let mut dense = Matrix::zeros(3, 3);
        dense.set(0, 1, 0.2);
        dense.set(1, 0, 0.6);
        let m = EdgeMask::from_dense(&g, &dense).unwrap();
        assert!((m.weights()[0] - 0.4).abs() < 1e-15);
        assert_eq!(m.weights()[1], 0.0);
    }

    #[test]
    fn graph_construction_rejects_bad_input() {
        let x = Matrix::filled(3, 1, 1.0);
        assert!(Graph::new(0, x.clone(), [(1, 1)], 0.0).is_err());
        assert!(Graph::new(0, x.clone(), [(0, 3)], 0.0).is_err());
        assert!(Graph::new(0, x.clone(), [(0, 1), (1, 0)], 0.0).is_err());
        let mut a = Matrix::zeros(3, 3);
        a.set(0, 1, 1.0);
        assert!(Graph::from_adjacency(0, x, &a, 0.0).is_err());
    }

    #[test]
    fn topk_breaks_ties_lexicographically() {
        let g = Graph::new(
            0,
            Matrix::filled(4, 1, 1.0),
            [(0, 1), (0, 2), (1, 2), (2, 3)],
            0.0,
        )
        .unwrap();
        let e = Explanation::new(&g, EdgeMask::for_graph(&g, vec![0.5, 0.9, 0.5, 0.5]).unwrap())
            .unwrap();
        assert_eq!(threshold_topk(&e, 2).unwrap(), vec![(0, 1), (0, 2)]);
        assert_eq!(threshold_topk(&e, 3).unwrap(), vec![(0, 1), (0, 2), (1, 2)]);
        assert!(matches!(threshold_topk(&e, 5), Err(Error::Range(_))));
    }

    #[test]
    fn explanation_scores_roundtrip() {
        let g = path3();
        let e = Explanation::new(&g, EdgeMask::for_graph(&g, vec![0.25, 0.75]).unwrap()).unwrap();
        assert_eq!(e.scores, vec![(0, 1, 0.25), (1, 2, 0.75)]);
        assert_eq!(Explanation::from_scores(&g, e.scores.clone()).unwrap(), e);
        assert!(Explanation::from_scores(&g, vec![(1, 0, 0.1), (1, 2, 0.2)]).is_err());
    }

    #[test]
    fn splits_are_8_1_1_and_disjoint() {
        let s = Splits::ratio_8_1_1(100, 3);
        assert_eq!((s.train.len(), s.explainer_train.len(), s.explainer_test.len()), (80, 10, 10));
        s.validate(100).unwrap();
        let bad = Splits {
            train: vec![0, 1],
            explainer_train: vec![1],
            explainer_test: vec![],
        };
        assert!(bad.validate(3).is_err());
    }

    #[test]
    fn relabel_moves_gt_mask() {
        let g = path3()
            .with_gt_mask(EdgeMask::new(3, vec![1.0, 0.0]).unwrap())
            .unwrap();
        let r = g.relabel(&[2, 1, 0]).unwrap();
        assert_eq!(r.edges(), &[(0, 1), (1, 2)]);
        // old edge (0,1) became (1,2)
        assert_eq!(r.gt_mask().unwrap().weights(), &[0.0, 1.0]);
    }
}
