//! Generated labels and ground truth against brute-force recomputation.

use regxplain_core::datasets::{
    ba_motif_volume_graph, gen_ba_motif_counting, gen_ba_motif_volume, gen_triangles, GenConfig,
};
use regxplain_core::Graph;

fn brute_triangles(g: &Graph) -> u64 {
    let n = g.n();
    let mut c = 0;
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                if g.has_edge(i, j) && g.has_edge(j, k) && g.has_edge(i, k) {
                    c += 1;
                }
            }
        }
    }
    c
}

fn on_triangle(g: &Graph, i: usize, j: usize) -> bool {
    (0..g.n()).any(|k| g.has_edge(i, k) && g.has_edge(j, k))
}

#[test]
fn triangle_labels_and_ground_truth() {
    let ds = gen_triangles(&GenConfig::triangles().with_graphs(60).with_seed(4)).unwrap();
    let mut nonzero = 0;
    for g in &ds.graphs {
        assert_eq!(g.label, brute_triangles(g) as f64, "graph {}", g.id);
        let gt = g.gt_mask().unwrap();
        for (e, &(i, j)) in g.edges().iter().enumerate() {
            let want = if on_triangle(g, i, j) { 1.0 } else { 0.0 };
            assert_eq!(gt.weights()[e], want);
        }
        nonzero += usize::from(g.label > 0.0);
    }
    // ER(30, 0.2) graphs almost always contain triangles
    assert!(nonzero > 50);
}

#[test]
fn volume_label_is_motif_feature_mass() {
    let cfg = GenConfig::default().with_graphs(20).with_seed(9);
    let ds = gen_ba_motif_volume(&cfg).unwrap();
    for (id, g) in ds.graphs.iter().enumerate() {
        let (_, motif) = ba_motif_volume_graph(&cfg, id).unwrap();
        let mass: f64 = motif.iter().flat_map(|&v| g.x().row(v).iter()).sum();
        assert_eq!(g.label, mass);
        assert!(g.x().as_slice().iter().all(|v| (0.0..=100.0).contains(v)));
        let gt = g.gt_mask().unwrap();
        let mut gt_edges = 0;
        for (e, &(i, j)) in g.edges().iter().enumerate() {
            if gt.weights()[e] == 1.0 {
                gt_edges += 1;
                assert!(motif.contains(&i) && motif.contains(&j));
            }
        }
        assert_eq!(gt_edges, 6);
        assert_eq!(g.n(), cfg.base_size + 5);
    }
}

#[test]
fn counting_labels_match_house_count() {
    let cfg = GenConfig::default().with_graphs(40).with_seed(2);
    let ds = gen_ba_motif_counting(&cfg).unwrap();
    let mut labels = std::collections::BTreeSet::new();
    for g in &ds.graphs {
        assert_eq!(g.n(), cfg.pad_to);
        assert!(g.x().as_slice().iter().all(|&v| v == 1.0));
        let gt_edges = g.gt_mask().unwrap().edge_sum();
        assert_eq!(gt_edges, 6.0 * g.label, "graph {}", g.id);
        assert!((1.0..=10.0).contains(&g.label));
        labels.insert(g.label as u32);
    }
    assert!(labels.len() > 5);
}

#[test]
fn generation_is_a_function_of_the_seed() {
    let cfg = GenConfig::default().with_graphs(15).with_seed(3);
    let a = gen_ba_motif_counting(&cfg).unwrap();
    let b = gen_ba_motif_counting(&cfg).unwrap();
    assert_eq!(a, b);
    let c = gen_ba_motif_counting(&cfg.clone().with_seed(4)).unwrap();
    assert_ne!(a.graphs, c.graphs);
}

#[test]
fn splits_partition_the_dataset() {
    let ds = gen_triangles(&GenConfig::triangles().with_graphs(100)).unwrap();
    let s = &ds.splits;
    assert_eq!((s.train.len(), s.explainer_train.len(), s.explainer_test.len()), (80, 10, 10));
    let mut all: Vec<usize> = s.train.iter().chain(&s.explainer_train).chain(&s.explainer_test).copied().collect();
    all.sort_unstable();
    assert_eq!(all, (0..100).collect::<Vec<_>>());
}
