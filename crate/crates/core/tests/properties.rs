use proptest::prelude::*;
use regxplain_core::eval::{auc, cosine, euclidean_unit, pearson_r, rmse};
use regxplain_core::graph::residual_mask;
use regxplain_core::linalg::Matrix;
use regxplain_core::losses::{info_nce_loss, info_nce_naive, size_loss_from_sum, NceInputs};
use regxplain_core::mixup::{cross_edge_count, mixup_graphs};
use regxplain_core::{EdgeMask, Graph};

fn scores_and_labels() -> impl Strategy<Value = (Vec<f64>, Vec<bool>)> {
    (2usize..40).prop_flat_map(|n| {
        (
            prop::collection::vec(-5.0f64..5.0, n),
            prop::collection::vec(any::<bool>(), n).prop_filter("both classes", |l| l.iter().any(|&b| b) && l.iter().any(|&b| !b)),
        )
    })
}

fn graph_with_mask() -> impl Strategy<Value = (Graph, EdgeMask)> {
    (2usize..12)
        .prop_flat_map(|n| (Just(n), prop::collection::vec(any::<bool>(), n * (n - 1) / 2)))
        .prop_flat_map(|(n, bits)| {
            let mut edges = Vec::new();
            let mut k = 0;
            for i in 0..n {
                for j in i + 1..n {
                    if bits[k] {
                        edges.push((i, j));
                    }
                    k += 1;
                }
            }
            let m = edges.len();
            (Just(n), Just(edges), prop::collection::vec(0.0f64..=1.0, m))
        })
        .prop_map(|(n, edges, w)| {
            let g = Graph::new(0, Matrix::filled(n, 2, 1.0), edges, 1.0).unwrap();
            let m = EdgeMask::for_graph(&g, w).unwrap();
            (g, m)
        })
}

fn vecs(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-3.0f64..3.0, n)
}

proptest! {
    #[test]
    fn auc_is_invariant_to_monotone_maps((s, l) in scores_and_labels()) {
        let a = auc(&s, &l).unwrap();
        let t: Vec<f64> = s.iter().map(|v| (0.7 * v).exp() + 3.0).collect();
        prop_assert!((auc(&t, &l).unwrap() - a).abs() < 1e-12);
        prop_assert!((0.0..=1.0).contains(&a));
    }

    #[test]
    fn auc_of_negated_scores_is_complement((s, l) in scores_and_labels()) {
        let neg: Vec<f64> = s.iter().map(|v| -v).collect();
        let sum = auc(&s, &l).unwrap() + auc(&neg, &l).unwrap();
        prop_assert!((sum - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rmse_is_symmetric_and_zero_on_self(a in vecs(8), b in vecs(8)) {
        prop_assert_eq!(rmse(&a, &b).unwrap(), rmse(&b, &a).unwrap());
        prop_assert_eq!(rmse(&a, &a).unwrap(), 0.0);
    }

    #[test]
    fn unit_geometry_is_scale_free(a in vecs(6), b in vecs(6), s in 0.1f64..10.0) {
        prop_assume!(a.iter().any(|v| v.abs() > 1e-3) && b.iter().any(|v| v.abs() > 1e-3));
        let sa: Vec<f64> = a.iter().map(|v| v * s).collect();
        prop_assert!((cosine(&sa, &b) - cosine(&a, &b)).abs() < 1e-9);
        prop_assert!((euclidean_unit(&sa, &b) - euclidean_unit(&a, &b)).abs() < 1e-9);
        // on unit vectors the two agree: |u - v|² = 2 - 2 cos
        let c = cosine(&a, &b);
        let e = euclidean_unit(&a, &b);
        prop_assert!((e * e - (2.0 - 2.0 * c)).abs() < 1e-9);
    }

    #[test]
    fn pearson_is_affine_invariant(x in vecs(10), y in vecs(10), s in 0.5f64..4.0, t in -5.0f64..5.0) {
        let r = match pearson_r(&x, &y) { Ok(r) => r, Err(_) => return Ok(()) };
        let x2: Vec<f64> = x.iter().map(|v| s * v + t).collect();
        prop_assert!((pearson_r(&x2, &y).unwrap() - r).abs() < 1e-9);
        let y2: Vec<f64> = y.iter().map(|v| -v).collect();
        prop_assert!((pearson_r(&x, &y2).unwrap() + r).abs() < 1e-9);
    }

    #[test]
    fn residual_is_an_involution((g, m) in graph_with_mask()) {
        let r = residual_mask(&g, &m).unwrap();
        let rr = residual_mask(&g, &r).unwrap();
        for (a, b) in m.weights().iter().zip(rr.weights()) {
            prop_assert!((a - b).abs() < 1e-15);
        }
        for (a, b) in m.weights().iter().zip(r.weights()) {
            prop_assert!((a + b - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn nce_matches_naive_form(v in prop::collection::vec(vecs(4), 5)) {
        let x = NceInputs { mix_pos: &v[0], mix_neg: &v[1], target: &v[2], pos: &v[3], neg: &v[4] };
        let a = info_nce_loss(x).unwrap();
        let b = info_nce_naive(x).unwrap();
        prop_assert!((a - b).abs() < 1e-9 * a.abs().max(1.0));
    }

    #[test]
    fn nce_falls_as_the_anchor_aligns(v in prop::collection::vec(vecs(4), 5), k in 0usize..4, d in 0.01f64..2.0) {
        // raising target·mix_pos lowers the loss
        let mut t = v[2].clone();
        t[k] += d * v[0][k].signum();
        prop_assume!(v[0][k].abs() > 1e-3);
        let base = NceInputs { mix_pos: &v[0], mix_neg: &v[1], target: &v[2], pos: &v[3], neg: &v[4] };
        let moved = NceInputs { target: &t, ..base };
        prop_assert!(info_nce_loss(moved).unwrap() < info_nce_loss(base).unwrap());
    }

    #[test]
    fn size_loss_grows_with_mask_mass(s in 0.0f64..50.0, d in 0.01f64..5.0, h in vecs(3), g in 0.001f64..1.0) {
        prop_assert!(size_loss_from_sum(s + d, &h, g).unwrap() > size_loss_from_sum(s, &h, g).unwrap());
    }

    #[test]
    fn mixup_blocks_and_cross_edges((ga, ma) in graph_with_mask(), (gb, mb) in graph_with_mask(), seed in any::<u64>()) {
        let eta = cross_edge_count(0.03, ga.num_edges());
        prop_assume!(eta <= ga.n() * gb.n());
        let m = mixup_graphs(&ga, &ma, &gb, &mb, 0.03, seed).unwrap();
        let na = ga.n();
        prop_assert_eq!(m.conn_edges.len(), eta);
        prop_assert_eq!(m.merged.num_edges(), ga.num_edges() + gb.num_edges() + eta);
        let dense = m.mask.to_dense(&m.merged).unwrap();
        prop_assert!(dense.is_symmetric());
        for (e, &(i, j)) in ga.edges().iter().enumerate() {
            prop_assert_eq!(dense.get(i, j), ma.weights()[e]);
        }
        for (e, &(i, j)) in gb.edges().iter().enumerate() {
            prop_assert_eq!(dense.get(i + na, j + na), 1.0 - mb.weights()[e]);
        }
        for &(u, v) in &m.conn_edges {
            prop_assert!(u < na && v < gb.n());
        }
        // same seed, same draw
        prop_assert_eq!(mixup_graphs(&ga, &ma, &gb, &mb, 0.03, seed).unwrap(), m);
    }
}
