use std::fs;

use regxplain::crippen::load_crippen;
use regxplain::format::{
    read_dataset, read_explanations, read_json, to_line, write_dataset, write_explanations, write_json, DatasetHeader,
    GraphRecord, ModelCheckpoint, PgCheckpoint,
};
use regxplain_core::datasets::{gen_ba_motif_volume, gen_triangles, GenConfig};
use regxplain_core::explain::{run_explainer, ExplainerConfig, ExplainerKind};
use regxplain_core::gcn::{train_gnn, TrainConfig};
use regxplain_core::linalg::Matrix;
use regxplain_core::rng;
use regxplain_core::Graph;
use rand::Rng;

#[test]
fn dataset_roundtrip_is_bit_exact() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("d.jsonl");
    // uniform real features exercise every mantissa bit
    let ds = gen_ba_motif_volume(&GenConfig::default().with_graphs(12).with_seed(5)).unwrap();
    write_dataset(&ds, &p).unwrap();
    let back = read_dataset(&p).unwrap();
    assert_eq!(back, ds);
    for (a, b) in ds.graphs.iter().zip(&back.graphs) {
        for (x, y) in a.x().as_slice().iter().zip(b.x().as_slice()) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
    }
}

#[test]
fn non_finite_values_are_rejected() {
    assert!(to_line(&vec![1.0, f64::NAN]).is_err());
    assert!(to_line(&vec![f64::INFINITY]).is_err());
}

#[test]
fn checkpoints_restore_identical_models() {
    let dir = tempfile::tempdir().unwrap();
    let ds = gen_triangles(&GenConfig::triangles().with_graphs(30)).unwrap();
    let cfg = TrainConfig {
        epochs: 3,
        ..TrainConfig::default()
    };
    let t = train_gnn(&ds, &cfg).unwrap();
    let p = dir.path().join("model.json");
    write_json(&p, &ModelCheckpoint::new(&t.model, Some(&cfg), &t.epoch_losses)).unwrap();
    let m = read_json::<ModelCheckpoint>(&p).unwrap().to_model().unwrap();
    for g in &ds.graphs[..5] {
        let a = t.model.forward(g, None).unwrap();
        let b = m.forward(g, None).unwrap();
        assert_eq!(a.prediction.to_bits(), b.prediction.to_bits());
    }

    let mut ecfg = ExplainerConfig::for_kind(ExplainerKind::PgExplainer);
    ecfg.epochs = 2;
    ecfg.pg_hidden = 8;
    let (expl, trained) = run_explainer(&t.model, &ds, &ecfg).unwrap();
    let trained = trained.unwrap();
    let pp = dir.path().join("explainer.json");
    write_json(&pp, &PgCheckpoint::new(&trained.net, &ecfg, &trained.epoch_losses)).unwrap();
    let net = read_json::<PgCheckpoint>(&pp).unwrap().to_network().unwrap();
    assert_eq!(net.mlp().params(), trained.net.mlp().params());
    assert_eq!(net.input_scale, trained.net.input_scale);

    let ep = dir.path().join("explanations.jsonl");
    write_explanations(&expl, &ep).unwrap();
    assert_eq!(read_explanations(&ep, &ds).unwrap(), expl);
}

/// Molecule-like records: one-hot atoms, signed node contributions and
/// edge weights equal to endpoint means.
fn crippen_file(path: &std::path::Path, n_graphs: usize, corrupt: Option<usize>) {
    let mut r = rng::stream(17, &[]);
    let mut lines = vec![to_line(&DatasetHeader {
        dataset_name: "crippen".into(),
        seed: 3,
        generator_version: "external".into(),
        n_graphs,
        splits: None,
    })
    .unwrap()];
    for id in 0..n_graphs {
        let n = r.gen_range(3..9);
        let mut x = Matrix::zeros(n, 4);
        for v in 0..n {
            x.set(v, r.gen_range(0..4), 1.0);
        }
        let edges: Vec<(usize, usize)> = (1..n).map(|v| (r.gen_range(0..v), v)).collect();
        let w: Vec<f64> = (0..n).map(|_| r.gen_range(-1.5..1.0)).collect();
        let g = Graph::new(id as u64, x, edges, w.iter().sum()).unwrap();
        let mut rec = GraphRecord::from_graph(&g);
        let mut gt: Vec<(usize, usize, f64)> = g.edges().iter().map(|&(i, j)| (i, j, 0.5 * (w[i] + w[j]))).collect();
        if corrupt == Some(id) {
            gt[0].2 += 1e-6;
        }
        rec.gt_edges = Some(gt);
        rec.node_weights = Some(w);
        lines.push(to_line(&rec).unwrap());
    }
    fs::write(path, lines.join("\n") + "\n").unwrap();
}

#[test]
fn crippen_loader_validates_and_splits() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("crippen.jsonl");
    crippen_file(&p, 100, None);
    let ds = load_crippen(&p).unwrap();
    assert_eq!(ds.name, "crippen");
    let s = &ds.splits;
    assert_eq!((s.train.len(), s.explainer_train.len(), s.explainer_test.len()), (80, 10, 10));
    let all: Vec<f64> = ds.graphs.iter().flat_map(|g| g.gt_mask().unwrap().weights().to_vec()).collect();
    let lo = all.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = all.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    assert!(lo >= 0.0 && hi <= 1.0);
    assert_eq!(hi, 1.0);
}

#[test]
fn crippen_loader_reports_endpoint_violations() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("crippen.jsonl");
    crippen_file(&p, 20, Some(7));
    let err = format!("{:#}", load_crippen(&p).unwrap_err());
    assert!(err.contains("data integrity error"), "{err}");
    assert!(err.contains("graph 7"), "{err}");
}

proptest::proptest! {
    #[test]
    fn reals_survive_a_line(v in proptest::collection::vec(proptest::num::f64::NORMAL | proptest::num::f64::SUBNORMAL | proptest::num::f64::ZERO, 1..20)) {
        let line = to_line(&v).unwrap();
        let back: Vec<f64> = serde_json::from_str(&line).unwrap();
        let a: Vec<u64> = v.iter().map(|x| x.to_bits()).collect();
        let b: Vec<u64> = back.iter().map(|x| x.to_bits()).collect();
        proptest::prop_assert_eq!(a, b);
    }
}
