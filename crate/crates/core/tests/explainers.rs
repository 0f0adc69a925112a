use regxplain_core::datasets::{gen_ba_motif_counting, GenConfig};
use regxplain_core::explain::{
    gnnexplainer_explain, grad_explain, pg_explain, run_explainer, ExplainerConfig, ExplainerKind, GraphContext, PgNetwork,
};
use regxplain_core::gcn::{train_gnn, GcnModel, TrainConfig};
use regxplain_core::GraphDataset;

fn tiny() -> (GraphDataset, GcnModel) {
    let mut gen = GenConfig::default().with_graphs(40).with_seed(1);
    gen.pad_to = 40;
    gen.base_size_range = (8, 14);
    gen.motif_count_range = (1, 4);
    let ds = gen_ba_motif_counting(&gen).unwrap();
    let cfg = TrainConfig {
        epochs: 15,
        ..TrainConfig::default()
    };
    let m = train_gnn(&ds, &cfg).unwrap().model;
    (ds, m)
}

fn quick(kind: ExplainerKind, seed: u64) -> ExplainerConfig {
    let mut c = ExplainerConfig::for_kind(kind).with_seed(seed);
    c.epochs = 3;
    c.pg_hidden = 8;
    c
}

#[test]
fn every_kind_explains_the_test_fold() {
    let (ds, model) = tiny();
    for kind in ExplainerKind::ALL {
        let (expl, trained) = run_explainer(&model, &ds, &quick(kind, 0)).unwrap();
        assert_eq!(expl.len(), ds.splits.explainer_test.len(), "{}", kind.name());
        assert_eq!(trained.is_some(), kind.is_parameterized());
        for (e, &gi) in expl.iter().zip(&ds.splits.explainer_test) {
            let g = &ds.graphs[gi];
            assert_eq!(e.graph_id, g.id);
            assert_eq!(e.mask.len(), g.num_edges());
            assert!(e.mask.weights().iter().all(|w| (0.0..=1.0).contains(w)));
        }
    }
}

#[test]
fn explainers_are_deterministic_per_seed() {
    let (ds, model) = tiny();
    for kind in [ExplainerKind::GnnExplainer, ExplainerKind::PgExplainer, ExplainerKind::RegExplainer] {
        let a = run_explainer(&model, &ds, &quick(kind, 3)).unwrap().0;
        let b = run_explainer(&model, &ds, &quick(kind, 3)).unwrap().0;
        assert_eq!(a, b, "{}", kind.name());
    }
    let a = run_explainer(&model, &ds, &quick(ExplainerKind::PgExplainer, 3)).unwrap().0;
    let c = run_explainer(&model, &ds, &quick(ExplainerKind::PgExplainer, 4)).unwrap().0;
    assert_ne!(a, c);
}

#[test]
fn gnnexplainer_without_steps_is_uninformative() {
    let (ds, model) = tiny();
    let mut cfg = quick(ExplainerKind::GnnExplainer, 0);
    cfg.epochs = 0;
    let e = gnnexplainer_explain(&model, &ds.graphs[0], &cfg).unwrap();
    assert!(e.mask.weights().iter().all(|&w| w == 0.5));
    cfg.init_logit = 3.0;
    let e = gnnexplainer_explain(&model, &ds.graphs[0], &cfg).unwrap();
    let s = 1.0 / (1.0 + (-3.0f64).exp());
    assert!(e.mask.weights().iter().all(|&w| (w - s).abs() < 1e-12));
}

#[test]
fn zero_edge_network_gives_half_masks() {
    let (ds, model) = tiny();
    let mut net = PgNetwork::new(model.hidden_dim(), 8, 0);
    net.mlp_mut().zero_last_layer();
    let g = &ds.graphs[2];
    let e = pg_explain(&net, &model, g).unwrap();
    assert!(e.mask.weights().iter().all(|&w| w == 0.5));
    let ctx = GraphContext::new(&model, g).unwrap();
    assert!(net.logits(g, &ctx).unwrap().iter().all(|&l| l == 0.0));
}

#[test]
fn gradient_saliency_covers_every_edge() {
    let (ds, model) = tiny();
    let g = &ds.graphs[5];
    let e = grad_explain(&model, g).unwrap();
    assert_eq!(e.scores.len(), g.num_edges());
    assert_eq!(e, grad_explain(&model, g).unwrap());
}
