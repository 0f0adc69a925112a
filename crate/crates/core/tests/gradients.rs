//! Analytic gradients against central finite differences.

use regxplain_core::gcn::{GcnGrad, GcnModel, Propagation, Readout};
use regxplain_core::linalg::Matrix;
use regxplain_core::losses::{info_nce_grad, info_nce_loss, mse_loss, mse_loss_grad, size_loss_from_sum, size_loss_grad_embedding, NceInputs};
use regxplain_core::rng;
use regxplain_core::Graph;
use rand::Rng;

const H: f64 = 1e-6;

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-3)
}

/// 10 nodes: a ring plus two chords, mixed-sign features.
fn fixture(d: usize, seed: u64) -> Graph {
    let mut r = rng::stream(seed, &[]);
    let mut x = Matrix::zeros(10, d);
    for v in x.as_mut_slice() {
        *v = r.gen_range(-1.0..1.0);
    }
    let mut edges: Vec<(usize, usize)> = (0..10).map(|i| (i, (i + 1) % 10)).collect();
    edges.extend([(0, 5), (2, 7)]);
    Graph::new(0, x, edges, 0.7).unwrap()
}

fn edge_weights(g: &Graph, seed: u64) -> Vec<f64> {
    let mut r = rng::stream(seed, &[1]);
    (0..g.num_edges()).map(|_| r.gen_range(0.1..0.9)).collect()
}

/// Scalar objective mixing prediction and embedding so both paths are used.
fn objective(model: &GcnModel, g: &Graph, w: &[f64], c: &[f64]) -> f64 {
    let (out, _) = model.forward_traced(g, Some(w)).unwrap();
    let p = out.prediction - 0.3;
    p * p + out.embedding.iter().zip(c).map(|(a, b)| a * b).sum::<f64>()
}

fn models() -> Vec<GcnModel> {
    let mut out = Vec::new();
    for (k, readout) in [Readout::Mean, Readout::Sum].into_iter().enumerate() {
        let mut m = GcnModel::new(3, 5, readout, 11 + k as u64);
        // nonzero biases keep most units active and exercise the bias path
        let mut r = rng::stream(5 + k as u64, &[]);
        for p in m.conv_params_mut() {
            *p += r.gen_range(-0.05..0.05);
        }
        for p in m.head_mut().params_mut() {
            *p += r.gen_range(-0.05..0.05);
        }
        m.target_shift = 0.2;
        m.target_scale = 1.7;
        m.input_scale = 1.3;
        out.push(m);
    }
    let mut m = out[1].clone();
    m.propagation = Propagation::Unnormalized;
    m.degree_scale = 0.35;
    m.readout_scale = 7.0;
    out.push(m);
    out
}

fn analytic(model: &GcnModel, g: &Graph, w: &[f64], c: &[f64]) -> (Vec<f64>, GcnGrad) {
    let (out, trace) = model.forward_traced(g, Some(w)).unwrap();
    let mut grad = GcnGrad::zeros_like(model);
    let dw = model.backward(g, &trace, 2.0 * (out.prediction - 0.3), Some(c), Some(&mut grad));
    (dw, grad)
}

#[test]
fn gcn_gradients_wrt_mask_entries() {
    for (k, model) in models().into_iter().enumerate() {
        let g = fixture(3, k as u64);
        let w = edge_weights(&g, k as u64);
        let c: Vec<f64> = (0..5).map(|i| 0.1 * i as f64 - 0.2).collect();
        let (dw, _) = analytic(&model, &g, &w, &c);
        for e in 0..w.len() {
            let mut wp = w.clone();
            let mut wm = w.clone();
            wp[e] += H;
            wm[e] -= H;
            let fd = (objective(&model, &g, &wp, &c) - objective(&model, &g, &wm, &c)) / (2.0 * H);
            assert!(rel_err(dw[e], fd) < 1e-4, "edge {e}: analytic {} fd {fd}", dw[e]);
        }
    }
}

#[test]
fn gcn_gradients_wrt_parameters() {
    for (k, model) in models().into_iter().enumerate() {
        let g = fixture(3, 10 + k as u64);
        let w = edge_weights(&g, k as u64);
        let c: Vec<f64> = (0..5).map(|i| 0.05 * i as f64).collect();
        let (_, grad) = analytic(&model, &g, &w, &c);
        for p in 0..model.conv_params().len() {
            let mut a = model.clone();
            a.conv_params_mut()[p] += H;
            let mut b = model.clone();
            b.conv_params_mut()[p] -= H;
            let fd = (objective(&a, &g, &w, &c) - objective(&b, &g, &w, &c)) / (2.0 * H);
            assert!(rel_err(grad.conv[p], fd) < 1e-4, "conv {p}: analytic {} fd {fd}", grad.conv[p]);
        }
        for p in 0..model.head().num_params() {
            let mut a = model.clone();
            a.head_mut().params_mut()[p] += H;
            let mut b = model.clone();
            b.head_mut().params_mut()[p] -= H;
            let fd = (objective(&a, &g, &w, &c) - objective(&b, &g, &w, &c)) / (2.0 * H);
            assert!(rel_err(grad.head[p], fd) < 1e-4, "head {p}: analytic {} fd {fd}", grad.head[p]);
        }
    }
}

#[test]
fn mse_gradient() {
    for (a, b) in [(0.3, -1.2), (5.0, 5.5), (-2.0, 0.0)] {
        let fd = (mse_loss(a + H, b) - mse_loss(a - H, b)) / (2.0 * H);
        assert!(rel_err(mse_loss_grad(a, b), fd) < 1e-5);
        let fd_b = (mse_loss(a, b + H) - mse_loss(a, b - H)) / (2.0 * H);
        assert!(rel_err(-mse_loss_grad(a, b), fd_b) < 1e-5);
    }
}

#[test]
fn size_gradient() {
    let h = [0.4, -0.3, 0.8, 0.1];
    let gamma = 0.003;
    let an = size_loss_grad_embedding(&h);
    for k in 0..h.len() {
        let mut p = h;
        let mut m = h;
        p[k] += H;
        m[k] -= H;
        let fd = (size_loss_from_sum(2.5, &p, gamma).unwrap() - size_loss_from_sum(2.5, &m, gamma).unwrap()) / (2.0 * H);
        assert!(rel_err(an[k], fd) < 1e-5, "{k}: {} vs {fd}", an[k]);
    }
    let fd = (size_loss_from_sum(2.5 + H, &h, gamma).unwrap() - size_loss_from_sum(2.5 - H, &h, gamma).unwrap()) / (2.0 * H);
    assert!(rel_err(gamma, fd) < 1e-5);
}

#[test]
fn info_nce_gradient() {
    let mut r = rng::stream(3, &[]);
    let mut v = |_: usize| -> Vec<f64> { (0..4).map(|_| r.gen_range(-1.0..1.0)).collect() };
    let base: Vec<Vec<f64>> = (0..5).map(&mut v).collect();
    let eval = |s: &[Vec<f64>]| {
        info_nce_loss(NceInputs {
            mix_pos: &s[0],
            mix_neg: &s[1],
            target: &s[2],
            pos: &s[3],
            neg: &s[4],
        })
        .unwrap()
    };
    let (_, g) = info_nce_grad(NceInputs {
        mix_pos: &base[0],
        mix_neg: &base[1],
        target: &base[2],
        pos: &base[3],
        neg: &base[4],
    })
    .unwrap();
    let grads = [&g.mix_pos, &g.mix_neg, &g.target, &g.pos, &g.neg];
    for (which, an) in grads.iter().enumerate() {
        for k in 0..4 {
            let mut p = base.clone();
            let mut m = base.clone();
            p[which][k] += H;
            m[which][k] -= H;
            let fd = (eval(&p) - eval(&m)) / (2.0 * H);
            assert!(rel_err(an[k], fd) < 1e-5, "input {which} entry {k}: {} vs {fd}", an[k]);
        }
    }
}
