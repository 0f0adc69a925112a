use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::gcn::GcnModel;
use crate::graph::{EdgeMask, Explanation, Graph};
use crate::linalg::sigmoid;
use super::pred_sq_err;
use crate::losses::{size_loss_from_sum, size_loss_grad_embedding};
use crate::nn::Adam;

use super::ExplainerConfig;

/// Fits one logit per edge to minimize `β (f(G ⊙ σ(l)) − Y)² + size(σ(l), h*)`.
/// Logits start at `cfg.init_logit`; with the default of zero, `epochs = 0`
/// returns the uniform 0.5 mask.
pub fn gnnexplainer_explain(model: &GcnModel, g: &Graph, cfg: &ExplainerConfig) -> Result<Explanation> {
    let w = cfg.loss_weights;
    let gamma = w.gamma;
    let mut logits = vec![cfg.init_logit; g.num_edges()];
    let mut opt = Adam::new(logits.len(), cfg.learning_rate);
    for epoch in 0..cfg.epochs {
        let mask: Vec<f64> = logits.iter().map(|&l| sigmoid(l)).collect();
        let (out, trace) = model.forward_traced(g, Some(&mask))?;
        let (pe, d_pe) = pred_sq_err(model, out.prediction, g.label);
        let loss = w.beta * pe
            + size_loss_from_sum(mask.iter().sum(), &out.embedding, gamma)?;
        if !loss.is_finite() {
            return Err(Error::Training { epoch, loss });
        }
        let d_emb = size_loss_grad_embedding(&out.embedding);
        let d_pred = w.beta * d_pe;
        let d_mask = model.backward(g, &trace, d_pred, Some(&d_emb), None);
        let d_logit: Vec<f64> = d_mask
            .iter()
            .zip(&mask)
            .map(|(&dm, &m)| (dm + gamma) * m * (1.0 - m))
            .collect();
        opt.step(&mut logits, &d_logit);
    }
    let mask = logits.iter().map(|&l| sigmoid(l)).collect();
    Explanation::new(g, EdgeMask::from_weights_clamped(g.n(), mask))
}
