use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::gcn::GcnModel;
use crate::graph::{EdgeMask, Explanation, Graph};
use crate::losses::mse_loss_grad;

/// Edge scores `|∂ (f(G) − Y)² / ∂ A_ij|` at the all-ones mask, min-max
/// normalized to [0, 1]. A constant score vector maps to all zeros.
pub fn grad_explain(model: &GcnModel, g: &Graph) -> Result<Explanation> {
    let (out, trace) = model.forward_traced(g, None)?;
    let d_pred = mse_loss_grad(out.prediction, g.label);
    let raw: Vec<f64> = model
        .backward(g, &trace, d_pred, None, None)
        .into_iter()
        .map(f64::abs)
        .collect();
    if raw.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("edge gradient".into()));
    }
    let lo = raw.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = raw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let scores = if raw.is_empty() || hi <= lo {
        alloc::vec![0.0; raw.len()]
    } else {
        raw.iter().map(|v| (v - lo) / (hi - lo)).collect()
    };
    Explanation::new(g, EdgeMask::from_weights_clamped(g.n(), scores))
}
