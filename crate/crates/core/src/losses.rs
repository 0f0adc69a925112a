//! Objective terms and their gradients.
//!
//! * InfoNCE over mix-up embeddings against positive and negative neighbors,
//!   evaluated in log space.
//! * The size constraint `γ Σ_{(i,j)∈E} M_ij − log σ(h*ᵀh*)`, each undirected
//!   edge counted once.
//! * Squared error between two predictions.
//! * Their weighted combination.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::graph::EdgeMask;
use crate::linalg::{dot, exp, ln, log_add_exp, log_sigmoid, sigmoid};

/// Term weights of the combined objective.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossWeights {
    /// InfoNCE weight.
    pub alpha: f64,
    /// Prediction (MSE) weight.
    pub beta: f64,
    /// Edge-size weight.
    pub gamma: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            beta: 1.0,
            gamma: 0.003,
        }
    }
}

impl LossWeights {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha.is_finite() && self.alpha >= 0.0) {
            return Err(Error::Validation(format!("alpha = {}", self.alpha)));
        }
        if !(self.beta.is_finite() && self.beta >= 0.0) {
            return Err(Error::Validation(format!("beta = {}", self.beta)));
        }
        if !(self.gamma.is_finite() && self.gamma > 0.0) {
            return Err(Error::Validation(format!("gamma = {}", self.gamma)));
        }
        Ok(())
    }
}

/// How the InfoNCE term enters the combined objective.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SignMode {
    /// `size + α·nce + β·mse`: minimizing the objective maximizes the
    /// mutual-information bound.
    #[default]
    AsDerived,
    /// `size − α·nce + β·mse`, the literal printed form.
    AsPrinted,
}

impl SignMode {
    pub fn from_name(s: &str) -> Result<Self> {
        match s {
            "as_derived" => Ok(SignMode::AsDerived),
            "as_printed" => Ok(SignMode::AsPrinted),
            other => Err(Error::Validation(format!("unknown sign mode {other:?}"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SignMode::AsDerived => "as_derived",
            SignMode::AsPrinted => "as_printed",
        }
    }

    /// Coefficient multiplying `α · nce`.
    pub fn nce_sign(self) -> f64 {
        match self {
            SignMode::AsDerived => 1.0,
            SignMode::AsPrinted => -1.0,
        }
    }
}

/// Embeddings entering the InfoNCE term.
#[derive(Debug, Clone, Copy)]
pub struct NceInputs<'a> {
    pub mix_pos: &'a [f64],
    pub mix_neg: &'a [f64],
    pub target: &'a [f64],
    pub pos: &'a [f64],
    pub neg: &'a [f64],
}

/// Gradients of the InfoNCE term with respect to each embedding.
#[derive(Debug, Clone, PartialEq)]
pub struct NceGrad {
    pub mix_pos: Vec<f64>,
    pub mix_neg: Vec<f64>,
    pub target: Vec<f64>,
    pub pos: Vec<f64>,
    pub neg: Vec<f64>,
}

fn check_lengths(x: &NceInputs<'_>) -> Result<()> {
    let d = x.mix_pos.len();
    let lens = [x.mix_neg.len(), x.target.len(), x.pos.len(), x.neg.len()];
    if lens.iter().any(|&l| l != d) {
        return Err(Error::Conformance(format!(
            "embedding lengths differ: {d} vs {lens:?}"
        )));
    }
    Ok(())
}

/// `−log[ exp(h⁺ₘᵢₓ·h) / (exp(h⁺ₘᵢₓ·h⁺) + exp(h⁻ₘᵢₓ·h⁻)) ]`.
pub fn info_nce_loss(x: NceInputs<'_>) -> Result<f64> {
    check_lengths(&x)?;
    let anchor = dot(x.mix_pos, x.target);
    let sp = dot(x.mix_pos, x.pos);
    let sn = dot(x.mix_neg, x.neg);
    Ok(log_add_exp(sp, sn) - anchor)
}

/// Value and gradient of [`info_nce_loss`].
pub fn info_nce_grad(x: NceInputs<'_>) -> Result<(f64, NceGrad)> {
    check_lengths(&x)?;
    let anchor = dot(x.mix_pos, x.target);
    let sp = dot(x.mix_pos, x.pos);
    let sn = dot(x.mix_neg, x.neg);
    let lse = log_add_exp(sp, sn);
    let wp = exp(sp - lse);
    let wn = exp(sn - lse);
    let grad = NceGrad {
        mix_pos: x
            .pos
            .iter()
            .zip(x.target)
            .map(|(p, t)| wp * p - t)
            .collect(),
        mix_neg: x.neg.iter().map(|n| wn * n).collect(),
        target: x.mix_pos.iter().map(|m| -m).collect(),
        pos: x.mix_pos.iter().map(|m| wp * m).collect(),
        neg: x.mix_neg.iter().map(|m| wn * m).collect(),
    };
    Ok((lse - anchor, grad))
}

/// The textbook form, used to cross-check the log-space evaluation.
pub fn info_nce_naive(x: NceInputs<'_>) -> Result<f64> {
    check_lengths(&x)?;
    let num = exp(dot(x.mix_pos, x.target));
    let den = exp(dot(x.mix_pos, x.pos)) + exp(dot(x.mix_neg, x.neg));
    Ok(-ln(num / den))
}

fn check_gamma(gamma: f64) -> Result<()> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::Validation(format!("gamma must be positive, got {gamma}")));
    }
    Ok(())
}

/// `γ · Σ M_ij − log σ(h*ᵀh*)` with `Σ M_ij` over undirected edges.
pub fn size_loss(mask: &EdgeMask, h_star: &[f64], gamma: f64) -> Result<f64> {
    size_loss_from_sum(mask.edge_sum(), h_star, gamma)
}

/// [`size_loss`] from a precomputed edge-weight sum.
pub fn size_loss_from_sum(edge_sum: f64, h_star: &[f64], gamma: f64) -> Result<f64> {
    check_gamma(gamma)?;
    if !h_star.iter().all(|v| v.is_finite()) {
        return Err(Error::Numeric("size loss embedding".into()));
    }
    Ok(gamma * edge_sum - log_sigmoid(dot(h_star, h_star)))
}

/// Gradients of the size loss: the per-edge slope is `γ`; the embedding
/// gradient is `−2 (1 − σ(h*ᵀh*)) h*`.
pub fn size_loss_grad_embedding(h_star: &[f64]) -> Vec<f64> {
    let q = dot(h_star, h_star);
    let c = -2.0 * (1.0 - sigmoid(q));
    h_star.iter().map(|v| c * v).collect()
}

/// `(y_a − y_b)²`.
pub fn mse_loss(y_a: f64, y_b: f64) -> f64 {
    (y_a - y_b) * (y_a - y_b)
}

/// `∂/∂y_a (y_a − y_b)²`; the derivative in `y_b` is its negation.
pub fn mse_loss_grad(y_a: f64, y_b: f64) -> f64 {
    2.0 * (y_a - y_b)
}

/// Combined objective `size ± α·nce + β·mse`.
pub fn overall_loss(size: f64, nce: f64, mse: f64, w: &LossWeights, mode: SignMode) -> f64 {
    size + mode.nce_sign() * w.alpha * nce + w.beta * mse
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use core::f64::consts::{E, LN_2};

    fn nce(a: &[f64], b: &[f64], c: &[f64], d: &[f64], e: &[f64]) -> f64 {
        info_nce_loss(NceInputs {
            mix_pos: a,
            mix_neg: b,
            target: c,
            pos: d,
            neg: e,
        })
        .unwrap()
    }

    #[test]
    fn nce_hand_values() {
        let z = [0.0, 0.0];
        assert!((nce(&z, &z, &z, &z, &z) - LN_2).abs() < 1e-12);
        let x = [1.0, 0.0];
        let y = [0.0, 1.0];
        assert!((nce(&x, &y, &x, &x, &y) - LN_2).abs() < 1e-12);
        let v = nce(&[2.0, 0.0], &[0.0, 1.0], &[1.0, 0.0], &[1.0, 0.0], &[0.0, 3.0]);
        assert!((v - ln(1.0 + E)).abs() < 1e-12);
        assert!((v - 1.313_261_687_518_222_6).abs() < 1e-9);
    }

    #[test]
    fn nce_length_mismatch() {
        let r = info_nce_loss(NceInputs {
            mix_pos: &[1.0],
            mix_neg: &[1.0, 2.0],
            target: &[1.0],
            pos: &[1.0],
            neg: &[1.0],
        });
        assert!(matches!(r, Err(Error::Conformance(_))));
    }

    #[test]
    fn nce_does_not_overflow() {
        let big = [1e3, 0.0];
        let v = nce(&big, &big, &big, &big, &big);
        assert!(v.is_finite());
        assert!((v - LN_2).abs() < 1e-9);
    }

    #[test]
    fn size_hand_values() {
        let g = crate::graph::Graph::new(0, crate::linalg::Matrix::filled(2, 1, 1.0), [(0, 1)], 0.0)
            .unwrap();
        let zero = EdgeMask::zeros(&g);
        assert!((size_loss(&zero, &[0.0, 0.0], 0.1).unwrap() - LN_2).abs() < 1e-12);
        assert!((size_loss_from_sum(10.0, &[0.0], 0.1).unwrap() - (1.0 + LN_2)).abs() < 1e-12);
        assert!((size_loss_from_sum(100.0, &[0.0], 0.0003).unwrap() - (0.03 + LN_2)).abs() < 1e-12);
        assert!(matches!(size_loss(&zero, &[0.0], 0.0), Err(Error::Validation(_))));
    }

    #[test]
    fn mse_and_overall() {
        assert_eq!(mse_loss(3.0, 3.0), 0.0);
        assert_eq!(mse_loss(0.0, 2.0), 4.0);
        assert_eq!(mse_loss(1.5, -0.5), 4.0);
        let w0 = LossWeights {
            alpha: 0.0,
            beta: 0.0,
            gamma: 0.1,
        };
        assert_eq!(overall_loss(1.5, 2.0, 3.0, &w0, SignMode::AsDerived), 1.5);
        assert_eq!(overall_loss(1.5, 2.0, 3.0, &w0, SignMode::AsPrinted), 1.5);
        let w1 = LossWeights {
            alpha: 1.0,
            beta: 1.0,
            gamma: 0.1,
        };
        assert_eq!(overall_loss(1.0, 2.0, 3.0, &w1, SignMode::AsDerived), 6.0);
        assert_eq!(overall_loss(1.0, 2.0, 3.0, &w1, SignMode::AsPrinted), 2.0);
        assert!(SignMode::from_name("nope").is_err());
    }

    #[test]
    fn weights_validation() {
        assert!(LossWeights::default().validate().is_ok());
        let bad = LossWeights {
            gamma: 0.0,
            ..LossWeights::default()
        };
        assert!(bad.validate().is_err());
        let _ = vec![0.0];
    }
}
