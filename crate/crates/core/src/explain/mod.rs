//! Post-hoc explainers mapping `(model, graph)` to an edge mask.
//!
//! * [`grad_explain`]: absolute gradient of the squared error w.r.t. each edge.
//! * [`gnnexplainer_explain`]: per-instance mask logits fitted by Adam.
//! * [`pgexplainer_train`]: a shared edge-scoring network (see [`PgNetwork`]).
//! * [`mixupexplainer_train`]: the same network trained on single mix-ups.
//! * [`regexplainer_train`]: mix-up with positive/negative neighbors plus
//!   InfoNCE, size and prediction terms.
//!
//! The three parameterized explainers share one inference path,
//! [`pg_explain`].

mod gnnexplainer;
mod grad;
mod pg;

use alloc::format;
use alloc::vec::Vec;

pub use gnnexplainer::gnnexplainer_explain;
pub use grad::grad_explain;
pub use pg::{
    mixupexplainer_explain, mixupexplainer_train, pg_explain, pgexplainer_explain, pgexplainer_train,
    regexplainer_explain, regexplainer_train, train_parameterized, PgNetwork, TrainedExplainer,
};

use crate::error::{Error, Result};
use crate::gcn::GcnModel;
use crate::graph::{Explanation, Graph, GraphDataset};
use crate::linalg::Matrix;
use crate::losses::{LossWeights, SignMode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ExplainerKind {
    Grad,
    GnnExplainer,
    PgExplainer,
    MixupExplainer,
    RegExplainer,
}

impl ExplainerKind {
    pub const ALL: [ExplainerKind; 5] = [
        ExplainerKind::Grad,
        ExplainerKind::GnnExplainer,
        ExplainerKind::PgExplainer,
        ExplainerKind::MixupExplainer,
        ExplainerKind::RegExplainer,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExplainerKind::Grad => "grad",
            ExplainerKind::GnnExplainer => "gnnexplainer",
            ExplainerKind::PgExplainer => "pgexplainer",
            ExplainerKind::MixupExplainer => "mixupexplainer",
            ExplainerKind::RegExplainer => "regexplainer",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s)
    }

    /// Whether the explainer trains a shared network before explaining.
    pub fn is_parameterized(self) -> bool {
        matches!(
            self,
            ExplainerKind::PgExplainer | ExplainerKind::MixupExplainer | ExplainerKind::RegExplainer
        )
    }
}

/// Switches removing one component of the RegExplainer objective.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Hash)]
pub struct Ablation {
    /// Feed `G*` directly instead of the mix-up graphs.
    pub no_mix: bool,
    /// Drop the InfoNCE term.
    pub no_nce: bool,
    /// Drop the prediction (MSE) term.
    pub no_mse: bool,
}

impl Ablation {
    pub const NONE: Ablation = Ablation {
        no_mix: false,
        no_nce: false,
        no_mse: false,
    };
    pub const NO_MIX: Ablation = Ablation {
        no_mix: true,
        no_nce: false,
        no_mse: false,
    };
    pub const NO_NCE: Ablation = Ablation {
        no_mix: false,
        no_nce: true,
        no_mse: false,
    };
    pub const NO_MSE: Ablation = Ablation {
        no_mix: false,
        no_nce: false,
        no_mse: true,
    };
    pub const ALL: Ablation = Ablation {
        no_mix: true,
        no_nce: true,
        no_mse: true,
    };

    pub fn name(self) -> &'static str {
        match (self.no_mix, self.no_nce, self.no_mse) {
            (false, false, false) => "full",
            (true, false, false) => "no_mix",
            (false, true, false) => "no_nce",
            (false, false, true) => "no_mse",
            _ => "custom",
        }
    }
}

/// Concrete (binary Gumbel) relaxation used while training the
/// parameterized explainers; the temperature moves linearly from
/// `temp_start` to `temp_end` over the epochs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaskActivation {
    pub temp_start: f64,
    pub temp_end: f64,
}

impl Default for MaskActivation {
    fn default() -> Self {
        Self {
            temp_start: 5.0,
            temp_end: 1.0,
        }
    }
}

impl MaskActivation {
    pub fn temperature(&self, epoch: usize, epochs: usize) -> f64 {
        if epochs <= 1 {
            return self.temp_start;
        }
        let t = epoch as f64 / (epochs - 1) as f64;
        self.temp_start + (self.temp_end - self.temp_start) * t
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExplainerConfig {
    pub kind: ExplainerKind,
    pub epochs: usize,
    pub learning_rate: f64,
    pub loss_weights: LossWeights,
    pub sign_mode: SignMode,
    /// Cross edges per mix-up as a fraction of the target's edge count.
    pub eta_fraction: f64,
    /// Weight placed on sampled cross edges.
    pub conn_weight: f64,
    pub seed: u64,
    pub mask_activation: MaskActivation,
    pub ablation: Ablation,
    /// Hidden width of the edge-scoring network.
    pub pg_hidden: usize,
    /// Step after every graph instead of once per epoch.
    pub per_graph_updates: bool,
    /// Initial mask logit: the output bias of the edge network, or every
    /// per-edge logit of GNNExplainer. Positive values start from masks near
    /// the full graph.
    pub init_logit: f64,
}

impl Default for ExplainerConfig {
    fn default() -> Self {
        Self {
            kind: ExplainerKind::RegExplainer,
            epochs: 100,
            learning_rate: 0.003,
            loss_weights: LossWeights::default(),
            sign_mode: SignMode::AsDerived,
            eta_fraction: 0.03,
            conn_weight: crate::mixup::DEFAULT_CONN_WEIGHT,
            seed: 0,
            mask_activation: MaskActivation::default(),
            ablation: Ablation::NONE,
            pg_hidden: 64,
            per_graph_updates: false,
            init_logit: 0.0,
        }
    }
}

impl ExplainerConfig {
    pub fn for_kind(kind: ExplainerKind) -> Self {
        let mut cfg = Self {
            kind,
            ..Self::default()
        };
        if kind == ExplainerKind::GnnExplainer {
            cfg.learning_rate = 0.01;
        }
        cfg
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.loss_weights.validate()?;
        if !(self.eta_fraction >= 0.0 && self.eta_fraction.is_finite()) {
            return Err(Error::Validation(format!("eta_fraction = {}", self.eta_fraction)));
        }
        if self.kind.is_parameterized() && self.epochs == 0 {
            return Err(Error::Validation("epochs must be at least 1".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Validation(format!("learning_rate = {}", self.learning_rate)));
        }
        let t = self.mask_activation;
        if !(t.temp_start > 0.0 && t.temp_end > 0.0) {
            return Err(Error::Validation("temperatures must be positive".into()));
        }
        if !self.init_logit.is_finite() {
            return Err(Error::Validation(format!("init_logit = {}", self.init_logit)));
        }
        if self.pg_hidden == 0 {
            return Err(Error::Validation("pg_hidden must be positive".into()));
        }
        Ok(())
    }
}

/// Squared error between two predictions measured in the model's
/// standardized target units, and its derivative in the first argument.
pub(crate) fn pred_sq_err(model: &GcnModel, a: f64, b: f64) -> (f64, f64) {
    let s = model.target_scale;
    let d = (a - b) / s;
    (d * d, 2.0 * d / s)
}

/// Frozen-model quantities for one graph: final node states, embedding and
/// prediction on the unmasked graph.
#[derive(Debug, Clone)]
pub struct GraphContext {
    pub node_states: Matrix,
    pub embedding: Vec<f64>,
    pub prediction: f64,
}

impl GraphContext {
    pub fn new(model: &GcnModel, g: &Graph) -> Result<Self> {
        let out = model.forward(g, None)?;
        Ok(Self {
            node_states: out.node_states,
            embedding: out.embedding,
            prediction: out.prediction,
        })
    }
}

/// Runs `kind` over the given graphs. Parameterized explainers must be
/// trained first and passed in `net`.
pub fn explain_graphs(
    model: &GcnModel,
    graphs: &[&Graph],
    cfg: &ExplainerConfig,
    net: Option<&PgNetwork>,
) -> Result<Vec<Explanation>> {
    graphs
        .iter()
        .map(|g| match cfg.kind {
            ExplainerKind::Grad => grad_explain(model, g),
            ExplainerKind::GnnExplainer => gnnexplainer_explain(model, g, cfg),
            _ => {
                let net = net.ok_or_else(|| Error::Validation("parameterized explainer needs a trained network".into()))?;
                pg_explain(net, model, g)
            }
        })
        .collect()
}

/// Trains (if needed) and explains every graph of the explainer-test fold.
pub fn run_explainer(model: &GcnModel, ds: &GraphDataset, cfg: &ExplainerConfig) -> Result<(Vec<Explanation>, Option<TrainedExplainer>)> {
    cfg.validate()?;
    let trained = if cfg.kind.is_parameterized() {
        Some(train_parameterized(model, ds, cfg)?)
    } else {
        None
    };
    let graphs: Vec<&Graph> = ds.subset(&ds.splits.explainer_test).collect();
    let expl = explain_graphs(model, &graphs, cfg, trained.as_ref().map(|t| &t.net))?;
    Ok((expl, trained))
}
