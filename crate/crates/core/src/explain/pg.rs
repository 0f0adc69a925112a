//! The shared edge-scoring network and the three training objectives built
//! on it (PGExplainer, MixupExplainer, RegExplainer).

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::error::{Error, Result};
use crate::gcn::{GcnModel, GcnOutput, GcnTrace};
use crate::graph::{EdgeMask, Explanation, Graph, GraphDataset};
use crate::linalg::{ln, sigmoid, sqrt, Matrix};
use crate::losses::{
    info_nce_grad, overall_loss, size_loss_from_sum, size_loss_grad_embedding,
    NceInputs,
};
use crate::mixup::{mixup_graphs_with, order_by_similarity, sample_two};
use crate::nn::{Adam, Mlp, MlpTrace};
use crate::rng::{self, StreamRng};

use super::{pred_sq_err, ExplainerConfig, ExplainerKind, GraphContext};

/// Edge-scoring network: an MLP mapping the concatenated final node states
/// `[z_i; z_j]` of an edge's endpoints to a mask logit. Both orientations are
/// scored and the resulting mask values averaged, so masks are symmetric.
#[derive(Debug, Clone, PartialEq)]
pub struct PgNetwork {
    mlp: Mlp,
    /// Node states are divided by this before entering the MLP.
    pub input_scale: f64,
}

struct SampledMask {
    weights: Vec<f64>,
    /// `∂ m_e / ∂ logit` for each directed row (two per edge).
    dm_dlogit: Vec<f64>,
    trace: MlpTrace,
}

const NOISE_EPS: f64 = 1e-6;

impl PgNetwork {
    pub fn new(embed_dim: usize, hidden: usize, seed: u64) -> Self {
        let mut rng = rng::stream(seed, &[rng::ROLE_INIT, 1]);
        Self {
            mlp: Mlp::new(&[2 * embed_dim, hidden, 1], &mut rng),
            input_scale: 1.0,
        }
    }

    pub fn from_mlp(mlp: Mlp, input_scale: f64) -> Result<Self> {
        if mlp.output_dim() != 1 || mlp.input_dim() % 2 != 0 {
            return Err(Error::Conformance("edge network must map 2h inputs to one logit".into()));
        }
        if !(input_scale > 0.0 && input_scale.is_finite()) {
            return Err(Error::Validation(format!("edge network input_scale {input_scale}")));
        }
        Ok(Self { mlp, input_scale })
    }

    pub fn mlp(&self) -> &Mlp {
        &self.mlp
    }

    pub fn mlp_mut(&mut self) -> &mut Mlp {
        &mut self.mlp
    }

    fn edge_inputs(&self, g: &Graph, ctx: &GraphContext) -> Result<Matrix> {
        let h = ctx.node_states.cols();
        if 2 * h != self.mlp.input_dim() {
            return Err(Error::Conformance(format!(
                "edge network expects {}-wide inputs, node states are {h}",
                self.mlp.input_dim()
            )));
        }
        let mut x = Matrix::zeros(2 * g.num_edges(), 2 * h);
        for (e, &(i, j)) in g.edges().iter().enumerate() {
            let (zi, zj) = (ctx.node_states.row(i), ctx.node_states.row(j));
            let r = x.row_mut(2 * e);
            r[..h].copy_from_slice(zi);
            r[h..].copy_from_slice(zj);
            let r = x.row_mut(2 * e + 1);
            r[..h].copy_from_slice(zj);
            r[h..].copy_from_slice(zi);
        }
        if self.input_scale != 1.0 {
            let inv = 1.0 / self.input_scale;
            x.as_mut_slice().iter_mut().for_each(|v| *v *= inv);
        }
        Ok(x)
    }

    /// Directed logits, two rows per edge (`(i, j)` then `(j, i)`).
    pub fn logits(&self, g: &Graph, ctx: &GraphContext) -> Result<Vec<f64>> {
        let x = self.edge_inputs(g, ctx)?;
        Ok(self.mlp.forward(&x).output().as_slice().to_vec())
    }

    /// Deterministic mask `(σ(l_ij) + σ(l_ji)) / 2`.
    pub fn mask(&self, g: &Graph, ctx: &GraphContext) -> Result<EdgeMask> {
        let l = self.logits(g, ctx)?;
        let w = l.chunks(2).map(|p| 0.5 * (sigmoid(p[0]) + sigmoid(p[1]))).collect();
        Ok(EdgeMask::from_weights_clamped(g.n(), w))
    }

    /// Concrete-relaxed sample at temperature `temp`; the same logistic noise
    /// is shared by both orientations of an edge.
    fn sample(&self, g: &Graph, ctx: &GraphContext, temp: f64, rng: &mut StreamRng) -> Result<SampledMask> {
        let x = self.edge_inputs(g, ctx)?;
        let trace = self.mlp.forward(&x);
        let logits = trace.output().as_slice();
        let mut weights = Vec::with_capacity(g.num_edges());
        let mut dm_dlogit = Vec::with_capacity(logits.len());
        for pair in logits.chunks(2) {
            let u: f64 = rng.gen_range(NOISE_EPS..1.0 - NOISE_EPS);
            let noise = ln(u) - ln(1.0 - u);
            let a = sigmoid((pair[0] + noise) / temp);
            let b = sigmoid((pair[1] + noise) / temp);
            weights.push(0.5 * (a + b));
            dm_dlogit.push(0.5 * a * (1.0 - a) / temp);
            dm_dlogit.push(0.5 * b * (1.0 - b) / temp);
        }
        Ok(SampledMask {
            weights,
            dm_dlogit,
            trace,
        })
    }

    fn backprop_mask(&self, s: &SampledMask, d_mask: &[f64], grad: &mut [f64]) {
        let d: Vec<f64> = s
            .dm_dlogit
            .iter()
            .enumerate()
            .map(|(r, &c)| c * d_mask[r / 2])
            .collect();
        if d.is_empty() {
            return;
        }
        let rows = d.len();
        self.mlp.backward(&s.trace, &Matrix::from_vec(rows, 1, d), grad);
    }
}

/// A trained edge network and its per-epoch mean objective.
#[derive(Debug, Clone)]
pub struct TrainedExplainer {
    pub net: PgNetwork,
    pub epoch_losses: Vec<f64>,
}

/// Inference shared by all parameterized explainers.
pub fn pg_explain(net: &PgNetwork, model: &GcnModel, g: &Graph) -> Result<Explanation> {
    let ctx = GraphContext::new(model, g)?;
    Explanation::new(g, net.mask(g, &ctx)?)
}

pub fn pgexplainer_explain(net: &PgNetwork, model: &GcnModel, g: &Graph) -> Result<Explanation> {
    pg_explain(net, model, g)
}

pub fn mixupexplainer_explain(net: &PgNetwork, model: &GcnModel, g: &Graph) -> Result<Explanation> {
    pg_explain(net, model, g)
}

pub fn regexplainer_explain(net: &PgNetwork, model: &GcnModel, g: &Graph) -> Result<Explanation> {
    pg_explain(net, model, g)
}

pub fn pgexplainer_train(model: &GcnModel, ds: &GraphDataset, cfg: &ExplainerConfig) -> Result<TrainedExplainer> {
    train_with(model, ds, cfg, ExplainerKind::PgExplainer)
}

pub fn mixupexplainer_train(model: &GcnModel, ds: &GraphDataset, cfg: &ExplainerConfig) -> Result<TrainedExplainer> {
    train_with(model, ds, cfg, ExplainerKind::MixupExplainer)
}

pub fn regexplainer_train(model: &GcnModel, ds: &GraphDataset, cfg: &ExplainerConfig) -> Result<TrainedExplainer> {
    train_with(model, ds, cfg, ExplainerKind::RegExplainer)
}

/// Trains the edge network for `cfg.kind`.
pub fn train_parameterized(model: &GcnModel, ds: &GraphDataset, cfg: &ExplainerConfig) -> Result<TrainedExplainer> {
    if !cfg.kind.is_parameterized() {
        return Err(Error::Validation(format!("{} has no trainable network", cfg.kind.name())));
    }
    train_with(model, ds, cfg, cfg.kind)
}

struct Trainer<'a> {
    model: &'a GcnModel,
    ds: &'a GraphDataset,
    cfg: &'a ExplainerConfig,
    pool: &'a [usize],
    /// Contexts indexed like `ds.graphs`; filled for the pool only.
    contexts: Vec<Option<GraphContext>>,
}

fn train_with(model: &GcnModel, ds: &GraphDataset, cfg: &ExplainerConfig, kind: ExplainerKind) -> Result<TrainedExplainer> {
    cfg.validate()?;
    let pool = &ds.splits.explainer_train[..];
    let min_pool = match kind {
        ExplainerKind::RegExplainer => 3,
        ExplainerKind::MixupExplainer => 2,
        _ => 1,
    };
    if pool.len() < min_pool {
        return Err(Error::Sampling(format!(
            "{} needs at least {min_pool} explainer-train graphs, have {}",
            kind.name(),
            pool.len()
        )));
    }
    let mut contexts = vec![None; ds.graphs.len()];
    for &i in pool {
        contexts[i] = Some(GraphContext::new(model, &ds.graphs[i])?);
    }
    let trainer = Trainer {
        model,
        ds,
        cfg,
        pool,
        contexts,
    };
    let mut net = PgNetwork::new(model.hidden_dim(), cfg.pg_hidden, cfg.seed);
    net.mlp.fill_last_bias(cfg.init_logit);
    let (mut sq, mut cnt) = (0.0, 0usize);
    for c in trainer.contexts.iter().flatten() {
        sq += c.node_states.as_slice().iter().map(|v| v * v).sum::<f64>();
        cnt += c.node_states.as_slice().len();
    }
    let rms = sqrt(sq / cnt.max(1) as f64);
    if rms > 0.0 && rms.is_finite() {
        net.input_scale = rms;
    }
    let mut opt = Adam::new(net.mlp.num_params(), cfg.learning_rate);
    let mut grad = vec![0.0; net.mlp.num_params()];
    let mut epoch_losses = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        let temp = cfg.mask_activation.temperature(epoch, cfg.epochs);
        grad.iter_mut().for_each(|g| *g = 0.0);
        let mut total = 0.0;
        for &gi in pool {
            let loss = match kind {
                ExplainerKind::PgExplainer => trainer.pg_step(&net, gi, epoch, temp, &mut grad)?,
                ExplainerKind::MixupExplainer => trainer.mixup_step(&net, gi, epoch, temp, &mut grad)?,
                _ => trainer.reg_step(&net, gi, epoch, temp, &mut grad)?,
            };
            if !loss.is_finite() {
                return Err(Error::Training { epoch, loss });
            }
            total += loss;
            if cfg.per_graph_updates {
                opt.step(net.mlp.params_mut(), &grad);
                grad.iter_mut().for_each(|g| *g = 0.0);
            }
        }
        if !cfg.per_graph_updates {
            let inv = 1.0 / pool.len() as f64;
            grad.iter_mut().for_each(|g| *g *= inv);
            opt.step(net.mlp.params_mut(), &grad);
        }
        if net.mlp.params().iter().any(|p| !p.is_finite()) {
            return Err(Error::Training { epoch, loss: f64::NAN });
        }
        epoch_losses.push(total / pool.len() as f64);
    }
    Ok(TrainedExplainer { net, epoch_losses })
}

impl Trainer<'_> {
    fn ctx(&self, gi: usize) -> &GraphContext {
        self.contexts[gi].as_ref().expect("context computed for pool graphs")
    }

    fn sample_mask(&self, net: &PgNetwork, gi: usize, epoch: usize, role: u64, temp: f64) -> Result<SampledMask> {
        let g = &self.ds.graphs[gi];
        let mut rng = rng::stream(self.cfg.seed, &[rng::ROLE_NOISE, epoch as u64, g.id, role]);
        net.sample(g, self.ctx(gi), temp, &mut rng)
    }

    fn mixup_seed(&self, epoch: usize, id: u64, which: u64) -> u64 {
        rng::mix(self.cfg.seed, &[rng::ROLE_MIXUP, epoch as u64, id, which])
    }

    /// Size term on `G*` plus `d_pred`/`d_emb` flowing into `f(G*)`; returns
    /// `∂/∂m` over `G`'s edges.
    fn star_mask_grad(
        &self,
        g: &Graph,
        out: &GcnOutput,
        trace: &GcnTrace,
        d_pred: f64,
        extra_d_emb: Option<&[f64]>,
    ) -> Vec<f64> {
        let mut d_emb = size_loss_grad_embedding(&out.embedding);
        if let Some(extra) = extra_d_emb {
            for (a, &b) in d_emb.iter_mut().zip(extra) {
                *a += b;
            }
        }
        let mut dm = vec![self.cfg.loss_weights.gamma; g.num_edges()];
        let dw = self.model.backward(g, trace, d_pred, Some(&d_emb), None);
        for (a, b) in dm.iter_mut().zip(dw) {
            *a += b;
        }
        dm
    }

    fn pg_step(&self, net: &PgNetwork, gi: usize, epoch: usize, temp: f64, grad: &mut [f64]) -> Result<f64> {
        let g = &self.ds.graphs[gi];
        let w = self.cfg.loss_weights;
        let sm = self.sample_mask(net, gi, epoch, 0, temp)?;
        let (out, trace) = self.model.forward_traced(g, Some(&sm.weights))?;
        let size = size_loss_from_sum(sm.weights.iter().sum(), &out.embedding, w.gamma)?;
        let (pred, d_pred) = pred_sq_err(self.model, out.prediction, g.label);
        let dm = self.star_mask_grad(g, &out, &trace, w.beta * d_pred, None);
        net.backprop_mask(&sm, &dm, grad);
        Ok(size + w.beta * pred)
    }

    fn mixup_step(&self, net: &PgNetwork, gi: usize, epoch: usize, temp: f64, grad: &mut [f64]) -> Result<f64> {
        let g = &self.ds.graphs[gi];
        let w = self.cfg.loss_weights;
        let sm = self.sample_mask(net, gi, epoch, 0, temp)?;
        let (out, trace) = self.model.forward_traced(g, Some(&sm.weights))?;
        let size = size_loss_from_sum(sm.weights.iter().sum(), &out.embedding, w.gamma)?;

        let mut rng = rng::stream(self.cfg.seed, &[rng::ROLE_PARTNER, epoch as u64, g.id]);
        let partner = loop {
            let p = self.pool[rng.gen_range(0..self.pool.len())];
            if p != gi {
                break p;
            }
        };
        let gb = &self.ds.graphs[partner];
        let smb = self.sample_mask(net, partner, epoch, 1, temp)?;
        let mix = mixup_graphs_with(
            g,
            &EdgeMask::from_weights_clamped(g.n(), sm.weights.clone()),
            gb,
            &EdgeMask::from_weights_clamped(gb.n(), smb.weights.clone()),
            self.cfg.eta_fraction,
            self.mixup_seed(epoch, g.id, 0),
            self.cfg.conn_weight,
        )?;
        let (mout, mtrace) = self.model.forward_traced(&mix.merged, Some(mix.mask.weights()))?;
        let (pred, d_pred) = pred_sq_err(self.model, mout.prediction, g.label);
        let dw = self.model.backward(
            &mix.merged,
            &mtrace,
            w.beta * d_pred,
            None,
            None,
        );
        let (da, db) = mix.split_edge_grad(&dw, g.num_edges(), gb.num_edges());
        let mut dm = self.star_mask_grad(g, &out, &trace, 0.0, None);
        for (a, b) in dm.iter_mut().zip(da) {
            *a += b;
        }
        net.backprop_mask(&sm, &dm, grad);
        net.backprop_mask(&smb, &db, grad);
        Ok(size + w.beta * pred)
    }

    fn reg_step(&self, net: &PgNetwork, gi: usize, epoch: usize, temp: f64, grad: &mut [f64]) -> Result<f64> {
        let cfg = self.cfg;
        let w = cfg.loss_weights;
        let ab = cfg.ablation;
        let g = &self.ds.graphs[gi];
        let ctx = self.ctx(gi);

        let sm = self.sample_mask(net, gi, epoch, 0, temp)?;
        let (out, trace) = self.model.forward_traced(g, Some(&sm.weights))?;
        let size = size_loss_from_sum(sm.weights.iter().sum(), &out.embedding, w.gamma)?;

        if ab.no_nce && ab.no_mse {
            let dm = self.star_mask_grad(g, &out, &trace, 0.0, None);
            net.backprop_mask(&sm, &dm, grad);
            return Ok(overall_loss(size, 0.0, 0.0, &w, cfg.sign_mode));
        }

        // neighbors ordered by similarity of unmasked embeddings
        let mut rng = rng::stream(cfg.seed, &[rng::ROLE_NEIGHBORS, epoch as u64, g.id]);
        let (b, c) = sample_two(self.pool, Some(gi), &mut rng)?;
        let (gb, gc) = (&self.ds.graphs[b], &self.ds.graphs[c]);
        let (pos_id, _) = order_by_similarity(
            &ctx.embedding,
            (gb.id, &self.ctx(b).embedding),
            (gc.id, &self.ctx(c).embedding),
        );
        let (pi, ni) = if pos_id == gb.id { (b, c) } else { (c, b) };
        let (gp, gn) = (&self.ds.graphs[pi], &self.ds.graphs[ni]);
        let (h, hp, hn) = (&ctx.embedding, &self.ctx(pi).embedding, &self.ctx(ni).embedding);

        let mut d_pred_star = 0.0;
        let mut d_emb_star = vec![0.0; h.len()];
        let mut dm = vec![0.0; g.num_edges()];
        let mut nce = 0.0;
        let mut mse = 0.0;

        if ab.no_mix {
            if !ab.no_nce {
                let (v, ng) = info_nce_grad(NceInputs {
                    mix_pos: &out.embedding,
                    mix_neg: &out.embedding,
                    target: h,
                    pos: hp,
                    neg: hn,
                })?;
                nce = v;
                let c = cfg.sign_mode.nce_sign() * w.alpha;
                for k in 0..h.len() {
                    d_emb_star[k] += c * (ng.mix_pos[k] + ng.mix_neg[k]);
                }
            }
            if !ab.no_mse {
                let (v, d) = pred_sq_err(self.model, out.prediction, ctx.prediction);
                mse = v;
                d_pred_star = w.beta * d;
            }
            let dstar = self.star_mask_grad(g, &out, &trace, d_pred_star, Some(&d_emb_star));
            net.backprop_mask(&sm, &dstar, grad);
            return Ok(overall_loss(size, nce, mse, &w, cfg.sign_mode));
        }

        let smp = self.sample_mask(net, pi, epoch, 1, temp)?;
        let smn = self.sample_mask(net, ni, epoch, 2, temp)?;
        let star = EdgeMask::from_weights_clamped(g.n(), sm.weights.clone());
        let mix_p = mixup_graphs_with(
            g,
            &star,
            gp,
            &EdgeMask::from_weights_clamped(gp.n(), smp.weights.clone()),
            cfg.eta_fraction,
            self.mixup_seed(epoch, g.id, 0),
            cfg.conn_weight,
        )?;
        let mix_n = mixup_graphs_with(
            g,
            &star,
            gn,
            &EdgeMask::from_weights_clamped(gn.n(), smn.weights.clone()),
            cfg.eta_fraction,
            self.mixup_seed(epoch, g.id, 1),
            cfg.conn_weight,
        )?;
        let (op, tp) = self.model.forward_traced(&mix_p.merged, Some(mix_p.mask.weights()))?;
        let (on, tn) = self.model.forward_traced(&mix_n.merged, Some(mix_n.mask.weights()))?;

        let mut d_hp = vec![0.0; h.len()];
        let mut d_hn = vec![0.0; h.len()];
        let mut d_yp = 0.0;
        if !ab.no_nce {
            let (v, ng) = info_nce_grad(NceInputs {
                mix_pos: &op.embedding,
                mix_neg: &on.embedding,
                target: h,
                pos: hp,
                neg: hn,
            })?;
            nce = v;
            let c = cfg.sign_mode.nce_sign() * w.alpha;
            for k in 0..h.len() {
                d_hp[k] = c * ng.mix_pos[k];
                d_hn[k] = c * ng.mix_neg[k];
            }
        }
        if !ab.no_mse {
            let (v, d) = pred_sq_err(self.model, op.prediction, ctx.prediction);
            mse = v;
            d_yp = w.beta * d;
        }
        let mut dmp = vec![0.0; gp.num_edges()];
        let mut dmn = vec![0.0; gn.num_edges()];
        let dwp = self.model.backward(&mix_p.merged, &tp, d_yp, Some(&d_hp), None);
        let (da, db) = mix_p.split_edge_grad(&dwp, g.num_edges(), gp.num_edges());
        dm.iter_mut().zip(da).for_each(|(a, b)| *a += b);
        dmp.iter_mut().zip(db).for_each(|(a, b)| *a += b);
        if !ab.no_nce {
            let dwn = self.model.backward(&mix_n.merged, &tn, 0.0, Some(&d_hn), None);
            let (da, db) = mix_n.split_edge_grad(&dwn, g.num_edges(), gn.num_edges());
            dm.iter_mut().zip(da).for_each(|(a, b)| *a += b);
            dmn.iter_mut().zip(db).for_each(|(a, b)| *a += b);
        }
        let dstar = self.star_mask_grad(g, &out, &trace, 0.0, None);
        dm.iter_mut().zip(dstar).for_each(|(a, b)| *a += b);
        net.backprop_mask(&sm, &dm, grad);
        net.backprop_mask(&smp, &dmp, grad);
        net.backprop_mask(&smn, &dmn, grad);
        Ok(overall_loss(size, nce, mse, &w, cfg.sign_mode))
    }
}
