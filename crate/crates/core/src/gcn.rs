//! The regressor being explained: three edge-weighted graph convolutions, a
//! pooling readout and a dense head, with exact gradients with respect to the
//! parameters and to every edge weight.
//!
//! Each convolution computes `ReLU(P H W + b)` with
//! `P = D^{-1/2} (W_e + I) D^{-1/2}`, where `W_e` is the (masked) weighted
//! adjacency, self loops always carry weight 1 and `D` holds weighted degrees.
//! [`Propagation::Unnormalized`] drops the degree scaling (`P = W_e + I`).
//! With constant node features the normalized operator cannot see edge
//! density, so count-type targets on near-regular graphs need it.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::graph::{EdgeMask, Graph, GraphDataset};
use crate::linalg::{matmul_into, matmul_nt_into, matmul_tn_acc, dot, sqrt, Matrix};
use crate::nn::{glorot, Adam, Mlp, MlpTrace};
use crate::rng;

pub const NUM_CONV: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Readout {
    Mean,
    Sum,
}

impl Readout {
    pub fn name(self) -> &'static str {
        match self {
            Readout::Mean => "mean",
            Readout::Sum => "sum",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "mean" => Some(Readout::Mean),
            "sum" => Some(Readout::Sum),
            _ => None,
        }
    }
}

/// How aggregated neighbor states are scaled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Propagation {
    /// `D^{-1/2} (W_e + I) D^{-1/2}`.
    #[default]
    Symmetric,
    /// `W_e + I`.
    Unnormalized,
}

impl Propagation {
    pub fn name(self) -> &'static str {
        match self {
            Propagation::Symmetric => "symmetric",
            Propagation::Unnormalized => "unnormalized",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "symmetric" => Some(Propagation::Symmetric),
            "unnormalized" => Some(Propagation::Unnormalized),
            _ => None,
        }
    }
}

/// Three-layer GCN regressor.
///
/// Predictions are reported in label units: the head output `o` maps to
/// `target_shift + target_scale * o`. Inputs are divided by `input_scale`.
/// Both scalings are fixed at training time from the training fold.
#[derive(Debug, Clone, PartialEq)]
pub struct GcnModel {
    input_dim: usize,
    hidden_dim: usize,
    pub readout: Readout,
    pub propagation: Propagation,
    /// Constant multiplying `W_e + I` under [`Propagation::Unnormalized`].
    pub degree_scale: f64,
    /// Divisor of the summed node states under [`Readout::Sum`].
    pub readout_scale: f64,
    conv: Vec<f64>,
    head: Mlp,
    pub input_scale: f64,
    pub target_shift: f64,
    pub target_scale: f64,
}

/// Prediction, graph embedding and final node states of one forward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct GcnOutput {
    pub prediction: f64,
    pub embedding: Vec<f64>,
    pub node_states: Matrix,
}

/// Values cached by [`GcnModel::forward_traced`] for the backward pass.
#[derive(Debug, Clone)]
pub struct GcnTrace {
    weights: Vec<f64>,
    inv_sqrt_deg: Vec<f64>,
    inputs: Vec<Matrix>,
    transformed: Vec<Matrix>,
    preacts: Vec<Matrix>,
    head: MlpTrace,
}

/// Parameter gradients, laid out like the model.
#[derive(Debug, Clone, PartialEq)]
pub struct GcnGrad {
    pub conv: Vec<f64>,
    pub head: Vec<f64>,
}

impl GcnGrad {
    pub fn zeros_like(model: &GcnModel) -> Self {
        Self {
            conv: vec![0.0; model.conv.len()],
            head: vec![0.0; model.head.num_params()],
        }
    }

    pub fn scale(&mut self, s: f64) {
        self.conv.iter_mut().chain(self.head.iter_mut()).for_each(|g| *g *= s);
    }

    pub fn clear(&mut self) {
        self.scale(0.0);
    }
}

fn conv_len(input_dim: usize, hidden: usize) -> usize {
    (input_dim * hidden + hidden) + 2 * (hidden * hidden + hidden)
}

impl GcnModel {
    /// Glorot-initialised weights, zero biases.
    pub fn new(input_dim: usize, hidden_dim: usize, readout: Readout, seed: u64) -> Self {
        let mut rng = rng::stream(seed, &[rng::ROLE_INIT]);
        let mut m = Self::zeros(input_dim, hidden_dim, readout);
        for l in 0..NUM_CONV {
            let (w, _, fan_in) = m.conv_offsets(l);
            glorot(&mut m.conv[w..w + fan_in * hidden_dim], fan_in, hidden_dim, &mut rng);
        }
        m.head = Mlp::new(&[hidden_dim, hidden_dim, 1], &mut rng);
        m
    }

    pub fn zeros(input_dim: usize, hidden_dim: usize, readout: Readout) -> Self {
        Self {
            input_dim,
            hidden_dim,
            readout,
            propagation: Propagation::Symmetric,
            degree_scale: 1.0,
            readout_scale: 1.0,
            conv: vec![0.0; conv_len(input_dim, hidden_dim)],
            head: Mlp::zeros(&[hidden_dim, hidden_dim, 1]),
            input_scale: 1.0,
            target_shift: 0.0,
            target_scale: 1.0,
        }
    }

    /// Reassembles a model from flat parameter buffers (checkpoint loading).
    #[allow(clippy::too_many_arguments)]
    pub fn from_parts(
        input_dim: usize,
        hidden_dim: usize,
        readout: Readout,
        conv: Vec<f64>,
        head: Vec<f64>,
        input_scale: f64,
        target_shift: f64,
        target_scale: f64,
    ) -> Result<Self> {
        if conv.len() != conv_len(input_dim, hidden_dim) {
            return Err(Error::Conformance(format!(
                "conv parameter buffer has {} entries, expected {}",
                conv.len(),
                conv_len(input_dim, hidden_dim)
            )));
        }
        let head = Mlp::from_params(&[hidden_dim, hidden_dim, 1], head)
            .ok_or_else(|| Error::Conformance("head parameter buffer size".into()))?;
        let scalars = [input_scale, target_shift, target_scale];
        if !conv.iter().chain(head.params()).chain(&scalars).all(|v| v.is_finite()) || input_scale <= 0.0 {
            return Err(Error::Validation("non-finite or invalid parameters".into()));
        }
        Ok(Self {
            input_dim,
            hidden_dim,
            readout,
            propagation: Propagation::Symmetric,
            degree_scale: 1.0,
            readout_scale: 1.0,
            conv,
            head,
            input_scale,
            target_shift,
            target_scale,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn hidden_dim(&self) -> usize {
        self.hidden_dim
    }

    pub fn conv_params(&self) -> &[f64] {
        &self.conv
    }

    pub fn conv_params_mut(&mut self) -> &mut [f64] {
        &mut self.conv
    }

    pub fn head(&self) -> &Mlp {
        &self.head
    }

    pub fn head_mut(&mut self) -> &mut Mlp {
        &mut self.head
    }

    /// Sets every convolution bias to `v`. A positive start keeps units
    /// active when all node features are equal.
    pub fn fill_conv_biases(&mut self, v: f64) {
        let h = self.hidden_dim;
        for l in 0..NUM_CONV {
            let (_, b, _) = self.conv_offsets(l);
            self.conv[b..b + h].iter_mut().for_each(|x| *x = v);
        }
    }

    /// `(weight offset, bias offset, fan_in)` of convolution `l`.
    fn conv_offsets(&self, l: usize) -> (usize, usize, usize) {
        let h = self.hidden_dim;
        let first = self.input_dim * h + h;
        let off = if l == 0 { 0 } else { first + (l - 1) * (h * h + h) };
        let fan_in = if l == 0 { self.input_dim } else { h };
        (off, off + fan_in * h, fan_in)
    }

    /// Weight (`fan_in × hidden`, row-major) and bias of convolution `l`.
    pub fn conv_layer(&self, l: usize) -> (&[f64], &[f64]) {
        let (w, b, fan_in) = self.conv_offsets(l);
        let h = self.hidden_dim;
        (&self.conv[w..w + fan_in * h], &self.conv[b..b + h])
    }

    /// Forward pass; `mask` defaults to all ones.
    pub fn forward(&self, g: &Graph, mask: Option<&EdgeMask>) -> Result<GcnOutput> {
        if let Some(m) = mask {
            m.check_conforms(g)?;
        }
        Ok(self.forward_traced(g, mask.map(|m| m.weights()))?.0)
    }

    /// Forward pass with explicit per-edge weights (aligned with `g.edges()`),
    /// keeping what the backward pass needs.
    pub fn forward_traced(&self, g: &Graph, weights: Option<&[f64]>) -> Result<(GcnOutput, GcnTrace)> {
        if g.d() != self.input_dim {
            return Err(Error::Conformance(format!(
                "graph {} has {} features, model expects {}",
                g.id,
                g.d(),
                self.input_dim
            )));
        }
        let n = g.n();
        let h = self.hidden_dim;
        let weights: Vec<f64> = match weights {
            Some(w) if w.len() == g.num_edges() => w.to_vec(),
            Some(w) => {
                return Err(Error::Conformance(format!(
                    "{} edge weights for {} edges",
                    w.len(),
                    g.num_edges()
                )))
            }
            None => vec![1.0; g.num_edges()],
        };
        let mut deg = vec![1.0; n];
        for (&(i, j), &w) in g.edges().iter().zip(&weights) {
            deg[i] += w;
            deg[j] += w;
        }
        let inv_sqrt_deg: Vec<f64> = match self.propagation {
            Propagation::Symmetric => deg.iter().map(|&d| 1.0 / sqrt(d)).collect(),
            Propagation::Unnormalized => vec![sqrt(self.degree_scale); n],
        };

        let mut x = g.x().clone();
        if self.input_scale != 1.0 {
            x.as_mut_slice().iter_mut().for_each(|v| *v /= self.input_scale);
        }
        let mut inputs = Vec::with_capacity(NUM_CONV);
        let mut transformed = Vec::with_capacity(NUM_CONV);
        let mut preacts = Vec::with_capacity(NUM_CONV);
        let mut cur = x;
        for l in 0..NUM_CONV {
            let (wo, bo, fan_in) = self.conv_offsets(l);
            let mut u = Matrix::zeros(n, h);
            matmul_into(cur.as_slice(), n, fan_in, &self.conv[wo..wo + fan_in * h], h, u.as_mut_slice());
            let z = propagate(g, &weights, &inv_sqrt_deg, &u, &self.conv[bo..bo + h]);
            if !z.all_finite() {
                return Err(Error::Numeric(format!("graph convolution {}", l + 1)));
            }
            let mut a = z.clone();
            a.as_mut_slice().iter_mut().for_each(|v| *v = v.max(0.0));
            inputs.push(cur);
            transformed.push(u);
            preacts.push(z);
            cur = a;
        }
        let node_states = cur;
        let mut embedding = vec![0.0; h];
        for r in 0..n {
            for (e, &v) in embedding.iter_mut().zip(node_states.row(r)) {
                *e += v;
            }
        }
        let pool = match self.readout {
            Readout::Mean => n as f64,
            Readout::Sum => self.readout_scale,
        };
        embedding.iter_mut().for_each(|e| *e /= pool);
        let head = self.head.forward(&Matrix::from_vec(1, h, embedding.clone()));
        let prediction = self.target_shift + self.target_scale * head.output().get(0, 0);
        if !prediction.is_finite() {
            return Err(Error::Numeric("dense head".into()));
        }
        Ok((
            GcnOutput {
                prediction,
                embedding,
                node_states,
            },
            GcnTrace {
                weights,
                inv_sqrt_deg,
                inputs,
                transformed,
                preacts,
                head,
            },
        ))
    }

    /// Backpropagates `d_pred = ∂L/∂prediction` and optionally
    /// `d_emb = ∂L/∂embedding`. Parameter gradients are added to `grad` when
    /// given. Returns `∂L/∂w_e` for every undirected edge weight.
    pub fn backward(
        &self,
        g: &Graph,
        trace: &GcnTrace,
        d_pred: f64,
        d_emb: Option<&[f64]>,
        mut grad: Option<&mut GcnGrad>,
    ) -> Vec<f64> {
        let n = g.n();
        let h = self.hidden_dim;
        let s = &trace.inv_sqrt_deg;
        let w = &trace.weights;

        let d_head_out = Matrix::from_vec(1, 1, vec![d_pred * self.target_scale]);
        let mut head_grad_local;
        let head_grad: &mut [f64] = match grad.as_deref_mut() {
            Some(gr) => &mut gr.head,
            None => {
                head_grad_local = vec![0.0; self.head.num_params()];
                &mut head_grad_local
            }
        };
        let d_pool = self.head.backward(&trace.head, &d_head_out, head_grad);
        let mut d_embedding = d_pool.into_vec();
        if let Some(de) = d_emb {
            for (a, &b) in d_embedding.iter_mut().zip(de) {
                *a += b;
            }
        }
        let per_node = match self.readout {
            Readout::Mean => 1.0 / n as f64,
            Readout::Sum => 1.0 / self.readout_scale,
        };
        let mut d_h = Matrix::zeros(n, h);
        for r in 0..n {
            for (d, &e) in d_h.row_mut(r).iter_mut().zip(&d_embedding) {
                *d = e * per_node;
            }
        }

        // ∂L/∂P accumulated over layers: per edge (both directions) and per self loop
        let mut g_edge = vec![0.0; g.num_edges()];
        let mut g_self = vec![0.0; n];
        for l in (0..NUM_CONV).rev() {
            let (wo, bo, fan_in) = self.conv_offsets(l);
            let mut d_z = d_h;
            for (d, &z) in d_z.as_mut_slice().iter_mut().zip(trace.preacts[l].as_slice()) {
                if z <= 0.0 {
                    *d = 0.0;
                }
            }
            let u = &trace.transformed[l];
            for (e, &(i, j)) in g.edges().iter().enumerate() {
                g_edge[e] += dot(d_z.row(i), u.row(j)) + dot(d_z.row(j), u.row(i));
            }
            for (i, gs) in g_self.iter_mut().enumerate() {
                *gs += dot(d_z.row(i), u.row(i));
            }
            let zero_bias = vec![0.0; h];
            // P is symmetric, so Pᵀ dZ = P dZ
            let d_u = propagate(g, w, s, &d_z, &zero_bias);
            if let Some(gr) = grad.as_deref_mut() {
                matmul_tn_acc(
                    trace.inputs[l].as_slice(),
                    n,
                    fan_in,
                    d_u.as_slice(),
                    h,
                    &mut gr.conv[wo..wo + fan_in * h],
                );
                for r in 0..n {
                    for (gb, &d) in gr.conv[bo..bo + h].iter_mut().zip(d_z.row(r)) {
                        *gb += d;
                    }
                }
            }
            let mut d_in = Matrix::zeros(n, fan_in);
            if l > 0 {
                matmul_nt_into(d_u.as_slice(), n, h, &self.conv[wo..wo + fan_in * h], fan_in, d_in.as_mut_slice());
            }
            d_h = d_in;
        }

        let mut d_w = vec![0.0; g.num_edges()];
        if self.propagation == Propagation::Unnormalized {
            for (e, &(i, j)) in g.edges().iter().enumerate() {
                d_w[e] = g_edge[e] * s[i] * s[j];
            }
            return d_w;
        }
        // chain through P_ij = w_ij s_i s_j and s_i = deg_i^{-1/2}
        let mut d_s = vec![0.0; n];
        for (e, &(i, j)) in g.edges().iter().enumerate() {
            d_w[e] = g_edge[e] * s[i] * s[j];
            d_s[i] += g_edge[e] * w[e] * s[j];
            d_s[j] += g_edge[e] * w[e] * s[i];
        }
        for i in 0..n {
            d_s[i] += 2.0 * s[i] * g_self[i];
        }
        let d_deg: Vec<f64> = (0..n).map(|i| -0.5 * s[i] * s[i] * s[i] * d_s[i]).collect();
        for (e, &(i, j)) in g.edges().iter().enumerate() {
            d_w[e] += d_deg[i] + d_deg[j];
        }
        d_w
    }

    /// Mean squared error of predictions against labels over `graphs`.
    pub fn mse<'a>(&self, graphs: impl IntoIterator<Item = &'a Graph>) -> Result<f64> {
        let mut total = 0.0;
        let mut count = 0usize;
        for g in graphs {
            let p = self.forward(g, None)?.prediction;
            total += (p - g.label) * (p - g.label);
            count += 1;
        }
        if count == 0 {
            return Err(Error::Validation("no graphs to evaluate".into()));
        }
        Ok(total / count as f64)
    }

    pub fn rmse<'a>(&self, graphs: impl IntoIterator<Item = &'a Graph>) -> Result<f64> {
        self.mse(graphs).map(sqrt)
    }
}

/// `Z = P U + b` for the normalized, self-looped weighted adjacency `P`.
fn propagate(g: &Graph, w: &[f64], s: &[f64], u: &Matrix, bias: &[f64]) -> Matrix {
    let n = u.rows();
    let mut z = Matrix::zeros(n, u.cols());
    for i in 0..n {
        let c = s[i] * s[i];
        for ((zv, &uv), &b) in z.row_mut(i).iter_mut().zip(u.row(i)).zip(bias) {
            *zv = c * uv + b;
        }
    }
    for (e, &(i, j)) in g.edges().iter().enumerate() {
        let c = w[e] * s[i] * s[j];
        if c == 0.0 {
            continue;
        }
        for k in 0..u.cols() {
            let (ui, uj) = (u.get(i, k), u.get(j, k));
            z.set(i, k, z.get(i, k) + c * uj);
            z.set(j, k, z.get(j, k) + c * ui);
        }
    }
    z
}

/// Embeddings for `graphs[k]` under `masks[k]`.
pub fn batch_embed(model: &GcnModel, graphs: &[&Graph], masks: &[Option<&EdgeMask>]) -> Result<Vec<Vec<f64>>> {
    if graphs.len() != masks.len() {
        return Err(Error::Conformance("graphs and masks differ in length".into()));
    }
    graphs
        .iter()
        .zip(masks)
        .map(|(g, m)| model.forward(g, *m).map(|o| o.embedding))
        .collect()
}

/// Training hyper-parameters for the regressor.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub seed: u64,
    pub hidden_dim: usize,
    pub readout: Readout,
    /// Graphs whose gradients are averaged per Adam step.
    pub batch_size: usize,
    pub propagation: Propagation,
    /// Initial value of every convolution bias.
    pub init_bias: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.003,
            epochs: 1000,
            seed: 0,
            hidden_dim: 20,
            readout: Readout::Mean,
            batch_size: 8,
            propagation: Propagation::Symmetric,
            init_bias: 0.5,
        }
    }
}

impl TrainConfig {
    /// Scaled-down settings used for quick runs.
    pub fn desk() -> Self {
        Self {
            epochs: 100,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Validation(format!("learning_rate {}", self.learning_rate)));
        }
        if self.epochs == 0 || self.hidden_dim == 0 || self.batch_size == 0 {
            return Err(Error::Validation("epochs, hidden_dim and batch_size must be positive".into()));
        }
        if !self.init_bias.is_finite() {
            return Err(Error::Validation(format!("init_bias {}", self.init_bias)));
        }
        Ok(())
    }
}

/// A trained regressor plus its per-epoch training loss.
#[derive(Debug, Clone)]
pub struct TrainedGnn {
    pub model: GcnModel,
    /// Mean squared error over the training fold, accumulated during each epoch.
    pub epoch_losses: Vec<f64>,
}

/// Fits the regressor to the training fold by minimizing mean squared error.
pub fn train_gnn(ds: &GraphDataset, cfg: &TrainConfig) -> Result<TrainedGnn> {
    cfg.validate()?;
    let train = &ds.splits.train;
    if train.is_empty() {
        return Err(Error::Validation("empty training split".into()));
    }
    let d = ds.graphs[train[0]].d();
    let mut model = GcnModel::new(d, cfg.hidden_dim, cfg.readout, cfg.seed);
    model.propagation = cfg.propagation;
    model.fill_conv_biases(cfg.init_bias);
    train_gnn_from(model, ds, cfg)
}

/// [`train_gnn`] starting from the given initial parameters; the output and
/// input scalings are reset from the training fold.
pub fn train_gnn_from(mut model: GcnModel, ds: &GraphDataset, cfg: &TrainConfig) -> Result<TrainedGnn> {
    cfg.validate()?;
    let train = &ds.splits.train;
    if train.is_empty() {
        return Err(Error::Validation("empty training split".into()));
    }
    let labels: Vec<f64> = train.iter().map(|&i| ds.graphs[i].label).collect();
    let mean = labels.iter().sum::<f64>() / labels.len() as f64;
    let var = labels.iter().map(|y| (y - mean) * (y - mean)).sum::<f64>() / labels.len() as f64;
    model.target_shift = mean;
    model.target_scale = if var > 0.0 { sqrt(var) } else { 1.0 };
    let max_abs = train
        .iter()
        .flat_map(|&i| ds.graphs[i].x().as_slice().iter())
        .fold(0.0f64, |m, v| m.max(v.abs()));
    model.input_scale = if max_abs > 0.0 { max_abs } else { 1.0 };
    let nodes: usize = train.iter().map(|&i| ds.graphs[i].n()).sum();
    model.readout_scale = (nodes as f64 / train.len() as f64).max(1.0);
    if model.propagation == Propagation::Unnormalized {
        let slots: usize = train.iter().map(|&i| ds.graphs[i].n() + 2 * ds.graphs[i].num_edges()).sum();
        model.degree_scale = nodes.max(1) as f64 / slots.max(1) as f64;
    }

    let mut opt_conv = Adam::new(model.conv.len(), cfg.learning_rate);
    let mut opt_head = Adam::new(model.head.num_params(), cfg.learning_rate);
    let mut grad = GcnGrad::zeros_like(&model);
    let mut order = train.clone();
    let mut epoch_losses = Vec::with_capacity(cfg.epochs);
    // squared errors are taken in normalized units for the gradient
    let inv_scale2 = 1.0 / (model.target_scale * model.target_scale);
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng::stream(cfg.seed, &[rng::ROLE_SHUFFLE, epoch as u64]));
        let mut total = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            grad.clear();
            for &gi in batch {
                let g = &ds.graphs[gi];
                let (out, trace) = model.forward_traced(g, None)?;
                let err = out.prediction - g.label;
                total += err * err;
                model.backward(g, &trace, 2.0 * err * inv_scale2, None, Some(&mut grad));
            }
            grad.scale(1.0 / batch.len() as f64);
            opt_conv.step(&mut model.conv, &grad.conv);
            opt_head.step(model.head.params_mut(), &grad.head);
        }
        let loss = total / order.len() as f64;
        if !loss.is_finite() {
            return Err(Error::Training { epoch, loss });
        }
        epoch_losses.push(loss);
    }
    Ok(TrainedGnn { model, epoch_losses })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Splits;

    fn fixture() -> Graph {
        let mut x = Matrix::zeros(4, 2);
        for (k, v) in x.as_mut_slice().iter_mut().enumerate() {
            *v = 0.1 * (k as f64 + 1.0);
        }
        Graph::new(0, x, [(0, 1), (1, 2), (2, 3), (0, 2)], 1.0).unwrap()
    }

    #[test]
    fn identity_mask_matches_no_mask() {
        let m = GcnModel::new(2, 6, Readout::Mean, 1);
        let g = fixture();
        let a = m.forward(&g, None).unwrap();
        let b = m.forward(&g, Some(&EdgeMask::ones(&g))).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn zero_mask_matches_edgeless_graph() {
        let m = GcnModel::new(2, 6, Readout::Sum, 2);
        let g = fixture();
        let bare = Graph::new(0, g.x().clone(), [], 1.0).unwrap();
        let a = m.forward(&g, Some(&EdgeMask::zeros(&g))).unwrap();
        let b = m.forward(&bare, None).unwrap();
        assert!((a.prediction - b.prediction).abs() < 1e-12);
        for (x, y) in a.embedding.iter().zip(&b.embedding) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_network_predicts_zero() {
        let m = GcnModel::zeros(3, 4, Readout::Mean);
        let g = Graph::new(0, Matrix::filled(1, 3, 2.0), [], 0.0).unwrap();
        let out = m.forward(&g, None).unwrap();
        assert_eq!(out.prediction, 0.0);
        assert!(out.embedding.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn feature_dimension_mismatch_is_reported() {
        let m = GcnModel::new(3, 4, Readout::Mean, 0);
        assert!(matches!(m.forward(&fixture(), None), Err(Error::Conformance(_))));
    }

    #[test]
    fn from_parts_roundtrip() {
        let m = GcnModel::new(2, 5, Readout::Sum, 9);
        let r = GcnModel::from_parts(
            2,
            5,
            Readout::Sum,
            m.conv_params().to_vec(),
            m.head().params().to_vec(),
            m.input_scale,
            m.target_shift,
            m.target_scale,
        )
        .unwrap();
        assert_eq!(m, r);
        assert!(GcnModel::from_parts(2, 5, Readout::Sum, vec![0.0; 3], vec![], 1.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn constant_labels_are_fit() {
        let graphs: Vec<Graph> = (0..20)
            .map(|i| {
                Graph::new(i, Matrix::filled(4, 1, 1.0), [(0, 1), (1, 2), (2, 3)], 3.5).unwrap()
            })
            .collect();
        let splits = Splits {
            train: (0..16).collect(),
            explainer_train: (16..18).collect(),
            explainer_test: (18..20).collect(),
        };
        let ds = GraphDataset::new("const", 0, "t", graphs, splits).unwrap();
        let cfg = TrainConfig {
            epochs: 30,
            ..TrainConfig::default()
        };
        let trained = train_gnn(&ds, &cfg).unwrap();
        let mse = trained.model.mse(ds.subset(&ds.splits.train)).unwrap();
        assert!(mse < 1e-4, "mse {mse}");
        assert_eq!(trained.epoch_losses.len(), 30);
    }
}
