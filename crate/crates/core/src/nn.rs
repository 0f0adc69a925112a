//! Dense layers, a batched multi-layer perceptron with manual backprop, and Adam.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::linalg::{matmul_into, matmul_nt_into, matmul_tn_acc, sqrt, Matrix};
use crate::rng::StreamRng;

/// Glorot-uniform fill of a `fan_in × fan_out` weight block.
pub fn glorot(buf: &mut [f64], fan_in: usize, fan_out: usize, rng: &mut StreamRng) {
    let limit = sqrt(6.0 / (fan_in + fan_out) as f64);
    for w in buf {
        *w = rng.gen_range(-limit..limit);
    }
}

/// Fully connected network with ReLU between layers and a linear output.
///
/// Parameters are one flat buffer: for each layer the `in × out` weight
/// block (row-major) followed by the `out` bias.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    sizes: Vec<usize>,
    params: Vec<f64>,
}

/// Intermediate values kept from a forward pass.
#[derive(Debug, Clone)]
pub struct MlpTrace {
    /// Input to each layer (`activations[0]` is the network input).
    activations: Vec<Matrix>,
    /// Pre-activation output of each layer.
    preacts: Vec<Matrix>,
}

impl MlpTrace {
    pub fn output(&self) -> &Matrix {
        self.preacts.last().expect("mlp has at least one layer")
    }
}

impl Mlp {
    pub fn new(sizes: &[usize], rng: &mut StreamRng) -> Self {
        assert!(sizes.len() >= 2, "mlp needs input and output sizes");
        let mut mlp = Self::zeros(sizes);
        let mut off = 0;
        for w in sizes.windows(2) {
            let (i, o) = (w[0], w[1]);
            glorot(&mut mlp.params[off..off + i * o], i, o, rng);
            off += i * o + o;
        }
        mlp
    }

    pub fn zeros(sizes: &[usize]) -> Self {
        let n = sizes.windows(2).map(|w| w[0] * w[1] + w[1]).sum();
        Self {
            sizes: sizes.to_vec(),
            params: vec![0.0; n],
        }
    }

    pub fn from_params(sizes: &[usize], params: Vec<f64>) -> Option<Self> {
        let m = Self::zeros(sizes);
        (m.params.len() == params.len()).then(|| Self {
            sizes: sizes.to_vec(),
            params,
        })
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn num_params(&self) -> usize {
        self.params.len()
    }

    pub fn input_dim(&self) -> usize {
        self.sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.sizes.last().unwrap()
    }

    /// `(offset of weights, offset of bias)` for layer `l`.
    fn layer_offsets(&self, l: usize) -> (usize, usize) {
        let mut off = 0;
        for w in self.sizes.windows(2).take(l) {
            off += w[0] * w[1] + w[1];
        }
        (off, off + self.sizes[l] * self.sizes[l + 1])
    }

    /// Zeroes the last layer so the network outputs its (zero) bias only.
    pub fn zero_last_layer(&mut self) {
        let l = self.sizes.len() - 2;
        let (w, _) = self.layer_offsets(l);
        self.params[w..].iter_mut().for_each(|p| *p = 0.0);
    }

    /// Sets every output bias to `v`.
    pub fn fill_last_bias(&mut self, v: f64) {
        let l = self.sizes.len() - 2;
        let (_, b) = self.layer_offsets(l);
        self.params[b..].iter_mut().for_each(|p| *p = v);
    }

    /// Forward pass on a batch (one row per example).
    pub fn forward(&self, input: &Matrix) -> MlpTrace {
        assert_eq!(input.cols(), self.sizes[0], "mlp input width");
        let rows = input.rows();
        let layers = self.sizes.len() - 1;
        let mut activations = Vec::with_capacity(layers);
        let mut preacts = Vec::with_capacity(layers);
        let mut cur = input.clone();
        for l in 0..layers {
            let (i, o) = (self.sizes[l], self.sizes[l + 1]);
            let (w, b) = self.layer_offsets(l);
            let mut z = Matrix::zeros(rows, o);
            matmul_into(cur.as_slice(), rows, i, &self.params[w..w + i * o], o, z.as_mut_slice());
            let bias = &self.params[b..b + o];
            for r in 0..rows {
                for (v, &bb) in z.row_mut(r).iter_mut().zip(bias) {
                    *v += bb;
                }
            }
            let next = if l + 1 < layers {
                let mut a = z.clone();
                a.as_mut_slice().iter_mut().for_each(|v| *v = v.max(0.0));
                Some(a)
            } else {
                None
            };
            activations.push(cur);
            preacts.push(z);
            if let Some(a) = next {
                cur = a;
            } else {
                break;
            }
        }
        MlpTrace {
            activations,
            preacts,
        }
    }

    /// Backpropagates `d_out` (same shape as the output), accumulating
    /// parameter gradients into `grad` and returning the input gradient.
    pub fn backward(&self, trace: &MlpTrace, d_out: &Matrix, grad: &mut [f64]) -> Matrix {
        assert_eq!(grad.len(), self.params.len(), "gradient buffer size");
        let layers = self.sizes.len() - 1;
        let rows = d_out.rows();
        let mut delta = d_out.clone();
        for l in (0..layers).rev() {
            let (i, o) = (self.sizes[l], self.sizes[l + 1]);
            if l + 1 < layers {
                // ReLU derivative on this layer's output
                let z = &trace.preacts[l];
                for (d, &zv) in delta.as_mut_slice().iter_mut().zip(z.as_slice()) {
                    if zv <= 0.0 {
                        *d = 0.0;
                    }
                }
            }
            let (w, b) = self.layer_offsets(l);
            let input = &trace.activations[l];
            matmul_tn_acc(input.as_slice(), rows, i, delta.as_slice(), o, &mut grad[w..w + i * o]);
            for r in 0..rows {
                for (g, &d) in grad[b..b + o].iter_mut().zip(delta.row(r)) {
                    *g += d;
                }
            }
            let mut d_in = Matrix::zeros(rows, i);
            matmul_nt_into(delta.as_slice(), rows, o, &self.params[w..w + i * o], i, d_in.as_mut_slice());
            delta = d_in;
        }
        delta
    }
}

/// Adam with the usual moment coefficients (0.9, 0.999).
#[derive(Debug, Clone)]
pub struct Adam {
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    pub fn new(n_params: usize, lr: f64) -> Self {
        Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            m: vec![0.0; n_params],
            v: vec![0.0; n_params],
            t: 0,
        }
    }

    pub fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        assert_eq!(params.len(), self.m.len());
        self.t += 1;
        let c1 = 1.0 - libm::pow(self.beta1, self.t as f64);
        let c2 = 1.0 - libm::pow(self.beta2, self.t as f64);
        for k in 0..params.len() {
            let g = grad[k];
            self.m[k] = self.beta1 * self.m[k] + (1.0 - self.beta1) * g;
            self.v[k] = self.beta2 * self.v[k] + (1.0 - self.beta2) * g * g;
            let mh = self.m[k] / c1;
            let vh = self.v[k] / c2;
            params[k] -= self.lr * mh / (sqrt(vh) + self.eps);
        }
    }
}
