//! Dense actor-critic network with exact gradients.
//!
//! A tanh trunk feeds a scalar value head and a linear policy-mean head;
//! the policy's log standard deviation is a free parameter vector. All
//! parameters live in one flat `Vec<f64>` so optimizers and checkpoints
//! see a single tensor.
//!
//! Flat layout: for each trunk layer `W (out x in, row-major), b (out)`,
//! then the value head `W (1 x h), b (1)`, the policy head
//! `W (n_action x h), b (n_action)`, and finally `log_std (n_action)`.

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

const LN_2PI: f64 = 1.837_877_066_409_345_5;
const LN_2: f64 = core::f64::consts::LN_2;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum NnError {
    #[error("input has length {found}, network expects {expected}")]
    InputShape { expected: usize, found: usize },
    #[error("parameter vector has length {found}, shape needs {expected}")]
    ParamShape { expected: usize, found: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MlpShape {
    pub input: usize,
    pub hidden: Vec<usize>,
    pub n_action: usize,
}

#[derive(Debug, Clone, Copy)]
struct Dense {
    w: usize,
    b: usize,
    n_in: usize,
    n_out: usize,
}

impl Dense {
    fn end(&self) -> usize {
        self.b + self.n_out
    }
}

#[derive(Debug, Clone)]
struct Offsets {
    trunk: Vec<Dense>,
    value: Dense,
    policy: Dense,
    log_std: usize,
    total: usize,
}

impl MlpShape {
    /// Three tanh layers of 300 units.
    pub fn actor_critic(input: usize, n_action: usize) -> Self {
        Self { input, hidden: vec![300, 300, 300], n_action }
    }

    fn offsets(&self) -> Offsets {
        let mut at = 0;
        let mut dense = |n_in: usize, n_out: usize| {
            let d = Dense { w: at, b: at + n_in * n_out, n_in, n_out };
            at = d.end();
            d
        };
        let mut trunk = Vec::with_capacity(self.hidden.len());
        let mut n_in = self.input;
        for &h in &self.hidden {
            trunk.push(dense(n_in, h));
            n_in = h;
        }
        let value = dense(n_in, 1);
        let policy = dense(n_in, self.n_action);
        let log_std = policy.end();
        Offsets { trunk, value, policy, log_std, total: log_std + self.n_action }
    }

    pub fn n_params(&self) -> usize {
        self.offsets().total
    }

    fn features(&self) -> usize {
        self.hidden.last().copied().unwrap_or(self.input)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpParams {
    pub shape: MlpShape,
    pub data: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolicyOutput {
    pub mean: Vec<f64>,
    pub log_std: Vec<f64>,
    pub value: f64,
}

/// Layer activations kept for the backward pass; `acts[0]` is the input.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    acts: Vec<Vec<f64>>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0; 4];
    let (ca, cb) = (a.chunks_exact(4), b.chunks_exact(4));
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for k in 0..4 {
            acc[k] += x[k] * y[k];
        }
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for (x, y) in ra.iter().zip(rb) {
        s += x * y;
    }
    s
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

impl MlpParams {
    pub fn zeros(shape: MlpShape) -> Self {
        let n = shape.n_params();
        Self { shape, data: vec![0.0; n] }
    }

    pub fn from_data(shape: MlpShape, data: Vec<f64>) -> Result<Self, NnError> {
        let expected = shape.n_params();
        if data.len() != expected {
            return Err(NnError::ParamShape { expected, found: data.len() });
        }
        Ok(Self { shape, data })
    }

    /// Glorot-uniform weights, zero biases, policy head scaled by 0.01 and
    /// `log_std = -0.5`.
    pub fn init(shape: MlpShape, seed: u64) -> Self {
        let off = shape.offsets();
        let mut p = Self::zeros(shape);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut fill = |d: &Dense, gain: f64, data: &mut [f64]| {
            let a = gain * libm::sqrt(6.0 / (d.n_in + d.n_out) as f64);
            for w in &mut data[d.w..d.b] {
                *w = rng.random_range(-a..a);
            }
        };
        for d in &off.trunk {
            fill(d, 1.0, &mut p.data);
        }
        fill(&off.value, 1.0, &mut p.data);
        fill(&off.policy, 0.01, &mut p.data);
        for v in &mut p.data[off.log_std..] {
            *v = -0.5;
        }
        p
    }

    pub fn log_std(&self) -> &[f64] {
        &self.data[self.shape.offsets().log_std..]
    }

    pub fn forward(&self, input: &[f64]) -> Result<PolicyOutput, NnError> {
        self.forward_cached(input).map(|(o, _)| o)
    }

    pub fn forward_cached(&self, input: &[f64]) -> Result<(PolicyOutput, ForwardCache), NnError> {
        if input.len() != self.shape.input {
            return Err(NnError::InputShape { expected: self.shape.input, found: input.len() });
        }
        let off = self.shape.offsets();
        let mut acts = Vec::with_capacity(off.trunk.len() + 1);
        acts.push(input.to_vec());
        for d in &off.trunk {
            let x = acts.last().unwrap();
            let mut z = Vec::with_capacity(d.n_out);
            for o in 0..d.n_out {
                let row = &self.data[d.w + o * d.n_in..d.w + (o + 1) * d.n_in];
                z.push(libm::tanh(self.data[d.b + o] + dot(row, x)));
            }
            acts.push(z);
        }
        let h = acts.last().unwrap();
        let head = |d: &Dense| -> Vec<f64> {
            (0..d.n_out)
                .map(|o| self.data[d.b + o] + dot(&self.data[d.w + o * d.n_in..d.w + (o + 1) * d.n_in], h))
                .collect()
        };
        let value = head(&off.value)[0];
        let mean = head(&off.policy);
        let log_std = self.data[off.log_std..off.total].to_vec();
        Ok((PolicyOutput { mean, log_std, value }, ForwardCache { acts }))
    }

    /// Accumulates into `grad` the gradient of a loss whose partial
    /// derivatives with respect to the outputs of the cached forward pass
    /// are `d_mean`, `d_log_std` and `d_value`.
    pub fn backward(&self, cache: &ForwardCache, d_mean: &[f64], d_log_std: &[f64], d_value: f64, grad: &mut [f64]) {
        let off = self.shape.offsets();
        debug_assert_eq!(grad.len(), off.total);
        let h = cache.acts.last().unwrap();
        let mut dh = vec![0.0; self.shape.features()];

        let heads = [(&off.value, core::slice::from_ref(&d_value)), (&off.policy, d_mean)];
        for (d, dout) in heads {
            for (o, &g) in dout.iter().enumerate() {
                if g == 0.0 {
                    continue;
                }
                let w = d.w + o * d.n_in;
                axpy(g, h, &mut grad[w..w + d.n_in]);
                grad[d.b + o] += g;
                axpy(g, &self.data[w..w + d.n_in], &mut dh);
            }
        }
        for (g, &d) in grad[off.log_std..off.total].iter_mut().zip(d_log_std) {
            *g += d;
        }

        for (layer, d) in off.trunk.iter().enumerate().rev() {
            let a = &cache.acts[layer + 1];
            let x = &cache.acts[layer];
            let dz: Vec<f64> = dh.iter().zip(a).map(|(g, a)| g * (1.0 - a * a)).collect();
            let mut dx = vec![0.0; d.n_in];
            for (o, &g) in dz.iter().enumerate() {
                let w = d.w + o * d.n_in;
                axpy(g, x, &mut grad[w..w + d.n_in]);
                grad[d.b + o] += g;
                if layer > 0 {
                    axpy(g, &self.data[w..w + d.n_in], &mut dx);
                }
            }
            dh = dx;
        }
    }
}

/// `ln(1 - tanh(u)^2)`, stable for large `|u|`.
fn log_one_minus_tanh_sq(u: f64) -> f64 {
    let x = -2.0 * u;
    let softplus = x.max(0.0) + libm::log1p(libm::exp(-x.abs()));
    2.0 * (LN_2 - u - softplus)
}

/// Log-density of `a = tanh(u)` for `u ~ N(mean, exp(log_std)^2)`,
/// evaluated at the pre-squash sample `u`.
pub fn squashed_log_prob(mean: &[f64], log_std: &[f64], u: &[f64]) -> f64 {
    mean.iter()
        .zip(log_std)
        .zip(u)
        .map(|((&m, &ls), &u)| {
            let z = (u - m) * libm::exp(-ls);
            -0.5 * z * z - ls - 0.5 * LN_2PI - log_one_minus_tanh_sq(u)
        })
        .sum()
}

/// Partial derivatives of [`squashed_log_prob`] with respect to `mean` and
/// `log_std`.
pub fn squashed_log_prob_grad(mean: &[f64], log_std: &[f64], u: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let mut dm = Vec::with_capacity(mean.len());
    let mut dls = Vec::with_capacity(mean.len());
    for ((&m, &ls), &u) in mean.iter().zip(log_std).zip(u) {
        let inv = libm::exp(-ls);
        let z = (u - m) * inv;
        dm.push(z * inv);
        dls.push(z * z - 1.0);
    }
    (dm, dls)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolicySample {
    /// Pre-squash Gaussian sample.
    pub u: Vec<f64>,
    /// `tanh(u)`, strictly inside `(-1, 1)`.
    pub action: Vec<f64>,
    pub log_prob: f64,
    pub value: f64,
}

/// Largest `|u|` kept so that `tanh(u)` stays strictly inside `(-1, 1)`.
const U_LIMIT: f64 = 15.0;

pub fn sample_policy<R: Rng + ?Sized>(out: &PolicyOutput, rng: &mut R) -> PolicySample {
    let u: Vec<f64> = out
        .mean
        .iter()
        .zip(&out.log_std)
        .map(|(&m, &ls)| {
            let e: f64 = StandardNormal.sample(rng);
            (m + libm::exp(ls) * e).clamp(-U_LIMIT, U_LIMIT)
        })
        .collect();
    finish_sample(out, u)
}

/// The distribution's median action, `tanh(mean)`.
pub fn deterministic_policy(out: &PolicyOutput) -> PolicySample {
    let u = out.mean.iter().map(|m| m.clamp(-U_LIMIT, U_LIMIT)).collect();
    finish_sample(out, u)
}

fn finish_sample(out: &PolicyOutput, u: Vec<f64>) -> PolicySample {
    PolicySample {
        action: u.iter().map(|&x| libm::tanh(x)).collect(),
        log_prob: squashed_log_prob(&out.mean, &out.log_std, &u),
        value: out.value,
        u,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Adam {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub t: u64,
    pub m: Vec<f64>,
    pub v: Vec<f64>,
}

impl Adam {
    pub fn new(n_params: usize) -> Self {
        Self { beta1: 0.9, beta2: 0.999, eps: 1e-8, t: 0, m: vec![0.0; n_params], v: vec![0.0; n_params] }
    }

    /// One bias-corrected descent step on `params` along `grad`.
    pub fn step(&mut self, params: &mut [f64], grad: &[f64], lr: f64) {
        self.t += 1;
        let t = self.t as f64;
        let c1 = 1.0 - libm::pow(self.beta1, t);
        let c2 = 1.0 - libm::pow(self.beta2, t);
        for i in 0..params.len() {
            let g = grad[i];
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g;
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * g * g;
            let mh = self.m[i] / c1;
            let vh = self.v[i] / c2;
            params[i] -= lr * mh / (libm::sqrt(vh) + self.eps);
        }
    }
}
