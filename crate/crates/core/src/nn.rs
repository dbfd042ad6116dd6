//! Small fully connected networks with hand-written backpropagation.
//!
//! Parameters live in one flat vector. Layer `l` maps `d_l` inputs to `d_{l+1}`
//! outputs and stores its weight matrix row-major (`d_{l+1} × d_l`) followed by
//! its bias. Hidden layers use `tanh`; the output layer is linear and callers
//! apply their own output nonlinearity.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::math;
use crate::seed::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    #[default]
    Tanh,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Architecture {
    pub input_dim: usize,
    pub hidden: Vec<usize>,
    pub output_dim: usize,
    #[serde(default)]
    pub activation: Activation,
}

impl Architecture {
    pub fn new(input_dim: usize, hidden: Vec<usize>, output_dim: usize) -> Result<Self> {
        let arch = Architecture { input_dim, hidden, output_dim, activation: Activation::Tanh };
        arch.validate()?;
        Ok(arch)
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 || self.output_dim == 0 || self.hidden.contains(&0) {
            return Err(invalid!("network layers must have positive width"));
        }
        Ok(())
    }

    /// Layer widths from input to output.
    pub fn widths(&self) -> Vec<usize> {
        let mut w = Vec::with_capacity(self.hidden.len() + 2);
        w.push(self.input_dim);
        w.extend_from_slice(&self.hidden);
        w.push(self.output_dim);
        w
    }

    pub fn param_count(&self) -> usize {
        self.widths().windows(2).map(|w| w[1] * (w[0] + 1)).sum()
    }

    pub(crate) fn check_weights(&self, weights: &[f64]) -> Result<()> {
        if weights.len() != self.param_count() {
            return Err(invalid!(
                "architecture needs {} parameters, got {}",
                self.param_count(),
                weights.len()
            ));
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(invalid!("non-finite network weight"));
        }
        Ok(())
    }
}

/// Layer inputs kept from a forward pass for backpropagation.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    /// `inputs[l]` is the input of layer `l`; entries after the first are tanh outputs.
    inputs: Vec<Vec<f64>>,
}

/// Output-layer values (pre-nonlinearity).
pub fn forward(arch: &Architecture, weights: &[f64], x: &[f64]) -> Result<Vec<f64>> {
    forward_cached(arch, weights, x).map(|(out, _)| out)
}

pub fn forward_cached(arch: &Architecture, weights: &[f64], x: &[f64]) -> Result<(Vec<f64>, ForwardCache)> {
    if x.len() != arch.input_dim {
        return Err(invalid!("network expects {} inputs, got {}", arch.input_dim, x.len()));
    }
    if weights.len() != arch.param_count() {
        return Err(invalid!("weight vector has the wrong length"));
    }
    let widths = arch.widths();
    let layers = widths.len() - 1;
    let mut inputs = Vec::with_capacity(layers);
    let mut current = x.to_vec();
    let mut offset = 0;
    for l in 0..layers {
        let (d_in, d_out) = (widths[l], widths[l + 1]);
        let w = &weights[offset..offset + d_in * d_out];
        let b = &weights[offset + d_in * d_out..offset + d_in * d_out + d_out];
        offset += d_out * (d_in + 1);
        let mut out: Vec<f64> = b.to_vec();
        for (o, row) in out.iter_mut().zip(w.chunks_exact(d_in)) {
            *o += row.iter().zip(&current).map(|(a, c)| a * c).sum::<f64>();
        }
        if l + 1 < layers {
            for o in out.iter_mut() {
                *o = math::tanh(*o);
            }
        }
        inputs.push(core::mem::replace(&mut current, out));
    }
    Ok((current, ForwardCache { inputs }))
}

/// Adds `∂(grad_out · output)/∂weights` to `grad`.
pub fn backward(arch: &Architecture, weights: &[f64], cache: &ForwardCache, grad_out: &[f64], grad: &mut [f64]) {
    backward_impl(arch, weights, cache, grad_out, grad);
}

/// Like [`backward`] and also returns the gradient with respect to the input.
pub fn backward_with_input(
    arch: &Architecture,
    weights: &[f64],
    cache: &ForwardCache,
    grad_out: &[f64],
    grad: &mut [f64],
) -> Vec<f64> {
    backward_impl(arch, weights, cache, grad_out, grad)
}

fn backward_impl(
    arch: &Architecture,
    weights: &[f64],
    cache: &ForwardCache,
    grad_out: &[f64],
    grad: &mut [f64],
) -> Vec<f64> {
    let widths = arch.widths();
    let layers = widths.len() - 1;
    let mut offsets = Vec::with_capacity(layers);
    let mut offset = 0;
    for l in 0..layers {
        offsets.push(offset);
        offset += widths[l + 1] * (widths[l] + 1);
    }
    let mut delta = grad_out.to_vec();
    for l in (0..layers).rev() {
        let (d_in, d_out) = (widths[l], widths[l + 1]);
        let off = offsets[l];
        let input = &cache.inputs[l];
        for (i, d) in delta.iter().enumerate() {
            if *d == 0.0 {
                continue;
            }
            let row = &mut grad[off + i * d_in..off + (i + 1) * d_in];
            for (g, x) in row.iter_mut().zip(input) {
                *g += d * x;
            }
            grad[off + d_in * d_out + i] += d;
        }
        let w = &weights[off..off + d_in * d_out];
        let mut prev = vec![0.0; d_in];
        for (d, row) in delta.iter().zip(w.chunks_exact(d_in)) {
            for (p, wij) in prev.iter_mut().zip(row) {
                *p += d * wij;
            }
        }
        if l > 0 {
            // input of layer l is tanh output of layer l-1
            for (p, a) in prev.iter_mut().zip(input) {
                *p *= 1.0 - a * a;
            }
        }
        delta = prev;
    }
    delta
}

/// Xavier-uniform weights and zero biases.
pub fn xavier_init(arch: &Architecture, rng: &mut Rng) -> Vec<f64> {
    let widths = arch.widths();
    let mut weights = Vec::with_capacity(arch.param_count());
    for w in widths.windows(2) {
        let (d_in, d_out) = (w[0], w[1]);
        let limit = math::sqrt(6.0 / (d_in + d_out) as f64);
        for _ in 0..d_in * d_out {
            weights.push(rng.random_range(-limit..limit));
        }
        weights.extend(core::iter::repeat_n(0.0, d_out));
    }
    weights
}

/// Adam optimizer state for a flat parameter vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Adam {
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Optimizer {
    Sgd,
    #[default]
    Adam,
}

impl Adam {
    pub fn new(n: usize, lr: f64) -> Self {
        Adam { lr, beta1: 0.9, beta2: 0.999, eps: 1e-8, m: vec![0.0; n], v: vec![0.0; n], t: 0 }
    }

    pub fn learning_rate(&self) -> f64 {
        self.lr
    }

    /// Moves `params` against `grad` (a descent step).
    pub fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        self.t += 1;
        let c1 = 1.0 - libm::pow(self.beta1, f64::from(self.t));
        let c2 = 1.0 - libm::pow(self.beta2, f64::from(self.t));
        for i in 0..params.len() {
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * grad[i];
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * grad[i] * grad[i];
            params[i] -= self.lr * (self.m[i] / c1) / (math::sqrt(self.v[i] / c2) + self.eps);
        }
    }
}
