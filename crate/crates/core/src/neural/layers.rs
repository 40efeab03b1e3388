//! Layer primitives with hand-written adjoints.
//!
//! Each layer exposes pure `forward`/`backward` functions; [`Network`]
//! (in `network.rs`) owns the caches between the two passes.
//!
//! [`Network`]: super::Network

use rand::Rng;

use super::tensor::Tensor2;
use crate::error::{Error, Result};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Infer,
}

/// Fully connected layer, `y = x·Wᵀ + b`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    /// out × in
    pub weights: Tensor2,
    pub bias: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseGrads {
    /// `None` when the caller did not ask for it.
    pub input: Option<Tensor2>,
    pub weights: Tensor2,
    pub bias: Vec<f64>,
}

impl DenseLayer {
    pub fn new(weights: Tensor2, bias: Vec<f64>) -> Result<Self> {
        if bias.len() != weights.rows {
            return Err(Error::ShapeMismatch(format!(
                "bias length {} for {} outputs",
                bias.len(),
                weights.rows
            )));
        }
        Ok(Self { weights, bias })
    }

    /// Uniform init on `±init_scale·√(6/fan_in)`, zero bias. `init_scale = 1`
    /// gives variance `2/fan_in`.
    pub fn init(inputs: usize, outputs: usize, init_scale: f64, seed: u64) -> Self {
        let bound = init_scale * (6.0 / inputs as f64).sqrt();
        let mut rng = seed::rng(seed);
        let data = (0..inputs * outputs).map(|_| rng.random_range(-bound..=bound)).collect();
        Self {
            weights: Tensor2 { rows: outputs, cols: inputs, data },
            bias: vec![0.0; outputs],
        }
    }

    pub fn inputs(&self) -> usize {
        self.weights.cols
    }

    pub fn outputs(&self) -> usize {
        self.weights.rows
    }

    pub fn forward(&self, input: &Tensor2) -> Result<Tensor2> {
        let mut out = input.matmul_nt(&self.weights)?;
        for r in 0..out.rows {
            for (v, b) in out.row_mut(r).iter_mut().zip(&self.bias) {
                *v += b;
            }
        }
        Ok(out)
    }

    pub fn backward(&self, input: &Tensor2, upstream: &Tensor2, want_input: bool) -> Result<DenseGrads> {
        if upstream.cols != self.outputs() || upstream.rows != input.rows {
            return Err(Error::ShapeMismatch(format!(
                "dense backward: upstream {}x{}, input {}x{}, layer {}x{}",
                upstream.rows,
                upstream.cols,
                input.rows,
                input.cols,
                self.outputs(),
                self.inputs()
            )));
        }
        let weights = upstream.matmul_tn(input)?;
        let bias = upstream.sum_rows();
        let input = if want_input { Some(upstream.matmul_nn(&self.weights)?) } else { None };
        Ok(DenseGrads { input, weights, bias })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchNormLayer {
    pub gamma: Vec<f64>,
    pub beta: Vec<f64>,
    pub running_mean: Vec<f64>,
    pub running_var: Vec<f64>,
    pub epsilon: f64,
    /// Retention of the running statistics:
    /// `running ← momentum·running + (1 − momentum)·batch`.
    pub momentum: f64,
}

/// What the batch-norm adjoint needs from a training forward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchNormCache {
    pub normalized: Tensor2,
    pub inv_std: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchNormGrads {
    pub input: Tensor2,
    pub gamma: Vec<f64>,
    pub beta: Vec<f64>,
}

impl BatchNormLayer {
    pub fn new(width: usize, epsilon: f64, momentum: f64) -> Self {
        Self {
            gamma: vec![1.0; width],
            beta: vec![0.0; width],
            running_mean: vec![0.0; width],
            running_var: vec![1.0; width],
            epsilon,
            momentum,
        }
    }

    pub fn width(&self) -> usize {
        self.gamma.len()
    }

    fn check(&self, input: &Tensor2) -> Result<()> {
        if input.cols != self.width() {
            return Err(Error::ShapeMismatch(format!(
                "batch norm of width {} given {} columns",
                self.width(),
                input.cols
            )));
        }
        Ok(())
    }

    /// Normalizes with the biased batch variance and updates the running
    /// statistics.
    pub fn forward_train(&mut self, input: &Tensor2) -> Result<(Tensor2, BatchNormCache)> {
        self.check(input)?;
        if input.rows < 2 {
            return Err(Error::BatchTooSmall(input.rows));
        }
        let n = input.rows as f64;
        let mean: Vec<f64> = input.sum_rows().into_iter().map(|s| s / n).collect();
        let mut var = vec![0.0; self.width()];
        for r in 0..input.rows {
            for ((v, x), m) in var.iter_mut().zip(input.row(r)).zip(&mean) {
                *v += (x - m) * (x - m);
            }
        }
        var.iter_mut().for_each(|v| *v /= n);
        let inv_std: Vec<f64> = var.iter().map(|v| 1.0 / (v + self.epsilon).sqrt()).collect();

        let mut normalized = input.clone();
        let mut out = input.clone();
        for r in 0..input.rows {
            let xh = normalized.row_mut(r);
            for (j, v) in xh.iter_mut().enumerate() {
                *v = (*v - mean[j]) * inv_std[j];
            }
            let o = out.row_mut(r);
            for (j, v) in o.iter_mut().enumerate() {
                *v = self.gamma[j] * normalized.data[r * input.cols + j] + self.beta[j];
            }
        }

        let m = self.momentum;
        for j in 0..self.width() {
            self.running_mean[j] = m * self.running_mean[j] + (1.0 - m) * mean[j];
            self.running_var[j] = m * self.running_var[j] + (1.0 - m) * var[j];
        }
        Ok((out, BatchNormCache { normalized, inv_std }))
    }

    pub fn forward_infer(&self, input: &Tensor2) -> Result<Tensor2> {
        self.check(input)?;
        let scale: Vec<f64> = (0..self.width())
            .map(|j| self.gamma[j] / (self.running_var[j] + self.epsilon).sqrt())
            .collect();
        let mut out = input.clone();
        for r in 0..out.rows {
            for (j, v) in out.row_mut(r).iter_mut().enumerate() {
                *v = (*v - self.running_mean[j]) * scale[j] + self.beta[j];
            }
        }
        Ok(out)
    }

    pub fn backward(&self, cache: &BatchNormCache, upstream: &Tensor2) -> Result<BatchNormGrads> {
        let xh = &cache.normalized;
        if upstream.shape() != xh.shape() {
            return Err(Error::ShapeMismatch("batch norm backward shape".into()));
        }
        let n = upstream.rows as f64;
        let w = self.width();
        let mut gamma = vec![0.0; w];
        let beta = upstream.sum_rows();
        for r in 0..upstream.rows {
            for j in 0..w {
                gamma[j] += upstream.data[r * w + j] * xh.data[r * w + j];
            }
        }
        // dx = γ·σ⁻¹/n · (n·dy − Σdy − x̂·Σ(dy·x̂))
        let mut input = Tensor2::zeros(upstream.rows, w);
        for r in 0..upstream.rows {
            for j in 0..w {
                let dy = upstream.data[r * w + j];
                input.data[r * w + j] = self.gamma[j] * cache.inv_std[j] / n
                    * (n * dy - beta[j] - xh.data[r * w + j] * gamma[j]);
            }
        }
        Ok(BatchNormGrads { input, gamma, beta })
    }
}

/// Hard shrinkage `f(u) = u·sign(max(|u| − α, 0))`: passes `u` where
/// `|u| > α`, zero elsewhere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShrinkageLayer {
    pub alpha: f64,
}

impl ShrinkageLayer {
    pub fn forward(&self, u: &Tensor2) -> Tensor2 {
        let data = u.data.iter().map(|&v| if v.abs() > self.alpha { v } else { 0.0 }).collect();
        Tensor2 { rows: u.rows, cols: u.cols, data }
    }

    /// Subgradient zero at `|u| = α`.
    pub fn backward(&self, u: &Tensor2, upstream: &Tensor2) -> Result<Tensor2> {
        if u.shape() != upstream.shape() {
            return Err(Error::ShapeMismatch("shrinkage backward shape".into()));
        }
        let data = u
            .data
            .iter()
            .zip(&upstream.data)
            .map(|(&v, &g)| if v.abs() > self.alpha { g } else { 0.0 })
            .collect();
        Ok(Tensor2 { rows: u.rows, cols: u.cols, data })
    }
}

/// Inverted dropout.
#[derive(Debug, Clone, PartialEq)]
pub struct DropoutLayer {
    pub rate: f64,
    /// Per-entry multipliers from the last training pass: 0 or `1/(1 − rate)`.
    pub last_mask: Option<Tensor2>,
}

impl DropoutLayer {
    pub fn new(rate: f64) -> Self {
        assert!((0.0..1.0).contains(&rate), "dropout rate must lie in [0, 1)");
        Self { rate, last_mask: None }
    }

    pub fn forward(&mut self, input: &Tensor2, mode: Mode, seed: u64) -> Tensor2 {
        if mode == Mode::Infer || self.rate == 0.0 {
            self.last_mask = None;
            return input.clone();
        }
        let keep = 1.0 / (1.0 - self.rate);
        let mut rng = seed::rng(seed);
        let mask: Vec<f64> = (0..input.data.len())
            .map(|_| if rng.random::<f64>() < self.rate { 0.0 } else { keep })
            .collect();
        let data = input.data.iter().zip(&mask).map(|(x, m)| x * m).collect();
        self.last_mask = Some(Tensor2 { rows: input.rows, cols: input.cols, data: mask });
        Tensor2 { rows: input.rows, cols: input.cols, data }
    }

    pub fn backward(&self, upstream: &Tensor2) -> Tensor2 {
        match &self.last_mask {
            None => upstream.clone(),
            Some(mask) => Tensor2 {
                rows: upstream.rows,
                cols: upstream.cols,
                data: upstream.data.iter().zip(&mask.data).map(|(g, m)| g * m).collect(),
            },
        }
    }
}
