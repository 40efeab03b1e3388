use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::adam::AdamState;
use super::layers::{
    BatchNormCache, BatchNormLayer, DenseLayer, DropoutLayer, Mode, ShrinkageLayer,
};
use super::softmax::{argmax, softmax, softmax_ce_backward, softmax_cross_entropy};
use super::tensor::Tensor2;
use crate::error::{Error, Result};
use crate::seed;

/// Rows per chunk for inference passes.
const INFER_CHUNK: usize = 512;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ArchitectureConfig {
    /// Number of dense → batch-norm → shrinkage → dropout blocks.
    pub depth: usize,
    pub width: usize,
    /// Shrinkage threshold used by every block unless `alpha_per_block` is set.
    pub alpha: f64,
    pub alpha_per_block: Option<Vec<f64>>,
    pub dropout: f64,
    pub bn_epsilon: f64,
    pub bn_momentum: f64,
    /// Multiplies the `√(6/fan_in)` bound of the uniform weight init.
    pub init_scale: f64,
}

impl Default for ArchitectureConfig {
    fn default() -> Self {
        Self {
            depth: 2,
            width: 300,
            alpha: 0.1,
            alpha_per_block: None,
            dropout: 0.2,
            bn_epsilon: 1e-5,
            bn_momentum: 0.9,
            init_scale: 1.0,
        }
    }
}

impl ArchitectureConfig {
    pub fn block_alpha(&self, block: usize) -> f64 {
        self.alpha_per_block
            .as_ref()
            .and_then(|a| a.get(block).copied())
            .unwrap_or(self.alpha)
    }

    pub fn validate(&self, n_classes: usize) -> Result<()> {
        if self.depth == 0 || self.width == 0 {
            return Err(Error::Config("depth and width must be positive".into()));
        }
        if self.width < n_classes {
            return Err(Error::Config(format!(
                "width {} is smaller than the class count {n_classes}",
                self.width
            )));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::Config(format!("dropout {} outside [0, 1)", self.dropout)));
        }
        if let Some(a) = &self.alpha_per_block {
            if a.len() != self.depth {
                return Err(Error::Config("alpha_per_block needs one entry per block".into()));
            }
        }
        if (0..self.depth).any(|b| !(self.block_alpha(b) >= 0.0)) {
            return Err(Error::Config("shrinkage alpha must be >= 0".into()));
        }
        if !(self.bn_momentum > 0.0 && self.bn_momentum < 1.0) || !(self.bn_epsilon > 0.0) {
            return Err(Error::Config("batch-norm momentum in (0,1) and epsilon > 0 required".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Layer {
    Dense(DenseLayer),
    BatchNorm(BatchNormLayer),
    Shrinkage(ShrinkageLayer),
    Dropout(DropoutLayer),
}

#[derive(Debug, Clone, PartialEq)]
enum Cache {
    Input(Tensor2),
    BatchNorm(BatchNormCache),
    Mask,
}

/// Parameter gradients for one layer.
#[derive(Debug, Clone, PartialEq)]
pub enum LayerGrads {
    Dense { weights: Tensor2, bias: Vec<f64> },
    BatchNorm { gamma: Vec<f64>, beta: Vec<f64> },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochStats {
    pub mean_loss: f64,
    pub accuracy: f64,
}

/// Feed-forward classifier ending in a softmax head.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    pub layers: Vec<Layer>,
    caches: Vec<Option<Cache>>,
    grads: Vec<Option<LayerGrads>>,
    probabilities: Option<Tensor2>,
}

impl Network {
    pub fn from_layers(layers: Vec<Layer>) -> Result<Self> {
        let dense: Vec<&DenseLayer> = layers
            .iter()
            .filter_map(|l| if let Layer::Dense(d) = l { Some(d) } else { None })
            .collect();
        if !matches!(layers.last(), Some(Layer::Dense(_))) {
            return Err(Error::ShapeMismatch("network must end with a dense layer".into()));
        }
        let mut width = dense[0].inputs();
        for layer in &layers {
            match layer {
                Layer::Dense(d) => {
                    if d.inputs() != width {
                        return Err(Error::ShapeMismatch(format!(
                            "dense layer expects {} inputs, previous width {width}",
                            d.inputs()
                        )));
                    }
                    width = d.outputs();
                }
                Layer::BatchNorm(b) if b.width() != width => {
                    return Err(Error::ShapeMismatch("batch-norm width mismatch".into()));
                }
                _ => {}
            }
        }
        let n = layers.len();
        Ok(Self { layers, caches: vec![None; n], grads: vec![None; n], probabilities: None })
    }

    /// `input → [dense(width) → batch-norm → shrinkage → dropout] × depth → dense(C)`.
    pub fn new(input_dim: usize, n_classes: usize, arch: &ArchitectureConfig, seed: u64) -> Result<Self> {
        arch.validate(n_classes)?;
        if input_dim == 0 || n_classes == 0 {
            return Err(Error::Config("input dimension and class count must be positive".into()));
        }
        let mut layers = Vec::new();
        let mut fan_in = input_dim;
        for block in 0..arch.depth {
            let s = seed::derive(seed, &[block as u64]);
            layers.push(Layer::Dense(DenseLayer::init(fan_in, arch.width, arch.init_scale, s)));
            layers.push(Layer::BatchNorm(BatchNormLayer::new(arch.width, arch.bn_epsilon, arch.bn_momentum)));
            layers.push(Layer::Shrinkage(ShrinkageLayer { alpha: arch.block_alpha(block) }));
            layers.push(Layer::Dropout(DropoutLayer::new(arch.dropout)));
            fan_in = arch.width;
        }
        let s = seed::derive(seed, &[arch.depth as u64]);
        layers.push(Layer::Dense(DenseLayer::init(fan_in, n_classes, arch.init_scale, s)));
        Self::from_layers(layers)
    }

    pub fn input_dim(&self) -> usize {
        match self.layers.iter().find_map(|l| if let Layer::Dense(d) = l { Some(d) } else { None }) {
            Some(d) => d.inputs(),
            None => 0,
        }
    }

    pub fn n_classes(&self) -> usize {
        match self.layers.last() {
            Some(Layer::Dense(d)) => d.outputs(),
            _ => 0,
        }
    }

    pub fn parameter_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| match l {
                Layer::Dense(d) => d.weights.data.len() + d.bias.len(),
                Layer::BatchNorm(b) => 2 * b.width(),
                _ => 0,
            })
            .sum()
    }

    fn check_input(&self, x: &Tensor2) -> Result<()> {
        if x.cols != self.input_dim() {
            return Err(Error::ShapeMismatch(format!(
                "features have {} columns, network expects {}",
                x.cols,
                self.input_dim()
            )));
        }
        Ok(())
    }

    /// Logits for a batch. Training mode caches what [`Network::backward`]
    /// needs and draws dropout masks from `dropout_seed`.
    pub fn logits(&mut self, x: &Tensor2, mode: Mode, dropout_seed: u64) -> Result<Tensor2> {
        if mode == Mode::Infer {
            return self.infer_logits(x);
        }
        self.check_input(x)?;
        let mut h = x.clone();
        for (i, layer) in self.layers.iter_mut().enumerate() {
            let (next, cache) = match layer {
                Layer::Dense(d) => (d.forward(&h)?, Cache::Input(h)),
                Layer::BatchNorm(b) => {
                    let (out, c) = b.forward_train(&h)?;
                    (out, Cache::BatchNorm(c))
                }
                Layer::Shrinkage(s) => (s.forward(&h), Cache::Input(h)),
                Layer::Dropout(d) => {
                    (d.forward(&h, mode, seed::derive(dropout_seed, &[i as u64])), Cache::Mask)
                }
            };
            self.caches[i] = Some(cache);
            h = next;
        }
        Ok(h)
    }

    /// Inference-mode logits; does not touch any state.
    pub fn infer_logits(&self, x: &Tensor2) -> Result<Tensor2> {
        self.check_input(x)?;
        let mut h = x.clone();
        for layer in &self.layers {
            h = match layer {
                Layer::Dense(d) => d.forward(&h)?,
                Layer::BatchNorm(b) => b.forward_infer(&h)?,
                Layer::Shrinkage(s) => s.forward(&h),
                Layer::Dropout(_) => h,
            };
        }
        Ok(h)
    }

    /// Class probabilities. In training mode the result is kept for the
    /// backward pass.
    pub fn forward(&mut self, x: &Tensor2, mode: Mode, dropout_seed: u64) -> Result<Tensor2> {
        let p = softmax(&self.logits(x, mode, dropout_seed)?);
        if mode == Mode::Train {
            self.probabilities = Some(p.clone());
        }
        Ok(p)
    }

    /// Inference-mode probabilities, evaluated in fixed-size row chunks.
    pub fn predict_proba(&self, x: &Tensor2) -> Result<Tensor2> {
        let mut out = Tensor2::zeros(0, self.n_classes());
        for start in (0..x.rows).step_by(INFER_CHUNK) {
            let idx: Vec<usize> = (start..(start + INFER_CHUNK).min(x.rows)).collect();
            let p = softmax(&self.infer_logits(&x.gather_rows(&idx))?);
            out.rows += p.rows;
            out.data.extend(p.data);
        }
        Ok(out)
    }

    pub fn predict(&self, x: &Tensor2) -> Result<Vec<usize>> {
        let p = self.predict_proba(x)?;
        Ok((0..p.rows).map(|r| argmax(p.row(r))).collect())
    }

    /// Backpropagate the mean cross-entropy of the last training forward
    /// pass. Parameter gradients are stored on the network; the input
    /// gradient is returned when `want_input` is set.
    pub fn backward(&mut self, labels: &[usize], want_input: bool) -> Result<Option<Tensor2>> {
        let p = self
            .probabilities
            .as_ref()
            .ok_or_else(|| Error::ShapeMismatch("backward called without a training forward pass".into()))?;
        let mut g = softmax_ce_backward(p, labels)?;
        // the first dense layer needs no input gradient unless asked
        let first_dense = self.layers.iter().position(|l| matches!(l, Layer::Dense(_))).unwrap_or(0);

        for i in (0..self.layers.len()).rev() {
            let cache = self.caches[i]
                .as_ref()
                .ok_or_else(|| Error::ShapeMismatch(format!("missing cache for layer {i}")))?;
            g = match (&self.layers[i], cache) {
                (Layer::Dense(d), Cache::Input(x)) => {
                    let need = want_input || i > first_dense;
                    let grads = d.backward(x, &g, need)?;
                    self.grads[i] = Some(LayerGrads::Dense { weights: grads.weights, bias: grads.bias });
                    match grads.input {
                        Some(gi) => gi,
                        None => return Ok(None),
                    }
                }
                (Layer::BatchNorm(b), Cache::BatchNorm(c)) => {
                    let grads = b.backward(c, &g)?;
                    self.grads[i] = Some(LayerGrads::BatchNorm { gamma: grads.gamma, beta: grads.beta });
                    grads.input
                }
                (Layer::Shrinkage(s), Cache::Input(u)) => s.backward(u, &g)?,
                (Layer::Dropout(d), Cache::Mask) => d.backward(&g),
                _ => return Err(Error::ShapeMismatch(format!("cache/layer mismatch at {i}"))),
            };
        }
        Ok(Some(g))
    }

    pub fn layer_grads(&self, i: usize) -> Option<&LayerGrads> {
        self.grads[i].as_ref()
    }

    /// Every trainable slice paired with its gradient, in layer order.
    pub fn params_and_grads(&mut self) -> Vec<(&mut [f64], &[f64])> {
        let mut out: Vec<(&mut [f64], &[f64])> = Vec::new();
        for (layer, grads) in self.layers.iter_mut().zip(&self.grads) {
            match (layer, grads) {
                (Layer::Dense(d), Some(LayerGrads::Dense { weights, bias })) => {
                    out.push((&mut d.weights.data[..], &weights.data[..]));
                    out.push((&mut d.bias[..], &bias[..]));
                }
                (Layer::BatchNorm(b), Some(LayerGrads::BatchNorm { gamma, beta })) => {
                    out.push((&mut b.gamma[..], &gamma[..]));
                    out.push((&mut b.beta[..], &beta[..]));
                }
                _ => {}
            }
        }
        out
    }

    /// Mean loss and accuracy of inference-mode predictions.
    pub fn evaluate(&self, x: &Tensor2, labels: &[usize]) -> Result<EpochStats> {
        if labels.is_empty() {
            return Ok(EpochStats { mean_loss: 0.0, accuracy: 0.0 });
        }
        let mut loss = 0.0;
        let mut correct = 0;
        for start in (0..x.rows).step_by(INFER_CHUNK) {
            let idx: Vec<usize> = (start..(start + INFER_CHUNK).min(x.rows)).collect();
            let z = self.infer_logits(&x.gather_rows(&idx))?;
            let y = &labels[start..start + idx.len()];
            loss += softmax_cross_entropy(&z, y)? * idx.len() as f64;
            correct += (0..z.rows).filter(|&r| argmax(z.row(r)) == y[r]).count();
        }
        Ok(EpochStats { mean_loss: loss / labels.len() as f64, accuracy: correct as f64 / labels.len() as f64 })
    }
}

/// Batch index ranges for one epoch. A trailing batch of one sample is
/// merged into its predecessor because batch norm needs two rows.
pub fn batch_ranges(n: usize, batch_size: usize) -> Vec<std::ops::Range<usize>> {
    let batch_size = batch_size.max(1);
    let mut ranges: Vec<_> = (0..n).step_by(batch_size).map(|s| s..(s + batch_size).min(n)).collect();
    if ranges.len() > 1 && ranges.last().is_some_and(|r| r.len() == 1) {
        let last = ranges.pop().unwrap();
        ranges.last_mut().unwrap().end = last.end;
    }
    ranges
}

/// One pass over `(x, labels)` in shuffled mini-batches with an Adam step
/// after each batch. Loss and accuracy are averaged over the training-mode
/// forward passes.
pub fn train_epoch(
    net: &mut Network,
    adam: &mut AdamState,
    x: &Tensor2,
    labels: &[usize],
    batch_size: usize,
    lr: f64,
    seed: u64,
) -> Result<EpochStats> {
    if labels.len() != x.rows {
        return Err(Error::ShapeMismatch(format!("{} labels for {} rows", labels.len(), x.rows)));
    }
    let mut order: Vec<usize> = (0..x.rows).collect();
    order.shuffle(&mut seed::rng(seed::derive(seed, &[0])));

    let mut loss_sum = 0.0;
    let mut correct = 0;
    for (b, range) in batch_ranges(x.rows, batch_size).into_iter().enumerate() {
        let idx = &order[range];
        let xb = x.gather_rows(idx);
        let yb: Vec<usize> = idx.iter().map(|&i| labels[i]).collect();
        let logits = net.logits(&xb, Mode::Train, seed::derive(seed, &[1, b as u64]))?;
        loss_sum += softmax_cross_entropy(&logits, &yb)? * idx.len() as f64;
        correct += (0..logits.rows).filter(|&r| argmax(logits.row(r)) == yb[r]).count();
        net.probabilities = Some(softmax(&logits));
        net.backward(&yb, false)?;
        adam.step(&mut net.params_and_grads(), lr);
    }
    let n = x.rows.max(1) as f64;
    Ok(EpochStats { mean_loss: loss_sum / n, accuracy: correct as f64 / n })
}
