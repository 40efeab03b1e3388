//! Transmit blocks, noise-free channel convolution and DNN featurization.

use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::seed;

/// Operand length below which [`convolve`] uses the direct sum.
pub const DIRECT_CONV_LIMIT: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TxScheme {
    Qpsk,
    ComplexGaussian,
}

/// Unit-average-power transmit block, deterministic in `seed`.
pub fn generate_tx(n: usize, seed: u64, scheme: TxScheme) -> Vec<Complex64> {
    let mut rng = seed::rng(seed);
    (0..n)
        .map(|_| match scheme {
            TxScheme::Qpsk => {
                let re = if rng.random::<bool>() { FRAC_1_SQRT_2 } else { -FRAC_1_SQRT_2 };
                let im = if rng.random::<bool>() { FRAC_1_SQRT_2 } else { -FRAC_1_SQRT_2 };
                Complex64::new(re, im)
            }
            TxScheme::ComplexGaussian => {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                Complex64::new(re, im) * FRAC_1_SQRT_2
            }
        })
        .collect()
}

/// Full linear convolution, length `x.len() + h.len() - 1`.
///
/// Direct summation when either operand is shorter than
/// [`DIRECT_CONV_LIMIT`], FFT product otherwise. Empty input yields an
/// empty output.
pub fn convolve(x: &[Complex64], h: &[Complex64]) -> Vec<Complex64> {
    if x.is_empty() || h.is_empty() {
        return Vec::new();
    }
    if x.len().min(h.len()) < DIRECT_CONV_LIMIT {
        convolve_direct(x, h)
    } else {
        convolve_fft(x, h)
    }
}

pub fn convolve_direct(x: &[Complex64], h: &[Complex64]) -> Vec<Complex64> {
    if x.is_empty() || h.is_empty() {
        return Vec::new();
    }
    let mut y = vec![Complex64::new(0.0, 0.0); x.len() + h.len() - 1];
    for (k, &hk) in h.iter().enumerate() {
        if hk == Complex64::new(0.0, 0.0) {
            continue;
        }
        for (i, &xi) in x.iter().enumerate() {
            y[i + k] += xi * hk;
        }
    }
    y
}

pub fn convolve_fft(x: &[Complex64], h: &[Complex64]) -> Vec<Complex64> {
    if x.is_empty() || h.is_empty() {
        return Vec::new();
    }
    let out_len = x.len() + h.len() - 1;
    let n = out_len.next_power_of_two();
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(n);
    let inv = planner.plan_fft_inverse(n);

    let mut a = vec![Complex64::new(0.0, 0.0); n];
    let mut b = vec![Complex64::new(0.0, 0.0); n];
    a[..x.len()].copy_from_slice(x);
    b[..h.len()].copy_from_slice(h);
    fwd.process(&mut a);
    fwd.process(&mut b);
    for (ai, bi) in a.iter_mut().zip(&b) {
        *ai *= bi;
    }
    inv.process(&mut a);
    let scale = 1.0 / n as f64;
    a.truncate(out_len);
    a.iter_mut().for_each(|v| *v *= scale);
    a
}

/// Real parts followed by imaginary parts.
pub fn featurize(rx: &[Complex64]) -> Vec<f64> {
    rx.iter().map(|c| c.re).chain(rx.iter().map(|c| c.im)).collect()
}

/// Inverse of [`featurize`]. Panics on odd length.
pub fn defeaturize(features: &[f64]) -> Vec<Complex64> {
    assert!(features.len() % 2 == 0, "feature vector length must be even");
    let (re, im) = features.split_at(features.len() / 2);
    re.iter().zip(im).map(|(&r, &i)| Complex64::new(r, i)).collect()
}

/// One transmit/receive pair and the network input derived from it.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalFrame {
    pub tx: Vec<Complex64>,
    pub rx: Vec<Complex64>,
    pub features: Vec<f64>,
}

impl SignalFrame {
    /// Pass `tx` through `cir` (length `K`), giving `|tx| + K - 1` received
    /// samples. When `include_tx` is set the transmit block's features are
    /// placed in front of the received ones. Panics if `cir` is empty.
    pub fn new(tx: Vec<Complex64>, cir: &[Complex64], include_tx: bool) -> Self {
        assert!(!cir.is_empty(), "CIR must have at least one tap");
        // Trailing zero taps only pad the output; convolve the support and pad.
        let support = cir
            .iter()
            .rposition(|c| *c != Complex64::new(0.0, 0.0))
            .map_or(1, |i| i + 1);
        let mut rx = convolve(&tx, &cir[..support]);
        rx.resize(tx.len() + cir.len() - 1, Complex64::new(0.0, 0.0));
        let mut features = if include_tx { featurize(&tx) } else { Vec::new() };
        features.extend(featurize(&rx));
        Self { tx, rx, features }
    }
}
