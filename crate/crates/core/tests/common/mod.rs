#![allow(dead_code)]

use rand::Rng;
use tapscount::neural::{softmax_cross_entropy, ArchitectureConfig, Layer, Mode, Network, Tensor2};
use tapscount::seed;

pub fn random_tensor(rows: usize, cols: usize, seed: u64) -> Tensor2 {
    let mut rng = seed::rng(seed);
    Tensor2::from_vec(rows, cols, (0..rows * cols).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap()
}

/// `|a − n| / max(|a|, |n|, 1e-5)`.
///
/// A central difference with step 1e-6 resolves gradients only to about
/// `ε·|loss|/2h ≈ 1e-10`; exactly-zero gradients (e.g. a dense bias feeding
/// batch norm) come back as ±1.1e-10. The floor sits above that resolution.
pub fn rel_err(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-5)
}

#[derive(Debug, Default)]
pub struct GradCheck {
    pub checked: usize,
    pub skipped: usize,
    pub max_rel: f64,
}

impl GradCheck {
    fn record(&mut self, analytic: f64, numeric: f64) {
        self.checked += 1;
        self.max_rel = self.max_rel.max(rel_err(analytic, numeric));
    }
}

/// Which shrinkage units pass, per shrinkage layer, for a training-mode pass.
fn shrinkage_pattern(net: &Network, x: &Tensor2) -> Vec<bool> {
    let mut h = x.clone();
    let mut pattern = Vec::new();
    for layer in &net.layers {
        h = match layer {
            Layer::Dense(d) => d.forward(&h).unwrap(),
            Layer::BatchNorm(b) => b.clone().forward_train(&h).unwrap().0,
            Layer::Shrinkage(s) => {
                pattern.extend(h.data.iter().map(|u| u.abs() > s.alpha));
                s.forward(&h)
            }
            Layer::Dropout(_) => h,
        };
    }
    pattern
}

fn loss(net: &mut Network, x: &Tensor2, y: &[usize]) -> f64 {
    let z = net.logits(x, Mode::Train, 0).unwrap();
    softmax_cross_entropy(&z, y).unwrap()
}

/// Central differences against backprop for every parameter and input of a
/// 16 → 8 → 8 → 4 network without dropout. Coordinates whose perturbation
/// flips a shrinkage unit across its threshold are skipped.
pub fn micro_network_gradient_check(step: f64, seed: u64) -> GradCheck {
    let arch = ArchitectureConfig { depth: 2, width: 8, alpha: 0.3, dropout: 0.0, ..Default::default() };
    let mut net = Network::new(16, 4, &arch, seed).unwrap();
    let mut rng = seed::rng(seed::derive(seed, &[99]));
    for layer in &mut net.layers {
        if let Layer::BatchNorm(b) = layer {
            b.gamma.iter_mut().for_each(|g| *g = rng.random_range(0.5..1.5));
            b.beta.iter_mut().for_each(|v| *v = rng.random_range(-0.5..0.5));
        }
    }
    let x = random_tensor(6, 16, seed::derive(seed, &[1]));
    let y: Vec<usize> = (0..6).map(|_| rng.random_range(0..4)).collect();

    net.forward(&x, Mode::Train, 0).unwrap();
    let gx = net.backward(&y, true).unwrap().unwrap();
    let analytic: Vec<Vec<Vec<f64>>> = (0..net.layers.len())
        .map(|i| match net.layer_grads(i) {
            Some(tapscount::neural::LayerGrads::Dense { weights, bias }) => vec![weights.data.clone(), bias.clone()],
            Some(tapscount::neural::LayerGrads::BatchNorm { gamma, beta }) => vec![gamma.clone(), beta.clone()],
            None => vec![],
        })
        .collect();

    let mut report = GradCheck::default();
    let base_pattern = shrinkage_pattern(&net, &x);

    // parameters
    for (li, grads) in analytic.iter().enumerate() {
        for (pi, g) in grads.iter().enumerate() {
            for k in 0..g.len() {
                let eval = |delta: f64| {
                    let mut n = net.clone();
                    let slot = match (&mut n.layers[li], pi) {
                        (Layer::Dense(d), 0) => &mut d.weights.data[k],
                        (Layer::Dense(d), _) => &mut d.bias[k],
                        (Layer::BatchNorm(b), 0) => &mut b.gamma[k],
                        (Layer::BatchNorm(b), _) => &mut b.beta[k],
                        _ => unreachable!(),
                    };
                    *slot += delta;
                    let kink = shrinkage_pattern(&n, &x) != base_pattern;
                    (loss(&mut n, &x, &y), kink)
                };
                let ((lp, kp), (lm, km)) = (eval(step), eval(-step));
                if kp || km {
                    report.skipped += 1;
                    continue;
                }
                report.record(g[k], (lp - lm) / (2.0 * step));
            }
        }
    }
    // inputs
    for k in 0..x.data.len() {
        let eval = |delta: f64| {
            let mut xp = x.clone();
            xp.data[k] += delta;
            let kink = shrinkage_pattern(&net, &xp) != base_pattern;
            (loss(&mut net.clone(), &xp, &y), kink)
        };
        let ((lp, kp), (lm, km)) = (eval(step), eval(-step));
        if kp || km {
            report.skipped += 1;
            continue;
        }
        report.record(gx.data[k], (lp - lm) / (2.0 * step));
    }
    report
}

/// One planted-support IHT trial: Gaussian 64×128 dictionary with unit
/// columns, 5 nonzeros of magnitude in [1, 2) with random signs, step
/// `1/‖W‖²`. Returns whether the recovered support is exactly the planted one.
pub fn iht_planted_trial(seed: u64) -> bool {
    use rand::seq::index::sample;
    use rand_distr::{Distribution, StandardNormal};
    use tapscount::sparse::{iht_solve, CMatrix, SparseProblem};
    use num_complex::Complex64;

    let (m, n, s) = (64, 128, 5);
    let mut rng = seed::rng(seed);
    let mut w: Vec<f64> = (0..m * n).map(|_| StandardNormal.sample(&mut rng)).collect();
    for col in 0..n {
        let norm = (0..m).map(|r| w[r * n + col].powi(2)).sum::<f64>().sqrt();
        (0..m).for_each(|r| w[r * n + col] /= norm);
    }
    let dict = CMatrix::from_real(m, n, &w).unwrap();
    let mut support: Vec<usize> = sample(&mut rng, n, s).into_vec();
    support.sort_unstable();
    let mut c = vec![Complex64::new(0.0, 0.0); n];
    for &i in &support {
        let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
        c[i] = Complex64::new(sign * rng.random_range(1.0..2.0), 0.0);
    }
    let r = dict.mul_vec(&c);
    let p = SparseProblem::new(dict, r, s).unwrap();
    let sol = iht_solve(&p, p.default_step(), 3000, 1e-12).unwrap();
    sol.support() == support
}
