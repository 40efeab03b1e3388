//! Spectrum-weighted path-number identification (SWISS baseline).
//!
//! Pilots on equispaced OFDM subcarriers give a noise-free estimate `Ĥ` of
//! the channel frequency response. The tap vector `c` is reconstructed by
//! minimizing `‖Ĥ − F c‖²` under `‖c‖² ≤ P`, with `F` the partial DFT
//! matrix. The multiplier `λ` of the norm constraint is located by Newton's
//! method on `g(λ) = ‖c(λ)‖² − P`, `c(λ) = (FᴴF + λI)⁻¹FᴴĤ`. Paths are
//! counted as the fewest weights `|c_l|²/Σ|c|²` whose sum reaches `η`.

use std::f64::consts::TAU;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;
use crate::signal::convolve;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Modulation {
    Bpsk,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SwissConfig {
    pub eta: f64,
    pub n_pilots: usize,
    pub pilot_energy: f64,
    pub modulation: Modulation,
    pub n_subcarriers: usize,
    pub n_ofdm_symbols: usize,
    pub newton_init: f64,
    pub newton_iters: usize,
    pub newton_tol: f64,
    /// Constraint level `P`; `None` uses `‖Ĥ‖²/n_pilots · l_max`.
    pub power_budget: Option<f64>,
    /// Length of the reconstructed tap vector.
    pub l_max: usize,
}

impl Default for SwissConfig {
    fn default() -> Self {
        Self {
            eta: 0.995,
            n_pilots: 128,
            pilot_energy: 1.0,
            modulation: Modulation::Bpsk,
            n_subcarriers: 512,
            n_ofdm_symbols: 2,
            newton_init: 1.0,
            newton_iters: 10,
            newton_tol: 0.001,
            power_budget: None,
            l_max: 128,
        }
    }
}

impl SwissConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidSwissConfig(m.to_string()));
        if !(self.eta > 0.0 && self.eta < 1.0) {
            return bad("eta must lie in (0, 1)");
        }
        if self.n_pilots == 0 || self.n_pilots > self.n_subcarriers {
            return bad("need 1 <= n_pilots <= n_subcarriers");
        }
        if self.n_subcarriers % self.n_pilots != 0 {
            return bad("n_pilots must divide n_subcarriers for equispaced pilots");
        }
        if self.l_max == 0 || self.l_max > self.n_pilots {
            return bad("need 1 <= l_max <= n_pilots");
        }
        if !(self.pilot_energy > 0.0) || self.n_ofdm_symbols == 0 {
            return bad("pilot energy and symbol count must be positive");
        }
        if !(self.newton_init >= 0.0) || !(self.newton_tol > 0.0) {
            return bad("Newton initial guess must be >= 0 and tolerance > 0");
        }
        if matches!(self.power_budget, Some(p) if !(p > 0.0)) {
            return bad("power budget must be positive");
        }
        Ok(())
    }

    pub fn pilot_spacing(&self) -> usize {
        self.n_subcarriers / self.n_pilots
    }

    pub fn pilot_bins(&self) -> Vec<usize> {
        (0..self.n_pilots).map(|p| p * self.pilot_spacing()).collect()
    }
}

/// Known pilot symbols, one row per OFDM symbol.
#[derive(Debug, Clone, PartialEq)]
pub struct PilotFrame {
    pub pilot_bins: Vec<usize>,
    pub symbols: Vec<Vec<Complex64>>,
    /// Data carried on the remaining subcarriers, per OFDM symbol.
    pub data: Vec<Vec<Complex64>>,
}

fn bpsk(rng: &mut impl Rng, amplitude: f64) -> Complex64 {
    Complex64::new(if rng.random::<bool>() { amplitude } else { -amplitude }, 0.0)
}

pub fn build_pilot_frame(cfg: &SwissConfig, seed: u64) -> Result<PilotFrame> {
    cfg.validate()?;
    let mut rng = seed::rng(seed);
    let amp = cfg.pilot_energy.sqrt();
    let symbols = (0..cfg.n_ofdm_symbols)
        .map(|_| (0..cfg.n_pilots).map(|_| bpsk(&mut rng, amp)).collect())
        .collect();
    let n_data = cfg.n_subcarriers - cfg.n_pilots;
    let data = (0..cfg.n_ofdm_symbols)
        .map(|_| (0..n_data).map(|_| bpsk(&mut rng, 1.0)).collect())
        .collect();
    Ok(PilotFrame { pilot_bins: cfg.pilot_bins(), symbols, data })
}

/// Send the frame through `cir` as cyclic-prefixed OFDM symbols and return
/// the least-squares response `R_k / X_k` at the pilot bins, averaged over
/// the symbols.
pub fn pilot_channel_estimate(cir: &[Complex64], frame: &PilotFrame, cfg: &SwissConfig) -> Result<Vec<Complex64>> {
    cfg.validate()?;
    let n = cfg.n_subcarriers;
    if cir.is_empty() || cir.len() > n {
        return Err(Error::ShapeMismatch(format!("CIR length {} outside 1..={n}", cir.len())));
    }
    let cp = cir.len() - 1;
    let mut planner = FftPlanner::<f64>::new();
    let ifft = planner.plan_fft_inverse(n);
    let fft = planner.plan_fft_forward(n);

    // transmit: IFFT each symbol, prepend the cyclic prefix
    let mut tx = Vec::with_capacity(frame.symbols.len() * (n + cp));
    for (pilots, data) in frame.symbols.iter().zip(&frame.data) {
        let mut grid = vec![ZERO; n];
        let mut d = data.iter();
        let mut p = pilots.iter();
        for (k, slot) in grid.iter_mut().enumerate() {
            *slot = if k % cfg.pilot_spacing() == 0 { *p.next().unwrap() } else { *d.next().unwrap() };
        }
        ifft.process(&mut grid);
        grid.iter_mut().for_each(|v| *v /= n as f64);
        tx.extend_from_slice(&grid[n - cp..]);
        tx.extend_from_slice(&grid);
    }

    let rx = convolve(&tx, cir);
    let mut estimate = vec![ZERO; cfg.n_pilots];
    for (s, pilots) in frame.symbols.iter().enumerate() {
        let start = s * (n + cp) + cp;
        let mut grid = rx[start..start + n].to_vec();
        fft.process(&mut grid);
        for (p, (&bin, &x)) in frame.pilot_bins.iter().zip(pilots).enumerate() {
            estimate[p] += grid[bin] / x;
        }
    }
    let m = frame.symbols.len() as f64;
    estimate.iter_mut().for_each(|v| *v /= m);
    Ok(estimate)
}

/// `n_pilots × l_max` partial DFT matrix, `F[p, l] = exp(−j2π·k_p·l/N)`.
pub fn partial_dft(cfg: &SwissConfig) -> DMatrix<Complex64> {
    let bins = cfg.pilot_bins();
    let n = cfg.n_subcarriers as f64;
    DMatrix::from_fn(cfg.n_pilots, cfg.l_max, |p, l| {
        Complex64::from_polar(1.0, -TAU * (bins[p] * l) as f64 / n)
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightSolution {
    pub coefficients: Vec<Complex64>,
    pub dual_variable: f64,
    pub power_budget: f64,
    /// Newton updates performed (0 when the constraint is inactive).
    pub newton_iterations: usize,
    /// `|g| < newton_tol` reached (always true when inactive).
    pub converged: bool,
    /// `g(λ)` at each visited Newton iterate.
    pub g_trace: Vec<f64>,
}

struct Ridge {
    gram: DMatrix<Complex64>,
    rhs: DVector<Complex64>,
}

impl Ridge {
    fn shifted(&self, lambda: f64) -> DMatrix<Complex64> {
        let mut a = self.gram.clone();
        for i in 0..a.nrows() {
            a[(i, i)] += Complex64::new(lambda, 0.0);
        }
        a
    }

    /// `c(λ)` and `g'(λ) = −2·Re(cᴴ(A + λI)⁻¹c)`; `None` if `A + λI` is singular.
    fn solve(&self, lambda: f64) -> Option<(DVector<Complex64>, f64)> {
        let chol = self.shifted(lambda).cholesky()?;
        let c = chol.solve(&self.rhs);
        let d = chol.solve(&c);
        let slope = -2.0 * c.dotc(&d).re;
        Some((c, slope))
    }
}

/// Norm-constrained least-squares reconstruction of the tap vector.
pub fn solve_weights(h_hat: &[Complex64], cfg: &SwissConfig) -> Result<WeightSolution> {
    cfg.validate()?;
    if h_hat.len() != cfg.n_pilots {
        return Err(Error::ShapeMismatch(format!("{} pilot estimates for {} pilots", h_hat.len(), cfg.n_pilots)));
    }
    let energy: f64 = h_hat.iter().map(|v| v.norm_sqr()).sum();
    let budget = cfg
        .power_budget
        .unwrap_or(energy / cfg.n_pilots as f64 * cfg.l_max as f64);
    if energy == 0.0 {
        return Ok(WeightSolution {
            coefficients: vec![ZERO; cfg.l_max],
            dual_variable: 0.0,
            power_budget: budget,
            newton_iterations: 0,
            converged: true,
            g_trace: Vec::new(),
        });
    }

    let f = partial_dft(cfg);
    let fh = f.adjoint();
    let ridge = Ridge { gram: &fh * &f, rhs: &fh * DVector::from_column_slice(h_hat) };

    if let Some((c0, _)) = ridge.solve(0.0) {
        if c0.norm_squared() <= budget {
            return Ok(WeightSolution {
                coefficients: c0.iter().copied().collect(),
                dual_variable: 0.0,
                power_budget: budget,
                newton_iterations: 0,
                converged: true,
                g_trace: Vec::new(),
            });
        }
    }

    let mut lambda = cfg.newton_init;
    let mut trace = Vec::new();
    let mut iterations = 0;
    let (mut c, mut slope) = ridge
        .solve(lambda)
        .ok_or_else(|| Error::InvalidSwissConfig("ridge system singular at the initial guess".into()))?;
    let mut converged = false;
    loop {
        let g = c.norm_squared() - budget;
        trace.push(g);
        if g.abs() < cfg.newton_tol {
            converged = true;
            break;
        }
        if iterations == cfg.newton_iters || slope == 0.0 {
            break;
        }
        lambda = (lambda - g / slope).max(0.0);
        iterations += 1;
        match ridge.solve(lambda) {
            Some(next) => (c, slope) = next,
            None => break,
        }
    }

    Ok(WeightSolution {
        coefficients: c.iter().copied().collect(),
        dual_variable: lambda,
        power_budget: budget,
        newton_iterations: iterations,
        converged,
        g_trace: trace,
    })
}

/// Fewest largest weights whose sum reaches `eta`.
pub fn count_paths(weights: &[f64], eta: f64) -> usize {
    let mut sorted = weights.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut acc = 0.0;
    for (k, w) in sorted.iter().enumerate() {
        acc += w;
        if acc >= eta {
            return k + 1;
        }
    }
    // rounding left the total just under eta
    sorted.iter().take_while(|&&w| w > 0.0).count().max(1)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SwissResult {
    /// Energy shares `|c_l|²/Σ|c|²`.
    pub weights: Vec<f64>,
    pub dual_variable: f64,
    pub identified_paths: usize,
    /// `‖Ĥ − F c‖₂`
    pub reconstruction_error: f64,
    pub newton_iterations: usize,
    pub converged: bool,
}

/// What SWISS observes: a CIR to be sounded with a pilot frame, or an
/// already estimated pilot response.
#[derive(Debug, Clone, Copy)]
pub enum SwissObservation<'a> {
    Cir { cir: &'a [Complex64], frame_seed: u64 },
    PilotResponse(&'a [Complex64]),
}

pub fn swiss_identify(obs: SwissObservation<'_>, cfg: &SwissConfig) -> Result<SwissResult> {
    cfg.validate()?;
    let owned;
    let h_hat: &[Complex64] = match obs {
        SwissObservation::Cir { cir, frame_seed } => {
            let frame = build_pilot_frame(cfg, frame_seed)?;
            owned = pilot_channel_estimate(cir, &frame, cfg)?;
            &owned
        }
        SwissObservation::PilotResponse(h) => h,
    };
    if h_hat.iter().all(|v| v.norm_sqr() == 0.0) {
        return Err(Error::ZeroEnergy);
    }
    let sol = solve_weights(h_hat, cfg)?;
    let total: f64 = sol.coefficients.iter().map(|c| c.norm_sqr()).sum();
    if total == 0.0 {
        return Err(Error::ZeroEnergy);
    }
    let weights: Vec<f64> = sol.coefficients.iter().map(|c| c.norm_sqr() / total).collect();

    let f = partial_dft(cfg);
    let fc = &f * DVector::from_column_slice(&sol.coefficients);
    let reconstruction_error = h_hat
        .iter()
        .zip(fc.iter())
        .map(|(a, b)| (a - b).norm_sqr())
        .sum::<f64>()
        .sqrt();

    Ok(SwissResult {
        identified_paths: count_paths(&weights, cfg.eta),
        weights,
        dual_variable: sol.dual_variable,
        reconstruction_error,
        newton_iterations: sol.newton_iterations,
        converged: sol.converged,
    })
}
