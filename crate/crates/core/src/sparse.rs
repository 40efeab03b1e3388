//! Sparse recovery by iterative hard thresholding.
//!
//! Solves `min ½‖r − Wc‖²` subject to `‖c‖₀ ≤ s` with the iteration
//! `c ← H_s(c + μ·Wᴴ(r − Wc))`, and uses it to count channel taps by
//! recovering the CIR over a convolution dictionary built from the
//! transmit block.

use num_complex::Complex64;

use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const DIVERGENCE_NORM: f64 = 1e12;
const POWER_ITERS: usize = 50;

/// Entry types the thresholding operator can rank.
pub trait Magnitude: Copy {
    fn magnitude(&self) -> f64;
    fn zero() -> Self;
}

impl Magnitude for f64 {
    fn magnitude(&self) -> f64 {
        self.abs()
    }
    fn zero() -> Self {
        0.0
    }
}

impl Magnitude for Complex64 {
    fn magnitude(&self) -> f64 {
        self.norm()
    }
    fn zero() -> Self {
        ZERO
    }
}

/// Keep the `s` largest-magnitude entries, zero the rest. Ties go to the
/// lower index. `s >= c.len()` returns `c` unchanged.
pub fn hard_threshold<T: Magnitude>(c: &[T], s: usize) -> Vec<T> {
    if s >= c.len() {
        return c.to_vec();
    }
    let mut order: Vec<usize> = (0..c.len()).collect();
    // stable sort keeps index order among equal magnitudes
    order.sort_by(|&a, &b| c[b].magnitude().total_cmp(&c[a].magnitude()));
    let mut out = vec![T::zero(); c.len()];
    for &i in &order[..s] {
        out[i] = c[i];
    }
    out
}

/// Dense complex matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<Complex64>,
}

impl CMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::ShapeMismatch(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_real(rows: usize, cols: usize, data: &[f64]) -> Result<Self> {
        Self::new(rows, cols, data.iter().map(|&v| Complex64::new(v, 0.0)).collect())
    }

    pub fn identity(n: usize) -> Self {
        let mut data = vec![ZERO; n * n];
        for i in 0..n {
            data[i * n + i] = Complex64::new(1.0, 0.0);
        }
        Self { rows: n, cols: n, data }
    }

    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        self.data[r * self.cols + c]
    }

    /// `W·v`
    pub fn mul_vec(&self, v: &[Complex64]) -> Vec<Complex64> {
        debug_assert_eq!(v.len(), self.cols);
        self.data
            .chunks_exact(self.cols)
            .map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// `Wᴴ·v`
    pub fn adjoint_mul_vec(&self, v: &[Complex64]) -> Vec<Complex64> {
        debug_assert_eq!(v.len(), self.rows);
        let mut out = vec![ZERO; self.cols];
        for (row, &vi) in self.data.chunks_exact(self.cols).zip(v) {
            for (o, a) in out.iter_mut().zip(row) {
                *o += a.conj() * vi;
            }
        }
        out
    }

    pub fn column_norm(&self, c: usize) -> f64 {
        (0..self.rows).map(|r| self.get(r, c).norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest squared singular value, estimated by power iteration on `WᴴW`.
    pub fn spectral_norm_sq(&self) -> f64 {
        if self.cols == 0 || self.rows == 0 {
            return 0.0;
        }
        // deterministic, non-degenerate start vector
        let mut v: Vec<Complex64> = (0..self.cols)
            .map(|i| Complex64::new(1.0 + (i % 7) as f64 * 0.1, 0.0))
            .collect();
        let mut estimate = 0.0;
        for _ in 0..POWER_ITERS {
            let n = norm(&v);
            if n == 0.0 {
                return 0.0;
            }
            v.iter_mut().for_each(|x| *x /= n);
            let w = self.adjoint_mul_vec(&self.mul_vec(&v));
            estimate = norm(&w);
            v = w;
        }
        estimate
    }
}

fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// Convolution matrix of `x` with `k` columns: column `j` is `x` delayed
/// by `j` samples, so `W·h = x ∗ h` for `|h| = k`.
pub fn convolution_dictionary(x: &[Complex64], k: usize) -> CMatrix {
    let rows = x.len() + k.saturating_sub(1);
    let mut data = vec![ZERO; rows * k];
    for j in 0..k {
        for (i, &xi) in x.iter().enumerate() {
            data[(i + j) * k + j] = xi;
        }
    }
    CMatrix { rows, cols: k, data }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SparseProblem {
    pub dictionary: CMatrix,
    pub observation: Vec<Complex64>,
    pub sparsity_budget: usize,
}

impl SparseProblem {
    pub fn new(dictionary: CMatrix, observation: Vec<Complex64>, sparsity_budget: usize) -> Result<Self> {
        if observation.len() != dictionary.rows {
            return Err(Error::ShapeMismatch(format!(
                "observation length {} vs {} dictionary rows",
                observation.len(),
                dictionary.rows
            )));
        }
        if sparsity_budget == 0 || sparsity_budget > dictionary.cols {
            return Err(Error::InvalidProblem(format!(
                "sparsity budget {sparsity_budget} outside 1..={}",
                dictionary.cols
            )));
        }
        if let Some(c) = (0..dictionary.cols).find(|&c| dictionary.column_norm(c) == 0.0) {
            return Err(Error::InvalidProblem(format!("dictionary column {c} is all zero")));
        }
        Ok(Self { dictionary, observation, sparsity_budget })
    }

    /// `½‖r − Wc‖²`
    pub fn objective(&self, c: &[Complex64]) -> f64 {
        let wc = self.dictionary.mul_vec(c);
        0.5 * self
            .observation
            .iter()
            .zip(&wc)
            .map(|(r, w)| (r - w).norm_sqr())
            .sum::<f64>()
    }

    /// Step size `1/‖W‖²₂`.
    pub fn default_step(&self) -> f64 {
        1.0 / self.dictionary.spectral_norm_sq()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SparseSolution {
    pub coefficients: Vec<Complex64>,
    pub residual_norm: f64,
    /// Updates that moved the iterate by at least `tol`.
    pub iterations_used: usize,
    pub converged: bool,
    /// Objective after each update, starting with the value at `c = 0`.
    pub objective_trace: Vec<f64>,
}

impl SparseSolution {
    pub fn support(&self) -> Vec<usize> {
        (0..self.coefficients.len())
            .filter(|&i| self.coefficients[i] != ZERO)
            .collect()
    }
}

pub fn iht_solve(p: &SparseProblem, step: f64, max_iters: usize, tol: f64) -> Result<SparseSolution> {
    if !(step > 0.0) || !step.is_finite() {
        return Err(Error::InvalidProblem(format!("step must be positive, got {step}")));
    }
    let w = &p.dictionary;
    let mut c = vec![ZERO; w.cols];
    let mut trace = vec![p.objective(&c)];
    let mut used = 0;
    let mut converged = false;

    for it in 1..=max_iters {
        let wc = w.mul_vec(&c);
        let resid: Vec<Complex64> = p.observation.iter().zip(&wc).map(|(r, v)| r - v).collect();
        let grad = w.adjoint_mul_vec(&resid);
        let proposal: Vec<Complex64> = c.iter().zip(&grad).map(|(ci, gi)| ci + gi * step).collect();
        let next = hard_threshold(&proposal, p.sparsity_budget);

        let change = c.iter().zip(&next).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
        let n = norm(&next);
        if !n.is_finite() || n > DIVERGENCE_NORM {
            return Err(Error::Diverged { iterations: it, norm: n });
        }
        c = next;
        trace.push(p.objective(&c));
        if change < tol {
            converged = true;
            break;
        }
        used = it;
    }

    let residual_norm = (2.0 * trace.last().copied().unwrap_or(0.0)).sqrt();
    Ok(SparseSolution {
        coefficients: c,
        residual_norm,
        iterations_used: used,
        converged,
        objective_trace: trace,
    })
}

/// Count taps by recovering the CIR from `y = x ∗ h` over a `s_max`-tap
/// convolution dictionary and counting coefficients whose magnitude is at
/// least `significance` times the peak.
///
/// A zero observation returns 0.
pub fn iht_count_taps(x: &[Complex64], y: &[Complex64], s_max: usize, significance: f64) -> Result<usize> {
    if s_max == 0 || x.is_empty() {
        return Err(Error::InvalidProblem("need s_max >= 1 and a nonempty x".into()));
    }
    if y.len() != x.len() + s_max - 1 {
        return Err(Error::ShapeMismatch(format!(
            "|y| = {} but |x| + s_max - 1 = {}",
            y.len(),
            x.len() + s_max - 1
        )));
    }
    if !(significance > 0.0 && significance < 1.0) {
        return Err(Error::InvalidProblem(format!("significance {significance} outside (0, 1)")));
    }
    let y_norm = norm(y);
    if y_norm == 0.0 {
        return Ok(0);
    }
    let problem = SparseProblem::new(convolution_dictionary(x, s_max), y.to_vec(), s_max)?;
    let step = problem.default_step();
    let sol = iht_solve(&problem, step, 2000, 1e-12 * y_norm)?;
    let peak = sol.coefficients.iter().map(|c| c.norm()).fold(0.0, f64::max);
    Ok(sol
        .coefficients
        .iter()
        .filter(|c| c.norm() >= significance * peak)
        .count())
}
