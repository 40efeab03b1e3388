//! Softmax head and cross-entropy loss.

use super::tensor::Tensor2;
use crate::error::{Error, Result};

/// Row-wise softmax with the row maximum subtracted first.
pub fn softmax(logits: &Tensor2) -> Tensor2 {
    let mut out = logits.clone();
    for r in 0..out.rows {
        let row = out.row_mut(r);
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            sum += *v;
        }
        row.iter_mut().for_each(|v| *v /= sum);
    }
    out
}

fn check_labels(rows: usize, cols: usize, labels: &[usize]) -> Result<()> {
    if labels.len() != rows {
        return Err(Error::ShapeMismatch(format!("{} labels for {rows} rows", labels.len())));
    }
    if let Some(&bad) = labels.iter().find(|&&l| l >= cols) {
        return Err(Error::ShapeMismatch(format!("label {bad} outside {cols} classes")));
    }
    Ok(())
}

/// Mean of `−log p_y` over the batch; `labels` index the one-hot target.
/// Probabilities are clamped away from zero so the loss stays finite.
pub fn cross_entropy(p: &Tensor2, labels: &[usize]) -> Result<f64> {
    check_labels(p.rows, p.cols, labels)?;
    if p.rows == 0 {
        return Ok(0.0);
    }
    let total: f64 = labels
        .iter()
        .enumerate()
        .map(|(r, &y)| -p.row(r)[y].max(f64::MIN_POSITIVE).ln())
        .sum();
    Ok(total / p.rows as f64)
}

/// Cross-entropy computed from logits through log-sum-exp.
pub fn softmax_cross_entropy(logits: &Tensor2, labels: &[usize]) -> Result<f64> {
    check_labels(logits.rows, logits.cols, labels)?;
    if logits.rows == 0 {
        return Ok(0.0);
    }
    let total: f64 = labels
        .iter()
        .enumerate()
        .map(|(r, &y)| {
            let row = logits.row(r);
            let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let lse = max + row.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
            lse - row[y]
        })
        .sum();
    Ok(total / logits.rows as f64)
}

/// Gradient of the batch-mean cross-entropy w.r.t. the logits: `(p − g)/n`.
pub fn softmax_ce_backward(p: &Tensor2, labels: &[usize]) -> Result<Tensor2> {
    check_labels(p.rows, p.cols, labels)?;
    let n = p.rows.max(1) as f64;
    let mut g = p.clone();
    for (r, &y) in labels.iter().enumerate() {
        g.row_mut(r)[y] -= 1.0;
    }
    g.data.iter_mut().for_each(|v| *v /= n);
    Ok(g)
}

pub fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate() {
        if v > row[best] {
            best = i;
        }
    }
    best
}
