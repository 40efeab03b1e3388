//! Classification scores in tap-count space.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub n_samples: usize,
    /// Tap count of each class index.
    pub class_map: Vec<usize>,
    pub accuracy: f64,
    /// Per class index; 0 for classes absent from the evaluated set.
    pub per_class_accuracy: Vec<f64>,
    pub class_support: Vec<usize>,
    /// Row-normalized `C × C` matrix (row = truth, column = prediction).
    pub confusion: Vec<Vec<f64>>,
    /// Per row, the fraction of predictions that are not any class's tap
    /// count (only estimators outside the classifier can produce these).
    /// Each confusion row plus this entry sums to 1 on populated rows.
    pub out_of_set: Vec<f64>,
    /// `tolerance_accuracy[k]` = fraction with `|L̂ − L| ≤ k`, k = 0..=max L.
    pub tolerance_accuracy: Vec<f64>,
}

impl EvalReport {
    /// Score predicted tap counts against true ones.
    ///
    /// Panics if a true tap count is not in `class_map` or lengths differ.
    pub fn from_tap_counts(class_map: &[usize], truth: &[usize], predicted: &[usize]) -> Self {
        assert_eq!(truth.len(), predicted.len(), "truth/prediction length mismatch");
        let c = class_map.len();
        let index_of = |l: usize| class_map.iter().position(|&m| m == l);
        let max_l = class_map.iter().copied().max().unwrap_or(0);
        let mut counts = vec![vec![0usize; c]; c];
        let mut outside = vec![0usize; c];
        let mut support = vec![0usize; c];
        let mut within = vec![0usize; max_l + 1];
        for (&t, &p) in truth.iter().zip(predicted) {
            let ti = index_of(t).unwrap_or_else(|| panic!("true tap count {t} is not a class"));
            support[ti] += 1;
            match index_of(p) {
                Some(pi) => counts[ti][pi] += 1,
                None => outside[ti] += 1,
            }
            let d = t.abs_diff(p);
            if d <= max_l {
                within[d] += 1;
            }
        }
        let n = truth.len();
        let frac = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
        let correct: usize = (0..c).map(|i| counts[i][i]).sum();
        let mut tolerance = Vec::with_capacity(max_l + 1);
        let mut cum = 0;
        for w in within {
            cum += w;
            tolerance.push(frac(cum, n));
        }
        Self {
            n_samples: n,
            class_map: class_map.to_vec(),
            accuracy: frac(correct, n),
            per_class_accuracy: (0..c).map(|i| frac(counts[i][i], support[i])).collect(),
            confusion: counts.iter().zip(&support).map(|(row, &s)| row.iter().map(|&k| frac(k, s)).collect()).collect(),
            out_of_set: outside.iter().zip(&support).map(|(&k, &s)| frac(k, s)).collect(),
            class_support: support,
            tolerance_accuracy: tolerance,
        }
    }

    /// Score predicted class indices.
    pub fn from_class_indices(class_map: &[usize], truth: &[usize], predicted: &[usize]) -> Self {
        let to_l = |v: &[usize]| v.iter().map(|&i| class_map[i]).collect::<Vec<_>>();
        Self::from_tap_counts(class_map, &to_l(truth), &to_l(predicted))
    }

    pub fn tolerance(&self, k: usize) -> f64 {
        self.tolerance_accuracy.get(k).copied().unwrap_or(1.0)
    }

    pub fn confusion_csv(&self) -> String {
        let mut s = String::from("true_taps");
        for l in &self.class_map {
            write!(s, ",pred_{l}").unwrap();
        }
        s.push_str(",pred_other\n");
        for (i, row) in self.confusion.iter().enumerate() {
            write!(s, "{}", self.class_map[i]).unwrap();
            for v in row {
                write!(s, ",{v}").unwrap();
            }
            writeln!(s, ",{}", self.out_of_set[i]).unwrap();
        }
        s
    }

    pub fn tolerance_csv(&self) -> String {
        let mut s = String::from("k,accuracy\n");
        for (k, v) in self.tolerance_accuracy.iter().enumerate() {
            writeln!(s, "{k},{v}").unwrap();
        }
        s
    }

    pub fn summary(&self) -> String {
        let mut s = format!("samples: {}\naccuracy: {:.4}\n", self.n_samples, self.accuracy);
        for (k, v) in self.tolerance_accuracy.iter().enumerate().take(4) {
            writeln!(s, "tolerance@{k}: {v:.4}").unwrap();
        }
        s.push_str("per-class accuracy:\n");
        for ((l, a), n) in self.class_map.iter().zip(&self.per_class_accuracy).zip(&self.class_support) {
            writeln!(s, "  L={l:<3} {a:.4} (n={n})").unwrap();
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_two_class() {
        let r = EvalReport::from_class_indices(&[1, 2], &[0, 1, 1, 0], &[0, 1, 1, 0]);
        assert_eq!(r.accuracy, 1.0);
        assert_eq!(r.confusion, vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
    }

    #[test]
    fn constant_classifier_scores_one_over_c() {
        let truth: Vec<usize> = (0..50).map(|i| i % 5).collect();
        let r = EvalReport::from_class_indices(&[1, 2, 3, 4, 5], &truth, &[2; 50]);
        assert!((r.accuracy - 0.2).abs() < 1e-12);
        assert_eq!(*r.tolerance_accuracy.last().unwrap(), 1.0);
        assert!((r.tolerance_accuracy[1] - 0.6).abs() < 1e-12);
    }

    #[test]
    fn invariants_hold() {
        let map: Vec<usize> = (1..=10).collect();
        let truth: Vec<usize> = (0..200).map(|i| (i * 7) % 9).collect(); // class 9 absent
        let pred: Vec<usize> = (0..200).map(|i| (i * 13) % 10).collect();
        let r = EvalReport::from_class_indices(&map, &truth, &pred);
        assert_eq!(r.tolerance_accuracy[0], r.accuracy);
        assert!(r.tolerance_accuracy.windows(2).all(|w| w[0] <= w[1]));
        assert_eq!(r.tolerance(10), 1.0);
        for (i, row) in r.confusion.iter().enumerate() {
            let s: f64 = row.iter().sum::<f64>() + r.out_of_set[i];
            let want = if r.class_support[i] == 0 { 0.0 } else { 1.0 };
            assert!((s - want).abs() < 1e-12);
        }
    }

    #[test]
    fn out_of_set_predictions() {
        let r = EvalReport::from_tap_counts(&[1, 2, 3], &[1, 3], &[1, 7]);
        assert_eq!(r.accuracy, 0.5);
        assert_eq!(r.out_of_set, vec![0.0, 0.0, 1.0]);
        assert_eq!(r.tolerance_accuracy, vec![0.5, 0.5, 0.5, 0.5]);
    }
}
