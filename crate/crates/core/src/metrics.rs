//! Classification and partition-agreement metrics.
//!
//! The experiment protocol reports support-weighted F1 on held-out nodes,
//! per-class precision/recall for diagnostics, adjusted Rand index for
//! comparing partitions against planted ground truth, and Spearman rank
//! correlation for the noise-sweep trend check.

use crate::{error::CoreError, Result};
use ndarray::Array2;
use serde::{Deserialize, Serialize};

/// Dense `C×C` confusion matrix; rows are true classes, columns predicted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    counts: Array2<usize>,
}

/// Precision/recall/F1 and support for one class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
}

impl ConfusionMatrix {
    /// Tallies aligned `(true, predicted)` label pairs.
    pub fn from_pairs(y_true: &[usize], y_pred: &[usize], n_classes: usize) -> Result<Self> {
        if y_true.len() != y_pred.len() {
            return Err(CoreError::DimensionMismatch {
                context: "confusion matrix labels",
                expected: y_true.len(),
                actual: y_pred.len(),
            });
        }
        if y_true.is_empty() {
            return Err(CoreError::EmptySplit);
        }
        let mut counts = Array2::zeros((n_classes, n_classes));
        for (&t, &p) in y_true.iter().zip(y_pred) {
            if t >= n_classes || p >= n_classes {
                return Err(CoreError::InvalidParameter {
                    name: "labels",
                    message: format!("label pair ({t}, {p}) outside 0..{n_classes}"),
                });
            }
            counts[[t, p]] += 1;
        }
        Ok(Self { counts })
    }

    pub fn n_classes(&self) -> usize {
        self.counts.nrows()
    }

    pub fn counts(&self) -> &Array2<usize> {
        &self.counts
    }

    /// Number of truly-`c` samples.
    pub fn support(&self, c: usize) -> usize {
        self.counts.row(c).sum()
    }

    pub fn total(&self) -> usize {
        self.counts.sum()
    }

    /// Per-class metrics with the 0/0 → 0 convention for degenerate
    /// precision, recall, and F1.
    pub fn class_metrics(&self) -> Vec<ClassMetrics> {
        (0..self.n_classes())
            .map(|c| {
                let tp = self.counts[[c, c]] as f64;
                let pred_c = self.counts.column(c).sum() as f64;
                let true_c = self.counts.row(c).sum() as f64;
                let precision = if pred_c > 0.0 { tp / pred_c } else { 0.0 };
                let recall = if true_c > 0.0 { tp / true_c } else { 0.0 };
                let f1 = if precision + recall > 0.0 {
                    2.0 * precision * recall / (precision + recall)
                } else {
                    0.0
                };
                ClassMetrics { precision, recall, f1, support: true_c as usize }
            })
            .collect()
    }

    /// Support-weighted mean of per-class F1 scores.
    pub fn weighted_f1(&self) -> f64 {
        let total = self.total() as f64;
        self.class_metrics()
            .iter()
            .map(|m| m.f1 * m.support as f64 / total)
            .sum()
    }
}

/// Support-weighted F1 of predictions against ground truth.
pub fn weighted_f1(y_true: &[usize], y_pred: &[usize], n_classes: usize) -> Result<f64> {
    Ok(ConfusionMatrix::from_pairs(y_true, y_pred, n_classes)?.weighted_f1())
}

fn choose2(x: usize) -> f64 {
    (x as f64) * (x as f64 - 1.0) / 2.0
}

/// Adjusted Rand index between two partitions given as per-item labels.
///
/// Chance-corrected: 1 for identical partitions, ~0 for independent ones.
/// Degenerate cases where the correction denominator vanishes (both
/// partitions all-singletons or both one-group) score 1.
pub fn adjusted_rand_index(a: &[usize], b: &[usize]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(CoreError::DimensionMismatch {
            context: "partition sizes",
            expected: a.len(),
            actual: b.len(),
        });
    }
    if a.is_empty() {
        return Err(CoreError::EmptySplit);
    }
    let ga = a.iter().max().unwrap() + 1;
    let gb = b.iter().max().unwrap() + 1;
    let mut table = Array2::<usize>::zeros((ga, gb));
    for (&x, &y) in a.iter().zip(b) {
        table[[x, y]] += 1;
    }
    let sum_ij: f64 = table.iter().map(|&n| choose2(n)).sum();
    let sum_a: f64 = (0..ga).map(|i| choose2(table.row(i).sum())).sum();
    let sum_b: f64 = (0..gb).map(|j| choose2(table.column(j).sum())).sum();
    let all = choose2(a.len());
    let expected = sum_a * sum_b / all;
    let max_index = 0.5 * (sum_a + sum_b);
    if (max_index - expected).abs() < 1e-15 {
        return Ok(1.0);
    }
    Ok((sum_ij - expected) / (max_index - expected))
}

/// Ranks with ties assigned the mean of the positions they span.
fn midranks(xs: &[f64]) -> Vec<f64> {
    let n = xs.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| xs[i].partial_cmp(&xs[j]).expect("finite values"));
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && xs[order[j + 1]] == xs[order[i]] {
            j += 1;
        }
        let mean_rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = mean_rank;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman rank correlation with midrank tie handling.
///
/// Errors if the series differ in length, have fewer than two points, or
/// either one is constant (correlation undefined).
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(CoreError::DimensionMismatch {
            context: "spearman series",
            expected: x.len(),
            actual: y.len(),
        });
    }
    if x.len() < 2 {
        return Err(CoreError::InvalidParameter {
            name: "series",
            message: "need at least two points".into(),
        });
    }
    let (rx, ry) = (midranks(x), midranks(y));
    let n = x.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let mut cov = 0.0;
    let mut vx = 0.0;
    let mut vy = 0.0;
    for (a, b) in rx.iter().zip(&ry) {
        cov += (a - mx) * (b - my);
        vx += (a - mx) * (a - mx);
        vy += (b - my) * (b - my);
    }
    if vx == 0.0 || vy == 0.0 {
        return Err(CoreError::InvalidParameter {
            name: "series",
            message: "constant series has no rank correlation".into(),
        });
    }
    Ok(cov / (vx * vy).sqrt())
}
