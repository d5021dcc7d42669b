//! Diagnostic performance metrics and small summary statistics.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Metric used to score diagnosed probabilities against 0/1 labels.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Metric {
    /// Fraction of rows classified correctly with the rule "positive iff
    /// probability > 0.5".
    AccuracyAtHalf,
    /// Area under the ROC curve (rank statistic, midranks for ties).
    Auc,
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Metric::AccuracyAtHalf => write!(f, "accuracy@0.5"),
            Metric::Auc => write!(f, "auc"),
        }
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Metric> {
        match s {
            "accuracy" | "accuracy@0.5" => Ok(Metric::AccuracyAtHalf),
            "auc" | "AUC" => Ok(Metric::Auc),
            other => Err(Error::InvalidParams {
                reason: format!("unknown metric {other:?} (expected accuracy@0.5 or auc)"),
            }),
        }
    }
}

/// Score `probs` against `labels01` with the chosen metric.
///
/// AUC requires both classes; accuracy is defined regardless (callers that
/// need the both-classes guarantee enforce it themselves).
pub fn evaluate(metric: Metric, probs: &[f64], labels01: &[f64]) -> Result<f64> {
    if probs.len() != labels01.len() {
        return Err(Error::LengthMismatch {
            expected: probs.len(),
            found: labels01.len(),
        });
    }
    if probs.is_empty() {
        return Err(Error::TooFewRows { n: 0, min: 1 });
    }
    match metric {
        Metric::AccuracyAtHalf => Ok(accuracy_at_half(probs, labels01)),
        Metric::Auc => auc(probs, labels01),
    }
}

fn accuracy_at_half(probs: &[f64], labels01: &[f64]) -> f64 {
    let correct = probs
        .iter()
        .zip(labels01)
        .filter(|&(&p, &y)| (p > 0.5) == (y == 1.0))
        .count();
    correct as f64 / probs.len() as f64
}

/// Mann–Whitney AUC with midranks for tied scores.
pub fn auc(probs: &[f64], labels01: &[f64]) -> Result<f64> {
    let n = probs.len();
    let n_pos = labels01.iter().filter(|&&y| y == 1.0).count();
    let n_neg = n - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::SingleClassEval);
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| probs[a].total_cmp(&probs[b]));

    let mut rank_sum_pos = 0.0;
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j < n && probs[order[j]] == probs[order[i]] {
            j += 1;
        }
        // ranks i+1 ..= j share the midrank
        let midrank = (i + 1 + j) as f64 / 2.0;
        for &k in &order[i..j] {
            if labels01[k] == 1.0 {
                rank_sum_pos += midrank;
            }
        }
        i = j;
    }
    let np = n_pos as f64;
    Ok((rank_sum_pos - np * (np + 1.0) / 2.0) / (np * n_neg as f64))
}

/// Linear-interpolation quantile (the common "type 7" rule): for sorted x
/// and h = (n−1)·q, returns x[⌊h⌋] + (h−⌊h⌋)·(x[⌊h⌋+1]−x[⌊h⌋]).
pub fn quantile(values: &[f64], q: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::TooFewRows { n: 0, min: 1 });
    }
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::InvalidParams {
            reason: format!("quantile level {q} outside [0,1]"),
        });
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    Ok(sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo]))
}

pub fn median(values: &[f64]) -> Result<f64> {
    quantile(values, 0.5)
}
