//! Conditional-inference classification trees.
//!
//! Each split first screens a random subset of predictors with permutation
//! tests (Bonferroni-adjusted across the candidates actually tested) and
//! stops when no association is significant, then searches the selected
//! predictor for the cut maximizing the standardized two-sample statistic.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::stats;

/// Stopping and sampling parameters for tree growth.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TreeParams {
    /// Significance level: a node is split only if the best
    /// Bonferroni-adjusted p-value is ≤ alpha.
    pub alpha: f64,
    /// Smallest node eligible for splitting.
    pub min_split: usize,
    /// Smallest allowed child node.
    pub min_bucket: usize,
    /// Number of predictors sampled per split.
    pub mtry: usize,
    /// Largest node size for which exact permutation p-values are used.
    pub max_permutation_n: usize,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams {
            alpha: 0.05,
            min_split: 20,
            min_bucket: 7,
            mtry: 6,
            max_permutation_n: stats::DEFAULT_MAX_PERMUTATION_N,
        }
    }
}

impl TreeParams {
    pub fn validate(&self, n_variables: usize) -> Result<()> {
        let fail = |reason: String| Err(Error::InvalidParams { reason });
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return fail(format!("alpha must be in (0,1), got {}", self.alpha));
        }
        if self.min_bucket < 1 {
            return fail("min_bucket must be at least 1".into());
        }
        if self.min_split < 2 * self.min_bucket {
            return fail(format!(
                "min_split {} must be at least 2·min_bucket ({})",
                self.min_split,
                2 * self.min_bucket
            ));
        }
        if self.mtry < 1 || self.mtry > n_variables {
            return fail(format!(
                "mtry {} outside 1..={n_variables}",
                self.mtry
            ));
        }
        Ok(())
    }
}

/// A grown tree node. Internal nodes route `x[split_variable] ≤ cut` to the
/// left child; leaves report the positive-class fraction of their rows.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TreeNode {
    Internal {
        split_variable: usize,
        split_name: String,
        cut: f64,
        p_adjusted: f64,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
    Leaf {
        n: usize,
        positive_fraction: f64,
    },
}

impl TreeNode {
    pub fn leaf_count(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 1,
            TreeNode::Internal { left, right, .. } => left.leaf_count() + right.leaf_count(),
        }
    }

    /// Total rows across all leaves.
    pub fn covered_rows(&self) -> usize {
        match self {
            TreeNode::Leaf { n, .. } => *n,
            TreeNode::Internal { left, right, .. } => left.covered_rows() + right.covered_rows(),
        }
    }

    pub fn max_internal_p(&self) -> Option<f64> {
        match self {
            TreeNode::Leaf { .. } => None,
            TreeNode::Internal {
                p_adjusted,
                left,
                right,
                ..
            } => {
                let mut m = *p_adjusted;
                for p in [left.max_internal_p(), right.max_internal_p()].into_iter().flatten() {
                    m = m.max(p);
                }
                Some(m)
            }
        }
    }
}

pub fn tree_to_json(tree: &TreeNode) -> String {
    serde_json::to_string(tree).expect("tree serialization is infallible")
}

pub fn tree_from_json(s: &str) -> Result<TreeNode> {
    Ok(serde_json::from_str(s)?)
}

/// Pick the candidate predictor most significantly associated with the
/// labels over `rows`, or `None` when nothing clears `alpha` after
/// Bonferroni adjustment (the stop signal).
///
/// Ties in adjusted p-value resolve to the smallest schema index.
pub fn select_split_variable(
    data: &Dataset,
    rows: &[usize],
    candidates: &[usize],
    params: &TreeParams,
) -> Option<(usize, f64)> {
    let n = rows.len();
    let h: Vec<f64> = rows
        .iter()
        .map(|&i| if data.rows()[i].label.is_positive() { 1.0 } else { 0.0 })
        .collect();
    let mut sorted = candidates.to_vec();
    sorted.sort_unstable();
    sorted.dedup();

    let mut best: Option<(usize, f64)> = None;
    for &var in &sorted {
        let g: Vec<f64> = rows.iter().map(|&i| data.feature(i, var)).collect();
        let p = if n <= params.max_permutation_n {
            stats::p_value_exact(&g, &h, params.max_permutation_n).ok()?
        } else {
            stats::linear_association(&g, &h).ok()?.p_value
        };
        let p_adj = stats::bonferroni(p, sorted.len());
        if best.is_none_or(|(_, b)| p_adj < b) {
            best = Some((var, p_adj));
        }
    }
    best.filter(|&(_, p_adj)| p_adj <= params.alpha)
}

/// Find the cut maximizing the standardized two-sample statistic
/// |z| for the split indicator against `y`, over midpoints between
/// consecutive distinct values of `x` that leave at least `min_bucket`
/// rows on each side. Ties resolve to the smallest cut.
///
/// |z|² is monotone in N²/(L·(n−L)) with N = n·T_L − L·S_y, where L is the
/// left-side count and T_L the left-side label sum; with 0/1 labels N is
/// integer-valued, so ties and the 0↔1 label swap (which negates N) are
/// detected exactly.
pub fn best_split_point(x: &[f64], y: &[f64], min_bucket: usize) -> Result<f64> {
    let n = x.len();
    if y.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            found: y.len(),
        });
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let sum_y: f64 = y.iter().sum();

    let mut best: Option<(f64, f64)> = None; // (score, cut)
    let mut left_count = 0usize;
    let mut left_sum = 0.0f64;
    let mut i = 0;
    while i < n {
        // consume the whole run of equal x values
        let v = x[order[i]];
        while i < n && x[order[i]] == v {
            left_count += 1;
            left_sum += y[order[i]];
            i += 1;
        }
        if i == n {
            break;
        }
        if left_count < min_bucket || n - left_count < min_bucket {
            continue;
        }
        let nn = n as f64;
        let l = left_count as f64;
        let big_n = nn * left_sum - l * sum_y;
        let score = big_n * big_n / (l * (nn - l));
        if best.is_none_or(|(s, _)| score > s) {
            let cut = (v + x[order[i]]) / 2.0;
            best = Some((score, cut));
        }
    }
    best.map(|(_, cut)| cut).ok_or(Error::NoFeasibleSplit)
}

/// Grow one conditional-inference tree over all rows of `data`.
///
/// Recursion stops at nodes smaller than `min_split`, pure nodes, nodes
/// where no candidate predictor is significant, and nodes whose selected
/// predictor admits no cut honoring `min_bucket`. Each split attempt draws
/// a fresh `mtry`-subset of predictors from `rng`; children are grown left
/// first, so growth is deterministic for a fixed seed.
pub fn grow_tree<R: Rng>(data: &Dataset, params: &TreeParams, rng: &mut R) -> Result<TreeNode> {
    params.validate(data.schema().count())?;
    if data.is_empty() {
        return Err(Error::TooFewRows { n: 0, min: 1 });
    }
    let rows: Vec<usize> = (0..data.len()).collect();
    Ok(grow_node(data, rows, params, rng))
}

/// Grow a tree over a row subset without copying the data. Callers must
/// have validated `params` and pass a non-empty row set.
pub(crate) fn grow_tree_on_rows<R: Rng>(
    data: &Dataset,
    rows: Vec<usize>,
    params: &TreeParams,
    rng: &mut R,
) -> TreeNode {
    grow_node(data, rows, params, rng)
}

fn grow_node<R: Rng>(
    data: &Dataset,
    rows: Vec<usize>,
    params: &TreeParams,
    rng: &mut R,
) -> TreeNode {
    let n = rows.len();
    let n_pos = rows
        .iter()
        .filter(|&&i| data.rows()[i].label.is_positive())
        .count();
    let leaf = |n: usize, n_pos: usize| TreeNode::Leaf {
        n,
        positive_fraction: n_pos as f64 / n as f64,
    };
    if n < params.min_split || n_pos == 0 || n_pos == n {
        return leaf(n, n_pos);
    }

    let n_vars = data.schema().count();
    let candidates = rand::seq::index::sample(rng, n_vars, params.mtry.min(n_vars)).into_vec();
    let Some((var, p_adjusted)) = select_split_variable(data, &rows, &candidates, params) else {
        return leaf(n, n_pos);
    };

    let x: Vec<f64> = rows.iter().map(|&i| data.feature(i, var)).collect();
    let y: Vec<f64> = rows
        .iter()
        .map(|&i| if data.rows()[i].label.is_positive() { 1.0 } else { 0.0 })
        .collect();
    let Ok(cut) = best_split_point(&x, &y, params.min_bucket) else {
        return leaf(n, n_pos);
    };

    let (left_rows, right_rows): (Vec<usize>, Vec<usize>) =
        rows.into_iter().partition(|&i| data.feature(i, var) <= cut);
    let left = grow_node(data, left_rows, params, rng);
    let right = grow_node(data, right_rows, params, rng);
    TreeNode::Internal {
        split_variable: var,
        split_name: data.schema().name(var).to_string(),
        cut,
        p_adjusted,
        left: Box::new(left),
        right: Box::new(right),
    }
}

/// Route a feature vector to its leaf and return the leaf's positive
/// fraction. Values exactly at a cut go left.
pub fn predict_tree(tree: &TreeNode, x: &[f64]) -> Result<f64> {
    let mut node = tree;
    loop {
        match node {
            TreeNode::Leaf {
                positive_fraction, ..
            } => return Ok(*positive_fraction),
            TreeNode::Internal {
                split_variable,
                cut,
                left,
                right,
                ..
            } => {
                let v = x.get(*split_variable).copied().ok_or(Error::LengthMismatch {
                    expected: *split_variable + 1,
                    found: x.len(),
                })?;
                node = if v <= *cut { left } else { right };
            }
        }
    }
}
