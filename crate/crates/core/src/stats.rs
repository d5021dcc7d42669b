//! Permutation-test association statistics for a numeric predictor against
//! a binary response.
//!
//! The standardized linear statistic uses the classical conditional moments
//! of T = Σ gᵢhᵢ under random permutation of h:
//!
//! ```text
//! mu     = n·ḡ·h̄
//! sigma2 = [Σ(gᵢ−ḡ)²]·[Σ(hᵢ−h̄)²]/(n−1)
//! z      = (T − mu)/√sigma2
//! ```
//!
//! and a two-sided normal tail for the asymptotic p-value. For small n the
//! exact permutation distribution is enumerated instead.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Largest sample size for which exact permutation p-values are the default.
pub const DEFAULT_MAX_PERMUTATION_N: usize = 8;

/// Hard ceiling for exact enumeration (10! ≈ 3.6·10⁶ permutations).
pub const EXACT_ENUMERATION_CEILING: usize = 10;

/// Moments and p-value of the standardized linear association statistic.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AssociationResult {
    pub statistic: f64,
    pub mean: f64,
    pub variance: f64,
    pub z: f64,
    pub p_value: f64,
}

/// Two-sided standard-normal tail probability at |z|.
pub fn normal_two_sided_p(z: f64) -> f64 {
    libm::erfc(z.abs() / std::f64::consts::SQRT_2)
}

/// Bonferroni adjustment over `m` tests.
pub fn bonferroni(p: f64, m: usize) -> f64 {
    (p * m as f64).min(1.0)
}

/// Standardized linear association of `g` with `h`, with asymptotic
/// two-sided p-value.
///
/// Degenerate inputs (either vector constant) have `sigma2 == 0` and are
/// reported as no association: `z == 0`, `p_value == 1`.
pub fn linear_association(g: &[f64], h: &[f64]) -> Result<AssociationResult> {
    if g.len() != h.len() {
        return Err(Error::LengthMismatch {
            expected: g.len(),
            found: h.len(),
        });
    }
    let n = g.len();
    if n < 2 {
        return Err(Error::TooFewRows { n, min: 2 });
    }
    let nf = n as f64;
    let sum_g: f64 = g.iter().sum();
    let sum_h: f64 = h.iter().sum();
    let statistic: f64 = g.iter().zip(h).map(|(a, b)| a * b).sum();
    let mean = sum_g * sum_h / nf;
    let gbar = sum_g / nf;
    let hbar = sum_h / nf;
    let ssg: f64 = g.iter().map(|v| (v - gbar).powi(2)).sum();
    let ssh: f64 = h.iter().map(|v| (v - hbar).powi(2)).sum();
    let variance = ssg * ssh / (nf - 1.0);
    let (z, p_value) = if variance > 0.0 {
        let z = (statistic - mean) / variance.sqrt();
        (z, normal_two_sided_p(z))
    } else {
        (0.0, 1.0)
    };
    Ok(AssociationResult {
        statistic,
        mean,
        variance,
        z,
        p_value,
    })
}

fn factorial(n: usize) -> u64 {
    (1..=n as u64).product()
}

/// Exact two-sided permutation p-value: the fraction of all n! orderings
/// σ of `h` with |Σ gᵢ·h_{σ(i)} − mu| ≥ |T − mu|.
///
/// The identity ordering always satisfies the inequality, so the result is
/// at least 1/n!. Refuses inputs larger than `max_n` (and unconditionally
/// above [`EXACT_ENUMERATION_CEILING`]).
pub fn p_value_exact(g: &[f64], h: &[f64], max_n: usize) -> Result<f64> {
    if g.len() != h.len() {
        return Err(Error::LengthMismatch {
            expected: g.len(),
            found: h.len(),
        });
    }
    let n = g.len();
    let cap = max_n.min(EXACT_ENUMERATION_CEILING);
    if n > cap {
        return Err(Error::TooLarge { n, max: cap });
    }
    if n < 2 {
        return Err(Error::TooFewRows { n, min: 2 });
    }
    let base = linear_association(g, h)?;
    let d_obs = (base.statistic - base.mean).abs();

    // Heap's algorithm over a working copy of h; every arrangement is
    // visited exactly once (duplicates in h included with multiplicity).
    let mut perm = h.to_vec();
    let score = |p: &[f64]| -> f64 {
        g.iter().zip(p).map(|(a, b)| a * b).sum::<f64>()
    };
    let mut exceed = 0u64;
    if (score(&perm) - base.mean).abs() >= d_obs {
        exceed += 1;
    }
    let mut c = vec![0usize; n];
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            if (score(&perm) - base.mean).abs() >= d_obs {
                exceed += 1;
            }
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    Ok(exceed as f64 / factorial(n) as f64)
}

/// Monte-Carlo permutation p-value with the add-one correction
/// (1 + #exceedances)/(B + 1); never returns 0 and is reproducible for a
/// fixed seed.
pub fn p_value_montecarlo(g: &[f64], h: &[f64], b: usize, seed: u64) -> Result<f64> {
    if b < 1000 {
        return Err(Error::InvalidParams {
            reason: format!("Monte-Carlo permutation count {b} below minimum 1000"),
        });
    }
    let base = linear_association(g, h)?;
    let d_obs = (base.statistic - base.mean).abs();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut perm = h.to_vec();
    let mut exceed = 0u64;
    for _ in 0..b {
        perm.shuffle(&mut rng);
        let t: f64 = g.iter().zip(&perm).map(|(a, b)| a * b).sum();
        if (t - base.mean).abs() >= d_obs {
            exceed += 1;
        }
    }
    Ok((1 + exceed) as f64 / (b + 1) as f64)
}
