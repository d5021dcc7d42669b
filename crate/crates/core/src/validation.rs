//! Training/evaluation protocol: balanced class sampling, leave-one-day-out
//! cross-validation, multi-forest ensembles, and diagnostic summaries.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use chrono::{Datelike, NaiveDate};
use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;

use crate::dataset::{format_timestamp, Dataset, Label, Sample, Season};
use crate::error::{Error, Result};
use crate::forest::{self, EnsembleModel, ForestModel, ForestParams};
use crate::metrics;
use crate::rng::{self, purpose};

/// Default number of no-UL days sampled per (year, season) for the
/// false-positive panel.
pub const DEFAULT_NO_UL_DAYS_PER_SEASON_YEAR: usize = 4;

/// One cross-validation fold: the held-out UTC day, the balanced training
/// set drawn from all other days, and the held-out day's rows.
#[derive(Clone, Debug)]
pub struct CvFold {
    pub held_out_day: NaiveDate,
    pub train: Dataset,
    pub test: Dataset,
}

/// Fold plus the model it produced and the diagnosed probabilities for the
/// fold's test rows (parallel to `fold.test.rows()`).
#[derive(Clone, Debug)]
pub struct FoldResult {
    pub fold: CvFold,
    pub model: ForestModel,
    pub probabilities: Vec<f64>,
}

/// First quartile, median, third quartile (linear-interpolation rule).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Quartiles {
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
}

impl Quartiles {
    pub fn of(values: &[f64]) -> Result<Quartiles> {
        Ok(Quartiles {
            q1: metrics::quantile(values, 0.25)?,
            median: metrics::quantile(values, 0.5)?,
            q3: metrics::quantile(values, 0.75)?,
        })
    }
}

/// Distributions of diagnosed probabilities at observed-UL rows (held-out
/// CV predictions) and at sampled no-UL situations (ensemble predictions).
#[derive(Clone, Debug)]
pub struct DiagnosticSummary {
    pub tp_probs: Vec<f64>,
    pub fp_probs: Vec<f64>,
    pub tp_quartiles: Quartiles,
    pub fp_quartiles: Quartiles,
}

fn season_counts(data: &Dataset) -> BTreeMap<Season, usize> {
    let mut counts = BTreeMap::new();
    for row in data.rows() {
        *counts.entry(row.season()).or_insert(0) += 1;
    }
    counts
}

/// All positives plus an equal-count without-replacement draw of negatives,
/// stratified by season to the positives' season counts. When a season's
/// pool is short, the deficit is filled from the remaining pool so the
/// output is always exactly balanced. The combined rows are shuffled with
/// `rng`.
pub fn balanced_sample<R: Rng>(
    positives: &Dataset,
    negative_pool: &Dataset,
    rng: &mut R,
) -> Result<Dataset> {
    if positives.schema() != negative_pool.schema() {
        return Err(Error::SchemaMismatch {
            expected: positives.schema().names().collect::<Vec<_>>().join(","),
            found: negative_pool.schema().names().collect::<Vec<_>>().join(","),
        });
    }
    if positives.is_empty() {
        return Err(Error::TooFewRows { n: 0, min: 1 });
    }
    if positives.rows().iter().any(|r| r.label != Label::Ul) {
        return Err(Error::InvalidParams {
            reason: "positives must all carry the UL label".into(),
        });
    }
    if negative_pool.rows().iter().any(|r| r.label != Label::NoUl) {
        return Err(Error::InvalidParams {
            reason: "negative pool must contain only no-UL rows".into(),
        });
    }
    let needed = positives.len();
    if negative_pool.len() < needed {
        return Err(Error::PoolTooSmall {
            pool: negative_pool.len(),
            needed,
        });
    }

    let mut by_season: BTreeMap<Season, Vec<usize>> = BTreeMap::new();
    for (i, row) in negative_pool.rows().iter().enumerate() {
        by_season.entry(row.season()).or_default().push(i);
    }

    let mut drawn: Vec<usize> = Vec::with_capacity(needed);
    let mut taken = vec![false; negative_pool.len()];
    for (season, target) in season_counts(positives) {
        let pool_idx = by_season.get(&season).map_or(&[][..], |v| v.as_slice());
        let take = target.min(pool_idx.len());
        for k in rand::seq::index::sample(rng, pool_idx.len(), take) {
            drawn.push(pool_idx[k]);
            taken[pool_idx[k]] = true;
        }
    }
    // seasons with too few negatives: top up from whatever is left
    if drawn.len() < needed {
        let rest: Vec<usize> = (0..negative_pool.len()).filter(|&i| !taken[i]).collect();
        let deficit = needed - drawn.len();
        for k in rand::seq::index::sample(rng, rest.len(), deficit) {
            drawn.push(rest[k]);
        }
    }

    let mut rows: Vec<Sample> = positives.rows().to_vec();
    rows.extend(drawn.into_iter().map(|i| negative_pool.rows()[i].clone()));
    rows.shuffle(rng);
    Dataset::from_rows(positives.schema().clone(), rows)
}

/// Leave-one-event-day-out cross-validation.
///
/// One fold and one freshly fitted forest per distinct UL day in `data`.
/// Each fold trains on a balanced sample (all other days' UL rows plus a
/// seasonal draw from `negative_pool`, excluding the held-out date) and
/// diagnoses every `data` row on the held-out day. Per-fold seeds derive
/// from `params.seed`, so folds may run in parallel with identical results.
pub fn loocv_by_day(
    data: &Dataset,
    negative_pool: &Dataset,
    params: &ForestParams,
) -> Result<Vec<FoldResult>> {
    let days: Vec<NaiveDate> = data.event_days().into_iter().collect();
    if days.len() < 2 {
        return Err(Error::TooFewDays { days: days.len() });
    }
    let sample_seed = rng::derive_seed(params.seed, purpose::CV_SAMPLING);
    let forest_seed = rng::derive_seed(params.seed, purpose::CV_FOREST);
    days.par_iter()
        .enumerate()
        .map(|(i, &day)| {
            let positives =
                data.filter(|r| r.label == Label::Ul && r.date() != day);
            let pool = negative_pool.filter(|r| r.date() != day);
            let mut rng = rng::stream_rng(sample_seed, i as u64);
            let train = balanced_sample(&positives, &pool, &mut rng)?;
            let fold_params = ForestParams {
                seed: rng::derive_seed(forest_seed, i as u64),
                ..*params
            };
            let model = forest::fit_forest(&train, &fold_params)?;
            let test = data.filter(|r| r.date() == day);
            let probabilities = test
                .rows()
                .iter()
                .map(|r| model.predict(&r.features))
                .collect::<Result<Vec<f64>>>()?;
            Ok(FoldResult {
                fold: CvFold {
                    held_out_day: day,
                    train,
                    test,
                },
                model,
                probabilities,
            })
        })
        .collect()
}

/// Fit `n_models` forests, each on its own balanced sample of the same
/// positives against the pool. This is the production protocol behind the
/// "median over many forests" diagnostics.
pub fn fit_ensemble(
    positives: &Dataset,
    negative_pool: &Dataset,
    n_models: usize,
    params: &ForestParams,
) -> Result<EnsembleModel> {
    if n_models < 1 {
        return Err(Error::InvalidParams {
            reason: "n_models must be at least 1".into(),
        });
    }
    let sample_seed = rng::derive_seed(params.seed, purpose::ENSEMBLE_SAMPLE);
    let forest_seed = rng::derive_seed(params.seed, purpose::ENSEMBLE_FOREST);
    let models: Vec<ForestModel> = (0..n_models)
        .into_par_iter()
        .map(|m| {
            let mut rng = rng::stream_rng(sample_seed, m as u64);
            let train = balanced_sample(positives, negative_pool, &mut rng)?;
            let model_params = ForestParams {
                seed: rng::derive_seed(forest_seed, m as u64),
                ..*params
            };
            forest::fit_forest(&train, &model_params)
        })
        .collect::<Result<_>>()?;
    EnsembleModel::new(models)
}

/// Sample whole no-UL days from the pool, `days_per_season_year` per
/// (year, season) group, and return all pool rows on the chosen days.
pub fn sample_no_ul_rows(
    pool: &Dataset,
    days_per_season_year: usize,
    seed: u64,
) -> Result<Dataset> {
    if days_per_season_year < 1 {
        return Err(Error::InvalidParams {
            reason: "days_per_season_year must be at least 1".into(),
        });
    }
    let mut days_by_group: BTreeMap<(i32, Season), BTreeSet<NaiveDate>> = BTreeMap::new();
    for row in pool.rows() {
        if row.label == Label::NoUl {
            days_by_group
                .entry((row.date().year(), row.season()))
                .or_default()
                .insert(row.date());
        }
    }
    let mut rng = rng::stream_rng(rng::derive_seed(seed, purpose::NO_UL_SAMPLE), 0);
    let mut chosen: BTreeSet<NaiveDate> = BTreeSet::new();
    for days in days_by_group.values() {
        let days: Vec<NaiveDate> = days.iter().copied().collect();
        let take = days_per_season_year.min(days.len());
        for k in rand::seq::index::sample(&mut rng, days.len(), take) {
            chosen.insert(days[k]);
        }
    }
    let sampled = pool.filter(|r| r.label == Label::NoUl && chosen.contains(&r.date()));
    if sampled.is_empty() {
        return Err(Error::TooFewRows { n: 0, min: 1 });
    }
    Ok(sampled)
}

/// Summarize diagnostic ability: held-out probabilities at observed-UL rows
/// versus ensemble probabilities at sampled no-UL situations.
pub fn diagnostic_summary(
    results: &[FoldResult],
    no_ul_sample: &Dataset,
    ensemble: &EnsembleModel,
) -> Result<DiagnosticSummary> {
    if results.is_empty() {
        return Err(Error::TooFewRows { n: 0, min: 1 });
    }
    let mut tp_probs = Vec::new();
    for r in results {
        for (row, &p) in r.fold.test.rows().iter().zip(&r.probabilities) {
            if row.label == Label::Ul {
                tp_probs.push(p);
            }
        }
    }
    let fp_probs: Vec<f64> = no_ul_sample
        .rows()
        .iter()
        .filter(|r| r.label == Label::NoUl)
        .map(|r| ensemble.predict_median(&r.features))
        .collect::<Result<_>>()?;
    let tp_quartiles = Quartiles::of(&tp_probs)?;
    let fp_quartiles = Quartiles::of(&fp_probs)?;
    Ok(DiagnosticSummary {
        tp_probs,
        fp_probs,
        tp_quartiles,
        fp_quartiles,
    })
}

/// Per-row CV results: `fold_day,row_timestamp,label,diagnosed_probability`.
pub fn cv_results_to_csv(results: &[FoldResult]) -> String {
    let mut out = String::from("fold_day,row_timestamp,label,diagnosed_probability\n");
    for r in results {
        for (row, &p) in r.fold.test.rows().iter().zip(&r.probabilities) {
            out.push_str(&format!(
                "{},{},{},{}\n",
                r.fold.held_out_day,
                format_timestamp(row.timestamp),
                row.label.as_csv(),
                p
            ));
        }
    }
    out
}

pub fn save_cv_results(results: &[FoldResult], path: &Path) -> Result<()> {
    std::fs::write(path, cv_results_to_csv(results))?;
    Ok(())
}

/// Two-line quartile summary for the tp/fp probability distributions.
pub fn summary_to_csv(summary: &DiagnosticSummary) -> String {
    let mut out = String::from("set,count,q1,median,q3\n");
    for (name, probs, q) in [
        ("tp", &summary.tp_probs, &summary.tp_quartiles),
        ("fp", &summary.fp_probs, &summary.fp_quartiles),
    ] {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            name,
            probs.len(),
            q.q1,
            q.median,
            q.q3
        ));
    }
    out
}

pub fn save_summary(summary: &DiagnosticSummary, path: &Path) -> Result<()> {
    std::fs::write(path, summary_to_csv(summary))?;
    Ok(())
}
