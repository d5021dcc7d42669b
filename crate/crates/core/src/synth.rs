//! Synthetic data from a known logistic ground truth.
//!
//! Labels are Bernoulli draws from sigmoid(w·x + b), so every generated
//! artifact comes with the true conditional probability attached and
//! desk-scale end-to-end checks can compare against an exact oracle. A
//! logistic truth deliberately sits outside the forest's hypothesis
//! class: recovery is a robustness result, not a self-fulfilling one.

use std::str::FromStr;

use chrono::{DateTime, NaiveDate, Utc};
use ndarray::Array2;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::dataset::{Dataset, Label, Sample, Source, UlSubtype};
use crate::error::{Error, Result};
use crate::grid::{FieldSet, GridField, GridSpec};
use crate::rng::{derive_seed, purpose, stream_rng};
use crate::schema::FeatureSchema;

/// Gaisberg and Säntis tower coordinates used for synthetic event rows.
pub const TOWER_SITES: [(Source, f64, f64); 2] = [
    (Source::GaisbergTower, 47.804, 13.111),
    (Source::SaentisTower, 47.249, 9.343),
];

/// Synthetic timestamps fall in 2012-01-01 .. 2019-12-31.
const SPAN_FIRST: (i32, u32, u32) = (2012, 1, 1);
const SPAN_LAST: (i32, u32, u32) = (2019, 12, 31);

/// Logit amplitude of the spatial patterns: in-pattern cells sit near
/// sigmoid(±4) ≈ 0.98 / 0.02.
const PATTERN_LOGIT_AMPLITUDE: f64 = 4.0;

/// Upper bound on Bernoulli rejection draws for one conditioned row.
const MAX_REJECTION_DRAWS: usize = 100_000;

fn sigmoid(t: f64) -> f64 {
    1.0 / (1.0 + (-t).exp())
}

/// Spatial structure of the grid-field ground truth.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum SpatialPattern {
    /// Identical true probability in every cell.
    #[default]
    Uniform,
    /// True probability strictly decreasing west to east, saturating
    /// toward the domain edges.
    WestGradient,
    /// High true probability in the middle third of latitude rows, low
    /// outside, with a one-cell transition at each edge.
    FrontalBand,
}

impl std::fmt::Display for SpatialPattern {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SpatialPattern::Uniform => "uniform",
            SpatialPattern::WestGradient => "west-gradient",
            SpatialPattern::FrontalBand => "frontal-band",
        })
    }
}

impl FromStr for SpatialPattern {
    type Err = Error;

    fn from_str(s: &str) -> Result<SpatialPattern> {
        match s {
            "uniform" => Ok(SpatialPattern::Uniform),
            "west-gradient" => Ok(SpatialPattern::WestGradient),
            "frontal-band" => Ok(SpatialPattern::FrontalBand),
            other => Err(Error::InvalidParams {
                reason: format!("unknown spatial pattern '{other}'"),
            }),
        }
    }
}

/// Ground-truth definition shared by all generators.
#[derive(Clone, Debug, PartialEq)]
pub struct SynthConfig {
    /// Logistic weights, one per canonical schema variable.
    pub coefficients: Vec<f64>,
    pub intercept: f64,
    /// Distinct UTC days that receive at least one event row.
    pub n_event_days: usize,
    pub seed: u64,
    pub spatial_pattern: SpatialPattern,
}

impl Default for SynthConfig {
    fn default() -> SynthConfig {
        let schema = FeatureSchema::canonical();
        let mut coefficients = vec![0.0; schema.count()];
        coefficients[0] = 2.0;
        coefficients[1] = -1.5;
        coefficients[2] = 1.0;
        SynthConfig {
            coefficients,
            intercept: 0.0,
            n_event_days: 40,
            seed: 1,
            spatial_pattern: SpatialPattern::default(),
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let schema = FeatureSchema::canonical();
        if self.coefficients.len() != schema.count() {
            return Err(Error::LengthMismatch {
                expected: schema.count(),
                found: self.coefficients.len(),
            });
        }
        if !self.coefficients.iter().any(|&w| w != 0.0) {
            return Err(Error::InvalidParams {
                reason: "all logistic coefficients are zero".into(),
            });
        }
        if self.coefficients.iter().any(|w| !w.is_finite()) || !self.intercept.is_finite() {
            return Err(Error::InvalidParams {
                reason: "non-finite logistic parameters".into(),
            });
        }
        if self.n_event_days < 2 {
            return Err(Error::TooFewDays {
                days: self.n_event_days,
            });
        }
        if self.n_event_days > span_days() {
            return Err(Error::InvalidParams {
                reason: format!(
                    "{} event days exceed the {}-day timestamp span",
                    self.n_event_days,
                    span_days()
                ),
            });
        }
        Ok(())
    }

    /// Indices of variables with nonzero weight.
    pub fn signal_indices(&self) -> Vec<usize> {
        self.coefficients
            .iter()
            .enumerate()
            .filter(|(_, &w)| w != 0.0)
            .map(|(i, _)| i)
            .collect()
    }

    /// sigmoid(w·x + b) for one feature vector.
    pub fn true_probability(&self, x: &[f64]) -> f64 {
        let z: f64 = self
            .coefficients
            .iter()
            .zip(x)
            .map(|(w, v)| w * v)
            .sum::<f64>()
            + self.intercept;
        sigmoid(z)
    }
}

fn span_first() -> NaiveDate {
    NaiveDate::from_ymd_opt(SPAN_FIRST.0, SPAN_FIRST.1, SPAN_FIRST.2).expect("valid date")
}

fn span_days() -> usize {
    let last = NaiveDate::from_ymd_opt(SPAN_LAST.0, SPAN_LAST.1, SPAN_LAST.2).expect("valid date");
    (last - span_first()).num_days() as usize + 1
}

fn draw_features(rng: &mut ChaCha8Rng, k: usize) -> Vec<f64> {
    (0..k).map(|_| rng.sample(StandardNormal)).collect()
}

fn random_minute_of(rng: &mut ChaCha8Rng, day: NaiveDate) -> DateTime<Utc> {
    let minute = rng.gen_range(0..24 * 60);
    day.and_hms_opt(minute / 60, minute % 60, 0)
        .expect("valid time")
        .and_utc()
}

fn random_point(rng: &mut ChaCha8Rng) -> (f64, f64) {
    let spec = GridSpec::canonical();
    (
        rng.gen_range(spec.lat_min..spec.lat_max),
        rng.gen_range(spec.lon_min..spec.lon_max),
    )
}

/// Draw features until the Bernoulli label comes out as `wanted`.
/// Returns the accepted features and their true probability.
fn draw_conditioned(
    config: &SynthConfig,
    rng: &mut ChaCha8Rng,
    wanted: bool,
) -> Result<(Vec<f64>, f64)> {
    for _ in 0..MAX_REJECTION_DRAWS {
        let x = draw_features(rng, config.coefficients.len());
        let p = config.true_probability(&x);
        if rng.gen_bool(p) == wanted {
            return Ok((x, p));
        }
    }
    Err(Error::InvalidParams {
        reason: format!(
            "ground truth makes label={} too rare to sample",
            if wanted { "UL" } else { "no-UL" }
        ),
    })
}

fn sort_rows_with_probs(mut rows: Vec<(Sample, f64)>) -> (Vec<Sample>, Vec<f64>) {
    rows.sort_by_key(|(s, _)| s.timestamp);
    rows.into_iter().unzip()
}

/// Unconditioned draws: iid standard-normal features, Bernoulli labels.
///
/// The returned probabilities are the exact sigmoid values behind each
/// label, so empirical label frequency converges to their mean.
pub fn generate_samples(config: &SynthConfig, n_rows: usize) -> Result<(Dataset, Vec<f64>)> {
    config.validate()?;
    if n_rows == 0 {
        return Err(Error::TooFewRows { n: 0, min: 1 });
    }
    let mut rng = stream_rng(derive_seed(config.seed, purpose::SYNTH), 3);
    let days = span_days();
    let mut rows = Vec::with_capacity(n_rows);
    for _ in 0..n_rows {
        let x = draw_features(&mut rng, config.coefficients.len());
        let p = config.true_probability(&x);
        let label = if rng.gen_bool(p) { Label::Ul } else { Label::NoUl };
        let day = span_first() + chrono::TimeDelta::days(rng.gen_range(0..days) as i64);
        let timestamp = random_minute_of(&mut rng, day);
        let (lat, lon) = random_point(&mut rng);
        rows.push((
            Sample {
                features: x,
                timestamp,
                lat,
                lon,
                label,
                source: Source::Synthetic,
                ul_subtype: None,
            },
            p,
        ));
    }
    let (samples, probs) = sort_rows_with_probs(rows);
    Ok((Dataset::from_rows(FeatureSchema::canonical(), samples)?, probs))
}

/// Tower-regime event set: exactly `n_event_days` distinct UTC days, each
/// with 1–3 UL rows at one of the two tower sites, minute-stamped.
///
/// Feature vectors are rejection-sampled conditional on a positive label,
/// so they follow the ground truth's class-conditional distribution.
pub fn generate_tower_dataset(config: &SynthConfig) -> Result<(Dataset, Vec<f64>)> {
    config.validate()?;
    let mut rng = stream_rng(derive_seed(config.seed, purpose::SYNTH), 0);
    let day_indices = rand::seq::index::sample(&mut rng, span_days(), config.n_event_days);
    let mut days: Vec<usize> = day_indices.into_iter().collect();
    days.sort_unstable();
    let mut rows = Vec::new();
    for di in days {
        let day = span_first() + chrono::TimeDelta::days(di as i64);
        let n_events = rng.gen_range(1..=3);
        for _ in 0..n_events {
            let (features, p) = draw_conditioned(config, &mut rng, true)?;
            let (source, lat, lon) = TOWER_SITES[rng.gen_range(0..TOWER_SITES.len())];
            let ul_subtype = Some(if rng.gen_bool(0.7) {
                UlSubtype::LlsDetectable
            } else {
                UlSubtype::LlsNonDetectable
            });
            rows.push((
                Sample {
                    features,
                    timestamp: random_minute_of(&mut rng, day),
                    lat,
                    lon,
                    label: Label::Ul,
                    source,
                    ul_subtype,
                },
                p,
            ));
        }
    }
    let (samples, probs) = sort_rows_with_probs(rows);
    let data = Dataset::from_rows(FeatureSchema::canonical(), samples)?;
    debug_assert_eq!(data.event_days().len(), config.n_event_days);
    Ok((data, probs))
}

/// Pool of no-UL rows spread uniformly over the timestamp span, feature
/// vectors rejection-sampled conditional on a negative label.
pub fn generate_negative_pool(config: &SynthConfig, n_rows: usize) -> Result<(Dataset, Vec<f64>)> {
    config.validate()?;
    if n_rows == 0 {
        return Err(Error::TooFewRows { n: 0, min: 1 });
    }
    let mut rng = stream_rng(derive_seed(config.seed, purpose::SYNTH), 1);
    let days = span_days();
    let mut rows = Vec::with_capacity(n_rows);
    for _ in 0..n_rows {
        let (features, p) = draw_conditioned(config, &mut rng, false)?;
        let day = span_first() + chrono::TimeDelta::days(rng.gen_range(0..days) as i64);
        let timestamp = random_minute_of(&mut rng, day);
        let (lat, lon) = random_point(&mut rng);
        rows.push((
            Sample {
                features,
                timestamp,
                lat,
                lon,
                label: Label::NoUl,
                source: Source::Synthetic,
                ul_subtype: None,
            },
            p,
        ));
    }
    let (samples, probs) = sort_rows_with_probs(rows);
    Ok((Dataset::from_rows(FeatureSchema::canonical(), samples)?, probs))
}

/// Pattern logit at a node, before the intercept is added back.
fn pattern_logit(pattern: SpatialPattern, spec: &GridSpec, lat: f64, lon: f64) -> f64 {
    let a = PATTERN_LOGIT_AMPLITUDE;
    match pattern {
        SpatialPattern::Uniform => 0.0,
        SpatialPattern::WestGradient => {
            // saturating profile, plus a small linear term so the logit is
            // strictly decreasing even where tanh has flattened out
            let mid = (spec.lon_min + spec.lon_max) / 2.0;
            let delta = mid - lon;
            let k = 48.0 / (spec.lon_max - spec.lon_min);
            let eps = 0.01 * a / (spec.lon_max - spec.lon_min);
            a * (k * delta).tanh() + eps * delta
        }
        SpatialPattern::FrontalBand => {
            let (lo, hi) = frontal_band_node_lats(spec);
            if (lo..=hi).contains(&lat) {
                a
            } else {
                -a
            }
        }
    }
}

/// Node-latitude bounds of the frontal band: the middle third of the
/// latitude range, snapped to grid nodes.
pub fn frontal_band_node_lats(spec: &GridSpec) -> (f64, f64) {
    let range = spec.lat_max - spec.lat_min;
    let snap = |lat: f64| {
        spec.lat_min + ((lat - spec.lat_min) / spec.step).round() * spec.step
    };
    (
        snap(spec.lat_min + range / 3.0),
        snap(spec.lat_max - range / 3.0),
    )
}

/// Smooth random surface: a short cosine series with random frequencies
/// and phases. Deterministic for a fixed generator state.
fn noise_surface(rng: &mut ChaCha8Rng, spec: &GridSpec) -> Array2<f64> {
    let (nr, nc) = spec.node_shape();
    let terms: Vec<(f64, f64, f64, f64)> = (0..3)
        .map(|_| {
            (
                rng.gen_range(0.3..1.0),
                rng.gen_range(1..4) as f64,
                rng.gen_range(1..4) as f64,
                rng.gen_range(0.0..std::f64::consts::TAU),
            )
        })
        .collect();
    Array2::from_shape_fn((nr, nc), |(r, c)| {
        let u = r as f64 / (nr - 1) as f64;
        let v = c as f64 / (nc - 1) as f64;
        terms
            .iter()
            .map(|(amp, p, q, phi)| amp * (std::f64::consts::TAU * (p * u + q * v) + phi).cos())
            .sum()
    })
}

/// Gridded fields whose implied probability surface follows the configured
/// pattern, plus that surface itself (per hour, per cell, row-major).
///
/// Variables with nonzero weight get static fields that reconstruct the
/// pattern logit through w·x + b; zero-weight variables get smooth random
/// noise redrawn every hour. The returned truth is evaluated at cell
/// centers, the same representative points grid diagnosis uses.
pub fn generate_grid_fields(
    config: &SynthConfig,
    spec: GridSpec,
    hours: &[DateTime<Utc>],
) -> Result<(FieldSet, Vec<Vec<f64>>)> {
    config.validate()?;
    if hours.is_empty() {
        return Err(Error::InvalidParams {
            reason: "no hours requested".into(),
        });
    }
    let schema = FeatureSchema::canonical();
    let mut rng = stream_rng(derive_seed(config.seed, purpose::SYNTH), 2);
    let (nr, nc) = spec.node_shape();
    let weight_sq: f64 = config.coefficients.iter().map(|w| w * w).sum();

    // static pattern logit at nodes, intercept excluded
    let logit_nodes = Array2::from_shape_fn((nr, nc), |(r, c)| {
        pattern_logit(config.spatial_pattern, &spec, spec.node_lat(r), spec.node_lon(c))
    });

    let fields: Vec<GridField> = schema
        .names()
        .enumerate()
        .map(|(j, name)| {
            let w = config.coefficients[j];
            let values: Vec<Array2<f64>> = if w != 0.0 {
                let field = logit_nodes.mapv(|s| s * w / weight_sq);
                hours.iter().map(|_| field.clone()).collect()
            } else {
                hours.iter().map(|_| noise_surface(&mut rng, &spec)).collect()
            };
            GridField::new(spec, name.to_string(), hours.to_vec(), values)
        })
        .collect::<Result<_>>()?;

    // truth at cell centers: bilinear there is the mean of the 4 corners
    let mut cell_truth = Vec::with_capacity(spec.n_cells());
    for row in 0..spec.n_rows() {
        for col in 0..spec.n_cols() {
            let s = (logit_nodes[(row, col)]
                + logit_nodes[(row, col + 1)]
                + logit_nodes[(row + 1, col)]
                + logit_nodes[(row + 1, col + 1)])
                / 4.0;
            cell_truth.push(sigmoid(s + config.intercept));
        }
    }
    let truths = hours.iter().map(|_| cell_truth.clone()).collect();
    Ok((FieldSet::new(fields)?, truths))
}
