//! Strike-to-turbine radius matching and per-cell flash-hour counting.

use std::collections::{BTreeSet, HashMap};
use std::path::Path;

use chrono::{DateTime, DurationRound, TimeDelta, Utc};
use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::dataset::{format_timestamp, parse_timestamp};
use crate::error::{Error, Result};
use crate::grid::GridSpec;

/// Default match radius: 0.003° ≈ 300 m at these latitudes.
pub const DEFAULT_MATCH_RADIUS_DEG: f64 = 0.003;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Turbine {
    pub id: String,
    pub lat: f64,
    pub lon: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TurbineSet {
    turbines: Vec<Turbine>,
}

impl TurbineSet {
    pub fn new(turbines: Vec<Turbine>) -> Result<TurbineSet> {
        let mut seen = BTreeSet::new();
        for t in &turbines {
            if !t.lat.is_finite() || !t.lon.is_finite() {
                return Err(Error::BadValue {
                    row: 0,
                    column: "lat/lon".into(),
                    value: format!("turbine {} at ({}, {})", t.id, t.lat, t.lon),
                });
            }
            if !seen.insert(t.id.clone()) {
                return Err(Error::DuplicateId { id: t.id.clone() });
            }
        }
        Ok(TurbineSet { turbines })
    }

    pub fn turbines(&self) -> &[Turbine] {
        &self.turbines
    }

    pub fn len(&self) -> usize {
        self.turbines.len()
    }

    pub fn is_empty(&self) -> bool {
        self.turbines.is_empty()
    }

    pub fn load_csv(path: &Path) -> Result<TurbineSet> {
        let bytes = std::fs::read(path)?;
        if bytes.is_empty() {
            return Err(Error::EmptyFile { path: path.into() });
        }
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_reader(bytes.as_slice());
        let headers = rdr.headers()?.clone();
        if headers.iter().collect::<Vec<_>>() != ["id", "lat", "lon"] {
            return Err(Error::SchemaMismatch {
                expected: "id,lat,lon".into(),
                found: headers.iter().collect::<Vec<_>>().join(","),
            });
        }
        let mut turbines = Vec::new();
        for (i, record) in rdr.records().enumerate() {
            let record = record?;
            let bad = |column: &str, value: &str| Error::BadValue {
                row: i + 1,
                column: column.into(),
                value: value.into(),
            };
            turbines.push(Turbine {
                id: record[0].to_string(),
                lat: record[1].parse().map_err(|_| bad("lat", &record[1]))?,
                lon: record[2].parse().map_err(|_| bad("lon", &record[2]))?,
            });
        }
        TurbineSet::new(turbines)
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("id,lat,lon\n");
        for t in &self.turbines {
            out.push_str(&format!("{},{},{}\n", t.id, t.lat, t.lon));
        }
        out
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv_string())?;
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StrikeEvent {
    pub timestamp: DateTime<Utc>,
    pub lat: f64,
    pub lon: f64,
}

/// A strike paired with a turbine inside the match radius. `distance_deg`
/// is in degrees under the chosen distance mode.
#[derive(Clone, Debug, PartialEq)]
pub struct MatchedEvent {
    pub strike: StrikeEvent,
    pub turbine_id: String,
    pub distance_deg: f64,
}

/// Distance convention for the match radius.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum DistanceMode {
    /// Plain Euclidean distance in degree space — the radius describes a
    /// circle in (lat, lon) coordinates, which on the ground is an
    /// ellipse squashed east–west at these latitudes.
    #[default]
    DegreeEuclidean,
    /// Great-circle central angle, expressed in degrees of arc.
    GreatCircle,
}

fn degree_euclidean(a_lat: f64, a_lon: f64, b_lat: f64, b_lon: f64) -> f64 {
    let dlat = a_lat - b_lat;
    let dlon = a_lon - b_lon;
    (dlat * dlat + dlon * dlon).sqrt()
}

/// Central angle between two points in degrees (haversine form).
fn great_circle_deg(a_lat: f64, a_lon: f64, b_lat: f64, b_lon: f64) -> f64 {
    let (phi1, phi2) = (a_lat.to_radians(), b_lat.to_radians());
    let dphi = (b_lat - a_lat).to_radians();
    let dlambda = (b_lon - a_lon).to_radians();
    let s = (dphi / 2.0).sin().powi(2)
        + phi1.cos() * phi2.cos() * (dlambda / 2.0).sin().powi(2);
    (2.0 * s.sqrt().asin()).to_degrees()
}

pub fn distance_deg(mode: DistanceMode, a_lat: f64, a_lon: f64, b_lat: f64, b_lon: f64) -> f64 {
    match mode {
        DistanceMode::DegreeEuclidean => degree_euclidean(a_lat, a_lon, b_lat, b_lon),
        DistanceMode::GreatCircle => great_circle_deg(a_lat, a_lon, b_lat, b_lon),
    }
}

/// How many lon buckets east/west of a strike a great-circle match can sit.
///
/// An arc of `radius_deg` spans up to `radius/cos(lat)` degrees of
/// longitude, so the usual ±1 neighborhood is too narrow away from the
/// equator. Both endpoint latitudes stay within `radius_deg` of the
/// strike's, giving the cosine bound used here. Assumes |Δlon| ≤ 180°.
fn lon_bucket_span(strike_lat: f64, radius_deg: f64) -> i64 {
    let lat_reach = (strike_lat.abs() + radius_deg).min(90.0);
    let cos_bound = lat_reach.to_radians().cos();
    let arg = (radius_deg.to_radians() / 2.0).sin() / cos_bound;
    if arg.is_nan() || arg >= 1.0 {
        // polar strike: the arc can cross every longitude
        return (360.0 / radius_deg).ceil() as i64;
    }
    let dlon_max_deg = (2.0 * arg.asin()).to_degrees();
    ((dlon_max_deg / radius_deg).ceil() as i64).max(1)
}

/// All (strike, turbine) pairs within `radius_deg` (inclusive).
///
/// Turbines are indexed into square buckets of side `radius_deg`, so each
/// strike inspects a ±1 row neighborhood and, for great-circle distance, a
/// column neighborhood widened by `1/cos(lat)`. Output order: strike
/// order, then turbine id.
pub fn match_strikes_to_turbines(
    strikes: &[StrikeEvent],
    turbines: &TurbineSet,
    radius_deg: f64,
    mode: DistanceMode,
) -> Result<Vec<MatchedEvent>> {
    if !radius_deg.is_finite() || radius_deg <= 0.0 {
        return Err(Error::InvalidParams {
            reason: format!("match radius must be positive, got {radius_deg}"),
        });
    }
    let bucket = |v: f64| (v / radius_deg).floor() as i64;
    let mut index: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
    let mut lon_bucket_range: Option<(i64, i64)> = None;
    for (i, t) in turbines.turbines().iter().enumerate() {
        let bl = bucket(t.lon);
        index.entry((bucket(t.lat), bl)).or_default().push(i);
        lon_bucket_range = Some(match lon_bucket_range {
            None => (bl, bl),
            Some((lo, hi)) => (lo.min(bl), hi.max(bl)),
        });
    }

    let mut out = Vec::new();
    for strike in strikes {
        let Some((lon_lo, lon_hi)) = lon_bucket_range else {
            break;
        };
        let (br, bc) = (bucket(strike.lat), bucket(strike.lon));
        let col_span = match mode {
            DistanceMode::DegreeEuclidean => 1,
            DistanceMode::GreatCircle => lon_bucket_span(strike.lat, radius_deg),
        };
        let mut hits: Vec<(String, f64)> = Vec::new();
        for dr in -1..=1 {
            for dc in (-col_span).max(lon_lo - bc)..=col_span.min(lon_hi - bc) {
                let Some(cands) = index.get(&(br + dr, bc + dc)) else {
                    continue;
                };
                for &i in cands {
                    let t = &turbines.turbines()[i];
                    let d = distance_deg(mode, strike.lat, strike.lon, t.lat, t.lon);
                    if d <= radius_deg {
                        hits.push((t.id.clone(), d));
                    }
                }
            }
        }
        hits.sort_by(|a, b| a.0.cmp(&b.0));
        out.extend(hits.into_iter().map(|(turbine_id, distance_deg)| MatchedEvent {
            strike: *strike,
            turbine_id,
            distance_deg,
        }));
    }
    Ok(out)
}

/// Per grid cell, the number of distinct UTC hours containing at least one
/// matched strike. Matches outside the domain are ignored.
pub fn flash_hours_per_cell(matches: &[MatchedEvent], spec: &GridSpec) -> Array2<u32> {
    let mut seen: BTreeSet<(usize, usize, DateTime<Utc>)> = BTreeSet::new();
    for m in matches {
        if let Ok((row, col)) = spec.cell_of(m.strike.lat, m.strike.lon) {
            let hour = m
                .strike
                .timestamp
                .duration_trunc(TimeDelta::hours(1))
                .expect("hour truncation cannot fail");
            seen.insert((row, col, hour));
        }
    }
    let mut counts = Array2::zeros((spec.n_rows(), spec.n_cols()));
    for (row, col, _) in seen {
        counts[(row, col)] += 1;
    }
    counts
}

pub fn load_strikes_csv(path: &Path) -> Result<Vec<StrikeEvent>> {
    let bytes = std::fs::read(path)?;
    if bytes.is_empty() {
        return Err(Error::EmptyFile { path: path.into() });
    }
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(bytes.as_slice());
    let headers = rdr.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != ["timestamp", "lat", "lon"] {
        return Err(Error::SchemaMismatch {
            expected: "timestamp,lat,lon".into(),
            found: headers.iter().collect::<Vec<_>>().join(","),
        });
    }
    let mut strikes = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let record = record?;
        let bad = |column: &str, value: &str| Error::BadValue {
            row: i + 1,
            column: column.into(),
            value: value.into(),
        };
        strikes.push(StrikeEvent {
            timestamp: parse_timestamp(&record[0])
                .ok_or_else(|| bad("timestamp", &record[0]))?,
            lat: record[1].parse().map_err(|_| bad("lat", &record[1]))?,
            lon: record[2].parse().map_err(|_| bad("lon", &record[2]))?,
        });
    }
    Ok(strikes)
}

pub fn save_strikes_csv(strikes: &[StrikeEvent], path: &Path) -> Result<()> {
    let mut out = String::from("timestamp,lat,lon\n");
    for s in strikes {
        out.push_str(&format!(
            "{},{},{}\n",
            format_timestamp(s.timestamp),
            s.lat,
            s.lon
        ));
    }
    std::fs::write(path, out)?;
    Ok(())
}

pub fn matches_to_csv(matches: &[MatchedEvent]) -> String {
    let mut out = String::from("timestamp,strike_lat,strike_lon,turbine_id,distance_deg\n");
    for m in matches {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            format_timestamp(m.strike.timestamp),
            m.strike.lat,
            m.strike.lon,
            m.turbine_id,
            m.distance_deg
        ));
    }
    out
}

pub fn save_matches_csv(matches: &[MatchedEvent], path: &Path) -> Result<()> {
    std::fs::write(path, matches_to_csv(matches))?;
    Ok(())
}
