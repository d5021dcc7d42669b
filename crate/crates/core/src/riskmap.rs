//! Grid diagnosis and threshold-exceedance risk maps.
//!
//! An ensemble is evaluated at every cell center for a list of hours,
//! giving one probability raster per hour; counting how often each cell's
//! median probability exceeds a threshold yields a risk map.

use std::collections::BTreeMap;
use std::path::Path;

use chrono::{DateTime, NaiveDate, Utc};
use rayon::prelude::*;
use serde_json::json;

use crate::dataset::{format_timestamp, parse_timestamp};
use crate::error::{Error, Result};
use crate::forest::EnsembleModel;
use crate::grid::{FieldSet, GridSpec};
use crate::matching::TurbineSet;

/// Default probability threshold for exceedance counting.
pub const DEFAULT_THRESHOLD: f64 = 0.5;

/// Per-cell median ensemble probability at one hour. Cells are stored
/// row-major (south to north, west to east).
#[derive(Clone, Debug, PartialEq)]
pub struct ProbRaster {
    spec: GridSpec,
    time: DateTime<Utc>,
    median_prob: Vec<f64>,
    no_turbine_mask: Option<Vec<bool>>,
}

impl ProbRaster {
    pub fn new(spec: GridSpec, time: DateTime<Utc>, median_prob: Vec<f64>) -> Result<ProbRaster> {
        if median_prob.len() != spec.n_cells() {
            return Err(Error::LengthMismatch {
                expected: spec.n_cells(),
                found: median_prob.len(),
            });
        }
        for &p in &median_prob {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidParams {
                    reason: format!("probability {p} outside [0, 1]"),
                });
            }
        }
        Ok(ProbRaster {
            spec,
            time,
            median_prob,
            no_turbine_mask: None,
        })
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn time(&self) -> DateTime<Utc> {
        self.time
    }

    pub fn values(&self) -> &[f64] {
        &self.median_prob
    }

    pub fn value(&self, row: usize, col: usize) -> f64 {
        self.median_prob[row * self.spec.n_cols() + col]
    }

    pub fn no_turbine_mask(&self) -> Option<&[bool]> {
        self.no_turbine_mask.as_deref()
    }

    /// Copy of the raster with cells lacking turbines flagged. The
    /// probabilities themselves are untouched: the diagnosis does not
    /// depend on turbine locations, only its presentation does.
    pub fn mask_no_turbine_cells(&self, turbines: &TurbineSet) -> ProbRaster {
        ProbRaster {
            no_turbine_mask: Some(no_turbine_mask(&self.spec, turbines)),
            ..self.clone()
        }
    }
}

/// Per-cell flag, row-major: true where the cell contains zero turbines.
pub fn no_turbine_mask(spec: &GridSpec, turbines: &TurbineSet) -> Vec<bool> {
    let mut has = vec![false; spec.n_cells()];
    for t in turbines.turbines() {
        if let Ok((row, col)) = spec.cell_of(t.lat, t.lon) {
            has[row * spec.n_cols() + col] = true;
        }
    }
    has.into_iter().map(|h| !h).collect()
}

/// Evaluate the ensemble at every cell center for hour `t`.
///
/// Feature vectors are interpolated from the gridded fields at each cell
/// center; the raster stores the median probability across models. Cells
/// are independent work units, evaluated in parallel with order-stable
/// collection, so the result does not depend on the worker count.
pub fn diagnose_grid_hour(
    ensemble: &EnsembleModel,
    fields: &FieldSet,
    t: DateTime<Utc>,
) -> Result<ProbRaster> {
    let spec = *fields.spec();
    let schema = &ensemble.models[0].schema;
    let n_cols = spec.n_cols();
    let median_prob: Vec<f64> = (0..spec.n_cells())
        .into_par_iter()
        .map(|idx| {
            let (lat, lon) = spec.cell_center(idx / n_cols, idx % n_cols);
            let x = fields.interp_to_point(schema, lat, lon, t)?;
            ensemble.predict_median(&x)
        })
        .collect::<Result<_>>()?;
    ProbRaster::new(spec, t, median_prob)
}

/// Threshold-exceedance summary over a set of hourly rasters.
#[derive(Clone, Debug, PartialEq)]
pub struct RiskMap {
    pub spec: GridSpec,
    pub threshold: f64,
    pub hours_total: u32,
    /// Row-major per-cell count of hours with median probability
    /// strictly above the threshold.
    pub exceedance_count: Vec<u32>,
    /// `exceedance_count / hours_total`, row-major.
    pub relative_proportion: Vec<f64>,
    /// Presentation flag: cells without any turbine. Counts and
    /// proportions are unaffected.
    pub no_turbine_mask: Option<Vec<bool>>,
}

/// Count, per cell, the hours whose median probability strictly exceeds
/// `threshold`. Rasters must share one grid spec and be in strictly
/// increasing time order.
pub fn exceedance_counts(rasters: &[ProbRaster], threshold: f64) -> Result<RiskMap> {
    let first = rasters.first().ok_or(Error::EmptyRasterSet)?;
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::InvalidThreshold { value: threshold });
    }
    let spec = first.spec;
    let mut exceedance_count = vec![0u32; spec.n_cells()];
    for (i, raster) in rasters.iter().enumerate() {
        if raster.spec != spec {
            return Err(Error::SpecMismatch);
        }
        if i > 0 && raster.time <= rasters[i - 1].time {
            return Err(Error::InvalidParams {
                reason: format!("raster times not strictly increasing at {}", raster.time),
            });
        }
        for (count, &p) in exceedance_count.iter_mut().zip(&raster.median_prob) {
            if p > threshold {
                *count += 1;
            }
        }
    }
    let hours_total = rasters.len() as u32;
    let relative_proportion = exceedance_count
        .iter()
        .map(|&c| c as f64 / hours_total as f64)
        .collect();
    Ok(RiskMap {
        spec,
        threshold,
        hours_total,
        exceedance_count,
        relative_proportion,
        no_turbine_mask: None,
    })
}

impl RiskMap {
    pub fn count(&self, row: usize, col: usize) -> u32 {
        self.exceedance_count[row * self.spec.n_cols() + col]
    }

    pub fn proportion(&self, row: usize, col: usize) -> f64 {
        self.relative_proportion[row * self.spec.n_cols() + col]
    }

    /// Copy with cells lacking turbines flagged; all numbers unchanged.
    pub fn mask_no_turbine_cells(&self, turbines: &TurbineSet) -> RiskMap {
        RiskMap {
            no_turbine_mask: Some(no_turbine_mask(&self.spec, turbines)),
            ..self.clone()
        }
    }

    /// CSV document: one metadata comment line, then one row per cell in
    /// row-major order. Parsing the output reproduces the map exactly.
    pub fn to_csv_string(&self) -> String {
        let s = &self.spec;
        let mut out = format!(
            "# riskmap lat_min={} lat_max={} lon_min={} lon_max={} step={} threshold={} hours_total={}\n",
            s.lat_min, s.lat_max, s.lon_min, s.lon_max, s.step, self.threshold, self.hours_total
        );
        out.push_str(match self.no_turbine_mask {
            Some(_) => "cell_lat_min,cell_lon_min,count,proportion,no_turbines\n",
            None => "cell_lat_min,cell_lon_min,count,proportion\n",
        });
        for row in 0..s.n_rows() {
            for col in 0..s.n_cols() {
                let (lat0, lon0) = s.cell_origin(row, col);
                let i = row * s.n_cols() + col;
                out.push_str(&format!(
                    "{},{},{},{}",
                    lat0, lon0, self.exceedance_count[i], self.relative_proportion[i]
                ));
                if let Some(mask) = &self.no_turbine_mask {
                    out.push_str(if mask[i] { ",1" } else { ",0" });
                }
                out.push('\n');
            }
        }
        out
    }

    pub fn from_csv_str(text: &str) -> Result<RiskMap> {
        let mut lines = text.lines();
        let meta = parse_metadata(lines.next().unwrap_or(""), "riskmap")?;
        let spec = spec_from_metadata(&meta)?;
        let threshold: f64 = metadata_value(&meta, "threshold")?;
        let hours_total: u32 = metadata_value(&meta, "hours_total")?;
        let header = lines.next().unwrap_or("");
        let with_mask = match header {
            "cell_lat_min,cell_lon_min,count,proportion" => false,
            "cell_lat_min,cell_lon_min,count,proportion,no_turbines" => true,
            other => {
                return Err(Error::SchemaMismatch {
                    expected: "cell_lat_min,cell_lon_min,count,proportion[,no_turbines]".into(),
                    found: other.into(),
                })
            }
        };
        let mut exceedance_count = Vec::with_capacity(spec.n_cells());
        let mut relative_proportion = Vec::with_capacity(spec.n_cells());
        let mut mask = with_mask.then(Vec::new);
        for (i, line) in lines.enumerate() {
            let bad = |column: &str, value: &str| Error::BadValue {
                row: i + 1,
                column: column.into(),
                value: value.into(),
            };
            let parts: Vec<&str> = line.split(',').collect();
            if parts.len() != if with_mask { 5 } else { 4 } {
                return Err(bad("row", line));
            }
            let lat0: f64 = parts[0].parse().map_err(|_| bad("cell_lat_min", parts[0]))?;
            let lon0: f64 = parts[1].parse().map_err(|_| bad("cell_lon_min", parts[1]))?;
            let expected = spec.cell_origin(i / spec.n_cols(), i % spec.n_cols());
            if (lat0, lon0) != expected {
                return Err(bad("cell order", line));
            }
            let count: u32 = parts[2].parse().map_err(|_| bad("count", parts[2]))?;
            if count > hours_total {
                return Err(bad("count", parts[2]));
            }
            let prop: f64 = parts[3].parse().map_err(|_| bad("proportion", parts[3]))?;
            if prop != count as f64 / hours_total as f64 {
                return Err(bad("proportion", parts[3]));
            }
            exceedance_count.push(count);
            relative_proportion.push(prop);
            if let Some(mask) = &mut mask {
                mask.push(match parts[4] {
                    "0" => false,
                    "1" => true,
                    other => return Err(bad("no_turbines", other)),
                });
            }
        }
        if exceedance_count.len() != spec.n_cells() {
            return Err(Error::LengthMismatch {
                expected: spec.n_cells(),
                found: exceedance_count.len(),
            });
        }
        Ok(RiskMap {
            spec,
            threshold,
            hours_total,
            exceedance_count,
            relative_proportion,
            no_turbine_mask: mask,
        })
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv_string())?;
        Ok(())
    }

    pub fn load_csv(path: &Path) -> Result<RiskMap> {
        let text = std::fs::read_to_string(path)?;
        if text.is_empty() {
            return Err(Error::EmptyFile { path: path.into() });
        }
        RiskMap::from_csv_str(&text)
    }

    /// GeoJSON FeatureCollection with one polygon per cell, row-major.
    /// Key order and float formatting are deterministic, so equal maps
    /// serialize to identical bytes.
    pub fn to_geojson_string(&self) -> String {
        let s = &self.spec;
        let mut features = Vec::with_capacity(s.n_cells());
        for row in 0..s.n_rows() {
            for col in 0..s.n_cols() {
                let (lat0, lon0) = s.cell_origin(row, col);
                let (lat1, lon1) = (lat0 + s.step, lon0 + s.step);
                let i = row * s.n_cols() + col;
                let mut properties = json!({
                    "row": row,
                    "col": col,
                    "count": self.exceedance_count[i],
                    "proportion": self.relative_proportion[i],
                });
                if let Some(mask) = &self.no_turbine_mask {
                    properties["no_turbines"] = json!(mask[i]);
                }
                features.push(json!({
                    "type": "Feature",
                    "geometry": {
                        "type": "Polygon",
                        "coordinates": [[
                            [lon0, lat0],
                            [lon1, lat0],
                            [lon1, lat1],
                            [lon0, lat1],
                            [lon0, lat0],
                        ]],
                    },
                    "properties": properties,
                }));
            }
        }
        let doc = json!({
            "type": "FeatureCollection",
            "threshold": self.threshold,
            "hours_total": self.hours_total,
            "features": features,
        });
        doc.to_string()
    }

    pub fn save_geojson(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_geojson_string())?;
        Ok(())
    }

    /// Plain-text summary: the maximum cell (first in row-major order on
    /// ties) and the domain mean proportion.
    pub fn summary_text(&self) -> String {
        let s = &self.spec;
        let (mut max_i, mut max_c) = (0usize, self.exceedance_count[0]);
        for (i, &c) in self.exceedance_count.iter().enumerate() {
            if c > max_c {
                (max_i, max_c) = (i, c);
            }
        }
        let (lat0, lon0) = s.cell_origin(max_i / s.n_cols(), max_i % s.n_cols());
        let mean = self.relative_proportion.iter().sum::<f64>() / s.n_cells() as f64;
        let mut out = format!(
            "threshold {} over {} hours on {} cells\n\
             max cell: lat [{}, {}), lon [{}, {}): {} hours (proportion {})\n\
             domain mean proportion: {}\n",
            self.threshold,
            self.hours_total,
            s.n_cells(),
            lat0,
            lat0 + s.step,
            lon0,
            lon0 + s.step,
            max_c,
            self.relative_proportion[max_i],
            mean
        );
        if let Some(mask) = &self.no_turbine_mask {
            let n = mask.iter().filter(|&&m| m).count();
            out.push_str(&format!("cells without turbines: {} of {}\n", n, s.n_cells()));
        }
        out
    }
}

fn parse_metadata(line: &str, kind: &str) -> Result<BTreeMap<String, String>> {
    let prefix = format!("# {kind} ");
    let rest = line.strip_prefix(&prefix).ok_or_else(|| Error::SchemaMismatch {
        expected: format!("{prefix}key=value metadata line"),
        found: line.into(),
    })?;
    let mut map = BTreeMap::new();
    for pair in rest.split_whitespace() {
        let (k, v) = pair.split_once('=').ok_or_else(|| Error::BadValue {
            row: 0,
            column: "metadata".into(),
            value: pair.into(),
        })?;
        map.insert(k.to_string(), v.to_string());
    }
    Ok(map)
}

fn metadata_value<T: std::str::FromStr>(map: &BTreeMap<String, String>, key: &str) -> Result<T> {
    map.get(key)
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| Error::BadValue {
            row: 0,
            column: "metadata".into(),
            value: key.into(),
        })
}

fn spec_from_metadata(map: &BTreeMap<String, String>) -> Result<GridSpec> {
    GridSpec::new(
        metadata_value(map, "lat_min")?,
        metadata_value(map, "lat_max")?,
        metadata_value(map, "lon_min")?,
        metadata_value(map, "lon_max")?,
        metadata_value(map, "step")?,
    )
}

/// CSV document for a time-ordered raster sequence: metadata comment line,
/// then `time,row,col,median_prob` rows, time-major then row-major.
pub fn rasters_to_csv(rasters: &[ProbRaster]) -> Result<String> {
    let first = rasters.first().ok_or(Error::EmptyRasterSet)?;
    let s = first.spec;
    let mut out = format!(
        "# rasters lat_min={} lat_max={} lon_min={} lon_max={} step={}\n",
        s.lat_min, s.lat_max, s.lon_min, s.lon_max, s.step
    );
    out.push_str("time,row,col,median_prob\n");
    for raster in rasters {
        if raster.spec != s {
            return Err(Error::SpecMismatch);
        }
        for row in 0..s.n_rows() {
            for col in 0..s.n_cols() {
                out.push_str(&format!(
                    "{},{},{},{}\n",
                    format_timestamp(raster.time),
                    row,
                    col,
                    raster.value(row, col)
                ));
            }
        }
    }
    Ok(out)
}

pub fn rasters_from_csv_str(text: &str) -> Result<Vec<ProbRaster>> {
    let mut lines = text.lines();
    let meta = parse_metadata(lines.next().unwrap_or(""), "rasters")?;
    let spec = spec_from_metadata(&meta)?;
    let header = lines.next().unwrap_or("");
    if header != "time,row,col,median_prob" {
        return Err(Error::SchemaMismatch {
            expected: "time,row,col,median_prob".into(),
            found: header.into(),
        });
    }
    let mut rasters: Vec<ProbRaster> = Vec::new();
    let mut current: Option<(DateTime<Utc>, Vec<f64>)> = None;
    let flush = |cur: Option<(DateTime<Utc>, Vec<f64>)>, rasters: &mut Vec<ProbRaster>| {
        if let Some((t, vals)) = cur {
            rasters.push(ProbRaster::new(spec, t, vals)?);
        }
        Ok::<(), Error>(())
    };
    for (i, line) in lines.enumerate() {
        let bad = |column: &str, value: &str| Error::BadValue {
            row: i + 1,
            column: column.into(),
            value: value.into(),
        };
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() != 4 {
            return Err(bad("row", line));
        }
        let t = parse_timestamp(parts[0]).ok_or_else(|| bad("time", parts[0]))?;
        let row: usize = parts[1].parse().map_err(|_| bad("row", parts[1]))?;
        let col: usize = parts[2].parse().map_err(|_| bad("col", parts[2]))?;
        let p: f64 = parts[3].parse().map_err(|_| bad("median_prob", parts[3]))?;
        let start_new = match &current {
            None => true,
            Some((t0, _)) if *t0 != t => true,
            _ => false,
        };
        if start_new {
            flush(current.take(), &mut rasters)?;
            current = Some((t, Vec::with_capacity(spec.n_cells())));
        }
        let (_, vals) = current.as_mut().expect("current raster set above");
        if row * spec.n_cols() + col != vals.len() {
            return Err(bad("cell order", line));
        }
        vals.push(p);
    }
    flush(current.take(), &mut rasters)?;
    if rasters.is_empty() {
        return Err(Error::EmptyRasterSet);
    }
    for w in rasters.windows(2) {
        if w[0].time >= w[1].time {
            return Err(Error::InvalidParams {
                reason: format!("raster times not strictly increasing at {}", w[1].time),
            });
        }
    }
    Ok(rasters)
}

pub fn save_rasters_csv(rasters: &[ProbRaster], path: &Path) -> Result<()> {
    std::fs::write(path, rasters_to_csv(rasters)?)?;
    Ok(())
}

pub fn load_rasters_csv(path: &Path) -> Result<Vec<ProbRaster>> {
    let text = std::fs::read_to_string(path)?;
    if text.is_empty() {
        return Err(Error::EmptyFile { path: path.into() });
    }
    rasters_from_csv_str(&text)
}

/// Every hour 00–23 of every day from `first` through `last`, inclusive.
pub fn whole_day_hours(first: NaiveDate, last: NaiveDate) -> Vec<DateTime<Utc>> {
    let mut out = Vec::new();
    let mut day = first;
    while day <= last {
        for h in 0..24 {
            out.push(
                day.and_hms_opt(h, 0, 0)
                    .expect("0..24 hour is valid")
                    .and_utc(),
            );
        }
        day = day.succ_opt().expect("date range is bounded");
    }
    out
}

/// The three cold-season blocks used for the canonical risk map, hourly:
/// 2018-10-01 through 2019-05-01, 2019-10-01 through 2020-05-01, and
/// 2020-10-01 through 2021-01-01, all days inclusive — 520 days, 12480
/// hours in total.
pub fn canonical_cold_season_hours() -> Vec<DateTime<Utc>> {
    let d = |y, m, day| NaiveDate::from_ymd_opt(y, m, day).expect("valid date");
    let mut out = Vec::with_capacity(12480);
    out.extend(whole_day_hours(d(2018, 10, 1), d(2019, 5, 1)));
    out.extend(whole_day_hours(d(2019, 10, 1), d(2020, 5, 1)));
    out.extend(whole_day_hours(d(2020, 10, 1), d(2021, 1, 1)));
    out
}
