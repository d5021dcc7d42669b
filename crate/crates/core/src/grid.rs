//! Gridded hourly fields: bilinear spatial + linear temporal interpolation
//! to points, cell indexing, and long-CSV / packed-binary storage.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use chrono::{DateTime, Timelike, Utc};
use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::dataset::{format_timestamp, parse_timestamp};
use crate::error::{Error, Result};
use crate::schema::FeatureSchema;

/// Regular lat/lon grid. Nodes sit at multiples of `step` from the lower
/// left corner; cells are the squares between adjacent nodes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub lat_min: f64,
    pub lat_max: f64,
    pub lon_min: f64,
    pub lon_max: f64,
    pub step: f64,
}

impl GridSpec {
    pub fn new(lat_min: f64, lat_max: f64, lon_min: f64, lon_max: f64, step: f64) -> Result<Self> {
        let fail = |reason: String| Err(Error::InvalidParams { reason });
        if [lat_min, lat_max, lon_min, lon_max, step].iter().any(|v| !v.is_finite()) {
            return fail("grid bounds and step must be finite".into());
        }
        if step <= 0.0 {
            return fail(format!("grid step must be positive, got {step}"));
        }
        if lat_max <= lat_min || lon_max <= lon_min {
            return fail("grid extent must be non-empty".into());
        }
        for (lo, hi, what) in [(lat_min, lat_max, "lat"), (lon_min, lon_max, "lon")] {
            let n = (hi - lo) / step;
            if (n - n.round()).abs() > 1e-6 || n.round() < 1.0 {
                return fail(format!("{what} extent {lo}..{hi} is not a multiple of step {step}"));
            }
        }
        Ok(GridSpec {
            lat_min,
            lat_max,
            lon_min,
            lon_max,
            step,
        })
    }

    /// The study domain: 50–54°N, 6–16°E at 0.25°.
    pub fn canonical() -> GridSpec {
        GridSpec::new(50.0, 54.0, 6.0, 16.0, 0.25).expect("canonical spec is valid")
    }

    /// Cell rows (latitude direction).
    pub fn n_rows(&self) -> usize {
        ((self.lat_max - self.lat_min) / self.step).round() as usize
    }

    /// Cell columns (longitude direction).
    pub fn n_cols(&self) -> usize {
        ((self.lon_max - self.lon_min) / self.step).round() as usize
    }

    pub fn n_cells(&self) -> usize {
        self.n_rows() * self.n_cols()
    }

    pub fn node_shape(&self) -> (usize, usize) {
        (self.n_rows() + 1, self.n_cols() + 1)
    }

    pub fn node_lat(&self, row: usize) -> f64 {
        self.lat_min + row as f64 * self.step
    }

    pub fn node_lon(&self, col: usize) -> f64 {
        self.lon_min + col as f64 * self.step
    }

    pub fn contains(&self, lat: f64, lon: f64) -> bool {
        (self.lat_min..=self.lat_max).contains(&lat) && (self.lon_min..=self.lon_max).contains(&lon)
    }

    /// Cell index of a point: floor from the lower-left corner. Points on
    /// interior edges belong to the higher-index cell; the domain's max
    /// edges belong to the last cell.
    pub fn cell_of(&self, lat: f64, lon: f64) -> Result<(usize, usize)> {
        if !self.contains(lat, lon) {
            return Err(Error::OutOfDomain { lat, lon });
        }
        let row = (((lat - self.lat_min) / self.step).floor() as usize).min(self.n_rows() - 1);
        let col = (((lon - self.lon_min) / self.step).floor() as usize).min(self.n_cols() - 1);
        Ok((row, col))
    }

    pub fn cell_center(&self, row: usize, col: usize) -> (f64, f64) {
        (
            self.lat_min + (row as f64 + 0.5) * self.step,
            self.lon_min + (col as f64 + 0.5) * self.step,
        )
    }

    /// Lower-left corner of a cell.
    pub fn cell_origin(&self, row: usize, col: usize) -> (f64, f64) {
        (
            self.lat_min + row as f64 * self.step,
            self.lon_min + col as f64 * self.step,
        )
    }
}

/// One variable's node values over a sequence of on-the-hour instants.
/// Arrays are lat-major with shape (node rows, node cols).
#[derive(Clone, Debug, PartialEq)]
pub struct GridField {
    spec: GridSpec,
    variable: String,
    times: Vec<DateTime<Utc>>,
    values: Vec<Array2<f64>>,
}

impl GridField {
    pub fn new(
        spec: GridSpec,
        variable: String,
        times: Vec<DateTime<Utc>>,
        values: Vec<Array2<f64>>,
    ) -> Result<GridField> {
        if times.is_empty() {
            return Err(Error::InvalidParams {
                reason: format!("field {variable} has no time steps"),
            });
        }
        if times.len() != values.len() {
            return Err(Error::LengthMismatch {
                expected: times.len(),
                found: values.len(),
            });
        }
        for w in times.windows(2) {
            if w[0] >= w[1] {
                return Err(Error::InvalidParams {
                    reason: format!("field {variable} times are not strictly increasing"),
                });
            }
        }
        for t in &times {
            if t.minute() != 0 || t.second() != 0 || t.nanosecond() != 0 {
                return Err(Error::InvalidParams {
                    reason: format!("field {variable} has off-hour instant {t}"),
                });
            }
        }
        let shape = spec.node_shape();
        for (k, slice) in values.iter().enumerate() {
            if slice.dim() != shape {
                return Err(Error::InvalidParams {
                    reason: format!(
                        "field {variable} slice {k} has shape {:?}, expected {:?}",
                        slice.dim(),
                        shape
                    ),
                });
            }
            if slice.iter().any(|v| !v.is_finite()) {
                return Err(Error::BadValue {
                    row: k,
                    column: variable.clone(),
                    value: "non-finite node value".into(),
                });
            }
        }
        Ok(GridField {
            spec,
            variable,
            times,
            values,
        })
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn variable(&self) -> &str {
        &self.variable
    }

    pub fn times(&self) -> &[DateTime<Utc>] {
        &self.times
    }

    pub fn slice(&self, t_index: usize) -> &Array2<f64> {
        &self.values[t_index]
    }
}

/// Bilinear combination of the four nodes surrounding (lat, lon).
pub fn bilinear_interp(values: &Array2<f64>, spec: &GridSpec, lat: f64, lon: f64) -> Result<f64> {
    if values.dim() != spec.node_shape() {
        return Err(Error::InvalidParams {
            reason: format!(
                "node array shape {:?} does not match spec {:?}",
                values.dim(),
                spec.node_shape()
            ),
        });
    }
    if !spec.contains(lat, lon) {
        return Err(Error::OutOfDomain { lat, lon });
    }
    let r = (((lat - spec.lat_min) / spec.step).floor() as usize).min(spec.n_rows() - 1);
    let c = (((lon - spec.lon_min) / spec.step).floor() as usize).min(spec.n_cols() - 1);
    let u = ((lat - spec.node_lat(r)) / spec.step).clamp(0.0, 1.0);
    let w = ((lon - spec.node_lon(c)) / spec.step).clamp(0.0, 1.0);
    Ok(values[(r, c)] * (1.0 - u) * (1.0 - w)
        + values[(r + 1, c)] * u * (1.0 - w)
        + values[(r, c + 1)] * (1.0 - u) * w
        + values[(r + 1, c + 1)] * u * w)
}

/// A complete set of gridded fields sharing one spec and time axis.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldSet {
    spec: GridSpec,
    times: Vec<DateTime<Utc>>,
    fields: BTreeMap<String, GridField>,
}

impl FieldSet {
    pub fn new(fields: Vec<GridField>) -> Result<FieldSet> {
        let first = fields.first().ok_or(Error::InvalidParams {
            reason: "field set needs at least one field".into(),
        })?;
        let spec = first.spec;
        let times = first.times.clone();
        let mut map = BTreeMap::new();
        for f in fields {
            if f.spec != spec {
                return Err(Error::SpecMismatch);
            }
            if f.times != times {
                return Err(Error::InvalidParams {
                    reason: format!("field {} has a different time axis", f.variable),
                });
            }
            let name = f.variable.clone();
            if map.insert(name.clone(), f).is_some() {
                return Err(Error::InvalidParams {
                    reason: format!("duplicate field {name}"),
                });
            }
        }
        Ok(FieldSet {
            spec,
            times,
            fields: map,
        })
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn times(&self) -> &[DateTime<Utc>] {
        &self.times
    }

    pub fn get(&self, variable: &str) -> Option<&GridField> {
        self.fields.get(variable)
    }

    pub fn variable_names(&self) -> impl Iterator<Item = &str> {
        self.fields.keys().map(|s| s.as_str())
    }

    fn bracket(&self, t: DateTime<Utc>) -> Result<(usize, usize, f64)> {
        let first = *self.times.first().unwrap();
        let last = *self.times.last().unwrap();
        if t < first || t > last {
            return Err(Error::OutOfTimeRange { t: t.to_string() });
        }
        let hi = self.times.partition_point(|&u| u <= t);
        if hi == 0 {
            return Err(Error::OutOfTimeRange { t: t.to_string() });
        }
        let k = hi - 1;
        if self.times[k] == t {
            return Ok((k, k, 0.0));
        }
        let t0 = self.times[k];
        let t1 = self.times[k + 1];
        let w = (t - t0).num_seconds() as f64 / (t1 - t0).num_seconds() as f64;
        Ok((k, k + 1, w))
    }

    /// Assemble a feature vector at (lat, lon, t): per schema variable,
    /// spatial bilinear interpolation at the two bracketing hours followed
    /// by linear interpolation in time.
    pub fn interp_to_point(
        &self,
        schema: &FeatureSchema,
        lat: f64,
        lon: f64,
        t: DateTime<Utc>,
    ) -> Result<Vec<f64>> {
        let (k0, k1, w) = self.bracket(t)?;
        let mut out = Vec::with_capacity(schema.count());
        for name in schema.names() {
            let field = self.fields.get(name).ok_or_else(|| Error::MissingVariable {
                name: name.to_string(),
            })?;
            let v0 = bilinear_interp(&field.values[k0], &self.spec, lat, lon)?;
            let v = if k0 == k1 {
                v0
            } else {
                let v1 = bilinear_interp(&field.values[k1], &self.spec, lat, lon)?;
                v0 * (1.0 - w) + v1 * w
            };
            out.push(v);
        }
        Ok(out)
    }
}

/// Long-format CSV: `time,lat,lon,value`, time-major then node row/col.
pub fn save_field_csv(field: &GridField, path: &Path) -> Result<()> {
    let mut out = String::from("time,lat,lon,value\n");
    let (nr, nc) = field.spec.node_shape();
    for (k, t) in field.times.iter().enumerate() {
        let stamp = format_timestamp(*t);
        for r in 0..nr {
            for c in 0..nc {
                out.push_str(&format!(
                    "{stamp},{},{},{}\n",
                    field.spec.node_lat(r),
                    field.spec.node_lon(c),
                    field.values[k][(r, c)]
                ));
            }
        }
    }
    std::fs::write(path, out)?;
    Ok(())
}

fn uniform_step(sorted: &[f64], what: &str) -> Result<f64> {
    if sorted.len() < 2 {
        return Err(Error::InvalidParams {
            reason: format!("need at least two distinct {what} values"),
        });
    }
    let step = sorted[1] - sorted[0];
    for w in sorted.windows(2) {
        if ((w[1] - w[0]) - step).abs() > 1e-9 {
            return Err(Error::InvalidParams {
                reason: format!("{what} values are not evenly spaced"),
            });
        }
    }
    Ok(step)
}

/// Load a long-format CSV, inferring the grid spec from the node
/// coordinates present. The file must cover the full time × lat × lon
/// product.
pub fn load_field_csv(path: &Path, variable: &str) -> Result<GridField> {
    let bytes = std::fs::read(path)?;
    if bytes.is_empty() {
        return Err(Error::EmptyFile { path: path.into() });
    }
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(bytes.as_slice());
    let headers = rdr.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != ["time", "lat", "lon", "value"] {
        return Err(Error::SchemaMismatch {
            expected: "time,lat,lon,value".into(),
            found: headers.iter().collect::<Vec<_>>().join(","),
        });
    }

    let mut rows: Vec<(DateTime<Utc>, f64, f64, f64)> = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let record = record?;
        let bad = |column: &str, value: &str| Error::BadValue {
            row: i + 1,
            column: column.into(),
            value: value.into(),
        };
        let t = parse_timestamp(&record[0]).ok_or_else(|| bad("time", &record[0]))?;
        let lat: f64 = record[1].parse().map_err(|_| bad("lat", &record[1]))?;
        let lon: f64 = record[2].parse().map_err(|_| bad("lon", &record[2]))?;
        let v: f64 = record[3].parse().map_err(|_| bad("value", &record[3]))?;
        rows.push((t, lat, lon, v));
    }
    if rows.is_empty() {
        return Err(Error::EmptyFile { path: path.into() });
    }

    let mut lats: Vec<f64> = rows.iter().map(|r| r.1).collect();
    lats.sort_by(f64::total_cmp);
    lats.dedup();
    let mut lons: Vec<f64> = rows.iter().map(|r| r.2).collect();
    lons.sort_by(f64::total_cmp);
    lons.dedup();
    let mut times: Vec<DateTime<Utc>> = rows.iter().map(|r| r.0).collect();
    times.sort_unstable();
    times.dedup();

    let step_lat = uniform_step(&lats, "lat")?;
    let step_lon = uniform_step(&lons, "lon")?;
    if (step_lat - step_lon).abs() > 1e-9 {
        return Err(Error::InvalidParams {
            reason: format!("lat step {step_lat} differs from lon step {step_lon}"),
        });
    }
    let spec = GridSpec::new(
        lats[0],
        *lats.last().unwrap(),
        lons[0],
        *lons.last().unwrap(),
        step_lat,
    )?;

    let shape = spec.node_shape();
    if rows.len() != times.len() * shape.0 * shape.1 {
        return Err(Error::InvalidParams {
            reason: format!(
                "file holds {} rows but the grid needs {} ({} instants × {}×{} nodes)",
                rows.len(),
                times.len() * shape.0 * shape.1,
                times.len(),
                shape.0,
                shape.1
            ),
        });
    }
    let mut values = vec![Array2::from_elem(shape, f64::NAN); times.len()];
    for (t, lat, lon, v) in rows {
        let k = times.binary_search(&t).expect("time collected above");
        let r = lats.partition_point(|&x| x < lat - 1e-9);
        let c = lons.partition_point(|&x| x < lon - 1e-9);
        values[k][(r, c)] = v;
    }
    if values.iter().any(|a| a.iter().any(|v| v.is_nan())) {
        return Err(Error::InvalidParams {
            reason: "grid coverage is incomplete (duplicate and missing nodes)".into(),
        });
    }
    GridField::new(spec, variable.to_string(), times, values)
}

#[derive(Serialize, Deserialize)]
struct BinarySidecar {
    variable: String,
    spec: GridSpec,
    times: Vec<String>,
}

/// Packed little-endian f64 values (time-major, then node row, then node
/// col) plus a JSON sidecar describing variable, spec, and time axis.
pub fn save_field_binary(field: &GridField, bin_path: &Path, sidecar_path: &Path) -> Result<()> {
    let sidecar = BinarySidecar {
        variable: field.variable.clone(),
        spec: field.spec,
        times: field.times.iter().map(|t| format_timestamp(*t)).collect(),
    };
    std::fs::write(
        sidecar_path,
        serde_json::to_string_pretty(&sidecar)? + "\n",
    )?;
    let mut w = std::io::BufWriter::new(std::fs::File::create(bin_path)?);
    for slice in &field.values {
        for v in slice.iter() {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn load_field_binary(bin_path: &Path, sidecar_path: &Path) -> Result<GridField> {
    let sidecar: BinarySidecar =
        serde_json::from_str(&std::fs::read_to_string(sidecar_path)?)?;
    let times: Vec<DateTime<Utc>> = sidecar
        .times
        .iter()
        .map(|s| {
            parse_timestamp(s).ok_or_else(|| Error::BadValue {
                row: 0,
                column: "times".into(),
                value: s.clone(),
            })
        })
        .collect::<Result<_>>()?;
    let shape = sidecar.spec.node_shape();
    let per_slice = shape.0 * shape.1;
    let mut reader = std::io::BufReader::new(std::fs::File::open(bin_path)?);
    let mut raw = Vec::new();
    reader.read_to_end(&mut raw)?;
    if raw.len() != times.len() * per_slice * 8 {
        return Err(Error::LengthMismatch {
            expected: times.len() * per_slice * 8,
            found: raw.len(),
        });
    }
    let mut values = Vec::with_capacity(times.len());
    for k in 0..times.len() {
        let mut slice = Array2::zeros(shape);
        for (i, v) in slice.iter_mut().enumerate() {
            let off = (k * per_slice + i) * 8;
            *v = f64::from_le_bytes(raw[off..off + 8].try_into().unwrap());
        }
        values.push(slice);
    }
    GridField::new(sidecar.spec, sidecar.variable, times, values)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GridFileFormat {
    Csv,
    Binary,
}

/// Write every field as `<variable>.csv` or `<variable>.bin` + `.json`.
pub fn save_fieldset_dir(set: &FieldSet, dir: &Path, format: GridFileFormat) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    for (name, field) in &set.fields {
        match format {
            GridFileFormat::Csv => save_field_csv(field, &dir.join(format!("{name}.csv")))?,
            GridFileFormat::Binary => save_field_binary(
                field,
                &dir.join(format!("{name}.bin")),
                &dir.join(format!("{name}.json")),
            )?,
        }
    }
    Ok(())
}

/// Load all schema variables from a directory, preferring the packed
/// binary form where both exist.
pub fn load_fieldset_dir(dir: &Path, schema: &FeatureSchema) -> Result<FieldSet> {
    let mut fields = Vec::with_capacity(schema.count());
    for name in schema.names() {
        let bin = dir.join(format!("{name}.bin"));
        let sidecar = dir.join(format!("{name}.json"));
        let csv = dir.join(format!("{name}.csv"));
        let field = if bin.is_file() && sidecar.is_file() {
            load_field_binary(&bin, &sidecar)?
        } else if csv.is_file() {
            load_field_csv(&csv, name)?
        } else {
            return Err(Error::MissingVariable {
                name: name.to_string(),
            });
        };
        fields.push(field);
    }
    FieldSet::new(fields)
}
