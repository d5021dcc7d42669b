//! Labeled samples, dataset container, and event-day bookkeeping.

use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;

use chrono::{DateTime, Datelike, NaiveDate, TimeZone, Timelike, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::schema::FeatureSchema;

/// Binary response: did upward lightning occur in this situation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Label {
    Ul,
    NoUl,
}

impl Label {
    pub fn is_positive(self) -> bool {
        matches!(self, Label::Ul)
    }

    pub fn as_csv(self) -> &'static str {
        match self {
            Label::Ul => "UL",
            Label::NoUl => "no-UL",
        }
    }

    pub fn parse_csv(s: &str) -> Option<Label> {
        match s {
            "UL" => Some(Label::Ul),
            "no-UL" => Some(Label::NoUl),
            _ => None,
        }
    }
}

/// Where a sample comes from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Source {
    GaisbergTower,
    SaentisTower,
    GridCell,
    Synthetic,
}

impl Source {
    pub fn as_csv(self) -> &'static str {
        match self {
            Source::GaisbergTower => "GaisbergTower",
            Source::SaentisTower => "SaentisTower",
            Source::GridCell => "GridCell",
            Source::Synthetic => "Synthetic",
        }
    }

    pub fn parse_csv(s: &str) -> Option<Source> {
        match s {
            "GaisbergTower" => Some(Source::GaisbergTower),
            "SaentisTower" => Some(Source::SaentisTower),
            "GridCell" => Some(Source::GridCell),
            "Synthetic" => Some(Source::Synthetic),
            _ => None,
        }
    }
}

/// Subtype of an upward-lightning event with respect to LLS detectability.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum UlSubtype {
    LlsDetectable,
    LlsNonDetectable,
}

impl UlSubtype {
    pub fn as_csv(self) -> &'static str {
        match self {
            UlSubtype::LlsDetectable => "LLS-detectable",
            UlSubtype::LlsNonDetectable => "LLS-non-detectable",
        }
    }

    pub fn parse_csv(s: &str) -> Option<UlSubtype> {
        match s {
            "LLS-detectable" => Some(UlSubtype::LlsDetectable),
            "LLS-non-detectable" => Some(UlSubtype::LlsNonDetectable),
            _ => None,
        }
    }
}

/// Meteorological season of a calendar date.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Season {
    Djf,
    Mam,
    Jja,
    Son,
}

impl Season {
    pub fn of(date: NaiveDate) -> Season {
        match date.month() {
            12 | 1 | 2 => Season::Djf,
            3..=5 => Season::Mam,
            6..=8 => Season::Jja,
            _ => Season::Son,
        }
    }
}

impl fmt::Display for Season {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Season::Djf => "DJF",
            Season::Mam => "MAM",
            Season::Jja => "JJA",
            Season::Son => "SON",
        };
        write!(f, "{s}")
    }
}

/// One labeled situation: a feature vector at a minute-resolution UTC
/// instant and a point location.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub features: Vec<f64>,
    pub timestamp: DateTime<Utc>,
    pub lat: f64,
    pub lon: f64,
    pub label: Label,
    pub source: Source,
    pub ul_subtype: Option<UlSubtype>,
}

impl Sample {
    pub fn date(&self) -> NaiveDate {
        self.timestamp.date_naive()
    }

    pub fn season(&self) -> Season {
        Season::of(self.date())
    }
}

/// Canonical minute-resolution timestamp format used in all CSV artifacts.
pub const TIMESTAMP_FORMAT: &str = "%Y-%m-%dT%H:%MZ";

pub fn format_timestamp(t: DateTime<Utc>) -> String {
    t.format(TIMESTAMP_FORMAT).to_string()
}

/// Parse a UTC timestamp, truncating to minute resolution.
///
/// Accepts the canonical `2019-03-04T13:05Z` form as well as RFC 3339
/// strings with seconds.
pub fn parse_timestamp(s: &str) -> Option<DateTime<Utc>> {
    if let Ok(t) = chrono::NaiveDateTime::parse_from_str(s, "%Y-%m-%dT%H:%MZ") {
        return Utc.from_local_datetime(&t).single();
    }
    if let Ok(t) = DateTime::parse_from_rfc3339(s) {
        let t = t.with_timezone(&Utc);
        return t.with_second(0).and_then(|t| t.with_nanosecond(0));
    }
    if let Ok(t) = chrono::NaiveDateTime::parse_from_str(s, "%Y-%m-%d %H:%M:%S") {
        return Utc
            .from_local_datetime(&t)
            .single()
            .and_then(|t| t.with_second(0))
            .and_then(|t| t.with_nanosecond(0));
    }
    None
}

/// Immutable container of labeled samples sharing one schema.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    schema: FeatureSchema,
    rows: Vec<Sample>,
}

impl Dataset {
    /// Build a dataset, enforcing all row invariants.
    pub fn from_rows(schema: FeatureSchema, rows: Vec<Sample>) -> Result<Self> {
        for (i, row) in rows.iter().enumerate() {
            if row.features.len() != schema.count() {
                return Err(Error::LengthMismatch {
                    expected: schema.count(),
                    found: row.features.len(),
                });
            }
            if let Some(j) = row.features.iter().position(|v| !v.is_finite()) {
                return Err(Error::BadValue {
                    row: i + 1,
                    column: schema.name(j).to_string(),
                    value: format!("{}", row.features[j]),
                });
            }
            if !row.lat.is_finite() || !row.lon.is_finite() {
                return Err(Error::BadValue {
                    row: i + 1,
                    column: "lat/lon".into(),
                    value: format!("({}, {})", row.lat, row.lon),
                });
            }
            if row.ul_subtype.is_some() && row.label != Label::Ul {
                return Err(Error::BadValue {
                    row: i + 1,
                    column: "ul_subtype".into(),
                    value: "subtype present on a no-UL row".into(),
                });
            }
        }
        Ok(Dataset { schema, rows })
    }

    pub fn schema(&self) -> &FeatureSchema {
        &self.schema
    }

    pub fn rows(&self) -> &[Sample] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn feature(&self, row: usize, variable: usize) -> f64 {
        self.rows[row].features[variable]
    }

    /// Labels as 0/1 indicators (1 = UL).
    pub fn labels01(&self) -> Vec<f64> {
        self.rows
            .iter()
            .map(|r| if r.label.is_positive() { 1.0 } else { 0.0 })
            .collect()
    }

    pub fn count_positive(&self) -> usize {
        self.rows.iter().filter(|r| r.label.is_positive()).count()
    }

    /// Copy the selected rows into a new dataset. Indices may repeat.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            schema: self.schema.clone(),
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
        }
    }

    pub fn filter<F: Fn(&Sample) -> bool>(&self, keep: F) -> Dataset {
        Dataset {
            schema: self.schema.clone(),
            rows: self.rows.iter().filter(|r| keep(r)).cloned().collect(),
        }
    }

    /// Distinct UTC calendar dates carrying at least one UL row.
    pub fn event_days(&self) -> BTreeSet<NaiveDate> {
        self.rows
            .iter()
            .filter(|r| r.label.is_positive())
            .map(|r| r.date())
            .collect()
    }

    /// Load a labeled feature table.
    ///
    /// Expected header: `timestamp,lat,lon,label[,ul_subtype[,source]]`
    /// followed by the schema's variable names in schema order.
    pub fn load_feature_table(path: &Path, schema: &FeatureSchema) -> Result<Dataset> {
        let bytes = std::fs::read(path)?;
        if bytes.is_empty() {
            return Err(Error::EmptyFile { path: path.into() });
        }
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_reader(bytes.as_slice());

        let headers: Vec<String> = rdr.headers()?.iter().map(|s| s.to_string()).collect();
        let layout = HeaderLayout::detect(&headers, schema)?;

        let mut rows = Vec::new();
        for (i, record) in rdr.records().enumerate() {
            let record = record?;
            let row_no = i + 1;
            if record.len() != headers.len() {
                return Err(Error::BadValue {
                    row: row_no,
                    column: "<record>".into(),
                    value: format!("expected {} fields, found {}", headers.len(), record.len()),
                });
            }
            rows.push(layout.parse_row(&record, row_no, schema)?);
        }
        if rows.is_empty() {
            return Err(Error::EmptyFile { path: path.into() });
        }
        Dataset::from_rows(schema.clone(), rows)
    }

    /// Serialize to the canonical CSV layout (all metadata columns present,
    /// canonical timestamps, shortest round-trip float formatting).
    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("timestamp,lat,lon,label,ul_subtype,source");
        for name in self.schema.names() {
            out.push(',');
            out.push_str(name);
        }
        out.push('\n');
        for row in &self.rows {
            out.push_str(&format_timestamp(row.timestamp));
            out.push_str(&format!(",{},{}", row.lat, row.lon));
            out.push(',');
            out.push_str(row.label.as_csv());
            out.push(',');
            if let Some(st) = row.ul_subtype {
                out.push_str(st.as_csv());
            }
            out.push(',');
            out.push_str(row.source.as_csv());
            for v in &row.features {
                out.push_str(&format!(",{v}"));
            }
            out.push('\n');
        }
        out
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv_string())?;
        Ok(())
    }
}

/// Set union of event days from two observation sources.
pub fn merge_event_days(a: &BTreeSet<NaiveDate>, b: &BTreeSet<NaiveDate>) -> BTreeSet<NaiveDate> {
    a.union(b).copied().collect()
}

struct HeaderLayout {
    has_subtype: bool,
    has_source: bool,
    n_meta: usize,
}

impl HeaderLayout {
    fn detect(headers: &[String], schema: &FeatureSchema) -> Result<HeaderLayout> {
        let base = ["timestamp", "lat", "lon", "label"];
        let mismatch = || Error::SchemaMismatch {
            expected: format!(
                "timestamp,lat,lon,label[,ul_subtype[,source]],{}",
                schema.names().collect::<Vec<_>>().join(",")
            ),
            found: headers.join(","),
        };
        if headers.len() < base.len() + schema.count() {
            return Err(mismatch());
        }
        for (h, e) in headers.iter().zip(base) {
            if h != e {
                return Err(mismatch());
            }
        }
        let mut idx = base.len();
        let has_subtype = headers.get(idx).is_some_and(|h| h == "ul_subtype");
        if has_subtype {
            idx += 1;
        }
        let has_source = headers.get(idx).is_some_and(|h| h == "source");
        if has_source {
            idx += 1;
        }
        if headers.len() != idx + schema.count() {
            return Err(mismatch());
        }
        for (h, name) in headers[idx..].iter().zip(schema.names()) {
            if h != name {
                return Err(mismatch());
            }
        }
        Ok(HeaderLayout {
            has_subtype,
            has_source,
            n_meta: idx,
        })
    }

    fn parse_row(
        &self,
        record: &csv::StringRecord,
        row_no: usize,
        schema: &FeatureSchema,
    ) -> Result<Sample> {
        let bad = |column: &str, value: &str| Error::BadValue {
            row: row_no,
            column: column.into(),
            value: value.into(),
        };
        let timestamp =
            parse_timestamp(&record[0]).ok_or_else(|| bad("timestamp", &record[0]))?;
        let lat: f64 = record[1].parse().map_err(|_| bad("lat", &record[1]))?;
        let lon: f64 = record[2].parse().map_err(|_| bad("lon", &record[2]))?;
        let label = Label::parse_csv(&record[3]).ok_or_else(|| bad("label", &record[3]))?;

        let mut idx = 4;
        let mut ul_subtype = None;
        if self.has_subtype {
            let raw = &record[idx];
            if !raw.is_empty() {
                ul_subtype = Some(UlSubtype::parse_csv(raw).ok_or_else(|| bad("ul_subtype", raw))?);
            }
            idx += 1;
        }
        let source = if self.has_source {
            let raw = &record[idx];
            Source::parse_csv(raw).ok_or_else(|| bad("source", raw))?
        } else {
            Source::Synthetic
        };

        // Säntis sensors only see the LLS-detectable subtype, so UL rows
        // from there default to it when the column is absent or empty.
        if ul_subtype.is_none() && label == Label::Ul && source == Source::SaentisTower {
            ul_subtype = Some(UlSubtype::LlsDetectable);
        }

        let mut features = Vec::with_capacity(schema.count());
        for (j, raw) in record.iter().skip(self.n_meta).enumerate() {
            let v: f64 = raw.parse().map_err(|_| bad(schema.name(j), raw))?;
            if !v.is_finite() {
                return Err(bad(schema.name(j), raw));
            }
            features.push(v);
        }
        Ok(Sample {
            features,
            timestamp,
            lat,
            lon,
            label,
            source,
            ul_subtype,
        })
    }
}
