//! Feature schema: the ordered set of meteorological predictor variables.

use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The canonical ERA5-derived predictor list, shipped with the crate.
const CANONICAL_SCHEMA_CSV: &str = include_str!("../resources/era5_schema_v1.csv");

/// Number of variables in the canonical schema.
pub const CANONICAL_VARIABLE_COUNT: usize = 35;

/// One predictor variable.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VariableDescriptor {
    pub name: String,
    pub unit: String,
    /// Whether the variable is derived from raw reanalysis rather than
    /// directly available. Informational only; all variables are numeric.
    pub derived: bool,
}

/// Ordered, immutable list of predictor variables.
///
/// The order is fixed and stable across serialization round-trips; every
/// feature vector in a [`crate::dataset::Dataset`] follows it.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSchema {
    variables: Vec<VariableDescriptor>,
}

impl FeatureSchema {
    /// Build a schema from descriptors, rejecting duplicate names.
    pub fn new(variables: Vec<VariableDescriptor>) -> Result<Self> {
        if variables.is_empty() {
            return Err(Error::InvalidParams {
                reason: "schema must contain at least one variable".into(),
            });
        }
        for (i, v) in variables.iter().enumerate() {
            if variables[..i].iter().any(|w| w.name == v.name) {
                return Err(Error::DuplicateId { id: v.name.clone() });
            }
        }
        Ok(FeatureSchema { variables })
    }

    /// The canonical 35-variable schema (version 1).
    pub fn canonical() -> Self {
        Self::from_csv_reader(CANONICAL_SCHEMA_CSV.as_bytes())
            .expect("embedded canonical schema is well-formed")
    }

    pub fn count(&self) -> usize {
        self.variables.len()
    }

    pub fn variables(&self) -> &[VariableDescriptor] {
        &self.variables
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.variables.iter().map(|v| v.name.as_str())
    }

    pub fn name(&self, index: usize) -> &str {
        &self.variables[index].name
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.variables.iter().position(|v| v.name == name)
    }

    /// Load a schema from a CSV file with columns `name,unit,derived`.
    pub fn load_csv(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::from_csv_reader(file)
    }

    pub fn from_csv_reader<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
        {
            let headers = rdr.headers()?;
            let expected = ["name", "unit", "derived"];
            if headers.len() != 3 || headers.iter().zip(expected).any(|(h, e)| h != e) {
                return Err(Error::SchemaMismatch {
                    expected: expected.join(","),
                    found: headers.iter().collect::<Vec<_>>().join(","),
                });
            }
        }
        let mut variables = Vec::new();
        for (i, record) in rdr.records().enumerate() {
            let record = record?;
            let derived = match &record[2] {
                "true" => true,
                "false" => false,
                other => {
                    return Err(Error::BadValue {
                        row: i + 1,
                        column: "derived".into(),
                        value: other.into(),
                    })
                }
            };
            variables.push(VariableDescriptor {
                name: record[0].to_string(),
                unit: record[1].to_string(),
                derived,
            });
        }
        Self::new(variables)
    }

    /// Serialize to the same CSV format `load_csv` reads.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("name,unit,derived\n");
        for v in &self.variables {
            out.push_str(&format!("{},{},{}\n", v.name, v.unit, v.derived));
        }
        out
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }
}
