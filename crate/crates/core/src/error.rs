use std::path::PathBuf;

use thiserror::Error;

/// Crate-wide error type.
#[derive(Error, Debug)]
pub enum Error {
    #[error("schema mismatch: expected {expected}, found {found}")]
    SchemaMismatch { expected: String, found: String },

    #[error("bad value in row {row}, column '{column}': {value}")]
    BadValue {
        row: usize,
        column: String,
        value: String,
    },

    #[error("empty file: {path}")]
    EmptyFile { path: PathBuf },

    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("input too large for exact enumeration: n = {n}, limit {max}")]
    TooLarge { n: usize, max: usize },

    #[error("no feasible split point")]
    NoFeasibleSplit,

    #[error("too few rows: {n} < required {min}")]
    TooFewRows { n: usize, min: usize },

    #[error("evaluation data contains a single class")]
    SingleClassEval,

    #[error("negative pool too small: {pool} < {needed}")]
    PoolTooSmall { pool: usize, needed: usize },

    #[error("too few distinct event days: {days}")]
    TooFewDays { days: usize },

    #[error("point ({lat}, {lon}) outside grid domain")]
    OutOfDomain { lat: f64, lon: f64 },

    #[error("instant {t} outside field time range")]
    OutOfTimeRange { t: String },

    #[error("variable '{name}' missing from gridded fields")]
    MissingVariable { name: String },

    #[error("grid specs differ between inputs")]
    SpecMismatch,

    #[error("empty raster set")]
    EmptyRasterSet,

    #[error("threshold {value} outside (0, 1)")]
    InvalidThreshold { value: f64 },

    #[error("duplicate id '{id}'")]
    DuplicateId { id: String },

    #[error("invalid parameters: {reason}")]
    InvalidParams { reason: String },

    #[error("internal invariant violated: {reason}")]
    Internal { reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
