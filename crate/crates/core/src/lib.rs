//! Diagnosing upward-lightning risk from reanalysis-style meteorological
//! predictors.
//!
//! The crate provides the full pipeline: labeled feature tables
//! ([`dataset`]), conditional-inference trees and forests with
//! permutation-test split selection ([`tree`], [`forest`]), leave-one-day-out
//! cross-validation and permutation variable importance ([`validation`],
//! [`metrics`]), grid interpolation ([`grid`]), strike-to-turbine matching
//! ([`matching`]), threshold-exceedance risk maps ([`riskmap`]), and a
//! synthetic data generator with known ground truth ([`synth`]).

pub mod dataset;
pub mod error;
pub mod forest;
pub mod grid;
pub mod matching;
pub mod metrics;
pub mod riskmap;
pub mod rng;
pub mod schema;
pub mod stats;
pub mod synth;
pub mod tree;
pub mod validation;

pub use error::{Error, Result};
