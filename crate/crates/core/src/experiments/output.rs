//! CSV and JSON artifacts.
//!
//! Every artifact directory holds `metadata.json` (a [`Provenance`] record)
//! next to the CSV files, whose columns are the field names of the
//! serialized row types.

use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::lp::Tolerances;

use super::{ExperimentError, RandomSource};

#[derive(Debug, Clone, Serialize)]
pub struct Provenance<C: Serialize> {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub rng: RandomSource,
    pub tolerances: Tolerances,
    /// Defaults chosen where the experiment protocol leaves a gap.
    pub assumptions: Vec<&'static str>,
    pub config: C,
}

impl<C: Serialize> Provenance<C> {
    pub fn new(command: impl Into<String>, rng: RandomSource, tolerances: Tolerances, config: C) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command: command.into(),
            rng,
            tolerances,
            assumptions: Vec::new(),
            config,
        }
    }
}

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<(), ExperimentError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let mut w = csv::Writer::from_path(path)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<(), ExperimentError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}
