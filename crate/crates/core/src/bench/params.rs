//! Parameter files for the flowsheet benchmark.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::bench::cost::CostWeights;
use crate::bench::flowsheet::FlowsheetParams;
use crate::error::{Error, Result};

pub const FLOWSHEET_SCHEMA: &str = "composite-bo/flowsheet@1";

const DEFAULT_FLOWSHEET: &str = include_str!("../../data/flowsheet.json");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowsheetFile {
    pub schema: String,
    #[serde(default)]
    pub notes: String,
    pub params: FlowsheetParams,
    pub weights: CostWeights,
}

impl FlowsheetFile {
    pub fn parse(text: &str) -> Result<Self> {
        let file: FlowsheetFile = serde_json::from_str(text)?;
        if file.schema != FLOWSHEET_SCHEMA {
            return Err(Error::config(format!(
                "unsupported flowsheet schema '{}' (expected '{FLOWSHEET_SCHEMA}')",
                file.schema
            )));
        }
        file.params.validate()?;
        file.weights.validate()?;
        if file.params.feed != file.weights.feed {
            return Err(Error::config("weights.feed must equal params.feed"));
        }
        Ok(file)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }
}

/// The bundled parameter set.
pub fn default_flowsheet() -> (FlowsheetParams, CostWeights) {
    let file = FlowsheetFile::parse(DEFAULT_FLOWSHEET).expect("bundled flowsheet file is valid");
    (file.params, file.weights)
}
