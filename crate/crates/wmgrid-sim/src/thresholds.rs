//! Calibrated thresholds file (TOML).

use std::path::Path;

use serde::{Deserialize, Serialize};
use wmgrid_detect::Thresholds;

use crate::SimError;

pub const THRESHOLDS_SCHEMA: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThresholdsFile {
    pub schema: u32,
    pub scenario: String,
    pub scenario_hash: String,
    pub runs: usize,
    pub seed_base: u64,
    pub quantile: f64,
    pub safety_factor: f64,
    pub windows: usize,
    #[serde(rename = "dgu")]
    pub dgus: Vec<DguThresholds>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DguThresholds {
    /// One-based DGU index.
    pub index: usize,
    pub chi1: f64,
    pub chi2: f64,
}

impl ThresholdsFile {
    pub fn parse(text: &str) -> Result<Self, SimError> {
        let f: Self = toml::from_str(text).map_err(|e| SimError::Parse(e.to_string()))?;
        f.validate()?;
        Ok(f)
    }

    pub fn load(path: &Path) -> Result<Self, SimError> {
        let text = std::fs::read_to_string(path).map_err(|e| SimError::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        Self::parse(&text).map_err(|e| e.at(path))
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if self.schema != THRESHOLDS_SCHEMA {
            return Err(SimError::Scenario(format!(
                "unsupported thresholds schema {} (expected {THRESHOLDS_SCHEMA})",
                self.schema
            )));
        }
        if self.dgus.is_empty() {
            return Err(SimError::Scenario("thresholds file lists no DGU".into()));
        }
        for d in &self.dgus {
            if d.index == 0 || !(d.chi1 > 0.0 && d.chi2 > 0.0) || !d.chi1.is_finite() || !d.chi2.is_finite() {
                return Err(SimError::Scenario(format!(
                    "DGU {}: thresholds must be positive and finite with a one-based index",
                    d.index
                )));
            }
        }
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("thresholds serialize")
    }

    /// Thresholds of a zero-based DGU index.
    pub fn get(&self, dgu: usize) -> Option<Thresholds> {
        self.dgus.iter().find(|d| d.index == dgu + 1).map(|d| Thresholds {
            chi1: d.chi1,
            chi2: d.chi2,
        })
    }
}
