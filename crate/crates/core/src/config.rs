//! Run configuration shared by the command-line front-end and the fuzz
//! targets: JSON in, validated parameters out, errors pointing at the
//! offending line.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::profile::{PeriodicProfile, ProfileSpec};
use crate::random_field::grid_size;

/// A single coupling or a grid of them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged, expecting = "lambda as a number or an array of numbers")]
pub enum LambdaSpec {
    Single(f64),
    Grid(Vec<f64>),
}

impl LambdaSpec {
    pub fn values(&self) -> Vec<f64> {
        match self {
            LambdaSpec::Single(v) => vec![*v],
            LambdaSpec::Grid(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(rename = "B")]
    pub b: f64,
    #[serde(rename = "J", default = "default_bands")]
    pub bands: usize,
    /// Absent means the per-command default.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<LambdaSpec>,
    #[serde(default = "default_eta")]
    pub eta: f64,
    #[serde(rename = "L", default = "default_box")]
    pub l: f64,
    #[serde(default = "default_spacing")]
    pub h: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_realizations")]
    pub realizations: usize,
    #[serde(default)]
    pub profile: ProfileSpec,
    /// Oscillator basis size; absent means `J + 32`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub basis_size: Option<usize>,
    #[serde(default = "default_k_samples")]
    pub k_samples: usize,
    /// Excluded fields are searched on `(0, B_max]`.
    #[serde(rename = "B_max", default = "default_b_max")]
    pub b_max: f64,
    /// A field within this relative distance of an excluded field is
    /// treated as that field.
    #[serde(default = "default_field_rtol")]
    pub field_rtol: f64,
    /// Fermi energy for the conductance; absent means the gap centres `2jB`, `j ≤ J`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub energy: Option<f64>,
    /// Trace window side is `L / window_divisor`.
    #[serde(default = "default_window_divisor")]
    pub window_divisor: f64,
    /// Output directory.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<String>,
}

fn default_bands() -> usize {
    1
}
fn default_eta() -> f64 {
    0.1
}
fn default_box() -> f64 {
    12.0
}
fn default_spacing() -> f64 {
    0.25
}
fn default_realizations() -> usize {
    1
}
fn default_k_samples() -> usize {
    crate::fiber::DEFAULT_K_SAMPLES
}
fn default_b_max() -> f64 {
    10.0
}
fn default_field_rtol() -> f64 {
    1e-5
}
fn default_window_divisor() -> f64 {
    3.0
}

/// Upper limit on `J`, far above anything the truncation guard can afford.
pub const MAX_BANDS: usize = 64;

/// 1-based line of the first occurrence of `"key"` in `text`.
pub fn key_line(text: &str, key: &str) -> Option<usize> {
    let needle = format!("\"{key}\"");
    text.lines().position(|l| l.contains(&needle)).map(|i| i + 1)
}

/// Serde also accepts a struct written as a JSON array; configs must be objects.
pub fn require_object(text: &str) -> Result<()> {
    match text.trim_start().chars().next() {
        Some('{') => Ok(()),
        _ => {
            let line = text.lines().position(|l| !l.trim().is_empty()).map_or(1, |i| i + 1);
            Err(Error::Config { line: Some(line), message: "expected a JSON object".into() })
        }
    }
}

impl RunConfig {
    pub fn new(b: f64) -> Self {
        Self {
            b,
            bands: default_bands(),
            lambda: None,
            eta: default_eta(),
            l: default_box(),
            h: default_spacing(),
            seed: 0,
            realizations: default_realizations(),
            profile: ProfileSpec::default(),
            basis_size: None,
            k_samples: default_k_samples(),
            b_max: default_b_max(),
            field_rtol: default_field_rtol(),
            energy: None,
            window_divisor: default_window_divisor(),
            out: None,
        }
    }

    /// Parses and validates. Syntax errors carry the parser's line; semantic
    /// errors carry the line of the offending key.
    pub fn from_json(text: &str) -> Result<Self> {
        require_object(text)?;
        let cfg: Self =
            serde_json::from_str(text).map_err(|e| Error::Config { line: Some(e.line()), message: e.to_string() })?;
        cfg.validate_in(Some(text))?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        self.validate_in(None)
    }

    /// Validation of everything except the box grid, which only the
    /// two-dimensional commands need (see [`RunConfig::validate_grid`]).
    pub fn validate_in(&self, text: Option<&str>) -> Result<()> {
        let fail = |key: &str, message: String| Error::Config { line: text.and_then(|t| key_line(t, key)), message };
        let positive = |key: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(fail(key, format!("{key} must be positive and finite, got {v}")))
            }
        };
        positive("B", self.b)?;
        positive("L", self.l)?;
        positive("h", self.h)?;
        positive("B_max", self.b_max)?;
        if !(1..=MAX_BANDS).contains(&self.bands) {
            return Err(fail("J", format!("J must lie in 1..={MAX_BANDS}, got {}", self.bands)));
        }
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            return Err(fail("eta", format!("eta must lie in (0, 1], got {}", self.eta)));
        }
        if let Some(spec) = &self.lambda {
            let values = spec.values();
            if values.is_empty() {
                return Err(fail("lambda", "lambda grid is empty".into()));
            }
            if let Some(v) = values.iter().find(|v| !(**v >= 0.0 && v.is_finite())) {
                return Err(fail("lambda", format!("lambda must be finite and >= 0, got {v}")));
            }
        }
        if self.realizations == 0 {
            return Err(fail("realizations", "need at least one realization".into()));
        }
        if let Some(n) = self.basis_size {
            if n < self.bands + 2 {
                return Err(fail("basis_size", format!("basis_size {n} is smaller than J + 2")));
            }
        }
        if self.k_samples < 2 {
            return Err(fail("k_samples", "need at least 2 k samples".into()));
        }
        if !(self.field_rtol >= 0.0 && self.field_rtol < 0.5) {
            return Err(fail("field_rtol", format!("field_rtol must lie in [0, 0.5), got {}", self.field_rtol)));
        }
        if let Some(e) = self.energy {
            if !e.is_finite() {
                return Err(fail("energy", "energy must be finite".into()));
            }
        }
        if !(self.window_divisor >= 1.0 && self.window_divisor.is_finite()) {
            return Err(fail("window_divisor", format!("window_divisor must be >= 1, got {}", self.window_divisor)));
        }
        self.profile.resolve().map_err(|e| fail("profile", e.to_string()))?;
        Ok(())
    }

    /// Checks `h ≤ min(1/2, 1/√B)` and that `L/h` is an integer.
    pub fn validate_grid(&self, text: Option<&str>) -> Result<usize> {
        grid_size(self.l, self.h, self.b).map_err(|e| Error::Config { line: text.and_then(|t| key_line(t, "h")), message: e.to_string() })
    }

    pub fn resolved_profile(&self) -> Result<PeriodicProfile> {
        self.profile.resolve()
    }

    pub fn basis(&self) -> usize {
        self.basis_size.unwrap_or(self.bands + 32)
    }

    pub fn lambda_values_or(&self, default: &[f64]) -> Vec<f64> {
        self.lambda.as_ref().map_or_else(|| default.to_vec(), LambdaSpec::values)
    }
}
