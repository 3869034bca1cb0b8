//! Run configuration: a TOML file with a few optional tables, command-line
//! `key=value` overrides, and per-case defaults that are filled in when the
//! configuration is resolved.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::maxwell::{MaxwellScheme, PhmParams};
use crate::sources::NewtonParams;
use crate::stepper::Integrator;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{context}: {source}")]
    Parse { context: String, source: Box<toml::de::Error> },
    #[error("bad override '{0}' (expected key=value)")]
    Override(String),
    #[error("invalid value for '{key}': {reason}")]
    Invalid { key: &'static str, reason: String },
    #[error("unknown test case '{0}' (expected accuracy1d, briowu, current_sheet, smooth2d, orszag_tang, blast or gem)")]
    UnknownCase(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CaseId {
    Accuracy1d,
    Briowu,
    CurrentSheet,
    Smooth2d,
    OrszagTang,
    Blast,
    Gem,
}

impl CaseId {
    pub const ALL: [CaseId; 7] = [
        CaseId::Accuracy1d,
        CaseId::Briowu,
        CaseId::CurrentSheet,
        CaseId::Smooth2d,
        CaseId::OrszagTang,
        CaseId::Blast,
        CaseId::Gem,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CaseId::Accuracy1d => "accuracy1d",
            CaseId::Briowu => "briowu",
            CaseId::CurrentSheet => "current_sheet",
            CaseId::Smooth2d => "smooth2d",
            CaseId::OrszagTang => "orszag_tang",
            CaseId::Blast => "blast",
            CaseId::Gem => "gem",
        }
    }

    pub fn is_1d(self) -> bool {
        matches!(self, CaseId::Accuracy1d | CaseId::Briowu | CaseId::CurrentSheet)
    }
}

impl FromStr for CaseId {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key = s.to_ascii_lowercase().replace('-', "_");
        CaseId::ALL.into_iter().find(|c| c.name() == key).ok_or_else(|| ConfigError::UnknownCase(s.to_string()))
    }
}

impl fmt::Display for CaseId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Overrides of the case's charge-to-mass ratios, resistivity and Maxwell
/// source scale.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceOverrides {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r_i: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r_e: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub maxwell_source_scale: Option<f64>,
}

/// Case-specific knobs. Each case reads the ones it understands.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CaseParams {
    /// Field strength for blast, GEM and the current sheet.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b0: Option<f64>,
    /// GEM perturbation amplitude.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub psi0: Option<f64>,
    /// Constant multiplying the sheet term of the GEM ion pressure.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pressure_coefficient: Option<f64>,
    /// Sign of the GEM ion drift; electrons always drift the other way.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub drift_sign: Option<f64>,
    /// Resistive diffusivity of the current sheet profile; defaults to eta.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diffusivity: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_dir")]
    pub dir: PathBuf,
    /// Steps between field snapshots; 0 writes only the final state.
    #[serde(default)]
    pub snapshot_every: usize,
    /// Also write little-endian binary snapshots.
    #[serde(default)]
    pub binary: bool,
}

fn default_dir() -> PathBuf {
    PathBuf::from("output")
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            dir: default_dir(),
            snapshot_every: 0,
            binary: false,
        }
    }
}

/// The configuration as written by the user. Unset optional fields are
/// filled from the case tables by [`crate::cases::Setup::resolve`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemeConfig {
    pub test_case: CaseId,
    pub scheme: MaxwellScheme,
    pub integrator: Integrator,
    #[serde(default = "two")]
    pub fluid_order: u8,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cfl: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_end: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nx: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ny: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_steps: Option<usize>,
    #[serde(default)]
    pub sources: SourceOverrides,
    #[serde(default)]
    pub phm: PhmParams,
    #[serde(default)]
    pub newton: NewtonParams,
    #[serde(default)]
    pub case: CaseParams,
    #[serde(default)]
    pub output: OutputConfig,
}

fn two() -> u8 {
    2
}

impl SchemeConfig {
    pub fn new(test_case: CaseId, scheme: MaxwellScheme, integrator: Integrator) -> Self {
        SchemeConfig {
            test_case,
            scheme,
            integrator,
            fluid_order: 2,
            cfl: None,
            t_end: None,
            nx: None,
            ny: None,
            max_steps: None,
            sources: SourceOverrides::default(),
            phm: PhmParams::default(),
            newton: NewtonParams::default(),
            case: CaseParams::default(),
            output: OutputConfig::default(),
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always representable")
    }

    fn validate(self) -> Result<Self, ConfigError> {
        if !matches!(self.fluid_order, 1 | 2) {
            return Err(ConfigError::Invalid {
                key: "fluid_order",
                reason: format!("{} (expected 1 or 2)", self.fluid_order),
            });
        }
        if let Some(c) = self.cfl {
            if !(c > 0.0 && c <= 1.0) {
                return Err(ConfigError::Invalid {
                    key: "cfl",
                    reason: format!("{c} is outside (0, 1]"),
                });
            }
        }
        if let Some(t) = self.t_end {
            if !(t > 0.0 && t.is_finite()) {
                return Err(ConfigError::Invalid {
                    key: "t_end",
                    reason: format!("{t} must be positive"),
                });
            }
        }
        if self.nx == Some(0) || self.ny == Some(0) {
            return Err(ConfigError::Invalid {
                key: "nx",
                reason: "resolution must be positive".into(),
            });
        }
        PhmParams::new(self.phm.kappa, self.phm.xi).map_err(|e| ConfigError::Invalid {
            key: "phm",
            reason: e.to_string(),
        })?;
        Ok(self)
    }
}

/// Parses a `key=value` override into a dotted path and a TOML value. Values
/// that are not valid TOML are taken as bare strings.
fn parse_override(s: &str) -> Result<(Vec<String>, toml::Value), ConfigError> {
    let (k, v) = s.split_once('=').ok_or_else(|| ConfigError::Override(s.to_string()))?;
    let path: Vec<String> = k.trim().split('.').map(str::to_string).collect();
    if path.iter().any(|p| p.is_empty()) {
        return Err(ConfigError::Override(s.to_string()));
    }
    let v = v.trim();
    let value = toml::from_str::<toml::Table>(&format!("v = {v}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(v.to_string()));
    Ok((path, value))
}

fn apply_override(table: &mut toml::Table, path: &[String], value: toml::Value) -> Result<(), ConfigError> {
    let (last, parents) = path.split_last().expect("override path is never empty");
    let mut cur = table;
    for p in parents {
        let entry = cur.entry(p.clone()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry.as_table_mut().ok_or_else(|| ConfigError::Override(format!("{} is not a table", p)))?;
    }
    cur.insert(last.clone(), value);
    Ok(())
}

/// Parses configuration text, applying overrides before validation.
pub fn parse_config_str(text: &str, overrides: &[String], context: &str) -> Result<SchemeConfig, ConfigError> {
    let mut table: toml::Table = toml::from_str(text).map_err(|e| ConfigError::Parse {
        context: context.to_string(),
        source: Box::new(e),
    })?;
    for o in overrides {
        let (path, value) = parse_override(o)?;
        apply_override(&mut table, &path, value)?;
    }
    let merged = toml::to_string(&table).expect("a parsed table serializes");
    let cfg: SchemeConfig = toml::from_str(&merged).map_err(|e| ConfigError::Parse {
        context: if overrides.is_empty() {
            context.to_string()
        } else {
            format!("{context} (with overrides)")
        },
        source: Box::new(e),
    })?;
    cfg.validate()
}

pub fn parse_config(path: &Path, overrides: &[String]) -> Result<SchemeConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config_str(&text, overrides, &path.display().to_string())
}
