//! Scenario files: a single JSON document with a `kind`, an optional
//! `output_dir`, and a kind-specific `parameters` map. Validation names
//! every offending field; JSON syntax errors carry line/column positions.

use std::path::{Path, PathBuf};

use serde::Deserialize;
use serde_json::{Map, Value};

/// Failure classes mapped to process exit codes: validation problems exit
/// with 3, solver/runtime problems with 2.
#[derive(Debug)]
pub enum CliError {
    Validation(String),
    Solver(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 3,
            CliError::Solver(_) => 2,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Validation(m) | CliError::Solver(m) => m,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Kind {
    Flatness2d,
    Flatness3d,
    InverseAlpha,
    Embed,
    Axisym,
    Linearized,
    Decomposition,
}

impl Kind {
    pub fn as_str(&self) -> &'static str {
        match self {
            Kind::Flatness2d => "flatness2d",
            Kind::Flatness3d => "flatness3d",
            Kind::InverseAlpha => "inverse_alpha",
            Kind::Embed => "embed",
            Kind::Axisym => "axisym",
            Kind::Linearized => "linearized",
            Kind::Decomposition => "decomposition",
        }
    }

    fn parse(s: &str) -> Result<Self, CliError> {
        match s {
            "flatness2d" => Ok(Kind::Flatness2d),
            "flatness3d" => Ok(Kind::Flatness3d),
            "inverse_alpha" => Ok(Kind::InverseAlpha),
            "embed" => Ok(Kind::Embed),
            "axisym" => Ok(Kind::Axisym),
            "linearized" => Ok(Kind::Linearized),
            "decomposition" => Ok(Kind::Decomposition),
            other => Err(CliError::Validation(format!(
                "unknown scenario kind \"{other}\"; expected one of flatness2d, flatness3d, \
                 inverse_alpha, embed, axisym, linearized, decomposition"
            ))),
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    kind: String,
    #[serde(default)]
    output_dir: Option<PathBuf>,
    #[serde(default)]
    parameters: Map<String, Value>,
}

/// Typed access to the parameter map with validation diagnostics that name
/// the field.
#[derive(Debug)]
pub struct Params {
    kind: &'static str,
    map: Map<String, Value>,
}

impl Params {
    /// Every key must appear in `required` or `optional`; every required
    /// key must be present.
    pub fn check_keys(&self, required: &[&str], optional: &[&str]) -> Result<(), CliError> {
        for key in required {
            if !self.map.contains_key(*key) {
                return Err(CliError::Validation(format!(
                    "missing required parameter \"{key}\" for kind \"{}\"",
                    self.kind
                )));
            }
        }
        for key in self.map.keys() {
            if !required.contains(&key.as_str()) && !optional.contains(&key.as_str()) {
                return Err(CliError::Validation(format!(
                    "unknown parameter \"{key}\" for kind \"{}\"",
                    self.kind
                )));
            }
        }
        Ok(())
    }

    fn value(&self, key: &str) -> Result<&Value, CliError> {
        self.map.get(key).ok_or_else(|| {
            CliError::Validation(format!(
                "missing required parameter \"{key}\" for kind \"{}\"",
                self.kind
            ))
        })
    }

    pub fn f64(&self, key: &str) -> Result<f64, CliError> {
        self.value(key)?.as_f64().ok_or_else(|| {
            CliError::Validation(format!("parameter \"{key}\" must be a number"))
        })
    }

    pub fn f64_or(&self, key: &str, default: f64) -> Result<f64, CliError> {
        match self.map.get(key) {
            None => Ok(default),
            Some(v) => v.as_f64().ok_or_else(|| {
                CliError::Validation(format!("parameter \"{key}\" must be a number"))
            }),
        }
    }

    pub fn usize_or(&self, key: &str, default: usize) -> Result<usize, CliError> {
        match self.map.get(key) {
            None => Ok(default),
            Some(v) => v
                .as_u64()
                .map(|u| u as usize)
                .ok_or_else(|| {
                    CliError::Validation(format!(
                        "parameter \"{key}\" must be a non-negative integer"
                    ))
                }),
        }
    }

    pub fn str_or(&self, key: &str, default: &str) -> Result<String, CliError> {
        match self.map.get(key) {
            None => Ok(default.to_string()),
            Some(v) => v
                .as_str()
                .map(str::to_string)
                .ok_or_else(|| {
                    CliError::Validation(format!("parameter \"{key}\" must be a string"))
                }),
        }
    }

    /// Deterministic JSON echo of the raw parameter map (keys sorted by
    /// the underlying map).
    pub fn echo_json(&self) -> String {
        serde_json::to_string(&self.map).expect("parameter map serializes")
    }
}

#[derive(Debug)]
pub struct Scenario {
    pub kind: Kind,
    pub output_dir: Option<PathBuf>,
    pub params: Params,
}

pub fn parse_scenario(path: &Path) -> Result<Scenario, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        CliError::Validation(format!("cannot read {}: {e}", path.display()))
    })?;
    let raw: RawScenario = serde_json::from_str(&text).map_err(|e| {
        CliError::Validation(format!("{}: {e}", path.display()))
    })?;
    let kind = Kind::parse(&raw.kind)?;
    Ok(Scenario {
        kind,
        output_dir: raw.output_dir,
        params: Params { kind: kind.as_str(), map: raw.parameters },
    })
}
