//! Run configuration: one TOML file drives every subcommand.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::bath::{BathSpec, SystemSpec};
use crate::fdr::TimegridFdrOptions;
use crate::grid::TimeGrid;
use crate::langevin::SigmaPolicy;
use crate::noise::DEFAULT_CLIP;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid value for `{key}`: {message}")]
    Validation { key: String, message: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub t_end: f64,
    pub n_points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    #[serde(default = "default_samples")]
    pub n_samples: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_clip")]
    pub clip: f64,
    #[serde(default = "default_true")]
    pub reweight: bool,
    /// Reference path for `N2^(1)` and `gamma^(1)`.
    #[serde(default)]
    pub sigma_policy: SigmaPolicy,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self {
            n_samples: default_samples(),
            seed: 0,
            clip: DEFAULT_CLIP,
            reweight: true,
            sigma_policy: SigmaPolicy::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SimulationMethod {
    /// `x^(0) + x^(1)` from the Green's functions (requires f(x) = x).
    Perturbative,
    /// Direct march of the nonlinear equation.
    Nonlinear,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    #[serde(default = "default_method")]
    pub method: SimulationMethod,
    #[serde(default = "default_x0")]
    pub x0: f64,
    #[serde(default)]
    pub p0: f64,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        Self { method: default_method(), x0: default_x0(), p0: 0.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_directory")]
    pub directory: PathBuf,
    #[serde(default = "default_formats")]
    pub formats: Vec<OutputFormat>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { directory: default_directory(), formats: default_formats() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub bath: BathSpec,
    pub system: SystemSpec,
    pub grid: GridConfig,
    #[serde(default)]
    pub noise: NoiseConfig,
    #[serde(default)]
    pub simulate: SimulateConfig,
    /// Optional time-domain FDR check; the spectral check always runs.
    #[serde(default)]
    pub fdr: Option<TimegridFdrOptions>,
    #[serde(default)]
    pub outputs: OutputConfig,
    /// Worker threads; 0 lets the runtime decide.
    #[serde(default)]
    pub threads: usize,
}

fn default_samples() -> usize {
    1000
}
fn default_clip() -> f64 {
    DEFAULT_CLIP
}
fn default_true() -> bool {
    true
}
fn default_method() -> SimulationMethod {
    SimulationMethod::Perturbative
}
fn default_x0() -> f64 {
    1.0
}
fn default_directory() -> PathBuf {
    PathBuf::from("qbm-out")
}
fn default_formats() -> Vec<OutputFormat> {
    vec![OutputFormat::Csv, OutputFormat::Json]
}

const KNOWN_KEYS: &[&str] = &[
    "bath", "system", "grid", "noise", "simulate", "fdr", "outputs", "threads", "modes", "lambda", "hbar", "mass",
    "omega", "coupling_q", "coupling_p", "omega_r", "coupling", "potential", "t_end", "n_points", "n_samples", "seed",
    "clip", "reweight", "sigma_policy", "kind", "value", "iterations", "method", "x0", "p0", "omega_max", "n_omega",
    "window", "directory", "formats",
];

/// Closest known key to an unknown one, if any is reasonably close.
fn suggestion(unknown: &str) -> Option<&'static str> {
    KNOWN_KEYS
        .iter()
        .map(|k| (strsim::jaro_winkler(unknown, k), *k))
        .filter(|(score, _)| *score > 0.8)
        .max_by(|a, b| a.0.total_cmp(&b.0))
        .map(|(_, k)| k)
}

fn unknown_field(message: &str) -> Option<String> {
    let start = message.find("unknown field `")? + "unknown field `".len();
    let end = message[start..].find('`')? + start;
    Some(message[start..end].to_string())
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let de = toml::Deserializer::parse(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        let config: RunConfig = serde_path_to_error::deserialize(de).map_err(|err| {
            let path = err.path().to_string();
            let inner = err.inner().message().to_string();
            match unknown_field(&inner) {
                Some(field) => {
                    let key = if path == "." || path.is_empty() {
                        field.clone()
                    } else if path == field || path.ends_with(&format!(".{field}")) {
                        path.clone()
                    } else {
                        format!("{path}.{field}")
                    };
                    let hint = suggestion(&field).map(|s| format!(" (did you mean `{s}`?)")).unwrap_or_default();
                    ConfigError::Validation { key, message: format!("unknown key{hint}") }
                }
                None => ConfigError::Parse(format!("at `{path}`: {inner}")),
            }
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_path(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
        Self::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let fail = |key: String, message: &str| Err(ConfigError::Validation { key, message: message.to_string() });
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if self.bath.modes.is_empty() {
            return fail("bath.modes".into(), "at least one mode is required");
        }
        for (k, m) in self.bath.modes.iter().enumerate() {
            if !positive(m.mass) {
                return fail(format!("bath.modes[{k}].mass"), "must be positive");
            }
            if !positive(m.omega) {
                return fail(format!("bath.modes[{k}].omega"), "must be positive");
            }
            if !m.coupling_q.is_finite() {
                return fail(format!("bath.modes[{k}].coupling_q"), "must be finite");
            }
            if !m.coupling_p.is_finite() {
                return fail(format!("bath.modes[{k}].coupling_p"), "must be finite");
            }
        }
        if !(self.bath.lambda.is_finite() && self.bath.lambda >= 0.0) {
            return fail("bath.lambda".into(), "must be finite and non-negative");
        }
        if !positive(self.bath.hbar) {
            return fail("bath.hbar".into(), "must be positive");
        }
        if !positive(self.system.mass) {
            return fail("system.mass".into(), "must be positive");
        }
        if !positive(self.system.omega_r) {
            return fail("system.omega_r".into(), "must be positive");
        }
        if self.system.coupling.is_zero() || !self.system.coupling.coefficients().iter().all(|c| c.is_finite()) {
            return fail("system.coupling".into(), "needs finite coefficients, not all zero");
        }
        if let Some(p) = &self.system.potential {
            if !p.coefficients().iter().all(|c| c.is_finite()) {
                return fail("system.potential".into(), "coefficients must be finite");
            }
        }
        if !positive(self.grid.t_end) {
            return fail("grid.t_end".into(), "must be positive");
        }
        if self.grid.n_points < 5 {
            return fail("grid.n_points".into(), "must be at least 5");
        }
        if self.noise.n_samples < 2 {
            return fail("noise.n_samples".into(), "must be at least 2");
        }
        if !(self.noise.clip >= 0.0 && self.noise.clip < 1.0) {
            return fail("noise.clip".into(), "must lie in [0, 1)");
        }
        match self.noise.sigma_policy {
            SigmaPolicy::Constant { value } if !value.is_finite() => {
                return fail("noise.sigma_policy.value".into(), "must be finite");
            }
            SigmaPolicy::Picard { iterations: 0 } => {
                return fail("noise.sigma_policy.iterations".into(), "must be at least 1");
            }
            _ => {}
        }
        if !self.simulate.x0.is_finite() {
            return fail("simulate.x0".into(), "must be finite");
        }
        if !self.simulate.p0.is_finite() {
            return fail("simulate.p0".into(), "must be finite");
        }
        if self.simulate.method == SimulationMethod::Perturbative && self.system.coupling.coefficients() != [0.0, 1.0] {
            return fail("simulate.method".into(), "the perturbative solver requires system.coupling = [0.0, 1.0]");
        }
        if let Some(f) = &self.fdr {
            if !positive(f.omega_max) {
                return fail("fdr.omega_max".into(), "must be positive");
            }
            if !positive(f.window) {
                return fail("fdr.window".into(), "must be positive");
            }
        }
        if self.outputs.formats.is_empty() {
            return fail("outputs.formats".into(), "at least one format is required");
        }
        Ok(())
    }

    pub fn time_grid(&self) -> TimeGrid {
        TimeGrid::new(self.grid.t_end, self.grid.n_points).expect("validated grid")
    }

    pub fn wants(&self, format: OutputFormat) -> bool {
        self.outputs.formats.contains(&format)
    }

    /// SHA-256 of the canonical JSON form of everything that affects results
    /// (output location and thread count excluded).
    pub fn hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.outputs.directory = PathBuf::new();
        canonical.threads = 0;
        let json = serde_json::to_string(&canonical).expect("config serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }
}
