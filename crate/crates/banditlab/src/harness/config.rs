//! TOML experiment and instance files.
//!
//! ```toml
//! version = 1
//! seeds = [1, 2, 3]
//! output_dir = "out"
//!
//! [instance]                 # or: instance_file = "instance.toml"
//! actions = [[1.0, 0.0], [0.0, 1.0]]
//! theta = [-0.1, 0.1]
//!
//! [environment]
//! kind = "corrupted"         # stochastic | corrupted | adversarial
//! generator = "front_loaded"
//! budget = 20.0
//!
//! [algorithm]
//! name = "reolb"             # reolb | botw | ghp
//! delta = 0.1
//! preset = "demo"            # demo | paper
//! horizon = 4096
//!
//! [sweep]
//! horizons = [1024, 4096]
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::algo::Preset;
use crate::env::EnvSpec;
use crate::error::{BanditError, Result};
use crate::instance::{make_instance, validate_action_set, BanditInstance};

pub const CONFIG_VERSION: u32 = 1;

/// Action vectors and θ, optionally with a default environment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceSpec {
    /// Optional; checked against the rows when present.
    #[serde(default)]
    pub d: Option<usize>,
    pub actions: Vec<Vec<f64>>,
    pub theta: Vec<f64>,
    #[serde(default)]
    pub environment: Option<EnvSpec>,
}

impl InstanceSpec {
    pub fn build(&self) -> Result<BanditInstance> {
        if let Some(d) = self.d {
            if let Some(row) = self.actions.iter().find(|r| r.len() != d) {
                return Err(BanditError::LengthMismatch { expected: d, got: row.len() });
            }
        }
        make_instance(validate_action_set(self.actions.clone())?, self.theta.clone())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        toml::from_str(&text).map_err(|e| BanditError::Config(format!("{}: {e}", path.display())))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlgorithmConfig {
    pub name: String,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default)]
    pub preset: Preset,
    /// Overrides the preset's scale on β's 2^15 and on C_1, L_0.
    #[serde(default)]
    pub constant_scale: Option<f64>,
    pub horizon: usize,
    #[serde(default = "default_blackbox")]
    pub blackbox: String,
}

fn default_delta() -> f64 {
    0.1
}

fn default_blackbox() -> String {
    "ghp".into()
}

impl AlgorithmConfig {
    pub fn scale(&self) -> f64 {
        self.constant_scale.unwrap_or_else(|| self.preset.constant_scale())
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    /// Horizons to run; defaults to the algorithm's horizon.
    #[serde(default)]
    pub horizons: Vec<usize>,
    /// Environments to run; defaults to the top-level environment.
    #[serde(default)]
    pub environments: Vec<EnvSpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub version: u32,
    #[serde(default)]
    pub instance: Option<InstanceSpec>,
    #[serde(default)]
    pub instance_file: Option<PathBuf>,
    #[serde(default)]
    pub environment: Option<EnvSpec>,
    pub algorithm: AlgorithmConfig,
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub sweep: Option<SweepConfig>,
}

impl ExperimentConfig {
    /// Parses and validates; relative `instance_file` paths resolve against `base`.
    pub fn parse(text: &str, base: Option<&Path>) -> Result<Self> {
        let mut cfg: Self = toml::from_str(text).map_err(|e| BanditError::Config(e.to_string()))?;
        if let (Some(base), Some(f)) = (base, cfg.instance_file.as_mut()) {
            if f.is_relative() {
                *f = base.join(&*f);
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text, path.parent())
    }

    pub fn validate(&self) -> Result<()> {
        if self.version != CONFIG_VERSION {
            return Err(BanditError::Config(format!("unsupported config version {}", self.version)));
        }
        let a = &self.algorithm;
        if !matches!(a.name.as_str(), "reolb" | "botw" | "ghp") {
            return Err(BanditError::Config(format!("unknown algorithm '{}'", a.name)));
        }
        if a.blackbox != "ghp" {
            return Err(BanditError::Config(format!("unsupported black box '{}'", a.blackbox)));
        }
        if !(a.delta > 0.0 && a.delta <= 0.1) {
            return Err(BanditError::Config(format!("delta must lie in (0, 0.1], got {}", a.delta)));
        }
        if a.horizon == 0 || self.sweep.as_ref().is_some_and(|s| s.horizons.contains(&0)) {
            return Err(BanditError::Config("horizon must be at least 1".into()));
        }
        if !(a.scale() > 0.0 && a.scale().is_finite()) {
            return Err(BanditError::Config(format!("constant_scale must be positive, got {}", a.scale())));
        }
        if self.seeds.is_empty() {
            return Err(BanditError::Config("at least one seed is required".into()));
        }
        match (&self.instance, &self.instance_file) {
            (Some(_), Some(_)) => Err(BanditError::Config("give either [instance] or instance_file, not both".into())),
            (None, None) => Err(BanditError::Config("missing [instance] or instance_file".into())),
            _ => Ok(()),
        }
    }

    pub fn instance_spec(&self) -> Result<InstanceSpec> {
        match (&self.instance, &self.instance_file) {
            (Some(spec), _) => Ok(spec.clone()),
            (None, Some(path)) => InstanceSpec::load(path),
            (None, None) => Err(BanditError::Config("missing [instance] or instance_file".into())),
        }
    }

    /// Top-level environment, else the instance file's, else stochastic.
    pub fn environment(&self, spec: &InstanceSpec) -> EnvSpec {
        self.environment.clone().or_else(|| spec.environment.clone()).unwrap_or_default()
    }

    pub fn sweep_horizons(&self) -> Vec<usize> {
        match &self.sweep {
            Some(s) if !s.horizons.is_empty() => s.horizons.clone(),
            _ => vec![self.algorithm.horizon],
        }
    }

    pub fn sweep_environments(&self, spec: &InstanceSpec) -> Vec<EnvSpec> {
        match &self.sweep {
            Some(s) if !s.environments.is_empty() => s.environments.clone(),
            _ => vec![self.environment(spec)],
        }
    }
}
