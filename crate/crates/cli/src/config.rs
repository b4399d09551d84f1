//! Engine configuration: JSON file plus flag overrides, flags winning.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use tmuad_core::FusionConfig;

use crate::error::{io_err, json_err, CliError, Result};

pub const CONFIG_ENV_VAR: &str = "TMUAD_CONFIG";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EngineConfig {
    pub weights: FusionConfig,
    pub k_object: usize,
    pub k_patch: usize,
    pub seed: u64,
    pub bank_resolution: (u32, u32),
    pub relaxed: bool,
    pub bank_path: Option<PathBuf>,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            weights: FusionConfig::default(),
            k_object: 1000,
            k_patch: 100,
            seed: 0,
            bank_resolution: (448, 448),
            relaxed: false,
            bank_path: None,
        }
    }
}

impl EngineConfig {
    pub fn validate(&self) -> Result<()> {
        self.weights
            .validate()
            .map_err(|e| CliError::Config(e.to_string()))?;
        if self.k_object < 1 || self.k_patch < 1 {
            return Err(CliError::Config("cluster counts must be >= 1".into()));
        }
        if self.bank_resolution.0 < 1 || self.bank_resolution.1 < 1 {
            return Err(CliError::Config("bank resolution must be positive".into()));
        }
        Ok(())
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| io_err(path, e))?;
        let cfg: EngineConfig = serde_json::from_slice(&bytes)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Flag-level overrides; `None` keeps the current value.
#[derive(Debug, Clone, Default)]
pub struct ConfigOverrides {
    pub lambda_text: Option<f64>,
    pub lambda_object: Option<f64>,
    pub lambda_patch: Option<f64>,
    pub k_object: Option<usize>,
    pub k_patch: Option<usize>,
    pub seed: Option<u64>,
    pub bank_resolution: Option<u32>,
    pub relaxed: Option<bool>,
}

impl ConfigOverrides {
    pub fn apply(&self, cfg: &mut EngineConfig) {
        if let Some(v) = self.lambda_text {
            cfg.weights.lambda_text = v;
        }
        if let Some(v) = self.lambda_object {
            cfg.weights.lambda_object = v;
        }
        if let Some(v) = self.lambda_patch {
            cfg.weights.lambda_patch = v;
        }
        if let Some(v) = self.k_object {
            cfg.k_object = v;
        }
        if let Some(v) = self.k_patch {
            cfg.k_patch = v;
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = self.bank_resolution {
            cfg.bank_resolution = (v, v);
        }
        if let Some(v) = self.relaxed {
            cfg.relaxed = v;
        }
    }
}

/// Resolves the effective config: defaults, then the config file (explicit
/// flag or `TMUAD_CONFIG`), then flag overrides; flags win.
pub fn resolve_config(
    base: EngineConfig,
    config_file: Option<&Path>,
    overrides: &ConfigOverrides,
) -> Result<EngineConfig> {
    let mut cfg = match config_file {
        Some(path) => EngineConfig::from_file(path)?,
        None => match std::env::var_os(CONFIG_ENV_VAR) {
            Some(path) => EngineConfig::from_file(Path::new(&path))?,
            None => base,
        },
    };
    overrides.apply(&mut cfg);
    cfg.validate()?;
    Ok(cfg)
}

/// Parses JSON out of `bytes`, reporting the byte offset on failure.
pub fn parse_json<T: serde::de::DeserializeOwned>(path: &Path, bytes: &[u8]) -> Result<T> {
    serde_json::from_slice(bytes).map_err(|e| json_err(path, bytes, e))
}
