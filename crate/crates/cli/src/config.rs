//! Layered configuration: preset, then an optional TOML file, then command-line flags.
//!
//! ```toml
//! preset = "desk"
//! seed = 42
//!
//! [ssaid]
//! noise_levels = 40
//!
//! [ssaid.id]
//! threshold_const = 1.0
//! ```

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use ssaid_core::baseline::AicConfig;
use ssaid_core::bench::ExperimentConfig;
use ssaid_core::simulate::SseSignalSpec;
use ssaid_core::SsaidConfig;

use crate::error::{CliError, CliResult};
use crate::gps::Component;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    #[default]
    Paper,
    Desk,
}

impl Preset {
    pub fn ssaid(self) -> SsaidConfig {
        match self {
            Preset::Paper => SsaidConfig::paper(),
            Preset::Desk => SsaidConfig::desk(),
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub preset: Option<Preset>,
    pub seed: Option<u64>,
    pub component: Option<Component>,
    pub segment_len: Option<usize>,
    pub ssaid: Option<toml::Table>,
    pub aic: Option<toml::Table>,
    pub simulate: Option<toml::Table>,
    pub experiment: Option<toml::Table>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> CliResult<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Read { path: path.to_path_buf(), source })?;
        toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    pub fn ssaid(&self, preset: Option<Preset>) -> CliResult<SsaidConfig> {
        let base = preset.or(self.preset).unwrap_or_default().ssaid();
        let mut cfg = overlay(base, self.ssaid.as_ref(), "ssaid")?;
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        Ok(cfg)
    }

    pub fn aic(&self) -> CliResult<AicConfig> {
        overlay(AicConfig::default(), self.aic.as_ref(), "aic")
    }

    pub fn simulate(&self) -> CliResult<SseSignalSpec> {
        overlay(SseSignalSpec::default(), self.simulate.as_ref(), "simulate")
    }

    pub fn experiment(&self, base: ExperimentConfig) -> CliResult<ExperimentConfig> {
        overlay(base, self.experiment.as_ref(), "experiment")
    }
}

/// Replace the fields of `base` named in `table`, recursing into sub-tables.
pub fn overlay<T: Serialize + DeserializeOwned>(base: T, table: Option<&toml::Table>, section: &str) -> CliResult<T> {
    let Some(table) = table else {
        return Ok(base);
    };
    let bad = |e: &dyn std::fmt::Display| CliError::Config(format!("[{section}]: {e}"));
    let mut value = toml::Value::try_from(&base).map_err(|e| bad(&e))?;
    merge(&mut value, table);
    value.try_into().map_err(|e: toml::de::Error| bad(&e))
}

fn merge(base: &mut toml::Value, overlay: &toml::Table) {
    let toml::Value::Table(target) = base else {
        *base = toml::Value::Table(overlay.clone());
        return;
    };
    for (key, value) in overlay {
        match (target.get_mut(key), value) {
            (Some(existing @ toml::Value::Table(_)), toml::Value::Table(sub)) => merge(existing, sub),
            _ => {
                target.insert(key.clone(), value.clone());
            }
        }
    }
}
