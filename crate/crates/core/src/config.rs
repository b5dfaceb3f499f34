//! Pipeline configuration: defaults, key-value config files, validation.
//!
//! Config file syntax is one `key = value` per line; `#` starts a comment.
//! Keys are the long CLI flag names without the leading dashes
//! (`levels`, `lbp-mode`, `train-fraction`, ...). Boolean keys are
//! `standardize` and `stratify`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classify::RfConfig;
use crate::eval::SplitSpec;
use crate::features::ExtractConfig;
use crate::glcm::Aggregation;
use crate::lbp::LbpMode;
use crate::seed;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ConfigError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("invalid value for `{key}`: {msg}")]
    Invalid { key: &'static str, msg: String },
}

fn invalid(key: &'static str, msg: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        key,
        msg: msg.into(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub resize: (usize, usize),
    pub levels: usize,
    pub distance: usize,
    pub aggregation: Aggregation,
    pub lbp_mode: LbpMode,
    pub standardize: bool,
    pub k: usize,
    pub trees: usize,
    pub max_features: Option<usize>,
    pub train_fraction: f64,
    pub stratify: bool,
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            resize: (128, 128),
            levels: 8,
            distance: 1,
            aggregation: Aggregation::Average,
            lbp_mode: LbpMode::RotationInvariant,
            standardize: true,
            k: 5,
            trees: 100,
            max_features: None,
            train_fraction: 0.9,
            stratify: true,
            seed: 42,
        }
    }
}

impl PipelineConfig {
    /// Checks every value against the owning module's preconditions.
    /// Data-dependent limits (k vs. training size, max-features vs. dimension)
    /// are checked once the data is known.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.resize.0 == 0 || self.resize.1 == 0 {
            return Err(invalid("resize", "dimensions must be at least 1"));
        }
        if self.resize.0 < 3 || self.resize.1 < 3 {
            return Err(invalid("resize", "LBP needs at least 3x3 pixels"));
        }
        if !(2..=256).contains(&self.levels) {
            return Err(invalid("levels", format!("{} not in 2..=256", self.levels)));
        }
        if self.distance == 0 {
            return Err(invalid("distance", "must be at least 1"));
        }
        if self.distance >= self.resize.0.min(self.resize.1) {
            return Err(invalid("distance", "no pixel pair fits the working resolution"));
        }
        if self.k == 0 || self.k.is_multiple_of(2) {
            return Err(invalid("k", format!("{} is not a positive odd number", self.k)));
        }
        if self.trees == 0 {
            return Err(invalid("trees", "must be at least 1"));
        }
        if self.max_features == Some(0) {
            return Err(invalid("max-features", "must be at least 1"));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(invalid(
                "train-fraction",
                format!("{} not strictly between 0 and 1", self.train_fraction),
            ));
        }
        Ok(())
    }

    pub fn extract_config(&self) -> ExtractConfig {
        ExtractConfig {
            resize: Some(self.resize),
            levels: self.levels,
            distance: self.distance,
            aggregation: self.aggregation,
            lbp_mode: self.lbp_mode,
        }
    }

    pub fn rf_config(&self) -> RfConfig {
        RfConfig {
            n_trees: self.trees,
            max_features: self.max_features,
            seed: seed::derive(self.seed, seed::STREAM_FOREST),
            ..RfConfig::default()
        }
    }

    pub fn split_spec(&self) -> SplitSpec {
        SplitSpec {
            train_fraction: self.train_fraction,
            stratified: self.stratify,
            seed: seed::derive(self.seed, seed::STREAM_SPLIT),
        }
    }

    /// Applies `key = value` overrides parsed from a config file.
    pub fn apply_text(&mut self, text: &str) -> Result<(), ConfigError> {
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| ConfigError::Syntax {
                line: n + 1,
                msg: format!("expected `key = value`, got `{line}`"),
            })?;
            self.set(key.trim(), value.trim()).map_err(|e| match e {
                ConfigError::Invalid { key, msg } => ConfigError::Syntax {
                    line: n + 1,
                    msg: format!("{key}: {msg}"),
                },
                ConfigError::Syntax { msg, .. } => ConfigError::Syntax { line: n + 1, msg },
            })?;
        }
        Ok(())
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        fn num<T: std::str::FromStr>(key: &'static str, v: &str) -> Result<T, ConfigError> {
            v.parse().map_err(|_| invalid(key, format!("`{v}` is not a number")))
        }
        fn flag(key: &'static str, v: &str) -> Result<bool, ConfigError> {
            match v {
                "true" | "yes" | "1" => Ok(true),
                "false" | "no" | "0" => Ok(false),
                _ => Err(invalid(key, format!("`{v}` is not a boolean"))),
            }
        }
        match key {
            "resize" => {
                let (w, h) = value
                    .split_once(['x', 'X'])
                    .ok_or_else(|| invalid("resize", "expected WxH"))?;
                self.resize = (num("resize", w.trim())?, num("resize", h.trim())?);
            }
            "levels" => self.levels = num("levels", value)?,
            "distance" => self.distance = num("distance", value)?,
            "aggregation" => {
                self.aggregation = match value {
                    "average" => Aggregation::Average,
                    "concatenate" => Aggregation::Concatenate,
                    _ => return Err(invalid("aggregation", format!("unknown `{value}`"))),
                }
            }
            "lbp-mode" => {
                self.lbp_mode = match value {
                    "raw" => LbpMode::Raw,
                    "ri" => LbpMode::RotationInvariant,
                    _ => return Err(invalid("lbp-mode", format!("unknown `{value}`"))),
                }
            }
            "standardize" => self.standardize = flag("standardize", value)?,
            "k" => self.k = num("k", value)?,
            "trees" => self.trees = num("trees", value)?,
            "max-features" => {
                self.max_features = match value {
                    "auto" => None,
                    v => Some(num("max-features", v)?),
                }
            }
            "train-fraction" => self.train_fraction = num("train-fraction", value)?,
            "stratify" => self.stratify = flag("stratify", value)?,
            "seed" => self.seed = num("seed", value)?,
            other => {
                return Err(ConfigError::Syntax {
                    line: 0,
                    msg: format!("unknown key `{other}`"),
                })
            }
        }
        Ok(())
    }
}
