//! Flat key-value run configuration. Command-line flags override file keys.

use std::path::{Path, PathBuf};

use minsubfi_core::alpha::AlphaUpdateConfig;
use minsubfi_core::env::EnvId;
use minsubfi_core::learners::{AlphaMethod, Baseline, Init, Optimizer, ReturnMode, TrainConfig, Variant};
use minsubfi_core::policy::BcConfig;
use minsubfi_core::{Aggregation, SubdomConfig, SubdomMode};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{CliError, Result};
use crate::io::read_json;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureSource {
    #[default]
    Handcrafted,
    HandcraftedQuadratic,
    Learned,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub env: EnvId,
    pub demos: Option<PathBuf>,
    pub out: PathBuf,
    pub seeds: Vec<u64>,

    pub variant: Variant,
    pub init: Init,
    pub updates: usize,
    pub rollouts_per_update: usize,
    pub learning_rate: f64,
    pub optimizer: Optimizer,
    pub baseline: Baseline,
    pub return_mode: ReturnMode,
    pub lambda_theta: f64,
    pub hidden: Vec<usize>,
    pub snippet_fraction: f64,
    pub snippet_count: usize,
    pub pretrain_updates: usize,
    pub alpha_guard_updates: usize,
    pub log_ratio_clip: f64,

    pub subdom_mode: SubdomMode,
    pub aggregation: Aggregation,
    pub alpha_method: AlphaMethod,
    pub initial_alpha: f64,
    pub alpha_step_size: f64,
    pub alpha_lambda: f64,
    pub alpha_min: f64,
    pub alpha_max: f64,

    pub bc_epochs: usize,
    pub bc_learning_rate: f64,
    pub bc_batch_size: usize,

    pub features: FeatureSource,
    /// Feature-net file used when `features = learned`; trained from the demos when absent.
    pub featnet: Option<PathBuf>,
    /// Return threshold splitting acceptable from unacceptable demonstrations; the median when absent.
    pub pref_threshold: Option<f64>,
    pub featnet_epochs: usize,
    pub featnet_learning_rate: f64,
    pub pad: bool,
    pub pad_horizon: usize,

    pub n_rollouts: usize,
    /// Evaluation seed is `seed + eval_seed_offset`.
    pub eval_seed_offset: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        let t = TrainConfig::default();
        let a = AlphaUpdateConfig::default();
        let bc = BcConfig::default();
        RunConfig {
            env: EnvId::CartPole,
            demos: None,
            out: PathBuf::from("out"),
            seeds: vec![0],
            variant: t.variant,
            init: t.init,
            updates: t.updates,
            rollouts_per_update: t.rollouts_per_update,
            learning_rate: t.learning_rate,
            optimizer: t.optimizer,
            baseline: t.baseline,
            return_mode: t.return_mode,
            lambda_theta: t.lambda_theta,
            hidden: t.hidden,
            snippet_fraction: t.snippet_fraction,
            snippet_count: t.snippet_count,
            pretrain_updates: t.pretrain_updates,
            alpha_guard_updates: t.alpha_guard_updates,
            log_ratio_clip: t.log_ratio_clip,
            subdom_mode: t.subdom.mode,
            aggregation: t.subdom.aggregation,
            alpha_method: t.alpha_method,
            initial_alpha: t.initial_alpha,
            alpha_step_size: a.step_size,
            alpha_lambda: a.lambda,
            alpha_min: a.alpha_min,
            alpha_max: a.alpha_max,
            bc_epochs: bc.epochs,
            bc_learning_rate: bc.learning_rate,
            bc_batch_size: bc.batch_size,
            features: FeatureSource::Handcrafted,
            featnet: None,
            pref_threshold: None,
            featnet_epochs: 500,
            featnet_learning_rate: 0.01,
            pad: true,
            pad_horizon: minsubfi_core::demos::DEFAULT_PAD_HORIZON,
            n_rollouts: 200,
            eval_seed_offset: 1000,
        }
    }
}

impl RunConfig {
    /// Loads `file` (a flat config or a run manifest) and applies `overrides` on top.
    pub fn resolve(file: Option<&Path>, overrides: &[(String, Value)]) -> Result<Self> {
        let mut map = match file {
            Some(path) => {
                let v: Value = read_json(path)?;
                let v = match v {
                    Value::Object(mut m) if m.contains_key("manifest_version") => m.remove("config").unwrap_or(Value::Null),
                    other => other,
                };
                match v {
                    Value::Object(m) => m,
                    _ => return Err(CliError::format(path, "config must be a JSON object")),
                }
            }
            None => Map::new(),
        };
        for (k, v) in overrides {
            map.insert(k.clone(), v.clone());
        }
        let cfg: RunConfig = serde_json::from_value(Value::Object(map)).map_err(|e| CliError::Usage(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(CliError::Usage("at least one seed is required".into()));
        }
        if self.n_rollouts == 0 {
            return Err(CliError::Usage("n_rollouts must be at least 1".into()));
        }
        if let Some(p) = &self.demos {
            if !p.exists() {
                return Err(CliError::Usage(format!("demo file {} does not exist", p.display())));
            }
        }
        if let Some(p) = &self.featnet {
            if !p.exists() {
                return Err(CliError::Usage(format!("feature-net file {} does not exist", p.display())));
            }
        }
        self.train_config(0).validate()?;
        Ok(())
    }

    pub fn demos_path(&self) -> Result<&Path> {
        self.demos.as_deref().ok_or_else(|| CliError::Usage("a demo file is required (--demos)".into()))
    }

    pub fn subdom(&self) -> SubdomConfig {
        SubdomConfig::new(self.subdom_mode, self.aggregation)
    }

    pub fn alpha(&self) -> AlphaUpdateConfig {
        AlphaUpdateConfig {
            step_size: self.alpha_step_size,
            lambda: self.alpha_lambda,
            alpha_min: self.alpha_min,
            alpha_max: self.alpha_max,
        }
    }

    pub fn train_config(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            variant: self.variant,
            rollouts_per_update: self.rollouts_per_update,
            learning_rate: self.learning_rate,
            baseline: self.baseline,
            return_mode: self.return_mode,
            snippet_fraction: self.snippet_fraction,
            snippet_count: self.snippet_count,
            updates: self.updates,
            seed,
            lambda_theta: self.lambda_theta,
            init: self.init,
            alpha_method: self.alpha_method,
            alpha: self.alpha(),
            initial_alpha: self.initial_alpha,
            subdom: self.subdom(),
            hidden: self.hidden.clone(),
            optimizer: self.optimizer,
            bc: BcConfig {
                epochs: self.bc_epochs,
                learning_rate: self.bc_learning_rate,
                batch_size: self.bc_batch_size,
                ..BcConfig::default()
            },
            pretrain_updates: self.pretrain_updates,
            alpha_guard_updates: self.alpha_guard_updates,
            log_ratio_clip: self.log_ratio_clip,
        }
    }
}

/// Parses `key=value`; the value is read as JSON when it parses, otherwise as a string.
pub fn parse_override(s: &str) -> std::result::Result<(String, Value), String> {
    let (k, v) = s.split_once('=').ok_or_else(|| format!("expected key=value, got {s:?}"))?;
    let value = serde_json::from_str(v).unwrap_or_else(|_| Value::String(v.to_string()));
    Ok((k.trim().to_string(), value))
}

/// Parses a comma-separated seed list such as `0,1,2`.
pub fn parse_seeds(s: &str) -> std::result::Result<Vec<u64>, String> {
    s.split(',').map(|p| p.trim().parse::<u64>().map_err(|e| format!("bad seed {p:?}: {e}"))).collect()
}
