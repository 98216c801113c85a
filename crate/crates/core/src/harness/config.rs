use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::emulator::{gen_synthetic_dataset, load_grid, LoadProfile, Schedule, SyntheticModelParams};
use crate::error::{Error, Result};
use crate::model::ModelConfig;
use crate::policy::{PolicyKind, PolicySettings, PostProcessConfig, REConfig, RlConfig};
use crate::reward::{ClusteringConfig, LogStore, UtilityConfig};

/// Full description of a policy comparison.
///
/// ```toml
/// policies = ["RE", "RL_MB", "MDP_EB"]
/// runs = 10
/// base_seed = 42
///
/// [utility]
/// kind = "r1"
/// latency_threshold_ms = 60.0
///
/// [schedule]
/// decision_every = 10
/// horizon = 315
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub policies: Vec<PolicyKind>,
    pub runs: usize,
    pub base_seed: u64,
    /// Relative noise added to replayed log records.
    pub noise_fraction: f64,
    /// Measurement CSV; a synthetic dataset is generated when absent.
    pub dataset_path: Option<PathBuf>,
    pub model: ModelConfig,
    pub utility: UtilityConfig,
    pub clustering: ClusteringConfig,
    pub load: LoadProfile,
    pub post: PostProcessConfig,
    pub schedule: Schedule,
    pub re: REConfig,
    pub rl: RlConfig,
    pub synthetic: SyntheticModelParams,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            policies: PolicyKind::ALL.to_vec(),
            runs: 10,
            base_seed: 42,
            noise_fraction: 0.05,
            dataset_path: None,
            model: ModelConfig::default(),
            utility: UtilityConfig::default(),
            clustering: ClusteringConfig::default(),
            load: LoadProfile::default(),
            post: PostProcessConfig::default(),
            schedule: Schedule::default(),
            re: REConfig::default(),
            rl: RlConfig::default(),
            synthetic: SyntheticModelParams::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// Reads and checks a config file. A relative dataset path is resolved
    /// against the file's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = ExperimentConfig::from_toml_str(&text)?;
        if let Some(p) = &cfg.dataset_path {
            if p.is_relative() {
                if let Some(dir) = path.parent() {
                    cfg.dataset_path = Some(dir.join(p));
                }
            }
        }
        cfg.check()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serialises")
    }

    pub fn check(&self) -> Result<()> {
        if self.policies.is_empty() {
            return Err(Error::Config("no policies listed".into()));
        }
        if self.runs < 1 {
            return Err(Error::Config("runs must be at least 1".into()));
        }
        if !(self.noise_fraction >= 0.0) {
            return Err(Error::Config("noise_fraction must be nonnegative".into()));
        }
        if let Some(p) = &self.dataset_path {
            if !p.exists() {
                return Err(Error::Config(format!("dataset {} does not exist", p.display())));
            }
        }
        self.model.check()?;
        self.utility.check()?;
        self.clustering.check()?;
        self.load.check()?;
        self.post.check()?;
        self.schedule.check(&self.model)?;
        self.re.check()?;
        self.rl.check()?;
        self.synthetic.check()?;
        Ok(())
    }

    pub fn policy_settings(&self) -> PolicySettings {
        PolicySettings {
            model: self.model,
            clustering: self.clustering.clone(),
            utility: self.utility,
            re: self.re,
            rl: self.rl,
        }
    }

    /// The measurement log: the configured file, or a synthetic dataset over
    /// the model's sizes and the load range in bucket-width steps.
    pub fn load_store(&self) -> Result<LogStore> {
        let width = self.clustering.load_bucket_width;
        match &self.dataset_path {
            Some(p) => LogStore::load_csv(width, p),
            None => {
                let loads = load_grid(self.load.lambda_min, self.load.lambda_max, width);
                let records = gen_synthetic_dataset(&self.synthetic, self.model.min_vms..=self.model.max_vms, &loads)?;
                LogStore::from_records(width, records)
            }
        }
    }

    /// Seed of run `run`; shared by every policy.
    pub fn run_seed(&self, run: usize) -> u64 {
        self.base_seed.wrapping_add(run as u64)
    }
}
