use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::kmeans::ClusterSummary;
use crate::error::{Error, Result};
use crate::model::BehaviorReward;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UtilityKind {
    /// Throughput per VM.
    R1,
    /// Inverse VM count.
    R2,
}

impl FromStr for UtilityKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "r1" => Ok(UtilityKind::R1),
            "r2" => Ok(UtilityKind::R2),
            other => Err(Error::Config(format!("unknown utility `{other}` (expected r1 or r2)"))),
        }
    }
}

impl fmt::Display for UtilityKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            UtilityKind::R1 => "r1",
            UtilityKind::R2 => "r2",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct UtilityConfig {
    pub kind: UtilityKind,
    pub latency_threshold_ms: f64,
}

impl Default for UtilityConfig {
    fn default() -> Self {
        UtilityConfig {
            kind: UtilityKind::R1,
            latency_threshold_ms: 60.0,
        }
    }
}

impl UtilityConfig {
    pub fn check(&self) -> Result<()> {
        if !(self.latency_threshold_ms > 0.0) || !self.latency_threshold_ms.is_finite() {
            return Err(Error::Config(format!(
                "latency threshold must be positive, got {}",
                self.latency_threshold_ms
            )));
        }
        Ok(())
    }

    pub fn violated(&self, latency_ms: f64) -> bool {
        latency_ms > self.latency_threshold_ms
    }
}

/// Utility of one observation; −1 whenever latency exceeds the threshold.
pub fn utility_eval(config: &UtilityConfig, latency_ms: f64, throughput: f64, vms_num: u32) -> f64 {
    if config.violated(latency_ms) {
        return -1.0;
    }
    let vms = vms_num.max(1) as f64;
    match config.kind {
        UtilityKind::R1 => throughput / vms,
        UtilityKind::R2 => 1.0 / vms,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RewardMode {
    /// Utility of the largest cluster's center.
    MB,
    /// Weighted mean of the per-cluster utilities.
    EB,
}

/// Reward of a size from its behaviour clusters.
pub fn state_reward(clusters: &[ClusterSummary], mode: RewardMode, utility: &UtilityConfig, vms_num: u32) -> Result<f64> {
    if clusters.is_empty() {
        return Err(Error::NoData(format!("no behaviour clusters for {vms_num} VMs")));
    }
    let u = |c: &ClusterSummary| utility_eval(utility, c.center.latency_ms, c.center.throughput, vms_num);
    Ok(match mode {
        RewardMode::MB => {
            let top = clusters
                .iter()
                .min_by(|a, b| {
                    b.weight
                        .total_cmp(&a.weight)
                        .then(a.center.latency_ms.total_cmp(&b.center.latency_ms))
                })
                .expect("nonempty");
            u(top)
        }
        RewardMode::EB => clusters.iter().map(|c| c.weight * u(c)).sum(),
    })
}

/// Per-cluster rewards and weights for the multi-behaviour model.
pub fn behavior_rewards(clusters: &[ClusterSummary], utility: &UtilityConfig, vms_num: u32) -> Vec<BehaviorReward> {
    clusters
        .iter()
        .map(|c| BehaviorReward {
            reward: utility_eval(utility, c.center.latency_ms, c.center.throughput, vms_num),
            weight: c.weight,
            center: Some(c.center),
        })
        .collect()
}
