//! Decision policies: the reactive rule, the Q-learning baseline and the
//! model-based policies, plus benefit-threshold and smoothing post-processing.

mod mdp;
mod post;
mod re;
mod rl;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ClusterSize, ModelConfig};
use crate::reward::{ClusteringConfig, LogStore, MeasurementRecord, UtilityConfig};
use crate::solver::PolicyDecision;

pub use mdp::{instantiate, instantiate_model, mdp_decide, Instantiation, MdpPolicy};
pub use post::{apply_benefit_threshold, smooth_load, PostProcessConfig};
pub use re::{re_decide, REConfig, RePolicy};
pub use rl::{permitted_actions, rl_decide, rl_update, QTable, RlConfig, RlPolicy};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PolicyKind {
    #[serde(rename = "RE")]
    Re,
    #[serde(rename = "RL_MB", alias = "RL-MB")]
    RlMb,
    #[serde(rename = "MDP_MB", alias = "MDP-MB")]
    MdpMb,
    #[serde(rename = "MDP_EB", alias = "MDP-EB")]
    MdpEb,
    #[serde(rename = "MDP2")]
    Mdp2,
    #[serde(rename = "MDP3")]
    Mdp3,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 6] = [
        PolicyKind::Re,
        PolicyKind::RlMb,
        PolicyKind::MdpMb,
        PolicyKind::MdpEb,
        PolicyKind::Mdp2,
        PolicyKind::Mdp3,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PolicyKind::Re => "RE",
            PolicyKind::RlMb => "RL-MB",
            PolicyKind::MdpMb => "MDP-MB",
            PolicyKind::MdpEb => "MDP-EB",
            PolicyKind::Mdp2 => "MDP2",
            PolicyKind::Mdp3 => "MDP3",
        }
    }

    pub fn is_mdp(self) -> bool {
        !matches!(self, PolicyKind::Re | PolicyKind::RlMb)
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PolicyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.to_ascii_uppercase().replace('-', "_");
        match norm.as_str() {
            "RE" => Ok(PolicyKind::Re),
            "RL_MB" => Ok(PolicyKind::RlMb),
            "MDP_MB" => Ok(PolicyKind::MdpMb),
            "MDP_EB" => Ok(PolicyKind::MdpEb),
            "MDP2" => Ok(PolicyKind::Mdp2),
            "MDP3" => Ok(PolicyKind::Mdp3),
            _ => Err(Error::Config(format!("unknown policy `{s}`"))),
        }
    }
}

/// Everything a policy may look at when deciding.
#[derive(Debug, Clone, Copy)]
pub struct DecisionContext<'a> {
    pub store: &'a LogStore,
    pub current: ClusterSize,
    /// Load used for model instantiation, possibly smoothed.
    pub load: f64,
    /// Latest raw measurement.
    pub measurement: MeasurementRecord,
    /// Mean realised utility since the previous decision.
    pub realized_utility: Option<f64>,
}

/// Shared configuration for building policies.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PolicySettings {
    pub model: ModelConfig,
    pub clustering: ClusteringConfig,
    pub utility: UtilityConfig,
    pub re: REConfig,
    pub rl: RlConfig,
}

pub trait Policy: Send {
    fn kind(&self) -> PolicyKind;

    fn decide(&mut self, ctx: &DecisionContext<'_>) -> Result<PolicyDecision>;
}

/// A fresh policy instance with its own learning state.
pub fn make_policy(kind: PolicyKind, settings: &PolicySettings) -> Box<dyn Policy> {
    match kind {
        PolicyKind::Re => Box::new(RePolicy::new(settings.re, settings.model)),
        PolicyKind::RlMb => Box::new(RlPolicy::new(settings.clone())),
        _ => Box::new(MdpPolicy::new(kind, settings.clone())),
    }
}
