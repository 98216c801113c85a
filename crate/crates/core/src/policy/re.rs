use serde::{Deserialize, Serialize};

use super::{DecisionContext, Policy, PolicyKind};
use crate::error::{Error, Result};
use crate::model::{ActionLabel, ClusterSize, ModelConfig};
use crate::solver::PolicyDecision;

/// Threshold rule: add when latency is above the upper bound, remove when it
/// is below the lower one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct REConfig {
    pub upper_latency_ms: f64,
    /// Defaults to half the upper bound.
    pub lower_latency_ms: Option<f64>,
    /// VMs added per action; defaults to the model's add limit.
    pub add_step: Option<u32>,
    /// VMs removed per action; defaults to the model's remove limit.
    pub rem_step: Option<u32>,
}

impl Default for REConfig {
    fn default() -> Self {
        REConfig {
            upper_latency_ms: 60.0,
            lower_latency_ms: None,
            add_step: None,
            rem_step: None,
        }
    }
}

impl REConfig {
    pub fn lower(&self) -> f64 {
        self.lower_latency_ms.unwrap_or(self.upper_latency_ms / 2.0)
    }

    pub fn steps(&self, model: &ModelConfig) -> (u32, u32) {
        (
            self.add_step.unwrap_or(model.add_limit),
            self.rem_step.unwrap_or(model.rem_limit),
        )
    }

    pub fn check(&self) -> Result<()> {
        if !(self.lower() < self.upper_latency_ms) {
            return Err(Error::Config(format!(
                "RE lower latency {} must be below upper latency {}",
                self.lower(),
                self.upper_latency_ms
            )));
        }
        if self.add_step == Some(0) || self.rem_step == Some(0) {
            return Err(Error::Config("RE steps must be at least 1".into()));
        }
        Ok(())
    }
}

/// Fixed-size reaction to the current latency, clipped to the size range.
pub fn re_decide(config: &REConfig, current_latency_ms: f64, current: ClusterSize, model: &ModelConfig) -> PolicyDecision {
    let (add_step, rem_step) = config.steps(model);
    let plan = if current_latency_ms > config.upper_latency_ms {
        ActionLabel::Add(add_step)
    } else if current_latency_ms < config.lower() {
        ActionLabel::Rem(rem_step)
    } else {
        ActionLabel::NoOp
    };
    PolicyDecision::bounded_plan(plan, current, add_step, rem_step, (model.min_vms, model.max_vms), None)
}

pub struct RePolicy {
    config: REConfig,
    model: ModelConfig,
}

impl RePolicy {
    pub fn new(config: REConfig, model: ModelConfig) -> Self {
        RePolicy { config, model }
    }
}

impl Policy for RePolicy {
    fn kind(&self) -> PolicyKind {
        PolicyKind::Re
    }

    fn decide(&mut self, ctx: &DecisionContext<'_>) -> Result<PolicyDecision> {
        Ok(re_decide(&self.config, ctx.measurement.latency_ms, ctx.current, &self.model))
    }
}
