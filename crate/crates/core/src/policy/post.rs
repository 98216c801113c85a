use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ActionLabel, ClusterSize};
use crate::solver::PolicyDecision;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PostProcessConfig {
    /// Minimum relative gain, in percent, for an action to go ahead; 0
    /// disables the check.
    pub benefit_threshold_pct: f64,
    /// Ticks averaged for the instantiation load; 1 disables smoothing.
    pub smoothing_window: usize,
}

impl Default for PostProcessConfig {
    fn default() -> Self {
        PostProcessConfig {
            benefit_threshold_pct: 0.0,
            smoothing_window: 1,
        }
    }
}

impl PostProcessConfig {
    pub fn check(&self) -> Result<()> {
        if !(self.benefit_threshold_pct >= 0.0) {
            return Err(Error::Config(format!(
                "benefit threshold must be nonnegative, got {}",
                self.benefit_threshold_pct
            )));
        }
        if self.smoothing_window < 1 {
            return Err(Error::Config("smoothing window must be at least 1".into()));
        }
        Ok(())
    }
}

/// Replaces an action with `no_op` when its expected relative gain over the
/// current utility is below the threshold. Decisions without an estimate are
/// suppressed whenever the threshold is active.
pub fn apply_benefit_threshold(decision: PolicyDecision, current_utility: f64, config: &PostProcessConfig) -> PolicyDecision {
    let threshold = config.benefit_threshold_pct / 100.0;
    if decision.action.is_no_op() || threshold <= 0.0 {
        return decision;
    }
    let keep = match decision.expected_utility {
        None => false,
        Some(expected) if current_utility == 0.0 => expected - current_utility > 0.0,
        Some(expected) => (expected - current_utility) / current_utility.abs() >= threshold,
    };
    if keep {
        decision
    } else {
        let current = match decision.action {
            ActionLabel::Add(n) => ClusterSize(decision.target.0 - n),
            ActionLabel::Rem(n) => ClusterSize(decision.target.0 + n),
            ActionLabel::NoOp => decision.target,
        };
        PolicyDecision {
            interpolated: decision.interpolated,
            ..PolicyDecision::no_op(current, decision.expected_utility)
        }
    }
}

/// Mean of the last `window` loads.
pub fn smooth_load(history: &[f64], window: usize) -> Result<f64> {
    if window < 1 {
        return Err(Error::Config("smoothing window must be at least 1".into()));
    }
    if history.is_empty() {
        return Err(Error::NoData("no load history".into()));
    }
    let tail = &history[history.len().saturating_sub(window)..];
    Ok(tail.iter().sum::<f64>() / tail.len() as f64)
}
