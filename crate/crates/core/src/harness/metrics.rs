use std::io::Write;

use serde::Serialize;

use crate::emulator::{ExperimentTrace, TraceRow};
use crate::error::Result;
use crate::policy::PolicyKind;
use crate::reward::{utility_eval, UtilityConfig};

/// Scores of one trace.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceMetrics {
    pub policy: PolicyKind,
    pub run: usize,
    pub seed: u64,
    pub mean_utility: f64,
    pub violations: usize,
    pub decisions: usize,
    pub mean_decision_ms: f64,
    pub max_decision_ms: f64,
    pub valid: bool,
}

fn mean(xs: impl IntoIterator<Item = f64>) -> f64 {
    let (sum, n) = xs.into_iter().fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

/// Mean utility and violation count of `rows`, both re-derived from the
/// realised latency and throughput under `utility`.
pub fn score_rows(rows: &[TraceRow], utility: &UtilityConfig) -> (f64, usize) {
    let mean_utility = mean(rows.iter().map(|r| utility_eval(utility, r.latency_ms, r.throughput, r.vms)));
    let violations = rows.iter().filter(|r| utility.violated(r.latency_ms)).count();
    (mean_utility, violations)
}

pub fn compute_metrics(trace: &ExperimentTrace, utility: &UtilityConfig) -> TraceMetrics {
    let (mean_utility, violations) = score_rows(&trace.rows, utility);
    let times: Vec<f64> = trace.rows.iter().filter_map(|r| r.decision_ms).collect();
    TraceMetrics {
        policy: trace.policy,
        run: trace.run,
        seed: trace.seed,
        mean_utility,
        violations,
        decisions: times.len(),
        mean_decision_ms: mean(times.iter().copied()),
        max_decision_ms: times.iter().copied().fold(0.0, f64::max),
        valid: trace.valid,
    }
}

/// Aggregate of one policy over all runs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PolicySummary {
    pub policy: PolicyKind,
    pub runs: usize,
    /// Mean of the per-run mean utilities.
    pub mean_utility: f64,
    /// Mean number of violations per run.
    pub mean_violations: f64,
    pub total_violations: usize,
    pub mean_decision_ms: f64,
    pub max_decision_ms: f64,
    pub invalid_runs: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsSummary {
    pub policies: Vec<PolicySummary>,
    /// Per-run metrics, grouped by policy in listing order, then by run.
    pub per_run: Vec<TraceMetrics>,
}

impl MetricsSummary {
    /// Aggregates per-run metrics; policies appear in first-seen order.
    pub fn from_runs(per_run: Vec<TraceMetrics>) -> Self {
        let mut order: Vec<PolicyKind> = Vec::new();
        for m in &per_run {
            if !order.contains(&m.policy) {
                order.push(m.policy);
            }
        }
        let policies = order
            .into_iter()
            .map(|policy| {
                let runs: Vec<&TraceMetrics> = per_run.iter().filter(|m| m.policy == policy).collect();
                let with_decisions: Vec<&&TraceMetrics> = runs.iter().filter(|m| m.decisions > 0).collect();
                let decisions: usize = with_decisions.iter().map(|m| m.decisions).sum();
                PolicySummary {
                    policy,
                    runs: runs.len(),
                    mean_utility: mean(runs.iter().map(|m| m.mean_utility)),
                    mean_violations: mean(runs.iter().map(|m| m.violations as f64)),
                    total_violations: runs.iter().map(|m| m.violations).sum(),
                    mean_decision_ms: if decisions == 0 {
                        0.0
                    } else {
                        with_decisions.iter().map(|m| m.mean_decision_ms * m.decisions as f64).sum::<f64>() / decisions as f64
                    },
                    max_decision_ms: runs.iter().map(|m| m.max_decision_ms).fold(0.0, f64::max),
                    invalid_runs: runs.iter().filter(|m| !m.valid).count(),
                }
            })
            .collect();
        MetricsSummary { policies, per_run }
    }

    pub fn policy(&self, kind: PolicyKind) -> Option<&PolicySummary> {
        self.policies.iter().find(|p| p.policy == kind)
    }

    pub fn run(&self, kind: PolicyKind, run: usize) -> Option<&TraceMetrics> {
        self.per_run.iter().find(|m| m.policy == kind && m.run == run)
    }

    pub fn write_summary_csv(&self, writer: impl Write) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        for p in &self.policies {
            wtr.serialize(p)?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn write_runs_csv(&self, writer: impl Write) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        for m in &self.per_run {
            wtr.serialize(m)?;
        }
        wtr.flush()?;
        Ok(())
    }

    /// Plain-text table of the per-policy aggregates.
    pub fn report(&self) -> String {
        let mut out = format!(
            "{:<8} {:>5} {:>14} {:>12} {:>12} {:>12}\n",
            "policy", "runs", "mean utility", "violations", "mean ms", "max ms"
        );
        for p in &self.policies {
            out.push_str(&format!(
                "{:<8} {:>5} {:>14.4} {:>12.2} {:>12.3} {:>12.3}\n",
                p.policy.name(),
                p.runs,
                p.mean_utility,
                p.mean_violations,
                p.mean_decision_ms,
                p.max_decision_ms
            ));
            if p.invalid_runs > 0 {
                out.push_str(&format!("  {} run(s) stopped early\n", p.invalid_runs));
            }
        }
        out
    }
}
