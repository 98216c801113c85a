//! Experiment configuration, multi-run policy comparison and metrics.

mod config;
mod metrics;

use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use rayon::prelude::*;

use crate::emulator::{run_episode, EpisodeSetup, ExperimentTrace, TraceRow};
use crate::error::Result;
use crate::policy::make_policy;
use crate::reward::{utility_eval, LogStore, UtilityConfig};

pub use config::ExperimentConfig;
pub use metrics::{compute_metrics, score_rows, MetricsSummary, PolicySummary, TraceMetrics};

/// Output of [`run_comparison`].
#[derive(Debug, Clone)]
pub struct Comparison {
    pub summary: MetricsSummary,
    /// Ordered by policy (listing order), then run.
    pub traces: Vec<ExperimentTrace>,
}

impl Comparison {
    pub fn all_valid(&self) -> bool {
        self.traces.iter().all(|t| t.valid)
    }

    /// Writes `summary.csv`, `runs.csv`, `report.txt` and one
    /// `trace_<policy>_run<i>.csv` per trace.
    pub fn write_to(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        self.summary.write_summary_csv(BufWriter::new(File::create(dir.join("summary.csv"))?))?;
        self.summary.write_runs_csv(BufWriter::new(File::create(dir.join("runs.csv"))?))?;
        std::fs::write(dir.join("report.txt"), self.summary.report())?;
        for t in &self.traces {
            let name = format!("trace_{}_run{}.csv", t.policy.name(), t.run);
            t.write_csv(BufWriter::new(File::create(dir.join(name))?))?;
        }
        Ok(())
    }
}

/// Runs every listed policy for every run index. Runs with the same index
/// share a seed, hence identical load and noise, whatever the policy.
pub fn run_comparison(config: &ExperimentConfig) -> Result<Comparison> {
    config.check()?;
    let store = config.load_store()?;
    Ok(run_comparison_with(config, &store))
}

/// As [`run_comparison`] over an already loaded log.
pub fn run_comparison_with(config: &ExperimentConfig, store: &LogStore) -> Comparison {
    let settings = config.policy_settings();
    let setup = EpisodeSetup {
        store,
        profile: config.load,
        schedule: config.schedule,
        model: config.model,
        utility: config.utility,
        post: config.post,
        noise_fraction: config.noise_fraction,
    };
    let cells: Vec<(usize, usize)> = (0..config.policies.len())
        .flat_map(|p| (0..config.runs).map(move |r| (p, r)))
        .collect();
    let traces: Vec<ExperimentTrace> = cells
        .par_iter()
        .map(|&(p, run)| {
            let mut policy = make_policy(config.policies[p], &settings);
            run_episode(policy.as_mut(), &setup, run, config.run_seed(run))
        })
        .collect();
    let per_run = traces.iter().map(|t| compute_metrics(t, &config.utility)).collect();
    Comparison {
        summary: MetricsSummary::from_runs(per_run),
        traces,
    }
}

/// Re-scores trace rows under another utility function.
pub fn replay(rows: &[TraceRow], utility: &UtilityConfig) -> Vec<TraceRow> {
    rows.iter()
        .map(|r| TraceRow {
            utility: utility_eval(utility, r.latency_ms, r.throughput, r.vms),
            violation: utility.violated(r.latency_ms),
            ..r.clone()
        })
        .collect()
}
