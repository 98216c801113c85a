use std::io::{Read, Write};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::dataset::perturb;
use super::load::{gen_load, LoadProfile};
use crate::error::{Error, Result};
use crate::model::{ActionLabel, ClusterSize, ModelConfig};
use crate::policy::{apply_benefit_threshold, smooth_load, DecisionContext, Policy, PolicyKind, PostProcessConfig};
use crate::reward::{utility_eval, LogStore, MeasurementRecord, UtilityConfig};

/// Random numbers consumed by one emulated tick.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseDraw {
    /// Uniform in [0, 1); picks the log record.
    pub pick: f64,
    pub z_latency: f64,
    pub z_throughput: f64,
}

impl NoiseDraw {
    pub const NONE: NoiseDraw = NoiseDraw { pick: 0.0, z_latency: 0.0, z_throughput: 0.0 };

    pub fn sample<R: Rng + ?Sized>(rng: &mut R) -> Self {
        NoiseDraw {
            pick: rng.random::<f64>(),
            z_latency: rng.sample(StandardNormal),
            z_throughput: rng.sample(StandardNormal),
        }
    }
}

/// One noise draw per tick, derived from the seed alone.
pub fn noise_stream(seed: u64, ticks: usize) -> Vec<NoiseDraw> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..ticks).map(|_| NoiseDraw::sample(&mut rng)).collect()
}

/// Realised (latency, throughput) of `vms` machines at `load`: a logged
/// record of the nearest (size, load bucket) with multiplicative noise.
pub fn emulate_state(store: &LogStore, vms: u32, load: f64, noise_fraction: f64, draw: &NoiseDraw) -> Result<(f64, f64)> {
    let sel = store.select_logs(vms, load)?;
    let n = sel.records.len();
    let idx = ((draw.pick * n as f64) as usize).min(n - 1);
    let r = &sel.records[idx];
    Ok((
        perturb(r.latency_ms, noise_fraction, draw.z_latency),
        perturb(r.throughput, noise_fraction, draw.z_throughput),
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Schedule {
    pub tick_seconds: f64,
    /// Ticks between decisions.
    pub decision_every: usize,
    /// Ticks per episode.
    pub horizon: usize,
    pub initial_vms: u32,
}

impl Default for Schedule {
    fn default() -> Self {
        Schedule {
            tick_seconds: 30.0,
            decision_every: 10,
            horizon: 315,
            initial_vms: 4,
        }
    }
}

impl Schedule {
    pub fn check(&self, model: &ModelConfig) -> Result<()> {
        if self.decision_every < 1 || self.horizon < 1 {
            return Err(Error::Config("decision_every and horizon must be at least 1".into()));
        }
        if !(self.tick_seconds > 0.0) {
            return Err(Error::Config("tick_seconds must be positive".into()));
        }
        if !model.contains(ClusterSize(self.initial_vms)) {
            return Err(Error::Config(format!(
                "initial_vms {} outside [{}, {}]",
                self.initial_vms, model.min_vms, model.max_vms
            )));
        }
        Ok(())
    }

    /// Whether a decision is taken at the end of tick `t`.
    pub fn decides_at(&self, t: usize) -> bool {
        (t + 1) % self.decision_every == 0
    }
}

/// Environment of one episode.
#[derive(Debug, Clone, Copy)]
pub struct EpisodeSetup<'a> {
    pub store: &'a LogStore,
    pub profile: LoadProfile,
    pub schedule: Schedule,
    pub model: ModelConfig,
    pub utility: UtilityConfig,
    pub post: PostProcessConfig,
    /// Relative emulation noise.
    pub noise_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub tick: usize,
    pub load: f64,
    pub vms: u32,
    pub latency_ms: f64,
    pub throughput: f64,
    pub utility: f64,
    pub violation: bool,
    #[serde(with = "label_column")]
    pub decision: Option<ActionLabel>,
    pub decision_ms: Option<f64>,
}

mod label_column {
    use serde::{Deserialize, Deserializer, Serializer};

    use crate::model::ActionLabel;

    pub fn serialize<S: Serializer>(v: &Option<ActionLabel>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            Some(l) => s.serialize_str(&l.to_string()),
            None => s.serialize_str(""),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<ActionLabel>, D::Error> {
        let s = String::deserialize(d)?;
        if s.is_empty() {
            return Ok(None);
        }
        s.parse().map(Some).map_err(serde::de::Error::custom)
    }
}

/// Per-tick record of one policy run.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentTrace {
    pub policy: PolicyKind,
    pub run: usize,
    pub seed: u64,
    pub rows: Vec<TraceRow>,
    /// False when the run stopped early on an error.
    pub valid: bool,
    pub error: Option<String>,
}

impl ExperimentTrace {
    pub fn decisions(&self) -> impl Iterator<Item = &TraceRow> {
        self.rows.iter().filter(|r| r.decision.is_some())
    }

    pub fn write_csv(&self, writer: impl Write) -> Result<()> {
        write_trace_rows(writer, &self.rows)
    }
}

pub fn write_trace_rows(writer: impl Write, rows: &[TraceRow]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    for r in rows {
        wtr.serialize(r)?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn read_trace_rows(reader: impl Read) -> Result<Vec<TraceRow>> {
    let mut rdr = csv::Reader::from_reader(reader);
    rdr.deserialize()
        .map(|row| {
            row.map_err(|e| Error::Malformed {
                line: e.position().map(|p| p.line() as usize).unwrap_or(0),
                message: e.to_string(),
            })
        })
        .collect()
}

/// Runs one policy over the horizon. The load and the noise depend only on
/// the profile and `seed`, so every policy given the same seed sees the same
/// environment. Decisions are taken at the end of every `decision_every`-th
/// tick and take effect from the next tick.
pub fn run_episode(policy: &mut dyn Policy, setup: &EpisodeSetup<'_>, run: usize, seed: u64) -> ExperimentTrace {
    let mut trace = ExperimentTrace {
        policy: policy.kind(),
        run,
        seed,
        rows: Vec::with_capacity(setup.schedule.horizon),
        valid: true,
        error: None,
    };
    if let Err(e) = episode(policy, setup, seed, &mut trace.rows) {
        trace.valid = false;
        trace.error = Some(e.to_string());
    }
    trace
}

fn episode(policy: &mut dyn Policy, setup: &EpisodeSetup<'_>, seed: u64, rows: &mut Vec<TraceRow>) -> Result<()> {
    let schedule = &setup.schedule;
    schedule.check(&setup.model)?;
    setup.post.check()?;
    let noise = noise_stream(seed, schedule.horizon);
    let mut vms = ClusterSize(schedule.initial_vms);
    let mut history: Vec<f64> = Vec::with_capacity(schedule.horizon);
    let mut since_decision: Vec<f64> = Vec::new();
    let mut realized: Option<f64> = None;

    for (t, draw) in noise.iter().enumerate() {
        let load = gen_load(&setup.profile, t as f64);
        let (latency, throughput) = emulate_state(setup.store, vms.0, load, setup.noise_fraction, draw)?;
        let utility = utility_eval(&setup.utility, latency, throughput, vms.0);
        history.push(load);
        since_decision.push(utility);
        let mut row = TraceRow {
            tick: t,
            load,
            vms: vms.0,
            latency_ms: latency,
            throughput,
            utility,
            violation: setup.utility.violated(latency),
            decision: None,
            decision_ms: None,
        };
        if schedule.decides_at(t) {
            if !since_decision.is_empty() {
                realized = Some(since_decision.iter().sum::<f64>() / since_decision.len() as f64);
            }
            since_decision.clear();
            let ctx = DecisionContext {
                store: setup.store,
                current: vms,
                load: smooth_load(&history, setup.post.smoothing_window)?,
                measurement: MeasurementRecord {
                    time: t as u64,
                    vms_num: vms.0,
                    load,
                    latency_ms: latency,
                    throughput,
                },
                realized_utility: realized,
            };
            let started = Instant::now();
            let outcome = policy.decide(&ctx);
            let elapsed = started.elapsed().as_secs_f64() * 1000.0;
            let decision = match outcome {
                Ok(d) => apply_benefit_threshold(d, utility, &setup.post),
                Err(e) => {
                    rows.push(row);
                    return Err(e);
                }
            };
            let next = vms.apply(decision.action);
            if !setup.model.contains(next) {
                rows.push(row);
                return Err(Error::Internal(format!(
                    "{} chose {} at {vms} VMs, leaving the size range",
                    policy.kind(),
                    decision.action
                )));
            }
            row.decision = Some(decision.action);
            row.decision_ms = Some(elapsed);
            vms = next;
        }
        rows.push(row);
    }
    Ok(())
}
