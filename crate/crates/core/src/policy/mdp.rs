use std::collections::BTreeMap;

use super::{DecisionContext, Policy, PolicyKind, PolicySettings};
use crate::error::{Error, Result};
use crate::model::{
    build_model, BehaviorReward, Center, ClusterSize, InitialBehavior, MdpModel, ModelConfig,
    ModelVariant, RewardTable,
};
use crate::reward::{
    behavior_rewards, cluster_behavior, state_reward, ClusterSummary, ClusteringConfig, LogStore,
    MeasurementRecord, RewardMode, UtilityConfig,
};
use crate::solver::{decide, PolicyDecision};

/// Behaviour clusters of every size at one load.
#[derive(Debug, Clone, PartialEq)]
pub struct Instantiation {
    pub clusters: BTreeMap<ClusterSize, Vec<ClusterSummary>>,
    /// Some size had no exact log bucket.
    pub interpolated: bool,
}

/// Clusters the logs of every size in the range at `load`.
pub fn instantiate(store: &LogStore, load: f64, model: &ModelConfig, clustering: &ClusteringConfig) -> Result<Instantiation> {
    let mut clusters = BTreeMap::new();
    let mut interpolated = false;
    for size in model.sizes() {
        let sel = store.select_logs(size.0, load)?;
        interpolated |= sel.interpolated;
        clusters.insert(size, cluster_behavior(&sel.records, clustering)?);
    }
    Ok(Instantiation { clusters, interpolated })
}

impl Instantiation {
    /// MB or EB reward of every size.
    pub fn rewards(&self, mode: RewardMode, utility: &UtilityConfig) -> Result<BTreeMap<ClusterSize, f64>> {
        self.clusters
            .iter()
            .map(|(&size, cs)| Ok((size, state_reward(cs, mode, utility, size.0)?)))
            .collect()
    }

    /// Single-behaviour reward table. The stored center is the largest
    /// cluster's (MB) or the weighted mean of all centers (EB).
    pub fn single_table(&self, mode: RewardMode, utility: &UtilityConfig) -> Result<RewardTable> {
        self.clusters
            .iter()
            .map(|(&size, cs)| {
                let reward = state_reward(cs, mode, utility, size.0)?;
                let center = match mode {
                    RewardMode::MB => cs[0].center,
                    RewardMode::EB => Center {
                        latency_ms: cs.iter().map(|c| c.weight * c.center.latency_ms).sum(),
                        throughput: cs.iter().map(|c| c.weight * c.center.throughput).sum(),
                    },
                };
                Ok((size, vec![BehaviorReward { reward, weight: 1.0, center: Some(center) }]))
            })
            .collect()
    }

    /// One entry per behaviour cluster.
    pub fn cluster_table(&self, utility: &UtilityConfig) -> RewardTable {
        self.clusters
            .iter()
            .map(|(&size, cs)| (size, behavior_rewards(cs, utility, size.0)))
            .collect()
    }
}

fn variant_of(kind: PolicyKind) -> Result<ModelVariant> {
    match kind {
        PolicyKind::MdpMb | PolicyKind::MdpEb => Ok(ModelVariant::Simple),
        PolicyKind::Mdp2 => Ok(ModelVariant::MultiBehavior),
        PolicyKind::Mdp3 => Ok(ModelVariant::AllTargets),
        other => Err(Error::Config(format!("{other} is not a model-based policy"))),
    }
}

/// Builds the model a model-based policy would solve at this load. The
/// boolean reports whether any size used neighbouring logs.
pub fn instantiate_model(
    kind: PolicyKind,
    store: &LogStore,
    load: f64,
    current: ClusterSize,
    measurement: &MeasurementRecord,
    settings: &PolicySettings,
) -> Result<(MdpModel, bool)> {
    let variant = variant_of(kind)?;
    let config = ModelConfig {
        variant,
        k: settings.clustering.k,
        ..settings.model
    };
    let inst = instantiate(store, load, &config, &settings.clustering)?;
    let table = match kind {
        PolicyKind::MdpMb => inst.single_table(RewardMode::MB, &settings.utility)?,
        PolicyKind::MdpEb => inst.single_table(RewardMode::EB, &settings.utility)?,
        _ => inst.cluster_table(&settings.utility),
    };
    let observed = InitialBehavior::Observation(Center {
        latency_ms: measurement.latency_ms,
        throughput: measurement.throughput,
    });
    let model = build_model(&config, &table, current, observed)?;
    Ok((model, inst.interpolated))
}

/// Instantiates, solves and returns the (possibly clipped) first action.
pub fn mdp_decide(
    kind: PolicyKind,
    store: &LogStore,
    load: f64,
    current: ClusterSize,
    measurement: &MeasurementRecord,
    settings: &PolicySettings,
) -> Result<PolicyDecision> {
    let (model, interpolated) = instantiate_model(kind, store, load, current, measurement, settings)?;
    let mut decision = decide(&model)?;
    decision.interpolated = interpolated;
    Ok(decision)
}

pub struct MdpPolicy {
    kind: PolicyKind,
    settings: PolicySettings,
}

impl MdpPolicy {
    pub fn new(kind: PolicyKind, settings: PolicySettings) -> Self {
        MdpPolicy { kind, settings }
    }
}

impl Policy for MdpPolicy {
    fn kind(&self) -> PolicyKind {
        self.kind
    }

    fn decide(&mut self, ctx: &DecisionContext<'_>) -> Result<PolicyDecision> {
        mdp_decide(self.kind, ctx.store, ctx.load, ctx.current, &ctx.measurement, &self.settings)
    }
}
