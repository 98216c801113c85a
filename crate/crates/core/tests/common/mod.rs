#![allow(dead_code)]

use elasticity_core::model::{
    build_model, ActionLabel, BehaviorReward, Center, ClusterSize, InitialBehavior, MdpModel,
    ModelConfig, ModelVariant, RewardTable, StateId,
};
use elasticity_core::query::ReachabilityQuery;
use proptest::prelude::*;

/// Parameters of one random model instance.
#[derive(Debug, Clone)]
pub struct Instance {
    pub config: ModelConfig,
    pub current: u32,
    pub initial_behavior: usize,
    /// (reward, raw weight, latency, throughput) per size, then per behaviour.
    pub entries: Vec<Vec<(f64, f64, f64, f64)>>,
}

impl Instance {
    pub fn table(&self) -> RewardTable {
        self.table_with(|r| r)
    }

    pub fn table_with(&self, f: impl Fn(f64) -> f64) -> RewardTable {
        self.config
            .sizes()
            .zip(&self.entries)
            .map(|(size, es)| {
                let total: f64 = es.iter().map(|e| e.1).sum();
                let rows = es
                    .iter()
                    .map(|&(reward, w, latency_ms, throughput)| BehaviorReward {
                        reward: f(reward),
                        weight: w / total,
                        center: Some(Center { latency_ms, throughput }),
                    })
                    .collect();
                (size, rows)
            })
            .collect()
    }

    pub fn model(&self) -> MdpModel {
        self.model_with(|r| r)
    }

    pub fn model_with(&self, f: impl Fn(f64) -> f64) -> MdpModel {
        build_model(
            &self.config,
            &self.table_with(f),
            ClusterSize(self.current),
            InitialBehavior::Index(self.initial_behavior),
        )
        .expect("valid instance")
    }
}

pub fn variant() -> impl Strategy<Value = ModelVariant> {
    prop_oneof![
        Just(ModelVariant::Simple),
        Just(ModelVariant::MultiBehavior),
        Just(ModelVariant::AllTargets),
    ]
}

/// Random instances with at most `max_span + 1` sizes and `max_k` behaviours.
pub fn instance(max_span: u32, max_k: usize) -> impl Strategy<Value = Instance> {
    (1u32..=4, 0..=max_span, 1u32..=3, 1u32..=3, variant(), 1..=max_k)
        .prop_flat_map(move |(min, span, add, rem, variant, k)| {
            let k = if variant == ModelVariant::Simple { 1 } else { k };
            let config = ModelConfig {
                min_vms: min,
                max_vms: min + span,
                add_limit: add,
                rem_limit: rem,
                variant,
                k,
            };
            let entry = (-1.0f64..=10.0, 0.05f64..1.0, 5.0f64..120.0, 100.0f64..5000.0);
            let entries = prop::collection::vec(prop::collection::vec(entry, 1..=k), (span + 1) as usize);
            (Just(config), min..=min + span, entries, 0..k)
        })
        .prop_map(|(config, current, entries, b)| {
            let slot = (current - config.min_vms) as usize;
            let initial_behavior = b.min(entries[slot].len() - 1);
            Instance { config, current, initial_behavior, entries }
        })
}

/// Best expected stopping reward from `s`, by plain recursion over the
/// enabled edges. Stopping in a state pays its reward.
pub fn value_oracle(model: &MdpModel, s: StateId) -> f64 {
    let mut best = model.state(s).reward;
    for label in model.enabled_labels(s) {
        if label == ActionLabel::NoOp {
            continue;
        }
        let v: f64 = model
            .label_distribution(s, label)
            .into_iter()
            .map(|(t, p)| p * value_oracle(model, t))
            .sum();
        best = best.max(v);
    }
    best
}

/// Expected value of taking `label` first, then acting optimally.
pub fn label_value(model: &MdpModel, s: StateId, label: ActionLabel) -> f64 {
    if label == ActionLabel::NoOp {
        return model.state(s).reward;
    }
    model
        .label_distribution(s, label)
        .into_iter()
        .map(|(t, p)| p * value_oracle(model, t))
        .sum()
}

/// Optimal probability of eventually reaching a state satisfying the
/// predicate. Stopping elsewhere counts as failure.
pub fn reach_oracle(model: &MdpModel, query: &ReachabilityQuery, s: StateId, maximise: bool) -> f64 {
    if query.predicate.eval(model.state(s)) {
        return 1.0;
    }
    let mut best = 0.0f64;
    for label in model.enabled_labels(s) {
        if label == ActionLabel::NoOp {
            continue;
        }
        let v: f64 = model
            .label_distribution(s, label)
            .into_iter()
            .map(|(t, p)| p * reach_oracle(model, query, t, maximise))
            .sum();
        best = if maximise { best.max(v) } else { best.min(v) };
    }
    best
}

pub fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}
