use std::collections::BTreeMap;

use super::{
    ActionLabel, Center, ClusterSize, MdpModel, MdpState, ModelConfig, ModelVariant, Phase,
    PreviousAction, StateId, Transition, PROB_TOLERANCE,
};
use crate::error::{Error, Result};

/// Reward and probability of one behaviour cluster at a given size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BehaviorReward {
    pub reward: f64,
    pub weight: f64,
    pub center: Option<Center>,
}

impl BehaviorReward {
    /// A single-behaviour entry with weight one.
    pub fn single(reward: f64) -> Self {
        BehaviorReward {
            reward,
            weight: 1.0,
            center: None,
        }
    }
}

/// Per-size reward entries; one entry per behaviour cluster.
pub type RewardTable = BTreeMap<ClusterSize, Vec<BehaviorReward>>;

/// How to pick the initial state among the behaviours of the current size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitialBehavior {
    Index(usize),
    /// Nearest cluster center, distances over min-max normalised latency and
    /// throughput.
    Observation(Center),
}

/// Instantiates a model for the current cluster size.
pub fn build_model(
    config: &ModelConfig,
    rewards: &RewardTable,
    current: ClusterSize,
    initial_behavior: InitialBehavior,
) -> Result<MdpModel> {
    config.check()?;
    if !config.contains(current) {
        return Err(Error::Config(format!(
            "current size {current} outside [{}, {}]",
            config.min_vms, config.max_vms
        )));
    }

    let mut states = Vec::new();
    // first state id of each size, indexed by size - min_vms
    let mut first_of_size = Vec::new();
    for size in config.sizes() {
        let entries = rewards
            .get(&size)
            .filter(|e| !e.is_empty())
            .ok_or_else(|| Error::Instantiation(format!("no reward entry for size {size}")))?;
        if config.variant == ModelVariant::Simple && entries.len() != 1 {
            return Err(Error::Instantiation(format!(
                "simple model expects one reward per size, got {} at size {size}",
                entries.len()
            )));
        }
        let total: f64 = entries.iter().map(|e| e.weight).sum();
        if (total - 1.0).abs() > PROB_TOLERANCE
            || entries.iter().any(|e| !(0.0..=1.0).contains(&e.weight))
        {
            return Err(Error::Instantiation(format!(
                "behaviour weights at size {size} sum to {total}, expected 1"
            )));
        }
        if let Some(e) = entries.iter().find(|e| !e.reward.is_finite()) {
            return Err(Error::Instantiation(format!(
                "non-finite reward {} at size {size}",
                e.reward
            )));
        }
        first_of_size.push(states.len());
        for (behavior, e) in entries.iter().enumerate() {
            let previous_action = match size.cmp(&current) {
                std::cmp::Ordering::Greater => PreviousAction::Add,
                std::cmp::Ordering::Less => PreviousAction::Rem,
                std::cmp::Ordering::Equal => PreviousAction::None,
            };
            states.push(MdpState {
                size,
                behavior,
                weight: e.weight,
                reward: e.reward,
                center: e.center,
                phase: Phase::Control,
                previous_action,
            });
        }
    }
    first_of_size.push(states.len());

    let size_slot = |size: ClusterSize| (size.0 - config.min_vms) as usize;
    let behaviors_of = |size: ClusterSize| {
        let slot = size_slot(size);
        first_of_size[slot]..first_of_size[slot + 1]
    };

    let current_entries = &rewards[&current];
    let initial_behavior = match config.variant {
        ModelVariant::Simple => 0,
        _ => resolve_behavior(current_entries, initial_behavior)?,
    };
    let initial = StateId(behaviors_of(current).start + initial_behavior);
    states[initial.0].phase = Phase::Decision;

    let mut transitions = Vec::new();
    for (idx, state) in states.iter().enumerate() {
        let v = state.size.0;
        let add_targets: Vec<u32> = match config.variant {
            ModelVariant::AllTargets => (v + 1..=config.max_vms).collect(),
            _ => (1..=config.add_limit)
                .map(|i| v + i)
                .filter(|&t| t <= config.max_vms)
                .collect(),
        };
        let rem_targets: Vec<u32> = match config.variant {
            ModelVariant::AllTargets => (config.min_vms..v).rev().collect(),
            _ => (1..=config.rem_limit)
                .filter(|&j| j <= v && v - j >= config.min_vms)
                .map(|j| v - j)
                .collect(),
        };
        let mut push_type = |targets: &[u32], label_of: &dyn Fn(u32) -> ActionLabel| {
            let share = 1.0 / targets.len() as f64;
            for &t in targets {
                let label = label_of(t);
                for target in behaviors_of(ClusterSize(t)) {
                    transitions.push(Transition {
                        source: StateId(idx),
                        label,
                        target: StateId(target),
                        probability: share * states[target].weight,
                        enabled: state.previous_action.permits(label.kind()),
                        action_reward: 0.0,
                    });
                }
            }
        };
        if !add_targets.is_empty() {
            push_type(&add_targets, &|t| ActionLabel::Add(t - v));
        }
        if !rem_targets.is_empty() {
            push_type(&rem_targets, &|t| ActionLabel::Rem(v - t));
        }
        transitions.push(Transition {
            source: StateId(idx),
            label: ActionLabel::NoOp,
            target: StateId(idx),
            probability: 1.0,
            enabled: true,
            action_reward: 0.0,
        });
    }

    MdpModel::from_parts(*config, states, initial, transitions)
}

fn resolve_behavior(entries: &[BehaviorReward], how: InitialBehavior) -> Result<usize> {
    match how {
        InitialBehavior::Index(i) if i < entries.len() => Ok(i),
        InitialBehavior::Index(i) => Err(Error::Instantiation(format!(
            "initial behaviour {i} out of range ({} clusters)",
            entries.len()
        ))),
        InitialBehavior::Observation(obs) => {
            let centers: Vec<Center> = entries
                .iter()
                .map(|e| e.center)
                .collect::<Option<_>>()
                .ok_or_else(|| {
                    Error::Instantiation("observation given but cluster centers missing".into())
                })?;
            Ok(nearest_center(&centers, obs))
        }
    }
}

/// Index of the center closest to `obs` after per-dimension min-max scaling
/// over the centers and the observation. Ties go to the lower index.
pub(crate) fn nearest_center(centers: &[Center], obs: Center) -> usize {
    let span = |f: &dyn Fn(&Center) -> f64| {
        let vals = centers.iter().map(f).chain(std::iter::once(f(&obs)));
        let (lo, hi) = vals.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
            (lo.min(v), hi.max(v))
        });
        if hi > lo {
            hi - lo
        } else {
            0.0
        }
    };
    let lat_span = span(&|c| c.latency_ms);
    let thr_span = span(&|c| c.throughput);
    let scaled = |d: f64, s: f64| if s > 0.0 { d / s } else { 0.0 };
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (i, c) in centers.iter().enumerate() {
        let dl = scaled(c.latency_ms - obs.latency_ms, lat_span);
        let dt = scaled(c.throughput - obs.throughput, thr_span);
        let d = dl * dl + dt * dt;
        if d < best_d {
            best_d = d;
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ActionKind;

    fn uniform(config: &ModelConfig, reward: impl Fn(u32) -> f64) -> RewardTable {
        config
            .sizes()
            .map(|s| (s, vec![BehaviorReward::single(reward(s.0))]))
            .collect()
    }

    fn simple(min: u32, max: u32, add: u32, rem: u32) -> ModelConfig {
        ModelConfig {
            min_vms: min,
            max_vms: max,
            add_limit: add,
            rem_limit: rem,
            variant: ModelVariant::Simple,
            k: 1,
        }
    }

    fn row(model: &MdpModel, from: u32, kind: ActionKind) -> Vec<(u32, f64)> {
        let m = model.type_matrix(kind);
        let s = model.find_state(ClusterSize(from), 0).unwrap();
        m[s.0]
            .iter()
            .enumerate()
            .filter(|(_, p)| **p > 0.0)
            .map(|(t, p)| (model.states()[t].size.0, *p))
            .collect()
    }

    #[test]
    fn simple_model_rows() {
        let cfg = simple(3, 7, 2, 1);
        let m = build_model(&cfg, &uniform(&cfg, |_| 1.0), ClusterSize(4), InitialBehavior::Index(0))
            .unwrap();
        assert_eq!(m.states().len(), 5);
        assert_eq!(row(&m, 4, ActionKind::Add), vec![(5, 0.5), (6, 0.5)]);
        assert_eq!(row(&m, 4, ActionKind::Rem), vec![(3, 1.0)]);
        assert_eq!(row(&m, 6, ActionKind::Add), vec![(7, 1.0)]);
        assert!(row(&m, 7, ActionKind::Add).is_empty());
        for s in 3..=7 {
            assert_eq!(row(&m, s, ActionKind::NoOp), vec![(s, 1.0)]);
        }
    }

    #[test]
    fn single_target_renormalised() {
        let cfg = simple(3, 4, 2, 1);
        let m = build_model(&cfg, &uniform(&cfg, |_| 1.0), ClusterSize(3), InitialBehavior::Index(0))
            .unwrap();
        assert_eq!(row(&m, 3, ActionKind::Add), vec![(4, 1.0)]);
        let s3 = m.initial();
        assert_eq!(m.enabled_labels(s3), vec![ActionLabel::Add(1), ActionLabel::NoOp]);
    }

    #[test]
    fn multi_behavior_product_rule() {
        let cfg = ModelConfig {
            variant: ModelVariant::MultiBehavior,
            k: 2,
            ..simple(3, 4, 1, 1)
        };
        let mut table = RewardTable::new();
        let c = |l| Some(Center { latency_ms: l, throughput: 100.0 });
        table.insert(
            ClusterSize(3),
            vec![
                BehaviorReward { reward: 6.0, weight: 0.5, center: c(10.0) },
                BehaviorReward { reward: 1.0, weight: 0.5, center: c(90.0) },
            ],
        );
        table.insert(
            ClusterSize(4),
            vec![
                BehaviorReward { reward: 10.0, weight: 0.7, center: c(20.0) },
                BehaviorReward { reward: 0.0, weight: 0.3, center: c(80.0) },
            ],
        );
        let obs = Center { latency_ms: 12.0, throughput: 100.0 };
        let m = build_model(&cfg, &table, ClusterSize(3), InitialBehavior::Observation(obs)).unwrap();
        assert_eq!(m.state_label(m.initial()), "s3a");
        let dist = m.label_distribution(m.initial(), ActionLabel::Add(1));
        let s4a = m.find_state(ClusterSize(4), 0).unwrap();
        let s4b = m.find_state(ClusterSize(4), 1).unwrap();
        assert_eq!(dist, vec![(s4a, 0.7), (s4b, 0.3)]);

        let obs = Center { latency_ms: 85.0, throughput: 100.0 };
        let m = build_model(&cfg, &table, ClusterSize(3), InitialBehavior::Observation(obs)).unwrap();
        assert_eq!(m.state_label(m.initial()), "s3b");
    }

    #[test]
    fn all_targets_rows() {
        let cfg = ModelConfig {
            variant: ModelVariant::AllTargets,
            ..simple(3, 7, 2, 1)
        };
        let m = build_model(&cfg, &uniform(&cfg, |_| 1.0), ClusterSize(4), InitialBehavior::Index(0))
            .unwrap();
        let third = 1.0 / 3.0;
        assert_eq!(row(&m, 4, ActionKind::Add), vec![(5, third), (6, third), (7, third)]);
        assert_eq!(row(&m, 4, ActionKind::Rem), vec![(3, 1.0)]);
        assert_eq!(row(&m, 7, ActionKind::Rem), vec![(3, 0.25), (4, 0.25), (5, 0.25), (6, 0.25)]);
    }

    #[test]
    fn guards_follow_direction() {
        let cfg = simple(3, 7, 2, 1);
        let m = build_model(&cfg, &uniform(&cfg, |_| 1.0), ClusterSize(4), InitialBehavior::Index(0))
            .unwrap();
        let s6 = m.find_state(ClusterSize(6), 0).unwrap();
        assert_eq!(m.enabled_labels(s6), vec![ActionLabel::Add(1), ActionLabel::NoOp]);
        let s3 = m.find_state(ClusterSize(3), 0).unwrap();
        assert_eq!(m.enabled_labels(s3), vec![ActionLabel::NoOp]);
        assert_eq!(m.state(m.initial()).phase, Phase::Decision);
    }

    #[test]
    fn instantiation_errors() {
        let cfg = simple(3, 7, 2, 1);
        let mut table = uniform(&cfg, |_| 1.0);
        assert!(matches!(
            build_model(&cfg, &table, ClusterSize(9), InitialBehavior::Index(0)),
            Err(Error::Config(_))
        ));
        table.remove(&ClusterSize(5));
        assert!(matches!(
            build_model(&cfg, &table, ClusterSize(4), InitialBehavior::Index(0)),
            Err(Error::Instantiation(_))
        ));
        let mut table = uniform(&cfg, |_| 1.0);
        table.get_mut(&ClusterSize(5)).unwrap()[0].weight = 0.8;
        assert!(matches!(
            build_model(&cfg, &table, ClusterSize(4), InitialBehavior::Index(0)),
            Err(Error::Instantiation(_))
        ));
    }

    #[test]
    fn nearest_center_ties_to_lower_index() {
        let c = |l, t| Center { latency_ms: l, throughput: t };
        assert_eq!(nearest_center(&[c(10.0, 5.0), c(30.0, 5.0)], c(20.0, 5.0)), 0);
        assert_eq!(nearest_center(&[c(10.0, 5.0), c(30.0, 5.0)], c(21.0, 5.0)), 1);
    }
}
