use std::collections::BTreeMap;
use std::fmt;

use super::{
    ActionKind, ActionLabel, ClusterSize, MdpModel, ModelVariant, Phase, PreviousAction, StateId,
    PROB_TOLERANCE,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ViolationKind {
    Config,
    SizeRange,
    Weights,
    Reward,
    Initial,
    ProbabilityMass,
    NoOpLoop,
    Monotonicity,
    ActionReward,
    TargetRange,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub kind: ViolationKind,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

/// Invariant violations found in a model; empty for a valid model.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn has(&self, kind: ViolationKind) -> bool {
        self.violations.iter().any(|v| v.kind == kind)
    }

    fn push(&mut self, kind: ViolationKind, message: String) {
        self.violations.push(Violation { kind, message });
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return writeln!(f, "model valid");
        }
        for v in &self.violations {
            writeln!(f, "{v}")?;
        }
        Ok(())
    }
}

/// Checks every model invariant and reports all violations. Never fails.
pub fn validate_model(model: &MdpModel) -> ValidationReport {
    let mut report = ValidationReport::default();
    let cfg = model.config();
    if let Err(e) = cfg.check() {
        report.push(ViolationKind::Config, e.to_string());
    }
    let name = |id: StateId| model.state_label(id);

    let mut weight_by_size: BTreeMap<ClusterSize, f64> = BTreeMap::new();
    for id in model.state_ids() {
        let s = model.state(id);
        if !cfg.contains(s.size) {
            report.push(
                ViolationKind::SizeRange,
                format!("state {} has size {} outside [{}, {}]", name(id), s.size, cfg.min_vms, cfg.max_vms),
            );
        }
        if !(0.0..=1.0).contains(&s.weight) {
            report.push(ViolationKind::Weights, format!("weight {} of {} outside [0, 1]", s.weight, name(id)));
        }
        if !s.reward.is_finite() {
            report.push(ViolationKind::Reward, format!("reward of {} is not finite", name(id)));
        }
        *weight_by_size.entry(s.size).or_default() += s.weight;
    }
    for (size, total) in &weight_by_size {
        if (total - 1.0).abs() > PROB_TOLERANCE {
            report.push(ViolationKind::Weights, format!("weights at size {size} sum to {total} ≠ 1"));
        }
    }

    let init = model.state(model.initial());
    if init.previous_action != PreviousAction::None {
        report.push(ViolationKind::Initial, format!("initial state {} has a previous action", name(model.initial())));
    }
    if init.phase != Phase::Decision {
        report.push(ViolationKind::Initial, format!("initial state {} is not a decision state", name(model.initial())));
    }
    for id in model.state_ids().filter(|&id| id != model.initial()) {
        if model.state(id).phase == Phase::Decision {
            report.push(ViolationKind::Initial, format!("non-initial state {} marked as decision state", name(id)));
        }
    }

    for id in model.state_ids() {
        let state = model.state(id);
        let out = model.outgoing(id);

        let mut mass: BTreeMap<ActionKind, f64> = BTreeMap::new();
        for t in out {
            *mass.entry(t.label.kind()).or_default() += t.probability;
        }
        for (kind, total) in &mass {
            if (total - 1.0).abs() > PROB_TOLERANCE {
                report.push(
                    ViolationKind::ProbabilityMass,
                    format!("probability mass {total} ≠ 1 at ({}, {kind})", name(id)),
                );
            }
        }

        let loops: Vec<_> = out.iter().filter(|t| t.label == ActionLabel::NoOp).collect();
        let loop_ok = loops.len() == 1
            && loops[0].target == id
            && (loops[0].probability - 1.0).abs() <= PROB_TOLERANCE
            && loops[0].enabled;
        if !loop_ok {
            report.push(ViolationKind::NoOpLoop, format!("state {} lacks an enabled no_op self-loop with probability 1", name(id)));
        }

        for t in out {
            let target = model.state(t.target);
            if t.action_reward != 0.0 {
                report.push(
                    ViolationKind::ActionReward,
                    format!("action reward {} on ({}, {}, {})", t.action_reward, name(id), t.label, name(t.target)),
                );
            }
            if t.enabled && !state.previous_action.permits(t.label.kind()) {
                report.push(
                    ViolationKind::Monotonicity,
                    format!(
                        "monotonicity violation: {} enabled at {} whose previous action is {}",
                        t.label,
                        name(id),
                        state.previous_action.as_str()
                    ),
                );
            }
            if !t.enabled && state.previous_action.permits(t.label.kind()) {
                report.push(
                    ViolationKind::Monotonicity,
                    format!("{} guarded at {} although its previous action permits it", t.label, name(id)),
                );
            }
            let v = state.size.0;
            let w = target.size.0;
            let consistent = match t.label {
                ActionLabel::NoOp => t.target == id,
                ActionLabel::Add(n) => {
                    w == v + n && (cfg.variant == ModelVariant::AllTargets || n <= cfg.add_limit)
                }
                ActionLabel::Rem(n) => {
                    n <= v && w == v - n && (cfg.variant == ModelVariant::AllTargets || n <= cfg.rem_limit)
                }
            };
            if !consistent || !cfg.contains(target.size) {
                report.push(
                    ViolationKind::TargetRange,
                    format!("{} from {} targets {} inconsistently", t.label, name(id), name(t.target)),
                );
            }
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_model, BehaviorReward, InitialBehavior, ModelConfig, RewardTable};

    fn fig2() -> MdpModel {
        let cfg = ModelConfig {
            min_vms: 3,
            max_vms: 7,
            add_limit: 2,
            rem_limit: 1,
            variant: ModelVariant::Simple,
            k: 1,
        };
        let table: RewardTable = cfg.sizes().map(|s| (s, vec![BehaviorReward::single(s.0 as f64)])).collect();
        build_model(&cfg, &table, ClusterSize(4), InitialBehavior::Index(0)).unwrap()
    }

    fn rebuild(model: &MdpModel, edit: impl FnOnce(&mut Vec<crate::model::Transition>)) -> MdpModel {
        let mut ts = model.transitions().to_vec();
        edit(&mut ts);
        MdpModel::from_parts(*model.config(), model.states().to_vec(), model.initial(), ts).unwrap()
    }

    #[test]
    fn built_model_is_valid() {
        let report = validate_model(&fig2());
        assert!(report.is_valid(), "{report}");
    }

    #[test]
    fn mass_deficit_reported() {
        let m = fig2();
        let s4 = m.find_state(ClusterSize(4), 0).unwrap();
        let bad = rebuild(&m, |ts| {
            for t in ts.iter_mut() {
                if t.source == s4 && t.label == ActionLabel::Add(2) {
                    t.probability = 0.4;
                }
            }
        });
        let report = validate_model(&bad);
        assert_eq!(report.violations.len(), 1);
        assert_eq!(report.violations[0].message, "probability mass 0.9 ≠ 1 at (s4, add)");
    }

    #[test]
    fn add_out_of_rem_state_reported() {
        let m = fig2();
        let s3 = m.find_state(ClusterSize(3), 0).unwrap();
        let bad = rebuild(&m, |ts| {
            for t in ts.iter_mut() {
                if t.source == s3 && t.label == ActionLabel::Add(1) {
                    t.enabled = true;
                }
            }
        });
        let report = validate_model(&bad);
        assert!(report.has(ViolationKind::Monotonicity));
        assert!(report.violations[0].message.contains("add_1 enabled at s3"), "{report}");
    }

    #[test]
    fn missing_no_op_and_action_reward() {
        let m = fig2();
        let s5 = m.find_state(ClusterSize(5), 0).unwrap();
        let bad = rebuild(&m, |ts| {
            ts.retain(|t| !(t.source == s5 && t.label == ActionLabel::NoOp));
            ts[0].action_reward = 2.0;
        });
        let report = validate_model(&bad);
        assert!(report.has(ViolationKind::NoOpLoop));
        assert!(report.has(ViolationKind::ActionReward));
    }

    #[test]
    fn oversized_step_reported() {
        let m = fig2();
        let s4 = m.find_state(ClusterSize(4), 0).unwrap();
        let s7 = m.find_state(ClusterSize(7), 0).unwrap();
        let bad = rebuild(&m, |ts| {
            for t in ts.iter_mut() {
                if t.source == s4 && t.label == ActionLabel::Add(2) {
                    t.label = ActionLabel::Add(3);
                    t.target = s7;
                }
            }
        });
        assert!(validate_model(&bad).has(ViolationKind::TargetRange));
    }
}
