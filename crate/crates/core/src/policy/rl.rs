use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::mdp::instantiate;
use super::{DecisionContext, Policy, PolicyKind, PolicySettings};
use crate::error::{Error, Result};
use crate::model::{ActionLabel, ClusterSize, ModelConfig};
use crate::reward::RewardMode;
use crate::solver::PolicyDecision;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RlConfig {
    pub alpha: f64,
    pub gamma: f64,
}

impl Default for RlConfig {
    fn default() -> Self {
        RlConfig { alpha: 0.1, gamma: 0.5 }
    }
}

impl RlConfig {
    pub fn check(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::Config(format!("alpha must be in (0, 1], got {}", self.alpha)));
        }
        if !(0.0..1.0).contains(&self.gamma) {
            return Err(Error::Config(format!("gamma must be in [0, 1), got {}", self.gamma)));
        }
        Ok(())
    }
}

/// Learning state: the cluster size.
pub type QState = ClusterSize;

/// Tabular action values.
#[derive(Debug, Clone, PartialEq)]
pub struct QTable {
    pub config: RlConfig,
    values: HashMap<(QState, ActionLabel), f64>,
    visits: HashMap<(QState, ActionLabel), u64>,
    // MB seed each entry was last aligned with
    seeds: HashMap<(QState, ActionLabel), f64>,
}

impl QTable {
    pub fn new(config: RlConfig) -> Self {
        QTable {
            config,
            values: HashMap::new(),
            visits: HashMap::new(),
            seeds: HashMap::new(),
        }
    }

    pub fn get(&self, state: QState, action: ActionLabel) -> Option<f64> {
        self.values.get(&(state, action)).copied()
    }

    pub fn set(&mut self, state: QState, action: ActionLabel, value: f64) {
        self.values.insert((state, action), value);
    }

    pub fn visits(&self, state: QState, action: ActionLabel) -> u64 {
        self.visits.get(&(state, action)).copied().unwrap_or(0)
    }

    /// Best known value in `state`; 0 when nothing is known yet.
    pub fn best(&self, state: QState) -> f64 {
        self.values
            .iter()
            .filter(|((s, _), _)| *s == state)
            .map(|(_, &v)| v)
            .fold(None, |acc: Option<f64>, v| Some(acc.map_or(v, |a| a.max(v))))
            .unwrap_or(0.0)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Single-step actions that keep the size within range.
pub fn permitted_actions(current: ClusterSize, model: &ModelConfig) -> Vec<ActionLabel> {
    let mut out = vec![ActionLabel::NoOp];
    out.extend((1..=model.rem_limit).filter(|&j| current.0 >= model.min_vms + j).map(ActionLabel::Rem));
    out.extend((1..=model.add_limit).filter(|&i| current.0 + i <= model.max_vms).map(ActionLabel::Add));
    out
}

/// Aligns the entries of `state` with the current MB estimates. An unseen
/// entry starts at MB(target) / (1 − γ), the value a stationary reward would
/// converge to; a known entry moves by the change of that seed since it was
/// last aligned, so what was learned is kept as a deviation from the
/// estimate.
pub fn reseed(
    qtable: &mut QTable,
    state: QState,
    mb_rewards: &BTreeMap<ClusterSize, f64>,
    model: &ModelConfig,
) -> Result<()> {
    let gamma = qtable.config.gamma;
    for action in permitted_actions(state, model) {
        let target = state.apply(action);
        let seed = mb_rewards
            .get(&target)
            .ok_or_else(|| Error::NoData(format!("no MB estimate for size {target}")))?
            / (1.0 - gamma);
        let value = match (qtable.get(state, action), qtable.seeds.get(&(state, action))) {
            (Some(v), Some(&old)) => v + seed - old,
            (Some(v), None) => v,
            (None, _) => seed,
        };
        qtable.set(state, action, value);
        qtable.seeds.insert((state, action), seed);
    }
    Ok(())
}

/// Greedy action in `state` after aligning it with the MB estimates.
pub fn rl_decide(
    qtable: &mut QTable,
    current: QState,
    mb_rewards: &BTreeMap<ClusterSize, f64>,
    model: &ModelConfig,
) -> Result<PolicyDecision> {
    reseed(qtable, current, mb_rewards, model)?;
    let mut best: Option<(ActionLabel, f64)> = None;
    for action in permitted_actions(current, model) {
        let value = qtable.get(current, action).expect("reseeded");
        // strict improvement only: earlier actions win ties in tie-break order
        let better = match best {
            None => true,
            Some((b, bv)) => value > bv || (value == bv && action.tie_break_key() < b.tie_break_key()),
        };
        if better {
            best = Some((action, value));
        }
    }
    let (action, _) = best.expect("no_op is always permitted");
    let target = current.apply(action);
    let expected = mb_rewards.get(&target).copied();
    Ok(PolicyDecision::bounded_plan(
        action,
        current,
        model.add_limit,
        model.rem_limit,
        (model.min_vms, model.max_vms),
        expected,
    ))
}

/// Q(s,a) ← Q(s,a) + α·(r + γ·max_a' Q(s',a') − Q(s,a)).
pub fn rl_update(qtable: &mut QTable, prev: QState, action: ActionLabel, reward: f64, next: QState) {
    let RlConfig { alpha, gamma } = qtable.config;
    let old = qtable.get(prev, action).unwrap_or(0.0);
    let target = reward + gamma * qtable.best(next);
    qtable.set(prev, action, old + alpha * (target - old));
    *qtable.visits.entry((prev, action)).or_insert(0) += 1;
}

/// Q-learning over cluster sizes with MB warm starts.
pub struct RlPolicy {
    settings: PolicySettings,
    qtable: QTable,
    pending: Option<(QState, ActionLabel)>,
}

impl RlPolicy {
    pub fn new(settings: PolicySettings) -> Self {
        let qtable = QTable::new(settings.rl);
        RlPolicy { settings, qtable, pending: None }
    }

    pub fn qtable(&self) -> &QTable {
        &self.qtable
    }
}

impl Policy for RlPolicy {
    fn kind(&self) -> PolicyKind {
        PolicyKind::RlMb
    }

    fn decide(&mut self, ctx: &DecisionContext<'_>) -> Result<PolicyDecision> {
        let state = ctx.current;
        let model = &self.settings.model;
        let inst = instantiate(ctx.store, ctx.load, model, &self.settings.clustering)?;
        let mb = inst.rewards(RewardMode::MB, &self.settings.utility)?;
        if let (Some((prev, action)), Some(r)) = (self.pending.take(), ctx.realized_utility) {
            // bootstrap from the next state under the current estimates
            reseed(&mut self.qtable, state, &mb, model)?;
            rl_update(&mut self.qtable, prev, action, r, state);
        }
        let mut decision = rl_decide(&mut self.qtable, state, &mb, model)?;
        decision.interpolated = inst.interpolated;
        self.pending = Some((state, decision.action));
        Ok(decision)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model() -> ModelConfig {
        ModelConfig {
            min_vms: 4,
            max_vms: 8,
            add_limit: 2,
            rem_limit: 1,
            ..ModelConfig::default()
        }
    }

    #[test]
    fn update_formula() {
        let mut q = QTable::new(RlConfig { alpha: 1.0, gamma: 0.0 });
        let s = ClusterSize(5);
        rl_update(&mut q, s, ActionLabel::Add(1), 5.0, ClusterSize(6));
        assert_eq!(q.get(s, ActionLabel::Add(1)), Some(5.0));
        assert_eq!(q.visits(s, ActionLabel::Add(1)), 1);
    }

    #[test]
    fn converges_to_reward_without_discount() {
        let mut q = QTable::new(RlConfig { alpha: 0.1, gamma: 0.0 });
        let s = ClusterSize(5);
        let mut x = 0.0;
        for _ in 0..500 {
            rl_update(&mut q, s, ActionLabel::NoOp, 3.0, s);
            // independent fixed-point iteration x ← x + α(r − x)
            x += 0.1 * (3.0 - x);
        }
        let got = q.get(s, ActionLabel::NoOp).unwrap();
        assert!((got - x).abs() < 1e-12);
        assert!((got - 3.0).abs() < 1e-9);
    }

    #[test]
    fn discounted_fixed_point() {
        // with a self-loop the fixed point is r / (1 − γ)
        let mut q = QTable::new(RlConfig { alpha: 0.5, gamma: 0.5 });
        let s = ClusterSize(5);
        for _ in 0..200 {
            rl_update(&mut q, s, ActionLabel::NoOp, 2.0, s);
        }
        assert!((q.get(s, ActionLabel::NoOp).unwrap() - 4.0).abs() < 1e-9);
    }

    #[test]
    fn equal_values_choose_no_op() {
        let mut q = QTable::new(RlConfig::default());
        let mb: BTreeMap<_, _> = (4..=8).map(|v| (ClusterSize(v), 1.0)).collect();
        let d = rl_decide(&mut q, ClusterSize(6), &mb, &model()).unwrap();
        assert_eq!(d.action, ActionLabel::NoOp);
        // all permitted entries were warm-started at 1 / (1 − 0.5)
        assert_eq!(q.len(), 4);
        assert_eq!(q.get(ClusterSize(6), ActionLabel::Add(2)), Some(2.0));
    }

    #[test]
    fn greedy_on_warm_start_then_learns() {
        let mut q = QTable::new(RlConfig { alpha: 1.0, gamma: 0.0 });
        let mb: BTreeMap<_, _> = (4..=8).map(|v| (ClusterSize(v), v as f64)).collect();
        let s = ClusterSize(5);
        let d = rl_decide(&mut q, s, &mb, &model()).unwrap();
        assert_eq!(d.action, ActionLabel::Add(2));
        assert_eq!(d.expected_utility, Some(7.0));
        // the move turned out badly
        rl_update(&mut q, s, ActionLabel::Add(2), -1.0, ClusterSize(7));
        let d = rl_decide(&mut q, s, &mb, &model()).unwrap();
        assert_eq!(d.action, ActionLabel::Add(1));
    }

    #[test]
    fn reseeding_keeps_learned_deviation() {
        let mut q = QTable::new(RlConfig { alpha: 1.0, gamma: 0.5 });
        let s = ClusterSize(5);
        let low: BTreeMap<_, _> = (4..=8).map(|v| (ClusterSize(v), 1.0)).collect();
        rl_decide(&mut q, s, &low, &model()).unwrap();
        // learned: no_op is worth 1 less than its seed of 2
        q.set(s, ActionLabel::NoOp, 1.0);
        let high: BTreeMap<_, _> = (4..=8).map(|v| (ClusterSize(v), 10.0)).collect();
        let d = rl_decide(&mut q, s, &high, &model()).unwrap();
        assert_eq!(q.get(s, ActionLabel::NoOp), Some(19.0));
        assert_eq!(q.get(s, ActionLabel::Add(1)), Some(20.0));
        // the untouched entries tie; the smaller move wins
        assert_eq!(d.action, ActionLabel::Rem(1));
    }

    #[test]
    fn permitted_actions_respect_range() {
        assert_eq!(
            permitted_actions(ClusterSize(8), &model()),
            vec![ActionLabel::NoOp, ActionLabel::Rem(1)]
        );
        assert_eq!(
            permitted_actions(ClusterSize(4), &model()),
            vec![ActionLabel::NoOp, ActionLabel::Add(1), ActionLabel::Add(2)]
        );
    }
}
