//! Exhaustive reference evaluation for small models.
//!
//! Every decision path is expanded explicitly: at each node the oracle tries
//! stopping and every sized label permitted by the direction of the path so
//! far, recursing into every outcome with no memoisation. The enabled guards
//! stored in the model are ignored; monotonicity is re-derived from the path
//! itself. Exponential, so restricted to test-sized models.

use crate::error::{Error, Result};
use crate::model::{ActionLabel, MdpModel, PreviousAction, StateId};
use crate::query::{QueryMode, ReachabilityQuery};

use super::ValueMap;

/// Largest model the oracle accepts.
pub const ORACLE_STATE_LIMIT: usize = 100;

#[derive(Clone, Copy, PartialEq)]
enum Direction {
    Free,
    Up,
    Down,
}

impl Direction {
    fn from_state(prev: PreviousAction) -> Self {
        match prev {
            PreviousAction::None => Direction::Free,
            PreviousAction::Add => Direction::Up,
            PreviousAction::Rem => Direction::Down,
        }
    }

    fn allows(self, label: ActionLabel) -> Option<Direction> {
        match (self, label) {
            (Direction::Free | Direction::Up, ActionLabel::Add(_)) => Some(Direction::Up),
            (Direction::Free | Direction::Down, ActionLabel::Rem(_)) => Some(Direction::Down),
            _ => None,
        }
    }
}

struct Expander<'a> {
    model: &'a MdpModel,
    leaf: &'a dyn Fn(StateId) -> Option<f64>,
    stop: &'a dyn Fn(StateId) -> f64,
    maximise: bool,
}

#[derive(Clone, Copy)]
struct Node {
    value: f64,
    distance: f64,
    steps: f64,
}

impl Expander<'_> {
    /// Optimal node value and, among optimal choices, the preferred first
    /// label.
    fn expand(&self, s: StateId, dir: Direction, depth: usize) -> Result<(Node, ActionLabel)> {
        if depth > self.model.states().len() {
            return Err(Error::Internal("path longer than the state count".into()));
        }
        if let Some(value) = (self.leaf)(s) {
            return Ok((Node { value, distance: 0.0, steps: 0.0 }, ActionLabel::NoOp));
        }
        let mut labels: Vec<ActionLabel> = Vec::new();
        for t in self.model.outgoing(s) {
            if t.label != ActionLabel::NoOp && !labels.contains(&t.label) {
                labels.push(t.label);
            }
        }
        let here = self.model.state(s).size.0 as f64;
        let stop = Node { value: (self.stop)(s), distance: 0.0, steps: 0.0 };
        let mut options = vec![(ActionLabel::NoOp, stop)];
        for label in labels {
            let Some(next_dir) = dir.allows(label) else {
                continue;
            };
            let edges: Vec<_> = self.model.outgoing(s).iter().filter(|t| t.label == label).collect();
            let mass: f64 = edges.iter().map(|t| t.probability).sum();
            let mut node = Node { value: 0.0, distance: 0.0, steps: 1.0 };
            for e in edges {
                let p = e.probability / mass;
                let (child, _) = self.expand(e.target, next_dir, depth + 1)?;
                let hop = (self.model.state(e.target).size.0 as f64 - here).abs();
                node.value += p * child.value;
                node.distance += p * (hop + child.distance);
                node.steps += p * child.steps;
            }
            options.push((label, node));
        }
        Ok(choose(&options, self.maximise))
    }
}

/// Lexicographic order among value ties: expected size change, expected
/// moves, larger first step, removal before addition.
fn preference(label: ActionLabel, node: &Node) -> (i64, i64, i64, u8) {
    let scaled = |x: f64| (x * 1e6).round() as i64;
    let (magnitude, add) = match label {
        ActionLabel::NoOp => (0, 0),
        ActionLabel::Rem(n) => (n as i64, 0),
        ActionLabel::Add(n) => (n as i64, 1),
    };
    (scaled(node.distance), scaled(node.steps), -magnitude, add)
}

fn choose(options: &[(ActionLabel, Node)], maximise: bool) -> (Node, ActionLabel) {
    let mut best = options[0].1.value;
    for (_, n) in options {
        if (maximise && n.value > best) || (!maximise && n.value < best) {
            best = n.value;
        }
    }
    let tol = 1e-9 * best.abs().max(1.0);
    let (label, node) = options
        .iter()
        .filter(|(_, n)| (n.value - best).abs() <= tol)
        .min_by_key(|(l, n)| preference(*l, n))
        .expect("at least the stop option");
    (Node { value: best, ..*node }, *label)
}

fn guard(model: &MdpModel) -> Result<()> {
    let n = model.states().len();
    if n > ORACLE_STATE_LIMIT {
        return Err(Error::OracleLimit(format!(
            "{n} states exceed the oracle limit of {ORACLE_STATE_LIMIT}"
        )));
    }
    Ok(())
}

/// Per-state maximum expected terminal reward by exhaustive path expansion.
pub fn brute_force_oracle(model: &MdpModel) -> Result<ValueMap> {
    guard(model)?;
    let expander = Expander {
        model,
        leaf: &|_| None,
        stop: &|s| model.state(s).reward,
        maximise: true,
    };
    run(model, &expander)
}

/// Per-state Pmax/Pmin of eventually reaching the predicate by exhaustive
/// path expansion.
pub fn reachability_oracle(model: &MdpModel, query: &ReachabilityQuery) -> Result<ValueMap> {
    guard(model)?;
    let expander = Expander {
        model,
        leaf: &|s| query.predicate.eval(model.state(s)).then_some(1.0),
        stop: &|_| 0.0,
        maximise: query.mode == QueryMode::Max,
    };
    run(model, &expander)
}

fn run(model: &MdpModel, expander: &Expander<'_>) -> Result<ValueMap> {
    let mut values = Vec::with_capacity(model.states().len());
    let mut actions = Vec::with_capacity(model.states().len());
    for s in model.state_ids() {
        let dir = Direction::from_state(model.state(s).previous_action);
        let (node, a) = expander.expand(s, dir, 0)?;
        values.push(node.value);
        actions.push(a);
    }
    Ok(ValueMap { values, actions })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{
        build_model, BehaviorReward, ClusterSize, InitialBehavior, ModelConfig, ModelVariant,
        RewardTable,
    };

    #[test]
    fn single_state_model() {
        let cfg = ModelConfig {
            min_vms: 5,
            max_vms: 5,
            add_limit: 1,
            rem_limit: 1,
            variant: ModelVariant::Simple,
            k: 1,
        };
        let table: RewardTable = [(ClusterSize(5), vec![BehaviorReward::single(-0.25)])].into();
        let m = build_model(&cfg, &table, ClusterSize(5), InitialBehavior::Index(0)).unwrap();
        let v = brute_force_oracle(&m).unwrap();
        assert_eq!(v.values, vec![-0.25]);
        assert_eq!(v.actions, vec![ActionLabel::NoOp]);
    }

    #[test]
    fn chain_of_three() {
        let cfg = ModelConfig {
            min_vms: 3,
            max_vms: 5,
            add_limit: 1,
            rem_limit: 1,
            variant: ModelVariant::Simple,
            k: 1,
        };
        let table: RewardTable = cfg
            .sizes()
            .map(|s| (s, vec![BehaviorReward::single(s.0 as f64 - 2.0)]))
            .collect();
        let m = build_model(&cfg, &table, ClusterSize(4), InitialBehavior::Index(0)).unwrap();
        let v = brute_force_oracle(&m).unwrap();
        assert_eq!(v.value(m.initial()), 3.0);
        assert_eq!(v.action(m.initial()), ActionLabel::Add(1));
    }

    #[test]
    fn refuses_large_models() {
        let cfg = ModelConfig {
            min_vms: 1,
            max_vms: 101,
            add_limit: 1,
            rem_limit: 1,
            variant: ModelVariant::Simple,
            k: 1,
        };
        let table: RewardTable = cfg.sizes().map(|s| (s, vec![BehaviorReward::single(0.0)])).collect();
        let m = build_model(&cfg, &table, ClusterSize(1), InitialBehavior::Index(0)).unwrap();
        assert!(matches!(brute_force_oracle(&m), Err(Error::OracleLimit(_))));
    }
}
