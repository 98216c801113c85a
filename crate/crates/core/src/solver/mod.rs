//! Direct solution of instantiated models.
//!
//! Rewards accrue only when `no_op` is taken, so the value of a state is the
//! best expected reward of the state where exploration stops. Under the
//! enabled guards the graph without `no_op` loops is acyclic (additions only
//! go up, removals only go down), so a memoised depth-first evaluation gives
//! exact values without discounting or iteration.

mod oracle;

use crate::error::{Error, Result};
use crate::model::{ActionLabel, ClusterSize, MdpModel, ModelVariant, StateId};
use crate::query::{QueryMode, ReachabilityQuery};

pub use oracle::{brute_force_oracle, reachability_oracle, ORACLE_STATE_LIMIT};

/// Two values closer than this (scaled by their magnitude) are a tie.
pub const VALUE_TIE_TOLERANCE: f64 = 1e-9;

pub(crate) fn ties(a: f64, b: f64) -> bool {
    (a - b).abs() <= VALUE_TIE_TOLERANCE * a.abs().max(b.abs()).max(1.0)
}

/// Optimal value and first action of every state.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueMap {
    pub values: Vec<f64>,
    pub actions: Vec<ActionLabel>,
}

impl ValueMap {
    pub fn value(&self, id: StateId) -> f64 {
        self.values[id.0]
    }

    pub fn action(&self, id: StateId) -> ActionLabel {
        self.actions[id.0]
    }
}

/// Outcome of one elasticity decision.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyDecision {
    /// Action to enact, within the per-step limits.
    pub action: ActionLabel,
    /// First action of the optimal plan before clipping to the limits.
    pub plan: ActionLabel,
    /// Expected utility if the plan is followed; `None` for rule-based
    /// policies that produce no estimate.
    pub expected_utility: Option<f64>,
    /// Set when `plan` exceeded the limits and `action` was clipped.
    pub bounded: bool,
    pub target: ClusterSize,
    /// Some reward came from neighbouring log buckets or sizes.
    pub interpolated: bool,
}

impl PolicyDecision {
    pub fn no_op(current: ClusterSize, expected_utility: Option<f64>) -> Self {
        PolicyDecision {
            action: ActionLabel::NoOp,
            plan: ActionLabel::NoOp,
            expected_utility,
            bounded: false,
            target: current,
            interpolated: false,
        }
    }

    /// Builds a decision from an unclipped plan, bounding it to the step
    /// limits and the size range.
    pub fn bounded_plan(
        plan: ActionLabel,
        current: ClusterSize,
        add_limit: u32,
        rem_limit: u32,
        range: (u32, u32),
        expected_utility: Option<f64>,
    ) -> Self {
        let (action, bounded) = match plan {
            ActionLabel::Add(n) => {
                let room = range.1.saturating_sub(current.0);
                let m = n.min(add_limit).min(room);
                (if m == 0 { ActionLabel::NoOp } else { ActionLabel::Add(m) }, m != n)
            }
            ActionLabel::Rem(n) => {
                let room = current.0.saturating_sub(range.0);
                let m = n.min(rem_limit).min(room);
                (if m == 0 { ActionLabel::NoOp } else { ActionLabel::Rem(m) }, m != n)
            }
            ActionLabel::NoOp => (ActionLabel::NoOp, false),
        };
        PolicyDecision {
            action,
            plan,
            expected_utility,
            bounded,
            target: current.apply(action),
            interpolated: false,
        }
    }
}

/// Value of one option together with the secondary tie-break keys.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Outcome {
    pub value: f64,
    /// Expected |size change| between this state and the stopping state.
    pub distance: f64,
    /// Expected number of moves before stopping.
    pub steps: f64,
}

/// Optimisation direction and leaf semantics of a backward evaluation.
struct Evaluation<'a> {
    model: &'a MdpModel,
    /// Value of stopping (taking `no_op`) in a state.
    stop: &'a dyn Fn(StateId) -> f64,
    /// States whose value is fixed regardless of the choice.
    absorbing: &'a dyn Fn(StateId) -> Option<f64>,
    maximise: bool,
}

#[derive(Clone, Copy, PartialEq)]
enum Mark {
    Unvisited,
    OnStack,
    Done,
}

struct Tables {
    outcomes: Vec<Outcome>,
    actions: Vec<ActionLabel>,
    marks: Vec<Mark>,
}

impl Evaluation<'_> {
    fn run(&self) -> Result<ValueMap> {
        let n = self.model.states().len();
        let mut tables = Tables {
            outcomes: vec![Outcome { value: 0.0, distance: 0.0, steps: 0.0 }; n],
            actions: vec![ActionLabel::NoOp; n],
            marks: vec![Mark::Unvisited; n],
        };
        for s in self.model.state_ids() {
            self.visit(s, &mut tables)?;
        }
        Ok(ValueMap {
            values: tables.outcomes.iter().map(|o| o.value).collect(),
            actions: tables.actions,
        })
    }

    fn visit(&self, s: StateId, tables: &mut Tables) -> Result<()> {
        match tables.marks[s.0] {
            Mark::Done => return Ok(()),
            Mark::OnStack => {
                return Err(Error::Internal(format!(
                    "cycle through {} among enabled non-no_op transitions",
                    self.model.state_label(s)
                )))
            }
            Mark::Unvisited => {}
        }
        tables.marks[s.0] = Mark::OnStack;
        if let Some(value) = (self.absorbing)(s) {
            tables.outcomes[s.0] = Outcome { value, distance: 0.0, steps: 0.0 };
            tables.actions[s.0] = ActionLabel::NoOp;
            tables.marks[s.0] = Mark::Done;
            return Ok(());
        }
        let size = self.model.state(s).size.0;
        let mut options = Vec::new();
        for label in self.model.enabled_labels(s) {
            let outcome = if label.is_no_op() {
                Outcome { value: (self.stop)(s), distance: 0.0, steps: 0.0 }
            } else {
                let mut acc = Outcome { value: 0.0, distance: 0.0, steps: 1.0 };
                for (t, p) in self.model.label_distribution(s, label) {
                    if t == s {
                        return Err(Error::Internal(format!(
                            "{label} loops on {}",
                            self.model.state_label(s)
                        )));
                    }
                    self.visit(t, tables)?;
                    let next = tables.outcomes[t.0];
                    let hop = self.model.state(t).size.0.abs_diff(size) as f64;
                    acc.value += p * next.value;
                    acc.distance += p * (hop + next.distance);
                    acc.steps += p * next.steps;
                }
                acc
            };
            options.push((label, outcome));
        }
        let (label, outcome) = pick(&options, self.maximise).ok_or_else(|| {
            Error::Internal(format!("no enabled action at {}", self.model.state_label(s)))
        })?;
        tables.outcomes[s.0] = outcome;
        tables.actions[s.0] = label;
        tables.marks[s.0] = Mark::Done;
        Ok(())
    }
}

/// Best option under the decision order. Options whose values tie within
/// tolerance are ranked by smaller expected total size change (so `no_op`
/// wins any tie it is part of), then fewer expected moves, then the larger
/// first step, then removal over addition.
pub(crate) fn pick(options: &[(ActionLabel, Outcome)], maximise: bool) -> Option<(ActionLabel, Outcome)> {
    let best = options.iter().map(|o| o.1.value).reduce(|a, b| {
        if maximise {
            a.max(b)
        } else {
            a.min(b)
        }
    })?;
    let close = |a: f64, b: f64| (a - b).abs() <= VALUE_TIE_TOLERANCE;
    let mut pool: Vec<&(ActionLabel, Outcome)> = options.iter().filter(|o| ties(o.1.value, best)).collect();
    let min_distance = pool.iter().map(|o| o.1.distance).fold(f64::INFINITY, f64::min);
    pool.retain(|o| close(o.1.distance, min_distance));
    let min_steps = pool.iter().map(|o| o.1.steps).fold(f64::INFINITY, f64::min);
    pool.retain(|o| close(o.1.steps, min_steps));
    pool.into_iter()
        .min_by_key(|o| {
            let (noop, magnitude, add) = o.0.tie_break_key();
            (noop, std::cmp::Reverse(magnitude), add)
        })
        .copied()
}

/// Maximum expected terminal reward of every state.
pub fn max_expected_reward(model: &MdpModel) -> Result<ValueMap> {
    Evaluation {
        model,
        stop: &|s| model.state(s).reward,
        absorbing: &|_| None,
        maximise: true,
    }
    .run()
}

/// Value of every enabled label in `state`, given solved values.
pub fn action_values(model: &MdpModel, values: &ValueMap, state: StateId) -> Vec<(ActionLabel, f64)> {
    model
        .enabled_labels(state)
        .into_iter()
        .map(|label| {
            let v = if label.is_no_op() {
                model.state(state).reward
            } else {
                model
                    .label_distribution(state, label)
                    .iter()
                    .map(|&(t, p)| p * values.value(t))
                    .sum()
            };
            (label, v)
        })
        .collect()
}

/// First action of an optimal plan from the initial state. Plans of the
/// all-targets variant that exceed the step limits are clipped and flagged.
pub fn decide(model: &MdpModel) -> Result<PolicyDecision> {
    let values = max_expected_reward(model)?;
    let init = model.initial();
    let plan = values.action(init);
    let cfg = model.config();
    let current = model.state(init).size;
    let decision = PolicyDecision::bounded_plan(
        plan,
        current,
        cfg.add_limit,
        cfg.rem_limit,
        (cfg.min_vms, cfg.max_vms),
        Some(values.value(init)),
    );
    debug_assert!(cfg.variant == ModelVariant::AllTargets || !decision.bounded);
    Ok(decision)
}

/// Maximum or minimum probability, over strategies, of eventually visiting a
/// state that satisfies the query predicate.
pub fn reachability_probability(model: &MdpModel, query: &ReachabilityQuery) -> f64 {
    reachability_values(model, query)
        .map(|v| v.value(model.initial()))
        // valid models are acyclic under the guards; a cyclic one can at most
        // satisfy the predicate where it starts
        .unwrap_or_else(|_| f64::from(u8::from(query.predicate.eval(model.state(model.initial())))))
}

/// Reachability probability of every state.
pub fn reachability_values(model: &MdpModel, query: &ReachabilityQuery) -> Result<ValueMap> {
    let satisfied = |s: StateId| query.predicate.eval(model.state(s));
    Evaluation {
        model,
        stop: &|_| 0.0,
        absorbing: &|s| satisfied(s).then_some(1.0),
        maximise: query.mode == QueryMode::Max,
    }
    .run()
    .map(|mut v| {
        for x in &mut v.values {
            *x = x.clamp(0.0, 1.0);
        }
        v
    })
}
