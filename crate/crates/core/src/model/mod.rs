//! Decision models over cluster sizes.
//!
//! A model has one state per (cluster size, behaviour cluster). Every edge is
//! labelled with a sized action (`add_2`, `rem_1`, `no_op`) and carries the
//! probability it has within its action *type*: from `s4` with an add limit of
//! two, `add_1` and `add_2` each reach their size with probability 0.5, so the
//! aggregated add row of `s4` sums to one. Choosing a sized label is the
//! controller's non-deterministic choice; its outcome distribution is the
//! label's edges renormalised, i.e. the behaviour weights of the target size.
//!
//! Monotone exploration is encoded with a per-state `previous_action` and an
//! `enabled` guard on every edge: once the first move goes up only additions
//! (and `no_op`) stay enabled, symmetrically for removals.

mod build;
mod dump;
mod validate;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use build::{build_model, BehaviorReward, InitialBehavior, RewardTable};
pub use dump::parse_dump;
pub use validate::{validate_model, ValidationReport, Violation, ViolationKind};

/// Tolerance for probability masses and weight sums.
pub const PROB_TOLERANCE: f64 = 1e-9;

/// Number of active VMs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ClusterSize(pub u32);

impl ClusterSize {
    pub fn get(self) -> u32 {
        self.0
    }

    /// Applies an action label, saturating at zero.
    pub fn apply(self, label: ActionLabel) -> ClusterSize {
        match label {
            ActionLabel::Add(n) => ClusterSize(self.0 + n),
            ActionLabel::Rem(n) => ClusterSize(self.0.saturating_sub(n)),
            ActionLabel::NoOp => self,
        }
    }
}

impl fmt::Display for ClusterSize {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Which of the three model shapes to instantiate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModelVariant {
    /// One state per size; steps bounded by the add/remove limits.
    #[serde(alias = "M1", alias = "m1", alias = "simple")]
    Simple,
    /// One state per (size, behaviour cluster); targets split by cluster weight.
    #[serde(alias = "M2", alias = "m2", alias = "multi_behavior")]
    MultiBehavior,
    /// Multi-behaviour states with transitions to every larger/smaller size.
    #[serde(alias = "M3", alias = "m3", alias = "all_targets")]
    AllTargets,
}

impl ModelVariant {
    pub fn tag(self) -> &'static str {
        match self {
            ModelVariant::Simple => "M1",
            ModelVariant::MultiBehavior => "M2",
            ModelVariant::AllTargets => "M3",
        }
    }
}

impl FromStr for ModelVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "m1" | "simple" => Ok(ModelVariant::Simple),
            "m2" | "multi_behavior" | "multi-behavior" => Ok(ModelVariant::MultiBehavior),
            "m3" | "all_targets" | "all-targets" => Ok(ModelVariant::AllTargets),
            other => Err(Error::Config(format!("unknown model variant `{other}`"))),
        }
    }
}

/// Size range, per-step limits and model shape.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub min_vms: u32,
    pub max_vms: u32,
    pub add_limit: u32,
    pub rem_limit: u32,
    pub variant: ModelVariant,
    /// Behaviour clusters per size (used by the multi-behaviour variants).
    pub k: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            min_vms: 4,
            max_vms: 16,
            add_limit: 3,
            rem_limit: 2,
            variant: ModelVariant::Simple,
            k: 4,
        }
    }
}

impl ModelConfig {
    pub fn check(&self) -> Result<()> {
        if self.min_vms < 1 {
            return Err(Error::Config("min_vms must be at least 1".into()));
        }
        if self.min_vms > self.max_vms {
            return Err(Error::Config(format!(
                "min_vms {} exceeds max_vms {}",
                self.min_vms, self.max_vms
            )));
        }
        if self.add_limit < 1 || self.rem_limit < 1 {
            return Err(Error::Config("add_limit and rem_limit must be at least 1".into()));
        }
        if self.k < 1 {
            return Err(Error::Config("k must be at least 1".into()));
        }
        Ok(())
    }

    pub fn contains(&self, size: ClusterSize) -> bool {
        (self.min_vms..=self.max_vms).contains(&size.0)
    }

    pub fn sizes(&self) -> impl Iterator<Item = ClusterSize> {
        (self.min_vms..=self.max_vms).map(ClusterSize)
    }

    pub fn with_variant(mut self, variant: ModelVariant) -> Self {
        self.variant = variant;
        self
    }
}

/// The three action types.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ActionKind {
    Add,
    Rem,
    NoOp,
}

impl fmt::Display for ActionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ActionKind::Add => "add",
            ActionKind::Rem => "rem",
            ActionKind::NoOp => "no_op",
        })
    }
}

/// A sized action label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ActionLabel {
    Add(u32),
    Rem(u32),
    NoOp,
}

impl ActionLabel {
    pub fn kind(self) -> ActionKind {
        match self {
            ActionLabel::Add(_) => ActionKind::Add,
            ActionLabel::Rem(_) => ActionKind::Rem,
            ActionLabel::NoOp => ActionKind::NoOp,
        }
    }

    /// Number of VMs added or removed.
    pub fn magnitude(self) -> u32 {
        match self {
            ActionLabel::Add(n) | ActionLabel::Rem(n) => n,
            ActionLabel::NoOp => 0,
        }
    }

    pub fn is_no_op(self) -> bool {
        matches!(self, ActionLabel::NoOp)
    }

    /// Sort key ranking `no_op` first, then the smaller change, then
    /// removals before additions.
    pub fn tie_break_key(self) -> (u8, u32, u8) {
        match self {
            ActionLabel::NoOp => (0, 0, 0),
            ActionLabel::Rem(n) => (1, n, 0),
            ActionLabel::Add(n) => (1, n, 1),
        }
    }
}

impl fmt::Display for ActionLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ActionLabel::Add(n) => write!(f, "add_{n}"),
            ActionLabel::Rem(n) => write!(f, "rem_{n}"),
            ActionLabel::NoOp => f.write_str("no_op"),
        }
    }
}

impl FromStr for ActionLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Config(format!("bad action label `{s}`"));
        if s == "no_op" {
            return Ok(ActionLabel::NoOp);
        }
        let (kind, n) = s.split_once('_').ok_or_else(bad)?;
        let n: u32 = n.parse().map_err(|_| bad())?;
        if n == 0 {
            return Err(bad());
        }
        match kind {
            "add" => Ok(ActionLabel::Add(n)),
            "rem" => Ok(ActionLabel::Rem(n)),
            _ => Err(bad()),
        }
    }
}

/// Type of the move that led into a state along the explored path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PreviousAction {
    None,
    Add,
    Rem,
}

impl PreviousAction {
    /// Whether an action of `kind` may follow.
    pub fn permits(self, kind: ActionKind) -> bool {
        match (self, kind) {
            (_, ActionKind::NoOp) | (PreviousAction::None, _) => true,
            (PreviousAction::Add, ActionKind::Add) | (PreviousAction::Rem, ActionKind::Rem) => true,
            _ => false,
        }
    }

    fn as_str(self) -> &'static str {
        match self {
            PreviousAction::None => "none",
            PreviousAction::Add => "add",
            PreviousAction::Rem => "rem",
        }
    }
}

/// State type: the initial decision state, intermediate control states, and
/// accepted states entered through `no_op`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Phase {
    Decision,
    Control,
    Accepted,
}

impl Phase {
    fn as_str(self) -> &'static str {
        match self {
            Phase::Decision => "decision",
            Phase::Control => "control",
            Phase::Accepted => "accepted",
        }
    }
}

/// Representative measurement of a behaviour cluster.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Center {
    pub latency_ms: f64,
    pub throughput: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StateId(pub usize);

#[derive(Debug, Clone, PartialEq)]
pub struct MdpState {
    pub size: ClusterSize,
    pub behavior: usize,
    pub weight: f64,
    pub reward: f64,
    pub center: Option<Center>,
    pub phase: Phase,
    pub previous_action: PreviousAction,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub source: StateId,
    pub label: ActionLabel,
    pub target: StateId,
    /// Probability within the action type of `label`.
    pub probability: f64,
    pub enabled: bool,
    pub action_reward: f64,
}

/// An instantiated decision model. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct MdpModel {
    config: ModelConfig,
    states: Vec<MdpState>,
    initial: StateId,
    transitions: Vec<Transition>,
    // outgoing[s] = index range into `transitions`
    outgoing: Vec<std::ops::Range<usize>>,
}

impl MdpModel {
    /// Assembles a model from raw parts. Only structural soundness (indices in
    /// bounds) is checked here; use [`validate_model`] for the semantic
    /// invariants.
    pub fn from_parts(
        config: ModelConfig,
        states: Vec<MdpState>,
        initial: StateId,
        mut transitions: Vec<Transition>,
    ) -> Result<MdpModel> {
        let n = states.len();
        if initial.0 >= n {
            return Err(Error::Instantiation(format!(
                "initial state {} out of bounds ({n} states)",
                initial.0
            )));
        }
        if let Some(t) = transitions.iter().find(|t| t.source.0 >= n || t.target.0 >= n) {
            return Err(Error::Instantiation(format!(
                "transition {} -> {} references a missing state",
                t.source.0, t.target.0
            )));
        }
        transitions.sort_by(|a, b| {
            (a.source, kind_rank(a.label), a.label.magnitude(), a.target).cmp(&(
                b.source,
                kind_rank(b.label),
                b.label.magnitude(),
                b.target,
            ))
        });
        let mut outgoing = Vec::with_capacity(n);
        let mut start = 0;
        for s in 0..n {
            let mut end = start;
            while end < transitions.len() && transitions[end].source.0 == s {
                end += 1;
            }
            outgoing.push(start..end);
            start = end;
        }
        Ok(MdpModel {
            config,
            states,
            initial,
            transitions,
            outgoing,
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn states(&self) -> &[MdpState] {
        &self.states
    }

    pub fn state(&self, id: StateId) -> &MdpState {
        &self.states[id.0]
    }

    pub fn initial(&self) -> StateId {
        self.initial
    }

    pub fn transitions(&self) -> &[Transition] {
        &self.transitions
    }

    pub fn state_ids(&self) -> impl Iterator<Item = StateId> {
        (0..self.states.len()).map(StateId)
    }

    /// All edges leaving `id`, enabled or not, ordered add, rem, no_op.
    pub fn outgoing(&self, id: StateId) -> &[Transition] {
        &self.transitions[self.outgoing[id.0].clone()]
    }

    /// Distinct labels with at least one enabled edge out of `id`.
    pub fn enabled_labels(&self, id: StateId) -> Vec<ActionLabel> {
        let mut labels: Vec<ActionLabel> = Vec::new();
        for t in self.outgoing(id).iter().filter(|t| t.enabled) {
            if !labels.contains(&t.label) {
                labels.push(t.label);
            }
        }
        labels
    }

    /// Outcome distribution of choosing `label` in `id`: the label's enabled
    /// edges with probabilities renormalised to sum to one.
    pub fn label_distribution(&self, id: StateId, label: ActionLabel) -> Vec<(StateId, f64)> {
        let edges: Vec<&Transition> = self
            .outgoing(id)
            .iter()
            .filter(|t| t.enabled && t.label == label)
            .collect();
        let mass: f64 = edges.iter().map(|t| t.probability).sum();
        if mass <= 0.0 {
            return Vec::new();
        }
        edges.iter().map(|t| (t.target, t.probability / mass)).collect()
    }

    /// Aggregated transition matrix of one action type over all states,
    /// including guarded edges (`matrix[s][s']`).
    pub fn type_matrix(&self, kind: ActionKind) -> Vec<Vec<f64>> {
        let n = self.states.len();
        let mut m = vec![vec![0.0; n]; n];
        for t in self.transitions.iter().filter(|t| t.label.kind() == kind) {
            m[t.source.0][t.target.0] += t.probability;
        }
        m
    }

    /// Human-readable state name: `s4` for single-behaviour models, `s4b` for
    /// behaviour index 1 otherwise.
    pub fn state_label(&self, id: StateId) -> String {
        let s = &self.states[id.0];
        if self.config.variant == ModelVariant::Simple {
            format!("s{}", s.size)
        } else {
            format!("s{}{}", s.size, behavior_letter(s.behavior))
        }
    }

    /// Looks up the state with the given size and behaviour index.
    pub fn find_state(&self, size: ClusterSize, behavior: usize) -> Option<StateId> {
        self.states
            .iter()
            .position(|s| s.size == size && s.behavior == behavior)
            .map(StateId)
    }

    pub fn dump(&self) -> String {
        dump::dump(self)
    }
}

fn kind_rank(label: ActionLabel) -> u8 {
    match label.kind() {
        ActionKind::Add => 0,
        ActionKind::Rem => 1,
        ActionKind::NoOp => 2,
    }
}

pub(crate) fn behavior_letter(index: usize) -> String {
    let mut out = String::new();
    let mut i = index;
    loop {
        out.insert(0, (b'a' + (i % 26) as u8) as char);
        if i < 26 {
            break;
        }
        i = i / 26 - 1;
    }
    out
}

pub(crate) fn parse_behavior_letters(s: &str) -> Option<usize> {
    if s.is_empty() || !s.bytes().all(|b| b.is_ascii_lowercase()) {
        return None;
    }
    let mut idx: usize = 0;
    for (pos, b) in s.bytes().enumerate() {
        let digit = (b - b'a') as usize;
        idx = if pos == 0 { digit } else { (idx + 1) * 26 + digit };
    }
    Some(idx)
}
