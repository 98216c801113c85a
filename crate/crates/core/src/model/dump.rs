//! Line-oriented text form of a model.
//!
//! ```text
//! mdp variant=M1 min_vms=3 max_vms=7 add_limit=2 rem_limit=1 k=1 initial=s4
//! state s3 size=3 behavior=0 weight=1 reward=0.5 previous=rem phase=control
//! trans s4 add_2 s6 0.5 enabled
//! ```
//!
//! Floats use Rust's shortest round-trip formatting, so a dump parses back
//! into an identical model.

use std::collections::HashMap;
use std::fmt::Write as _;

use super::{
    parse_behavior_letters, ActionLabel, Center, ClusterSize, MdpModel, MdpState, ModelConfig,
    ModelVariant, Phase, PreviousAction, StateId, Transition,
};
use crate::error::{Error, Result};

pub(super) fn dump(model: &MdpModel) -> String {
    let cfg = model.config();
    let mut out = String::new();
    let _ = writeln!(
        out,
        "mdp variant={} min_vms={} max_vms={} add_limit={} rem_limit={} k={} initial={}",
        cfg.variant.tag(),
        cfg.min_vms,
        cfg.max_vms,
        cfg.add_limit,
        cfg.rem_limit,
        cfg.k,
        model.state_label(model.initial())
    );
    for id in model.state_ids() {
        let s = model.state(id);
        let _ = write!(
            out,
            "state {} size={} behavior={} weight={} reward={} previous={} phase={}",
            model.state_label(id),
            s.size,
            s.behavior,
            s.weight,
            s.reward,
            s.previous_action.as_str(),
            s.phase.as_str()
        );
        if let Some(c) = s.center {
            let _ = write!(out, " latency_ms={} throughput={}", c.latency_ms, c.throughput);
        }
        out.push('\n');
    }
    for t in model.transitions() {
        let _ = write!(
            out,
            "trans {} {} {} {} {}",
            model.state_label(t.source),
            t.label,
            model.state_label(t.target),
            t.probability,
            if t.enabled { "enabled" } else { "guarded" }
        );
        if t.action_reward != 0.0 {
            let _ = write!(out, " action_reward={}", t.action_reward);
        }
        out.push('\n');
    }
    out
}

/// Parses the output of [`MdpModel::dump`]. Blank lines and `#` comments are
/// ignored.
pub fn parse_dump(text: &str) -> Result<MdpModel> {
    let mut config: Option<ModelConfig> = None;
    let mut initial_name: Option<String> = None;
    let mut states: Vec<MdpState> = Vec::new();
    let mut ids: HashMap<String, StateId> = HashMap::new();
    let mut transitions: Vec<Transition> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |message: String| Error::Malformed { line: line_no, message };
        let mut tokens = line.split_whitespace();
        match tokens.next() {
            Some("mdp") => {
                let kv = key_values(tokens).map_err(&err)?;
                let get = |k: &str| kv.get(k).cloned().ok_or_else(|| err(format!("missing `{k}`")));
                let variant: ModelVariant = get("variant")?.parse().map_err(|e: Error| err(e.to_string()))?;
                config = Some(ModelConfig {
                    min_vms: parse_num(&get("min_vms")?).map_err(&err)?,
                    max_vms: parse_num(&get("max_vms")?).map_err(&err)?,
                    add_limit: parse_num(&get("add_limit")?).map_err(&err)?,
                    rem_limit: parse_num(&get("rem_limit")?).map_err(&err)?,
                    k: parse_num(&get("k")?).map_err(&err)?,
                    variant,
                });
                initial_name = Some(get("initial")?);
            }
            Some("state") => {
                let name = tokens.next().ok_or_else(|| err("missing state name".into()))?.to_string();
                let kv = key_values(tokens).map_err(&err)?;
                let get = |k: &str| kv.get(k).cloned().ok_or_else(|| err(format!("missing `{k}`")));
                let size: u32 = parse_num(&get("size")?).map_err(&err)?;
                let behavior: usize = parse_num(&get("behavior")?).map_err(&err)?;
                check_name(&name, size, behavior).map_err(&err)?;
                let previous_action = match get("previous")?.as_str() {
                    "none" => PreviousAction::None,
                    "add" => PreviousAction::Add,
                    "rem" => PreviousAction::Rem,
                    other => return Err(err(format!("unknown previous action `{other}`"))),
                };
                let phase = match get("phase")?.as_str() {
                    "decision" => Phase::Decision,
                    "control" => Phase::Control,
                    "accepted" => Phase::Accepted,
                    other => return Err(err(format!("unknown phase `{other}`"))),
                };
                let center = match (kv.get("latency_ms"), kv.get("throughput")) {
                    (Some(l), Some(t)) => Some(Center {
                        latency_ms: parse_num(l).map_err(&err)?,
                        throughput: parse_num(t).map_err(&err)?,
                    }),
                    (None, None) => None,
                    _ => return Err(err("center needs both latency_ms and throughput".into())),
                };
                if ids.insert(name.clone(), StateId(states.len())).is_some() {
                    return Err(err(format!("duplicate state `{name}`")));
                }
                states.push(MdpState {
                    size: ClusterSize(size),
                    behavior,
                    weight: parse_num(&get("weight")?).map_err(&err)?,
                    reward: parse_num(&get("reward")?).map_err(&err)?,
                    center,
                    phase,
                    previous_action,
                });
            }
            Some("trans") => {
                let fields: Vec<&str> = tokens.collect();
                if fields.len() < 5 {
                    return Err(err("expected `trans SOURCE LABEL TARGET PROB enabled|guarded`".into()));
                }
                let lookup = |n: &str| ids.get(n).copied().ok_or_else(|| err(format!("unknown state `{n}`")));
                let enabled = match fields[4] {
                    "enabled" => true,
                    "guarded" => false,
                    other => return Err(err(format!("expected enabled|guarded, got `{other}`"))),
                };
                let kv = key_values(fields[5..].iter().copied()).map_err(&err)?;
                let action_reward = match kv.get("action_reward") {
                    Some(v) => parse_num(v).map_err(&err)?,
                    None => 0.0,
                };
                transitions.push(Transition {
                    source: lookup(fields[0])?,
                    label: fields[1].parse::<ActionLabel>().map_err(|e| err(e.to_string()))?,
                    target: lookup(fields[2])?,
                    probability: parse_num(fields[3]).map_err(&err)?,
                    enabled,
                    action_reward,
                });
            }
            Some(other) => return Err(err(format!("unknown record `{other}`"))),
            None => unreachable!("blank lines skipped"),
        }
    }

    let config = config.ok_or_else(|| Error::Malformed { line: 1, message: "missing `mdp` header".into() })?;
    let initial_name = initial_name.unwrap_or_default();
    let initial = *ids.get(&initial_name).ok_or_else(|| Error::Malformed {
        line: 1,
        message: format!("initial state `{initial_name}` not declared"),
    })?;
    MdpModel::from_parts(config, states, initial, transitions)
}

fn key_values<'a>(tokens: impl Iterator<Item = &'a str>) -> std::result::Result<HashMap<String, String>, String> {
    tokens
        .map(|tok| {
            tok.split_once('=')
                .map(|(k, v)| (k.to_string(), v.to_string()))
                .ok_or_else(|| format!("expected key=value, got `{tok}`"))
        })
        .collect()
}

fn parse_num<T: std::str::FromStr>(s: &str) -> std::result::Result<T, String> {
    s.parse().map_err(|_| format!("bad number `{s}`"))
}

fn check_name(name: &str, size: u32, behavior: usize) -> std::result::Result<(), String> {
    let rest = name.strip_prefix('s').ok_or_else(|| format!("state name `{name}` must start with `s`"))?;
    let digits: String = rest.chars().take_while(|c| c.is_ascii_digit()).collect();
    let letters = &rest[digits.len()..];
    let ok_size = digits.parse::<u32>().ok() == Some(size);
    let ok_behavior = if letters.is_empty() {
        behavior == 0
    } else {
        parse_behavior_letters(letters) == Some(behavior)
    };
    if ok_size && ok_behavior {
        Ok(())
    } else {
        Err(format!("state name `{name}` does not match size={size} behavior={behavior}"))
    }
}
