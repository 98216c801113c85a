use elasticity_core::model::{
    build_model, parse_dump, validate_model, ActionKind, BehaviorReward, ClusterSize, InitialBehavior,
    MdpModel, ModelConfig, ModelVariant, RewardTable,
};

fn small_model() -> MdpModel {
    let config = ModelConfig {
        min_vms: 3,
        max_vms: 7,
        add_limit: 2,
        rem_limit: 1,
        variant: ModelVariant::Simple,
        k: 1,
    };
    let table: RewardTable = config
        .sizes()
        .map(|s| (s, vec![BehaviorReward::single(s.0 as f64)]))
        .collect();
    build_model(&config, &table, ClusterSize(4), InitialBehavior::Index(0)).unwrap()
}

/// Parses the golden file into (kind, matrix) blocks.
fn golden() -> Vec<(ActionKind, Vec<Vec<f64>>)> {
    let text = include_str!("golden/fig2_matrices.txt");
    let mut out: Vec<(ActionKind, Vec<Vec<f64>>)> = Vec::new();
    for line in text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')) {
        let kind = match line {
            "add" => Some(ActionKind::Add),
            "rem" => Some(ActionKind::Rem),
            "no_op" => Some(ActionKind::NoOp),
            _ => None,
        };
        match kind {
            Some(k) => out.push((k, Vec::new())),
            None => {
                let row = line.split_whitespace().map(|x| x.parse().unwrap()).collect();
                out.last_mut().expect("matrix header first").1.push(row);
            }
        }
    }
    out
}

#[test]
fn small_model_matches_golden_matrices() {
    let model = small_model();
    let blocks = golden();
    assert_eq!(blocks.len(), 3);
    for (kind, expected) in blocks {
        assert_eq!(model.type_matrix(kind), expected, "{kind:?} matrix");
    }
    assert_eq!(model.state_label(model.initial()), "s4");
    assert!(validate_model(&model).is_valid());
}

#[test]
fn dump_round_trips() {
    let model = small_model();
    let text = model.dump();
    assert!(text.starts_with("mdp variant=M1 min_vms=3 max_vms=7 add_limit=2 rem_limit=1"));
    let back = parse_dump(&text).unwrap();
    assert_eq!(back, model);
    assert_eq!(back.dump(), text);
}

#[test]
fn tampered_dump_is_reported() {
    let text = small_model().dump().replace("trans s4 add_2 s6 0.5", "trans s4 add_2 s6 0.25");
    let model = parse_dump(&text).unwrap();
    assert!(!validate_model(&model).is_valid());
}
