use elasticity_core::emulator::{
    emulate_state, gen_load, noise_stream, run_episode, EpisodeSetup, LoadProfile, Schedule,
    Variation,
};
use elasticity_core::harness::{run_comparison_with, ExperimentConfig};
use elasticity_core::model::{ActionLabel, ModelConfig};
use elasticity_core::policy::{make_policy, PolicyKind, PostProcessConfig};
use elasticity_core::reward::{LogStore, MeasurementRecord, UtilityConfig};

fn quick_config() -> ExperimentConfig {
    let mut cfg = ExperimentConfig::default();
    cfg.runs = 3;
    cfg.schedule.horizon = 120;
    cfg
}

#[test]
fn re_adds_when_four_vms_are_overloaded() {
    // 4 VMs answer 9000 req/s in 150 ms, everything else is fast
    let mut recs = Vec::new();
    for vms in 4..=16 {
        for load in [1000.0, 9000.0] {
            let latency = if vms == 4 && load == 9000.0 { 150.0 } else { 20.0 };
            recs.push(MeasurementRecord { time: 0, vms_num: vms, load, latency_ms: latency, throughput: load });
        }
    }
    let store = LogStore::from_records(1000.0, recs).unwrap();
    let setup = EpisodeSetup {
        store: &store,
        profile: LoadProfile { lambda_min: 9000.0, lambda_max: 9000.5, ..LoadProfile::default() },
        schedule: Schedule { horizon: 10, ..Schedule::default() },
        model: ModelConfig::default(),
        utility: UtilityConfig::default(),
        post: PostProcessConfig::default(),
        noise_fraction: 0.0,
    };
    let cfg = quick_config();
    let mut re = make_policy(PolicyKind::Re, &cfg.policy_settings());
    let trace = run_episode(re.as_mut(), &setup, 0, 1);
    assert!(trace.valid);
    let first = trace.decisions().next().unwrap();
    assert!(matches!(first.decision, Some(ActionLabel::Add(_))));
}

#[test]
fn load_variations_are_a_quarter_period_apart() {
    let lv1 = LoadProfile::default();
    let lv2 = lv1.with_variation(Variation::LV2);
    assert_eq!(gen_load(&lv1, 0.0), 1000.0);
    assert_eq!(gen_load(&lv2, 0.0), 23500.0);
    let quarter = lv1.period / 4.0;
    for t in 0..400 {
        let t = t as f64;
        let a = gen_load(&lv2, t);
        assert!((a - gen_load(&lv1, t + quarter)).abs() < 1e-6);
        assert!((1000.0 - 1e-9..=46000.0 + 1e-9).contains(&a));
    }
}

#[test]
fn noiseless_episodes_are_bit_reproducible() {
    let mut cfg = quick_config();
    cfg.synthetic.noise_stddev_fraction = 0.0;
    cfg.noise_fraction = 0.0;
    let store = cfg.load_store().unwrap();
    let a = run_comparison_with(&cfg, &store);
    let b = run_comparison_with(&cfg, &store);
    for (x, y) in a.traces.iter().zip(&b.traces) {
        assert_eq!(x.rows.len(), y.rows.len());
        for (r, s) in x.rows.iter().zip(&y.rows) {
            assert_eq!(r.latency_ms.to_bits(), s.latency_ms.to_bits());
            assert_eq!(r.throughput.to_bits(), s.throughput.to_bits());
            assert_eq!((r.vms, r.decision), (s.vms, s.decision));
        }
    }
}

#[test]
fn sizes_stay_in_range_and_traces_are_fair() {
    let cfg = quick_config();
    let store = cfg.load_store().unwrap();
    let cmp = run_comparison_with(&cfg, &store);
    assert!(cmp.all_valid());
    assert_eq!(cmp.traces.len(), PolicyKind::ALL.len() * cfg.runs);
    for t in &cmp.traces {
        assert!(t.rows.iter().all(|r| (4..=16).contains(&r.vms)));
        assert_eq!(t.decisions().count(), 12);
        assert!(t.rows.iter().all(|r| r.violation as usize <= 1 && r.violation == (r.latency_ms > 60.0)));
    }
    for run in 0..cfg.runs {
        let same: Vec<_> = cmp.traces.iter().filter(|t| t.run == run).collect();
        let noise = noise_stream(cfg.run_seed(run), cfg.schedule.horizon);
        for t in &same {
            assert_eq!(t.seed, cfg.run_seed(run));
            for (row, draw) in t.rows.iter().zip(&noise) {
                assert_eq!(row.load.to_bits(), same[0].rows[row.tick].load.to_bits());
                // the realised state follows from (size, load, shared noise) alone
                let expect = emulate_state(&store, row.vms, row.load, cfg.noise_fraction, draw).unwrap();
                assert_eq!(expect, (row.latency_ms, row.throughput));
            }
        }
    }
}

#[test]
fn duplicate_policies_give_identical_summaries() {
    let mut cfg = quick_config();
    cfg.policies = vec![PolicyKind::MdpEb, PolicyKind::MdpEb];
    let store = cfg.load_store().unwrap();
    let cmp = run_comparison_with(&cfg, &store);
    // both listings aggregate into one entry of identical runs
    let per_run = &cmp.summary.per_run;
    assert_eq!(per_run.len(), 2 * cfg.runs);
    for i in 0..cfg.runs {
        let (a, b) = (&per_run[i], &per_run[cfg.runs + i]);
        assert_eq!(a.mean_utility, b.mean_utility);
        assert_eq!(a.violations, b.violations);
    }
}

#[test]
fn summary_is_the_mean_of_run_means() {
    let cfg = quick_config();
    let store = cfg.load_store().unwrap();
    let cmp = run_comparison_with(&cfg, &store);
    for p in &cmp.summary.policies {
        let runs: Vec<_> = cmp.summary.per_run.iter().filter(|m| m.policy == p.policy).collect();
        let mean = runs.iter().map(|m| m.mean_utility).sum::<f64>() / runs.len() as f64;
        assert!((p.mean_utility - mean).abs() <= 1e-12 * mean.abs().max(1.0));
        assert!(runs.iter().all(|m| m.violations <= cfg.schedule.horizon));
    }
}

#[test]
fn emulation_noise_has_the_configured_spread() {
    let recs = vec![
        MeasurementRecord { time: 0, vms_num: 4, load: 2000.0, latency_ms: 40.0, throughput: 2000.0 },
        MeasurementRecord { time: 1, vms_num: 4, load: 2000.0, latency_ms: 80.0, throughput: 1000.0 },
    ];
    let store = LogStore::from_records(1000.0, recs).unwrap();
    let draws = noise_stream(99, 10_000);
    let sigma = 0.05;
    let mut ratios = Vec::new();
    let mut first = 0usize;
    for d in &draws {
        let (lat, thr) = emulate_state(&store, 4, 2000.0, sigma, d).unwrap();
        // the latency to throughput pairing identifies the sampled record
        let base = if thr > 1500.0 { 40.0 } else { 80.0 };
        if base == 40.0 {
            first += 1;
        }
        let ratio = lat / base;
        assert!((ratio - 1.0).abs() <= 5.0 * sigma, "draw outside 5 sigma: {ratio}");
        ratios.push(ratio);
    }
    let n = ratios.len() as f64;
    let mean = ratios.iter().sum::<f64>() / n;
    let sd = (ratios.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    // 4 standard errors of the sample mean and sample deviation
    assert!((mean - 1.0).abs() < 4.0 * sigma / n.sqrt());
    assert!((sd - sigma).abs() < 4.0 * sigma / (2.0 * (n - 1.0)).sqrt());
    // uniform pick among the two records
    let share = first as f64 / n;
    assert!((share - 0.5).abs() < 4.0 * (0.25 / n).sqrt());

    let (lat, thr) = emulate_state(&store, 4, 2000.0, 0.0, &draws[0]).unwrap();
    assert!((lat, thr) == (40.0, 2000.0) || (lat, thr) == (80.0, 1000.0));
}
