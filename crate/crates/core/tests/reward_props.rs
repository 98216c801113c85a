use elasticity_core::reward::{
    cluster_behavior, state_reward, utility_eval, ClusteringConfig, LogStore, MeasurementRecord,
    RewardMode, UtilityConfig, UtilityKind,
};
use proptest::prelude::*;

fn record(vms: u32, load: f64, latency_ms: f64, throughput: f64) -> MeasurementRecord {
    MeasurementRecord { time: 0, vms_num: vms, load, latency_ms, throughput }
}

fn records() -> impl Strategy<Value = Vec<MeasurementRecord>> {
    prop::collection::vec((1.0f64..150.0, 10.0f64..5000.0), 1..40)
        .prop_map(|pts| pts.into_iter().map(|(l, t)| record(5, 2000.0, l, t)).collect())
}

fn r2() -> UtilityConfig {
    UtilityConfig { kind: UtilityKind::R2, latency_threshold_ms: 60.0 }
}

proptest! {
    #[test]
    fn r2_is_penalty_or_inverse_size(latency in 0.0f64..200.0, thr in 0.0f64..1e5, vms in 4u32..=16) {
        let u = utility_eval(&r2(), latency, thr, vms);
        prop_assert!(u == -1.0 || (1.0 / 16.0..=0.25).contains(&u));
        prop_assert_eq!(u == -1.0, latency > 60.0);
    }

    #[test]
    fn r1_penalty_iff_threshold_exceeded(latency in 0.0f64..200.0, thr in 0.0f64..1e5, vms in 1u32..=16) {
        let u = utility_eval(&UtilityConfig::default(), latency, thr, vms);
        if latency > 60.0 {
            prop_assert_eq!(u, -1.0);
        } else {
            prop_assert!((u - thr / vms as f64).abs() <= 1e-9 * u.abs().max(1.0));
        }
    }

    #[test]
    fn clusters_partition_the_records(recs in records(), k in 1usize..=4, seed in 0u64..50) {
        let cfg = ClusteringConfig { k, seed, ..ClusteringConfig::default() };
        let clusters = cluster_behavior(&recs, &cfg).unwrap();
        prop_assert!(!clusters.is_empty() && clusters.len() <= k);
        prop_assert_eq!(clusters.iter().map(|c| c.members).sum::<usize>(), recs.len());
        let total: f64 = clusters.iter().map(|c| c.weight).sum();
        prop_assert!((total - 1.0).abs() <= 1e-12);
        for w in clusters.windows(2) {
            prop_assert!(w[0].members >= w[1].members);
        }
        // centers are means of members, so they stay in the data's bounding box
        let lo = recs.iter().map(|r| r.latency_ms).fold(f64::INFINITY, f64::min);
        let hi = recs.iter().map(|r| r.latency_ms).fold(f64::NEG_INFINITY, f64::max);
        for c in &clusters {
            prop_assert!(c.center.latency_ms >= lo - 1e-9 && c.center.latency_ms <= hi + 1e-9);
        }
        prop_assert_eq!(clusters, cluster_behavior(&recs, &cfg).unwrap());
    }

    #[test]
    fn eb_lies_between_cluster_utilities(recs in records(), k in 1usize..=4, r1 in any::<bool>()) {
        let utility = if r1 { UtilityConfig::default() } else { r2() };
        let cfg = ClusteringConfig { k, ..ClusteringConfig::default() };
        let clusters = cluster_behavior(&recs, &cfg).unwrap();
        let us: Vec<f64> = clusters
            .iter()
            .map(|c| utility_eval(&utility, c.center.latency_ms, c.center.throughput, 5))
            .collect();
        let lo = us.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = us.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let eb = state_reward(&clusters, RewardMode::EB, &utility, 5).unwrap();
        prop_assert!(eb >= lo - 1e-9 * lo.abs().max(1.0) && eb <= hi + 1e-9 * hi.abs().max(1.0));
        let mb = state_reward(&clusters, RewardMode::MB, &utility, 5).unwrap();
        prop_assert_eq!(mb, us[0]);
    }
}

#[test]
fn neighbour_fallback_is_flagged() {
    let store = LogStore::from_records(
        1000.0,
        vec![record(4, 1000.0, 20.0, 1000.0), record(4, 5000.0, 40.0, 5000.0), record(6, 3000.0, 25.0, 3000.0)],
    )
    .unwrap();
    let exact = store.select_logs(4, 1100.0).unwrap();
    assert!(!exact.interpolated);
    assert_eq!(exact.records[0].load, 1000.0);
    // same size, nearest bucket; equal distance resolves to the lower bucket
    let near = store.select_logs(4, 3000.0).unwrap();
    assert!(near.interpolated);
    assert_eq!(near.records[0].load, 1000.0);
    // size 5 is missing; sizes 4 and 6 tie, the lower wins
    let other = store.select_logs(5, 3000.0).unwrap();
    assert!(other.interpolated);
    assert_eq!(other.vms_num, 4);
}
