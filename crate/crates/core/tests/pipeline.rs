use tracking_qec::harness::{read_results_csv, wilson_interval};
use tracking_qec::resources::{resource_table, to_json};
use tracking_qec::{
    find_threshold, sweep, CsvSink, ExperimentTemplate, MemorySink, ProtocolKind, SweepConfig,
};

fn config(kind: ProtocolKind, analog: bool) -> SweepConfig {
    SweepConfig {
        template: ExperimentTemplate::new(kind, analog, 2),
        sigma_total_grid: vec![0.8, 1.0, 1.2, 1.4, 1.6],
        levels: vec![1, 2],
        trials_per_point: 20_000,
        master_seed: 5,
        max_failures_stop: None,
    }
}

#[test]
fn sweep_to_csv_to_threshold() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("results.csv");
    let rows = sweep(
        &config(ProtocolKind::Conventional, true),
        &mut CsvSink::new(&path),
    )
    .unwrap();
    let back = read_results_csv(&path).unwrap();
    assert_eq!(rows, back);
    for r in &back {
        assert_eq!((r.ci_low, r.ci_high), wilson_interval(r.failures, r.trials));
    }
    let t = find_threshold(&back).unwrap();
    // coarse grid, two levels: only a loose bracket
    assert!(t.sigma_star > 1.0 && t.sigma_star < 1.4, "{t:?}");
}

#[test]
fn failure_grows_with_noise_and_level_below_threshold() {
    let rows = sweep(
        &config(ProtocolKind::Tracking, false),
        &mut MemorySink::default(),
    )
    .unwrap();
    let level = |l: u32| -> Vec<f64> {
        rows.iter()
            .filter(|r| r.level == l)
            .map(|r| r.p_fail)
            .collect()
    };
    let (l1, l2) = (level(1), level(2));
    assert!(l1.windows(2).all(|w| w[0] < w[1]));
    assert!(l2.windows(2).all(|w| w[0] < w[1]));
    // below threshold the higher level wins, above it loses
    assert!(l2[0] < l1[0]);
    assert!(l2[4] > l1[4]);
}

#[test]
fn analog_helps_both_protocols() {
    for kind in [ProtocolKind::Conventional, ProtocolKind::Tracking] {
        let d = sweep(&config(kind, false), &mut MemorySink::default()).unwrap();
        let a = sweep(&config(kind, true), &mut MemorySink::default()).unwrap();
        let sum =
            |rows: &[tracking_qec::PointEstimate]| rows.iter().map(|r| r.failures).sum::<u64>();
        assert!(sum(&a) < sum(&d), "{kind:?}");
    }
}

#[test]
fn resource_json_shape() {
    let json = to_json(&resource_table(2, &[1, 2]).unwrap()).unwrap();
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert_eq!(v[1]["r_conventional"], 384);
    assert_eq!(v[1]["r_tracking"], 216);
    assert_eq!(v[1]["rate_percent"], "43.8");
}
