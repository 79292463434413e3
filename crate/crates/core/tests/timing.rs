use netboot::harness::{log_log_slope, preset, run_timing, ExperimentConfig, MethodName, Phase};

// One test per binary: wall-clock ratios need an otherwise idle process.
#[test]
fn doubling_b_doubles_replicate_time() {
    let base = ExperimentConfig {
        motif: Some("triangle".into()),
        methods: vec![MethodName::MbL],
        ns: vec![1_000],
        b: 1_000,
        ..preset("fig3-timing").unwrap()
    };
    let t1 = run_timing(&base).unwrap();
    let t2 = run_timing(&ExperimentConfig { b: 2_000, ..base }).unwrap();
    let a = t1.get(MethodName::MbL, 1_000, Phase::Replicate).unwrap();
    let b = t2.get(MethodName::MbL, 1_000, Phase::Replicate).unwrap();
    let ratio = b.seconds / a.seconds;
    assert!((1.6..=2.4).contains(&ratio), "ratio {ratio}");
    assert_eq!(a.samples.len(), 5);
    assert!(a.workers >= 1);
    assert!(log_log_slope(&[1.0, 2.0], &[a.seconds, b.seconds]) > 0.0);
}
