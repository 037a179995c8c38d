use std::fs;

use partial_ba::harness::{
    replay, run_campaign, run_esync, run_witness, sweep, CampaignConfig, EsyncConfig, SweepConfig,
    Target, ViolationFixture,
};
use partial_ba::{
    DeliverySchedule, Primitive, ProcessId, StaticFaultConfig, SystemConfig, Value,
    WitnessKind, WitnessPair,
};

fn cfg(n: usize, m: usize, d: usize, b: usize) -> SystemConfig {
    SystemConfig::new(n, m, d, b).unwrap()
}

#[test]
fn om_baseline_violations_replay() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = CampaignConfig::new(cfg(7, 1, 1, 1), Target::Om, 300, 0);
    c.k = 2;
    c.output_path = Some(dir.path().join("om.json"));
    let r = run_campaign(&c).unwrap();
    assert!(!r.clean(), "two-round OM should break under partial failures");
    assert!(r.violations.len() as u64 <= r.trials_run);
    for v in &r.violations {
        assert!(v.fixture.starts_with(dir.path().join("om-fixtures")));
        let back = replay(&v.fixture).unwrap();
        assert!(back.reproduced(), "{back:?}");
        assert_eq!(back.seed, v.seed);
    }
    let on_disk: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("om.json")).unwrap()).unwrap();
    assert_eq!(on_disk["violations"].as_array().unwrap().len(), r.violations.len());
}

#[test]
fn replay_rejects_mismatched_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = CampaignConfig::new(cfg(7, 1, 1, 1), Target::Om, 300, 0);
    c.k = 2;
    c.output_path = Some(dir.path().join("om.json"));
    let r = run_campaign(&c).unwrap();
    let path = &r.violations[0].fixture;
    let mut fx: ViolationFixture = serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap();
    fx.algorithm = Target::SbaPp;
    let bad = dir.path().join("bad.json");
    fs::write(&bad, serde_json::to_string(&fx).unwrap()).unwrap();
    assert!(replay(&bad).is_err());
}

#[test]
fn reports_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let mut bodies = Vec::new();
    for name in ["a.json", "b.json"] {
        let mut c = CampaignConfig::new(cfg(4, 1, 1, 1), Target::SbaPp, 1, 42);
        c.output_path = Some(dir.path().join(name));
        run_campaign(&c).unwrap();
        bodies.push(fs::read(dir.path().join(name)).unwrap());
    }
    assert_eq!(bodies[0], bodies[1]);
}

#[test]
fn persisted_witnesses_reload() {
    let dir = tempfile::tempdir().unwrap();
    let c = cfg(5, 1, 1, 1);
    for kind in [WitnessKind::ProcessBound, WitnessKind::LinkBound] {
        let out = dir.path().join(format!("{}.json", kind.name()));
        let run = run_witness(kind, &c, 4, 0, 0, Some(&out)).unwrap();
        assert!(run.passed());
        let pair = WitnessPair::from_json(&fs::read_to_string(&out).unwrap()).unwrap();
        assert!(pair.check().unwrap().passed());
    }
    let out = dir.path().join("signed.json");
    assert!(run_witness(WitnessKind::Signed, &cfg(3, 1, 1, 1), 3, 0, 0, Some(&out)).unwrap().passed());
    let body: serde_json::Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert!(body["alpha"]["chains"].is_array());
}

#[test]
fn time_bound_witness_checks_every_link_when_asked() {
    let run = run_witness(WitnessKind::TimeLb, &cfg(6, 1, 1, 1), 0, 1000, 0, None).unwrap();
    // Two constant ends plus two assertions per link, 37 links.
    assert_eq!(run.assertions.len(), 2 + 2 * 37);
    assert!(run.passed());
}

#[test]
fn witness_refusals() {
    assert!(run_witness(WitnessKind::LinkBound, &cfg(7, 1, 1, 1), 4, 0, 0, None).is_err());
    assert!(run_witness(WitnessKind::Signed, &cfg(4, 1, 1, 1), 3, 0, 0, None).is_err());
    assert!(run_witness(WitnessKind::TwoRoundLb, &cfg(7, 2, 2, 1), 3, 0, 0, None).is_err());
    assert!(run_witness(WitnessKind::TimeLb, &cfg(7, 0, 0, 2), 3, 0, 0, None).is_err());
}

#[test]
fn sweep_reproduces_the_frontier() {
    let s = SweepConfig { n: (3, 8), m: (0, 2), d: (0, 2), b: (0, 1), trials: 0, ..Default::default() };
    let cells = sweep(&s).unwrap();
    for c in &cells {
        let SystemConfig { n, m, d, b } = c.config;
        let bound = (2 * m + d).max(2 * d + m).max(b) + 2 * b;
        assert_eq!(c.solvable, n > bound, "{:?}", c.config);
        assert_eq!(c.signed_solvable, n > m + d + b, "{:?}", c.config);
        assert_eq!(c.fuzz_clean, None);
    }
}

#[test]
fn esync_runs_are_reproducible() {
    let c = EsyncConfig {
        cfg: cfg(8, 1, 1, 1),
        primitive: Primitive::Rb2,
        transmitter: ProcessId(2),
        value: Value::ZERO,
        horizon: 100_000,
        seed: 11,
        faults: None,
        schedule: None,
    };
    let a = run_esync(&c).unwrap();
    let b = run_esync(&c).unwrap();
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    assert!(a.delivered_transmitter_value);

    // Fixed schedule from a file, no faults, zero delay.
    let fixed = EsyncConfig {
        cfg: cfg(7, 1, 1, 1),
        primitive: Primitive::Rb3,
        faults: Some(StaticFaultConfig::default()),
        schedule: Some(DeliverySchedule::from_json(&DeliverySchedule::zero_delay(7, 3).to_json()).unwrap()),
        value: Value::ONE,
        ..c
    };
    let r = run_esync(&fixed).unwrap();
    assert!(r.delivered_transmitter_value);
    assert_eq!(r.report.outcomes.len(), 7);
}
