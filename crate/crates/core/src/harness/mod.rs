//! Operational surface: bound checks, fuzz campaigns, sweeps over the
//! parameter grid, witness runs and eventually-synchronous runs. Every
//! entry point is deterministic in its inputs and returns a serializable
//! report; the CLI only formats them.

mod campaign;

use std::fs;
use std::path::{Path as FsPath, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::adversary::{
    alpha_slice, chain_length, process_bound_pair, link_bound_pair, signed_pair, time_lb_family,
    two_round_lb_pair, ByzStrategy, Partition, WitnessKind,
};
use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::esync::{simulate_esync, static_scenario, DeliverySchedule, Primitive, RbReport, StaticFaultConfig};
use crate::path::MAX_LEAVES;
use crate::value::{ProcessId, Value};

pub use campaign::{
    replay, run_campaign, CampaignConfig, CampaignReport, FixtureBody, ReplayReport, Target,
    Timing, ViolationFixture, ViolationRecord,
};

/// Solvability verdicts and round counts for one configuration.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckReport {
    pub config: SystemConfig,
    pub oral_solvable: bool,
    pub oral_rounds: usize,
    pub fast_condition: bool,
    pub fast_rounds: usize,
    pub signed_solvable: bool,
    pub signed_rounds: usize,
    /// Fewest rounds any algorithm needs.
    pub round_lower_bound: usize,
}

pub fn check(cfg: &SystemConfig) -> CheckReport {
    CheckReport {
        config: *cfg,
        oral_solvable: cfg.resilience_holds(),
        oral_rounds: cfg.b + 3,
        fast_condition: cfg.fast_condition_holds(),
        fast_rounds: cfg.b + 2,
        signed_solvable: cfg.resilience_holds_signed(),
        signed_rounds: cfg.b + 2,
        round_lower_bound: if cfg.m > 0 && cfg.d > 0 { cfg.b + 2 } else { cfg.b + 1 },
    }
}

/// Inclusive ranges for each parameter of a sweep.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub n: (usize, usize),
    pub m: (usize, usize),
    pub d: (usize, usize),
    pub b: (usize, usize),
    /// Fuzz trials per solvable cell; 0 disables fuzzing.
    pub trials: u64,
    pub seed: u64,
    pub strategy: ByzStrategy,
    /// Cells whose BA++ path tree exceeds this many leaves are not fuzzed.
    pub max_leaves: u64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            n: (4, 8),
            m: (0, 2),
            d: (0, 2),
            b: (0, 1),
            trials: 20,
            seed: 0,
            strategy: ByzStrategy::Uniform,
            max_leaves: 50_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SweepCell {
    pub config: SystemConfig,
    pub solvable: bool,
    pub signed_solvable: bool,
    /// `None` when the cell is unsolvable or too large to fuzz.
    pub fuzz_clean: Option<bool>,
}

/// Walks the Cartesian grid, skipping parameter combinations that are not
/// valid systems, and fuzzes BA++ on each solvable cell.
pub fn sweep(s: &SweepConfig) -> Result<Vec<SweepCell>> {
    let mut cfgs = Vec::new();
    for n in s.n.0..=s.n.1 {
        for m in s.m.0..=s.m.1 {
            for d in s.d.0..=s.d.1 {
                for b in s.b.0..=s.b.1 {
                    if let Ok(c) = SystemConfig::new(n, m, d, b) {
                        cfgs.push(c);
                    }
                }
            }
        }
    }
    cfgs.into_par_iter()
        .map(|cfg| {
            let solvable = cfg.resilience_holds();
            let leaves = (cfg.n as u64).checked_pow(cfg.b as u32 + 3).unwrap_or(u64::MAX);
            let fuzz_clean = if solvable && s.trials > 0 && leaves <= s.max_leaves {
                let mut c = CampaignConfig::new(cfg, Target::BaPp, s.trials, s.seed);
                c.strategy = s.strategy;
                Some(run_campaign(&c)?.clean())
            } else {
                None
            };
            Ok(SweepCell { config: cfg, solvable, signed_solvable: cfg.resilience_holds_signed(), fuzz_clean })
        })
        .collect()
}

/// One named pass/fail assertion.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Assertion {
    pub name: String,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WitnessRun {
    pub kind: WitnessKind,
    pub config: SystemConfig,
    pub assertions: Vec<Assertion>,
    pub fixture: Option<PathBuf>,
}

impl WitnessRun {
    pub fn passed(&self) -> bool {
        self.assertions.iter().all(|a| a.passed)
    }
}

fn assertion(name: impl Into<String>, passed: bool) -> Assertion {
    Assertion { name: name.into(), passed }
}

/// Builds a witness of `kind` with the default partition, checks it and
/// optionally writes it to `out`. Refuses configurations outside the
/// construction's region, in particular every solvable one.
///
/// `k` is the depth of the recursive constructions (ignored by the
/// two-round and time-bound witnesses). The time-bound witness checks the
/// two constant ends of the chain and `samples` seeded links.
pub fn run_witness(
    kind: WitnessKind,
    cfg: &SystemConfig,
    k: usize,
    samples: usize,
    seed: u64,
    out: Option<&FsPath>,
) -> Result<WitnessRun> {
    cfg.check()?;
    if !kind.applies(cfg) {
        return Err(Error::Precondition(format!(
            "refusing {}: {cfg:?} is outside the region where this impossibility holds",
            kind.name()
        )));
    }
    let tx = ProcessId(0);
    let mut assertions = Vec::new();
    let mut json = None;
    let pair_assertions = |r: crate::adversary::WitnessCheck, assertions: &mut Vec<Assertion>| {
        assertions.push(assertion("alpha admissible", r.alpha_admissible));
        assertions.push(assertion("beta admissible", r.beta_admissible));
        assertions.push(assertion("views equal on the indistinguishable set", r.differing_views.is_empty()));
        assertions.push(assertion("validity demands different outputs", r.outputs_conflict));
    };
    match kind {
        WitnessKind::ProcessBound | WitnessKind::LinkBound | WitnessKind::TwoRoundLb => {
            let part = Partition::default_for(kind, cfg, tx)?;
            let w = match kind {
                WitnessKind::ProcessBound => process_bound_pair(cfg, &part, k)?,
                WitnessKind::LinkBound => link_bound_pair(cfg, &part, k)?,
                _ => two_round_lb_pair(cfg, &part)?,
            };
            pair_assertions(w.check()?, &mut assertions);
            json = Some(w.to_json());
        }
        WitnessKind::Signed => {
            let part = Partition::default_for(kind, cfg, tx)?;
            let w = signed_pair(cfg, &part, k)?;
            pair_assertions(w.check()?, &mut assertions);
            json = Some(w.to_json());
        }
        WitnessKind::TimeLb => {
            let top = chain_length(cfg)?;
            if top / cfg.n as u64 > MAX_LEAVES {
                return Err(Error::TooLarge { n: cfg.n, depth: cfg.b, limit: MAX_LEAVES });
            }
            let first = alpha_slice(cfg, tx, 0)?;
            let last = alpha_slice(cfg, tx, top + 1)?;
            assertions.push(assertion("first view constant 1", first.values.iter().all(|v| *v == Value::ONE)));
            assertions.push(assertion("last view constant 0", last.values.iter().all(|v| *v == Value::ZERO)));
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let xs: Vec<u64> = if (samples as u64) > top {
                (0..=top).collect()
            } else {
                (0..samples).map(|_| rng.gen_range(0..=top)).collect()
            };
            for x in xs {
                let r = time_lb_family(cfg, tx, x)?.check()?;
                assertions.push(assertion(format!("link {x} admissible"), r.link_admissible));
                assertions.push(assertion(
                    format!("link {x} reproduces both views"),
                    r.first_view_matches && r.second_view_matches,
                ));
            }
        }
    }
    let fixture = match (out, json) {
        (Some(path), Some(body)) => {
            if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
                fs::create_dir_all(parent)?;
            }
            fs::write(path, body)?;
            Some(path.to_path_buf())
        }
        _ => None,
    };
    Ok(WitnessRun { kind, config: *cfg, assertions, fixture })
}

/// One eventually-synchronous broadcast. Missing faults are drawn from the
/// seed; a missing schedule is the adversarial one for that seed.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EsyncConfig {
    pub cfg: SystemConfig,
    pub primitive: Primitive,
    pub transmitter: ProcessId,
    pub value: Value,
    pub horizon: u64,
    pub seed: u64,
    pub faults: Option<StaticFaultConfig>,
    pub schedule: Option<DeliverySchedule>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EsyncRun {
    pub faults: StaticFaultConfig,
    pub schedule: DeliverySchedule,
    pub report: RbReport,
    /// Every non-Byzantine process decided the transmitter's value.
    pub delivered_transmitter_value: bool,
}

pub fn run_esync(c: &EsyncConfig) -> Result<EsyncRun> {
    let faults = match &c.faults {
        Some(f) => f.clone(),
        None => StaticFaultConfig::random(&c.cfg, c.transmitter, c.seed)?,
    };
    let rounds = c.primitive.rounds();
    let schedule = c
        .schedule
        .clone()
        .unwrap_or_else(|| DeliverySchedule::adversarial(&c.cfg, &faults, rounds, c.seed));
    let scn = static_scenario(&c.cfg, &faults, c.transmitter, c.value, rounds, c.seed)?;
    let report = simulate_esync(&scn, &schedule, c.primitive, c.horizon)?;
    let delivered_transmitter_value = report.all_decided(c.value);
    Ok(EsyncRun { faults, schedule, report, delivered_transmitter_value })
}

/// Fault/value draws crossed with adversarial schedules.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EsyncCampaignReport {
    pub config: SystemConfig,
    pub primitive: Primitive,
    pub draws: u64,
    pub schedules: u64,
    /// `(draw, schedule)` pairs where some process missed the value.
    pub wrong_or_undecided: Vec<(u64, u64)>,
    /// Draws whose decided values changed with the schedule.
    pub schedule_dependent: Vec<u64>,
}

impl EsyncCampaignReport {
    pub fn clean(&self) -> bool {
        self.wrong_or_undecided.is_empty() && self.schedule_dependent.is_empty()
    }
}

/// For every draw (faults, transmitter, value, lie pattern) runs the
/// synchronous schedule and `schedules` adversarial ones, and checks that
/// every non-Byzantine process decides the transmitter's value each time.
pub fn esync_campaign(
    cfg: &SystemConfig,
    primitive: Primitive,
    draws: u64,
    schedules: u64,
    seed: u64,
    horizon: u64,
) -> Result<EsyncCampaignReport> {
    let rounds = primitive.rounds();
    let results: Vec<(u64, Vec<u64>, bool)> = (0..draws)
        .into_par_iter()
        .map(|i| {
            let draw_seed = seed.wrapping_add(i);
            let mut rng = ChaCha8Rng::seed_from_u64(draw_seed);
            let tx = ProcessId(rng.gen_range(0..cfg.n));
            let value = if rng.gen_bool(0.5) { Value::ZERO } else { Value::ONE };
            let faults = StaticFaultConfig::random(cfg, tx, draw_seed)?;
            let scn = static_scenario(cfg, &faults, tx, value, rounds, draw_seed)?;
            let baseline = simulate_esync(&scn, &DeliverySchedule::synchronous(), primitive, horizon)?;
            let mut bad = Vec::new();
            let mut dependent = false;
            for j in 0..schedules {
                let sched = DeliverySchedule::adversarial(cfg, &faults, rounds, draw_seed.wrapping_mul(1_000_003).wrapping_add(j));
                let r = simulate_esync(&scn, &sched, primitive, horizon)?;
                if !r.all_decided(value) {
                    bad.push(j);
                }
                if r.decided_values() != baseline.decided_values() {
                    dependent = true;
                }
            }
            Ok((i, bad, dependent))
        })
        .collect::<Result<_>>()?;
    let mut report = EsyncCampaignReport {
        config: *cfg,
        primitive,
        draws,
        schedules,
        wrong_or_undecided: Vec::new(),
        schedule_dependent: Vec::new(),
    };
    for (i, bad, dependent) in results {
        report.wrong_or_undecided.extend(bad.into_iter().map(|j| (i, j)));
        if dependent {
            report.schedule_dependent.push(i);
        }
    }
    Ok(report)
}
