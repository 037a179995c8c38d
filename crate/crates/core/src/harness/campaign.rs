use std::fs;
use std::path::{Path as FsPath, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::adversary::{random_scenario, random_signed_scenario, ByzStrategy};
use crate::agreement::{check_ba, Algorithm, Clause};
use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::scenario::{Scenario, ScenarioFixture};
use crate::signed::{check_sba, SignedFixture, SignedScenario};
use crate::value::ProcessId;

/// Decision procedures a campaign can drive.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Target {
    BaPp,
    BaPpFast,
    /// OM(b) with no filtering; a baseline that breaks under partial failures.
    Om,
    SbaPp,
}

impl Target {
    pub const ALL: [Target; 4] = [Target::BaPp, Target::BaPpFast, Target::Om, Target::SbaPp];

    pub fn name(self) -> &'static str {
        match self {
            Target::BaPp => "ba-pp",
            Target::BaPpFast => "ba-pp-fast",
            Target::Om => "om",
            Target::SbaPp => "sba-pp",
        }
    }

    pub fn parse(s: &str) -> Option<Target> {
        Target::ALL.into_iter().find(|t| t.name() == s)
    }

    pub fn rounds(self, cfg: &SystemConfig) -> usize {
        match self {
            Target::BaPp => Algorithm::BaPp.rounds(cfg),
            Target::BaPpFast => Algorithm::BaPpFast.rounds(cfg),
            Target::Om => Algorithm::Om.rounds(cfg),
            Target::SbaPp => cfg.b + 2,
        }
    }

    fn oral(self) -> Option<Algorithm> {
        match self {
            Target::BaPp => Some(Algorithm::BaPp),
            Target::BaPpFast => Some(Algorithm::BaPpFast),
            Target::Om => Some(Algorithm::Om),
            Target::SbaPp => None,
        }
    }

    /// Round and solvability preconditions. The OM baseline is accepted
    /// anywhere it has enough rounds.
    pub fn check(self, cfg: &SystemConfig, k: usize) -> Result<()> {
        let want = self.rounds(cfg);
        let rounds_ok = if self == Target::Om { k >= want } else { k == want };
        if !rounds_ok {
            return Err(Error::Precondition(format!("{} needs k = {want}, got {k}", self.name())));
        }
        let solvable = match self {
            Target::BaPp => cfg.resilience_holds(),
            Target::BaPpFast => cfg.fast_condition_holds(),
            Target::Om => true,
            Target::SbaPp => cfg.resilience_holds_signed(),
        };
        if !solvable {
            return Err(Error::Precondition(format!("{} is not guaranteed for {cfg:?}", self.name())));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CampaignConfig {
    pub cfg: SystemConfig,
    pub k: usize,
    pub algorithm: Target,
    pub trials: u64,
    pub seed: u64,
    pub strategy: ByzStrategy,
    /// Report destination; violation fixtures go to a sibling directory.
    /// Not echoed into the report.
    #[serde(skip)]
    pub output_path: Option<PathBuf>,
}

impl CampaignConfig {
    pub fn new(cfg: SystemConfig, algorithm: Target, trials: u64, seed: u64) -> Self {
        CampaignConfig {
            k: algorithm.rounds(&cfg),
            cfg,
            algorithm,
            trials,
            seed,
            strategy: ByzStrategy::Uniform,
            output_path: None,
        }
    }

    /// Where violating scenarios are written.
    pub fn fixture_dir(&self) -> PathBuf {
        match &self.output_path {
            Some(p) => {
                let mut name = p.file_stem().unwrap_or_default().to_os_string();
                name.push("-fixtures");
                p.with_file_name(name)
            }
            None => PathBuf::from("pba-fixtures"),
        }
    }

    fn transmitter(&self, seed: u64) -> ProcessId {
        ProcessId((seed % self.cfg.n as u64) as usize)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ViolationRecord {
    pub seed: u64,
    pub clause: String,
    pub fixture: PathBuf,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub elapsed_ms: f64,
    pub trials_per_second: f64,
}

/// Outcome of a campaign. Timing is only printed, never written, so
/// reports of equal campaigns are byte-identical.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CampaignReport {
    pub config: CampaignConfig,
    pub trials_run: u64,
    pub violations: Vec<ViolationRecord>,
    #[serde(skip)]
    pub timing: Timing,
}

impl CampaignReport {
    pub fn clean(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// A persisted violating scenario and how to re-check it.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ViolationFixture {
    pub algorithm: Target,
    pub seed: u64,
    pub clause: String,
    pub scenario: FixtureBody,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum FixtureBody {
    Oral(ScenarioFixture),
    Signed(SignedFixture),
}

fn clause_name(c: Clause) -> &'static str {
    match c {
        Clause::Termination => "termination",
        Clause::Validity => "validity",
        Clause::Agreement => "agreement",
    }
}

/// Checks one scenario; `Some(clause)` names the first broken property.
fn judge_oral(scn: &Scenario, alg: Algorithm) -> Result<Option<String>> {
    let r = check_ba(scn, alg)?;
    Ok(r.witness.map(|w| clause_name(w.clause).to_string()))
}

fn judge_signed(s: &SignedScenario) -> Result<Option<String>> {
    let r = check_sba(s)?;
    if let Some(w) = r.decision.witness {
        return Ok(Some(clause_name(w.clause).to_string()));
    }
    Ok((!r.sets_equal).then(|| "set_equality".to_string()))
}

fn run_trial(c: &CampaignConfig, seed: u64) -> Result<Option<(String, FixtureBody)>> {
    let tx = c.transmitter(seed);
    match c.algorithm.oral() {
        Some(alg) => {
            let scn = random_scenario(&c.cfg, c.k, tx, c.strategy, seed)?;
            Ok(judge_oral(&scn, alg)?.map(|cl| (cl, FixtureBody::Oral(ScenarioFixture::from(&scn)))))
        }
        None => {
            let (s, _) = random_signed_scenario(&c.cfg, c.k, tx, c.strategy, seed)?;
            Ok(judge_signed(&s)?.map(|cl| (cl, FixtureBody::Signed(SignedFixture::from(&s)))))
        }
    }
}

/// Runs `trials` seeded trials in parallel. Trial `i` uses seed
/// `seed + i` and transmitter `(seed + i) mod n`. Violating scenarios are
/// persisted; the report (if an output path is set) is written too.
pub fn run_campaign(c: &CampaignConfig) -> Result<CampaignReport> {
    if c.trials == 0 {
        return Err(Error::InvalidConfig("trials must be at least 1".into()));
    }
    c.cfg.check()?;
    c.algorithm.check(&c.cfg, c.k)?;
    let start = Instant::now();
    let found: Vec<(u64, String, FixtureBody)> = (0..c.trials)
        .into_par_iter()
        .map(|i| {
            let seed = c.seed.wrapping_add(i);
            run_trial(c, seed).map(|o| o.map(|(cl, body)| (seed, cl, body)))
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    let mut found = found;
    found.sort_by_key(|(seed, _, _)| *seed);

    let mut violations = Vec::with_capacity(found.len());
    if !found.is_empty() {
        let dir = c.fixture_dir();
        fs::create_dir_all(&dir)?;
        for (seed, clause, body) in found {
            let path = dir.join(format!("{}-seed-{seed}.json", c.algorithm.name()));
            let fx = ViolationFixture { algorithm: c.algorithm, seed, clause: clause.clone(), scenario: body };
            fs::write(&path, serde_json::to_string_pretty(&fx)?)?;
            violations.push(ViolationRecord { seed, clause, fixture: path });
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    let report = CampaignReport {
        config: c.clone(),
        trials_run: c.trials,
        violations,
        timing: Timing {
            elapsed_ms: elapsed * 1e3,
            trials_per_second: c.trials as f64 / elapsed.max(1e-9),
        },
    };
    if let Some(out) = &c.output_path {
        if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
            fs::create_dir_all(parent)?;
        }
        fs::write(out, report.to_json())?;
    }
    Ok(report)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReplayReport {
    pub algorithm: Target,
    pub seed: u64,
    pub recorded_clause: String,
    /// What re-checking the stored scenario finds now.
    pub replayed_clause: Option<String>,
}

impl ReplayReport {
    pub fn reproduced(&self) -> bool {
        self.replayed_clause.as_deref() == Some(self.recorded_clause.as_str())
    }
}

/// Reloads a violation fixture and re-runs its check.
pub fn replay(path: &FsPath) -> Result<ReplayReport> {
    let fx: ViolationFixture = serde_json::from_str(&fs::read_to_string(path)?)?;
    let replayed_clause = match (&fx.scenario, fx.algorithm.oral()) {
        (FixtureBody::Oral(s), Some(alg)) => judge_oral(&Scenario::try_from(s.clone())?, alg)?,
        (FixtureBody::Signed(s), None) => judge_signed(&SignedScenario::try_from(s.clone())?)?,
        _ => return Err(Error::Fixture("fixture model does not match its algorithm".into())),
    };
    Ok(ReplayReport { algorithm: fx.algorithm, seed: fx.seed, recorded_clause: fx.clause, replayed_clause })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_campaign_is_clean_and_deterministic() {
        let cfg = SystemConfig::new(7, 1, 1, 1).unwrap();
        let c = CampaignConfig::new(cfg, Target::BaPp, 20, 3);
        let a = run_campaign(&c).unwrap();
        let b = run_campaign(&c).unwrap();
        assert!(a.clean());
        assert_eq!(a.to_json(), b.to_json());
        assert!(!a.to_json().contains("elapsed"));
    }

    #[test]
    fn preconditions_are_enforced() {
        let cfg = SystemConfig::new(5, 1, 1, 1).unwrap();
        assert!(run_campaign(&CampaignConfig::new(cfg, Target::BaPp, 1, 0)).is_err());
        let cfg = SystemConfig::new(7, 1, 1, 1).unwrap();
        let mut c = CampaignConfig::new(cfg, Target::BaPp, 1, 0);
        c.k = 3;
        assert!(run_campaign(&c).is_err());
        c.k = 4;
        c.trials = 0;
        assert!(run_campaign(&c).is_err());
    }

    #[test]
    fn target_names() {
        for t in Target::ALL {
            assert_eq!(Target::parse(t.name()), Some(t));
        }
    }
}
