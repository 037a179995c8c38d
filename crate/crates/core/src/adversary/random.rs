use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::path::{Path, PathTable};
use crate::scenario::Scenario;
use crate::signed::SignedScenario;
use crate::value::{ProcessId, Value, DEFAULT_DOMAIN};

/// How Byzantine processes choose what to send.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ByzStrategy {
    /// An independent uniform value per coordinate.
    #[default]
    Uniform,
    /// Per round, half of the receivers get 0 and the other half 1.
    EquivocateSplit,
    /// Relay another process's received value to half of the receivers and
    /// the own received value to the rest.
    Mirror,
}

impl ByzStrategy {
    pub const ALL: [ByzStrategy; 3] = [ByzStrategy::Uniform, ByzStrategy::EquivocateSplit, ByzStrategy::Mirror];

    pub fn name(self) -> &'static str {
        match self {
            ByzStrategy::Uniform => "uniform",
            ByzStrategy::EquivocateSplit => "equivocate-split",
            ByzStrategy::Mirror => "mirror",
        }
    }
}

impl fmt::Display for ByzStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ByzStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ByzStrategy::ALL
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown strategy {s:?}")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Role {
    Correct,
    DFaulty,
    Byzantine,
}

#[derive(Clone, Copy)]
enum LieMode {
    Flip,
    Random,
}

struct Plan {
    roles: Vec<Role>,
    /// `(sender, round)` → victim flags per receiver.
    victims: HashMap<(usize, usize), (Vec<bool>, LieMode)>,
    /// `(sender, round)` → receiver half flags for split strategies.
    halves: HashMap<(usize, usize), Vec<bool>>,
    mirror_of: Vec<usize>,
}

fn half_flags(n: usize, rng: &mut ChaCha8Rng) -> Vec<bool> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut flags = vec![false; n];
    for &q in &order[..n / 2] {
        flags[q] = true;
    }
    flags
}

fn draw_plan(cfg: &SystemConfig, k: usize, tx: ProcessId, rng: &mut ChaCha8Rng) -> Plan {
    let n = cfg.n;
    let mut tx_roles = vec![Role::Correct];
    if cfg.m > 0 {
        tx_roles.push(Role::DFaulty);
    }
    if cfg.b > 0 {
        tx_roles.push(Role::Byzantine);
    }
    // With m + b = n the transmitter cannot stay correct.
    if cfg.m + cfg.b == n && tx_roles.len() > 1 {
        tx_roles.remove(0);
    }
    let tx_role = *tx_roles.choose(rng).expect("nonempty");
    let mut roles = vec![Role::Correct; n];
    roles[tx.0] = tx_role;
    let mut others: Vec<usize> = (0..n).filter(|&p| p != tx.0).collect();
    others.shuffle(rng);
    let byz_left = cfg.b - usize::from(tx_role == Role::Byzantine);
    let d_left = (cfg.m - usize::from(tx_role == Role::DFaulty)).min(others.len() - byz_left.min(others.len()));
    for &p in others.iter().take(byz_left) {
        roles[p] = Role::Byzantine;
    }
    for &p in others.iter().skip(byz_left).take(d_left) {
        roles[p] = Role::DFaulty;
    }

    let mut victims = HashMap::new();
    let mut halves = HashMap::new();
    let all: Vec<usize> = (0..n).collect();
    for p in 0..n {
        for round in 1..=k {
            match roles[p] {
                Role::DFaulty => {
                    let mut flags = vec![false; n];
                    for &q in all.choose_multiple(rng, cfg.d) {
                        flags[q] = true;
                    }
                    let mode = if rng.gen_bool(0.5) { LieMode::Flip } else { LieMode::Random };
                    victims.insert((p, round), (flags, mode));
                }
                Role::Byzantine => {
                    halves.insert((p, round), half_flags(n, rng));
                }
                Role::Correct => {}
            }
        }
    }
    let mirror_of = (0..n)
        .map(|p| {
            let mut q = rng.gen_range(0..n);
            while q == p && n > 1 {
                q = rng.gen_range(0..n);
            }
            q
        })
        .collect();
    Plan { roles, victims, halves, mirror_of }
}

/// A seeded admissible scenario with exactly `b` Byzantine and `m`
/// d-faulty processes (fewer only when `n` leaves no room).
///
/// The transmitter's role (correct, d-faulty or Byzantine) and initial
/// value are drawn from the seed. Correct processes relay faithfully;
/// every d-faulty process picks `d` fresh victims each round and lies to
/// them; Byzantine processes follow `strategy`.
pub fn random_scenario(
    cfg: &SystemConfig,
    k: usize,
    transmitter: ProcessId,
    strategy: ByzStrategy,
    seed: u64,
) -> Result<Scenario> {
    cfg.check()?;
    if k == 0 {
        return Err(Error::Precondition("at least one round is needed".into()));
    }
    if transmitter.0 >= cfg.n {
        return Err(Error::ProcessOutOfRange { id: transmitter.0, n: cfg.n });
    }
    let n = cfg.n;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let plan = draw_plan(cfg, k, transmitter, &mut rng);
    let init = if rng.gen_bool(0.5) { Value::ZERO } else { Value::ONE };
    let mut table = PathTable::new(n, k, transmitter, init)?;
    let space = table.space().clone();

    for len in 0..k {
        let round = len + 1;
        for code in 0..space.count(len) {
            let parent = space.offset(len) + code;
            let sender = if len == 0 { transmitter.0 } else { code % n };
            let held = table.raw()[parent];
            let first = space.offset(len + 1) + code * n;
            match plan.roles[sender] {
                Role::Correct => {
                    table.raw_mut()[first..first + n].fill(held);
                }
                Role::DFaulty => {
                    let (flags, mode) = &plan.victims[&(sender, round)];
                    for q in 0..n {
                        table.raw_mut()[first + q] = match (flags[q], mode) {
                            (false, _) => held,
                            (true, LieMode::Flip) => held.flipped(),
                            (true, LieMode::Random) => *DEFAULT_DOMAIN.choose(&mut rng).expect("nonempty"),
                        };
                    }
                }
                Role::Byzantine => {
                    let half = &plan.halves[&(sender, round)];
                    // The value the mirrored process holds at the sibling path.
                    let mirrored = if len == 0 {
                        held.flipped()
                    } else {
                        table.raw()[parent - sender + plan.mirror_of[sender]]
                    };
                    for q in 0..n {
                        let v = match strategy {
                            ByzStrategy::Uniform => *DEFAULT_DOMAIN.choose(&mut rng).expect("nonempty"),
                            ByzStrategy::EquivocateSplit => {
                                if half[q] {
                                    Value::ZERO
                                } else {
                                    Value::ONE
                                }
                            }
                            ByzStrategy::Mirror => {
                                if half[q] {
                                    mirrored
                                } else {
                                    held
                                }
                            }
                        };
                        table.raw_mut()[first + q] = v;
                    }
                }
            }
        }
    }
    let byz = (0..n).filter(|&p| plan.roles[p] == Role::Byzantine).map(ProcessId).collect();
    let dfaulty = (0..n).filter(|&p| plan.roles[p] == Role::DFaulty).map(ProcessId).collect();
    Scenario::new(*cfg, k, table, byz, dfaulty)
}

/// Paths whose delivered content was never signed by some non-Byzantine
/// signer on the chain, as recorded by the generator.
pub type TamperLog = BTreeSet<Path>;

/// [`random_scenario`] with signature chains. Every altered chain carries
/// exactly the forged marks unforgeability demands; Byzantine senders add
/// none beyond those. The returned log is the generator's own record of
/// tampered chains, kept by tracking the set of values signed along each
/// chain.
pub fn random_signed_scenario(
    cfg: &SystemConfig,
    k: usize,
    transmitter: ProcessId,
    strategy: ByzStrategy,
    seed: u64,
) -> Result<(SignedScenario, TamperLog)> {
    let scn = random_scenario(cfg, k, transmitter, strategy, seed)?;
    let n = cfg.n;
    let space = scn.table().space().clone();
    let raw = scn.table().raw();
    // signed[idx]: values held by the non-Byzantine signers of the chain.
    let mut signed: Vec<BTreeSet<Value>> = vec![BTreeSet::new(); space.size()];
    let mut log = TamperLog::new();
    let mut tail = Vec::new();
    for len in 0..k {
        for code in 0..space.count(len) {
            let parent = space.offset(len) + code;
            let sender = if len == 0 { transmitter } else { ProcessId(code % n) };
            let mut inherited = signed[parent].clone();
            if !scn.is_byzantine(sender) {
                inherited.insert(raw[parent]);
            }
            for q in 0..n {
                let child = space.offset(len + 1) + code * n + q;
                if inherited.iter().any(|h| *h != raw[child]) {
                    space.decode_into(child, &mut tail);
                    let mut full = vec![transmitter];
                    full.extend_from_slice(&tail);
                    log.insert(Path(full));
                }
                signed[child] = inherited.clone();
            }
        }
    }
    Ok((SignedScenario::unsigned(scn).with_minimal_forgeries(), log))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::validate_scenario;

    #[test]
    fn failure_free_when_no_faults_allowed() {
        let c = SystemConfig::new(5, 0, 0, 0).unwrap();
        for seed in 0..20 {
            let s = random_scenario(&c, 3, ProcessId(1), ByzStrategy::Uniform, seed).unwrap();
            let v = s.initial_value();
            assert!(s.table().raw().iter().all(|x| *x == v));
        }
    }

    #[test]
    fn deterministic_and_admissible() {
        let c = SystemConfig::new(7, 1, 1, 1).unwrap();
        for st in ByzStrategy::ALL {
            for seed in 0..30 {
                let a = random_scenario(&c, 3, ProcessId(0), st, seed).unwrap();
                let b = random_scenario(&c, 3, ProcessId(0), st, seed).unwrap();
                assert_eq!(a, b);
                let r = validate_scenario(&a);
                assert!(r.admissible, "{st} {seed}: {:?}", r.violations);
                assert_eq!(a.byz().len(), 1);
                assert_eq!(a.dfaulty().len(), 1);
            }
        }
    }

    #[test]
    fn transmitter_role_varies_with_seed() {
        let c = SystemConfig::new(6, 1, 1, 1).unwrap();
        let mut seen = BTreeSet::new();
        for seed in 0..60 {
            let s = random_scenario(&c, 2, ProcessId(2), ByzStrategy::Uniform, seed).unwrap();
            seen.insert((s.byz().contains(&ProcessId(2)), s.dfaulty().contains(&ProcessId(2))));
        }
        assert_eq!(seen.len(), 3);
    }

    #[test]
    fn strategy_names_round_trip() {
        for st in ByzStrategy::ALL {
            assert_eq!(st.name().parse::<ByzStrategy>().unwrap(), st);
        }
        assert!("noise".parse::<ByzStrategy>().is_err());
    }
}
