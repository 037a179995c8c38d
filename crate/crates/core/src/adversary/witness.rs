//! Indistinguishability witnesses: pairs of admissible scenarios that some
//! processes cannot tell apart although validity forces different outputs.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::path::PathTable;
use crate::scenario::{validate_scenario, view_of, Scenario, ScenarioFixture};
use crate::signed::{signed_view_of, validate_signed, SignedFixture, SignedScenario};
use crate::value::{ProcessId, Value};

use super::{views_equal, Partition};

/// Which construction to build.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WitnessKind {
    /// `n ≤ 2m + d + 2b`.
    ProcessBound,
    /// `n ≤ 2d + m + 2b`.
    LinkBound,
    /// Signed messages, `n ≤ m + d + b`.
    Signed,
    /// Two rounds do not suffice for `max{2m+d, 2d+m} < n < 2m+2d`, `b = 0`.
    TwoRoundLb,
    /// `b + 1` rounds never suffice when `m, d > 0`.
    TimeLb,
}

impl WitnessKind {
    pub const ALL: [WitnessKind; 5] = [
        WitnessKind::ProcessBound,
        WitnessKind::LinkBound,
        WitnessKind::Signed,
        WitnessKind::TwoRoundLb,
        WitnessKind::TimeLb,
    ];

    pub fn name(self) -> &'static str {
        match self {
            WitnessKind::ProcessBound => "process-bound",
            WitnessKind::LinkBound => "link-bound",
            WitnessKind::Signed => "signed",
            WitnessKind::TwoRoundLb => "two-round-lb",
            WitnessKind::TimeLb => "time-lb",
        }
    }

    pub fn parse(s: &str) -> Option<WitnessKind> {
        WitnessKind::ALL.into_iter().find(|k| k.name() == s)
    }

    /// Whether `cfg` lies in the region the construction needs. Always
    /// false inside the corresponding solvable region.
    pub fn applies(self, cfg: &SystemConfig) -> bool {
        let SystemConfig { n, m, d, b } = *cfg;
        match self {
            WitnessKind::ProcessBound => n <= 2 * m + d + 2 * b && n >= 5 && m > 0 && d > 0 && b > 0,
            WitnessKind::LinkBound => n <= 2 * d + m + 2 * b && n >= 5 && m > 0 && d > 0 && b > 0,
            WitnessKind::Signed => n <= m + d + b && m > 0 && d > 0,
            WitnessKind::TwoRoundLb => {
                b == 0 && m > 0 && d > 0 && (2 * m + d).max(2 * d + m) < n && n < 2 * m + 2 * d
            }
            WitnessKind::TimeLb => m > 0 && d > 0 && n > b + 3,
        }
    }
}

/// Two scenarios and the processes whose views coincide.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WitnessPair {
    pub alpha: Scenario,
    pub beta: Scenario,
    pub indist_set: BTreeSet<ProcessId>,
    /// What validity forces the indistinguishable processes to output in
    /// `alpha` and in `beta`.
    pub expected_outputs: (Value, Value),
}

/// Result of checking a witness pair.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WitnessCheck {
    pub alpha_admissible: bool,
    pub beta_admissible: bool,
    /// Members of the indistinguishable set whose two views differ.
    pub differing_views: Vec<ProcessId>,
    /// `expected_outputs` are the two transmitter values and differ.
    pub outputs_conflict: bool,
}

impl WitnessCheck {
    pub fn passed(&self) -> bool {
        self.alpha_admissible && self.beta_admissible && self.differing_views.is_empty() && self.outputs_conflict
    }
}

impl WitnessPair {
    pub fn check(&self) -> Result<WitnessCheck> {
        let mut differing_views = Vec::new();
        for &p in &self.indist_set {
            if !views_equal(&view_of(&self.alpha, p)?, &view_of(&self.beta, p)?)? {
                differing_views.push(p);
            }
        }
        Ok(WitnessCheck {
            alpha_admissible: validate_scenario(&self.alpha).admissible,
            beta_admissible: validate_scenario(&self.beta).admissible,
            differing_views,
            outputs_conflict: self.expected_outputs.0 != self.expected_outputs.1
                && self.expected_outputs == (self.alpha.initial_value(), self.beta.initial_value()),
        })
    }

    pub fn to_json(&self) -> String {
        let fx = WitnessFixture {
            alpha: ScenarioFixture::from(&self.alpha),
            beta: ScenarioFixture::from(&self.beta),
            indist_set: self.indist_set.iter().copied().collect(),
            expected_outputs: self.expected_outputs,
        };
        serde_json::to_string_pretty(&fx).expect("fixture serializes")
    }

    pub fn from_json(s: &str) -> Result<WitnessPair> {
        let fx: WitnessFixture<ScenarioFixture> = serde_json::from_str(s)?;
        Ok(WitnessPair {
            alpha: Scenario::try_from(fx.alpha)?,
            beta: Scenario::try_from(fx.beta)?,
            indist_set: fx.indist_set.into_iter().collect(),
            expected_outputs: fx.expected_outputs,
        })
    }
}

/// The signed-message counterpart of [`WitnessPair`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SignedWitnessPair {
    pub alpha: SignedScenario,
    pub beta: SignedScenario,
    pub indist_set: BTreeSet<ProcessId>,
    pub expected_outputs: (Value, Value),
}

impl SignedWitnessPair {
    /// View equality here covers values and forged sets alike.
    pub fn check(&self) -> Result<WitnessCheck> {
        let mut differing_views = Vec::new();
        for &p in &self.indist_set {
            if signed_view_of(&self.alpha, p)? != signed_view_of(&self.beta, p)? {
                differing_views.push(p);
            }
        }
        let (a0, b0) = (self.alpha.scenario().initial_value(), self.beta.scenario().initial_value());
        Ok(WitnessCheck {
            alpha_admissible: validate_signed(&self.alpha).admissible,
            beta_admissible: validate_signed(&self.beta).admissible,
            differing_views,
            outputs_conflict: a0 != b0 && self.expected_outputs == (a0, b0),
        })
    }

    pub fn to_json(&self) -> String {
        let fx = WitnessFixture {
            alpha: SignedFixture::from(&self.alpha),
            beta: SignedFixture::from(&self.beta),
            indist_set: self.indist_set.iter().copied().collect(),
            expected_outputs: self.expected_outputs,
        };
        serde_json::to_string_pretty(&fx).expect("fixture serializes")
    }
}

/// On-disk wrapper shared by oral and signed pairs.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WitnessFixture<S> {
    pub alpha: S,
    pub beta: S,
    pub indist_set: Vec<ProcessId>,
    pub expected_outputs: (Value, Value),
}

/// Materializes two scenarios level by level. `step(sender_block,
/// receiver_block, alpha_parent, beta_parent, level)` returns the child
/// values; the root is `p0` in block 0.
fn build_pair(
    cfg: &SystemConfig,
    k: usize,
    part: &Partition,
    roots: (Value, Value),
    step: impl Fn(usize, usize, Value, Value, usize) -> (Value, Value),
) -> Result<(PathTable, PathTable)> {
    let n = cfg.n;
    let tx = part.transmitter();
    let mut a = PathTable::new(n, k, tx, roots.0)?;
    let mut b = PathTable::new(n, k, tx, roots.1)?;
    let space = a.space().clone();
    let block: Vec<usize> = (0..n).map(|p| part.block_of(ProcessId(p)).expect("partition covers P")).collect();
    for len in 0..k {
        for code in 0..space.count(len) {
            let parent = space.offset(len) + code;
            let sender = if len == 0 { tx.0 } else { code % n };
            let (ap, bp) = (a.raw()[parent], b.raw()[parent]);
            let first = space.offset(len + 1) + code * n;
            for q in 0..n {
                let (av, bv) = step(block[sender], block[q], ap, bp, len + 1);
                a.raw_mut()[first + q] = av;
                b.raw_mut()[first + q] = bv;
            }
        }
    }
    Ok((a, b))
}

fn require(ok: bool, what: impl FnOnce() -> String) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::Precondition(what()))
    }
}

fn check_shape(kind: WitnessKind, cfg: &SystemConfig, part: &Partition, caps: &[(usize, usize)]) -> Result<()> {
    cfg.check()?;
    require(kind.applies(cfg), || {
        format!("{cfg:?} is outside the region where the {} construction exists", kind.name())
    })?;
    part.check_covers(cfg.n)?;
    require(part.len() == caps.len(), || format!("{} blocks expected, got {}", caps.len(), part.len()))?;
    for (i, &(lo, hi)) in caps.iter().enumerate() {
        let size = part.block(i).len();
        require(lo <= size && size <= hi, || format!("block {i} has {size} members, allowed {lo}..={hi}"))?;
    }
    Ok(())
}

const G: usize = 0;
const H: usize = 1;
const I: usize = 2;
const J: usize = 3;
const K: usize = 4;

fn members(part: &Partition, blocks: &[usize]) -> BTreeSet<ProcessId> {
    blocks.iter().flat_map(|&i| part.block(i).iter().copied()).collect()
}

/// Witness for `n ≤ 2m + d + 2b`, blocks `[G, H, I, J, K]` with
/// `|G|, |H| ≤ m`, `|I|, |J| ≤ b`, `|K| ≤ d`, all nonempty, transmitter in
/// `G`. In `alpha` the transmitter holds 0, `H` is d-faulty and `J`
/// Byzantine; in `beta` it holds 1, `G` is d-faulty and `I` Byzantine.
/// The processes of `K` see the same view in both.
pub fn process_bound_pair(cfg: &SystemConfig, part: &Partition, k: usize) -> Result<WitnessPair> {
    let SystemConfig { m, d, b, .. } = *cfg;
    check_shape(WitnessKind::ProcessBound, cfg, part, &[(1, m), (1, m), (1, b), (1, b), (1, d)])?;
    let (at, bt) = build_pair(cfg, k, part, (Value::ZERO, Value::ONE), |s, r, a, bv, _| match s {
        G => (a, if r == K { a } else { bv }),
        H => (if r == K { bv } else { a }, bv),
        I => (a, a),
        J => (bv, bv),
        _ => (a, bv),
    })?;
    Ok(WitnessPair {
        alpha: Scenario::new(*cfg, k, at, members(part, &[J]), members(part, &[H]))?,
        beta: Scenario::new(*cfg, k, bt, members(part, &[I]), members(part, &[G]))?,
        indist_set: members(part, &[K]),
        expected_outputs: (Value::ZERO, Value::ONE),
    })
}

/// Witness for `n ≤ 2d + m + 2b`, blocks `[G, H, I, J, K]` with
/// `|G| ≤ m`, `|H|, |I| ≤ d`, `|J|, |K| ≤ b`, all nonempty, transmitter in
/// `G`. `G` is d-faulty in both; `J` is Byzantine in `alpha`, `K` in
/// `beta`. The processes of `H ∪ I` see the same view in both.
pub fn link_bound_pair(cfg: &SystemConfig, part: &Partition, k: usize) -> Result<WitnessPair> {
    let SystemConfig { m, d, b, .. } = *cfg;
    check_shape(WitnessKind::LinkBound, cfg, part, &[(1, m), (1, d), (1, d), (1, b), (1, b)])?;
    let (at, bt) = build_pair(cfg, k, part, (Value::ZERO, Value::ONE), |s, r, a, bv, _| match s {
        G => (if r == H { bv } else { a }, if r == I { a } else { bv }),
        J => (bv, bv),
        K => (a, a),
        _ => (a, bv),
    })?;
    Ok(WitnessPair {
        alpha: Scenario::new(*cfg, k, at, members(part, &[J]), members(part, &[G]))?,
        beta: Scenario::new(*cfg, k, bt, members(part, &[K]), members(part, &[G]))?,
        indist_set: members(part, &[H, I]),
        expected_outputs: (Value::ZERO, Value::ONE),
    })
}

/// Signed-message witness for `n ≤ m + d + b`, blocks `[G, H, I]` with
/// `|G| ≤ m`, `|H| ≤ b`, `|I| ≤ d`, transmitter in `G`, `I` nonempty.
/// `H` is Byzantine and `G` d-faulty in both. Everything `I` receives is
/// `⊥`, with the same forged marks in both scenarios.
pub fn signed_pair(cfg: &SystemConfig, part: &Partition, k: usize) -> Result<SignedWitnessPair> {
    let SystemConfig { m, d, b, .. } = *cfg;
    check_shape(WitnessKind::Signed, cfg, part, &[(1, m), (0, b), (1, d)])?;
    let bot = (Value::BOT, Value::BOT);
    let (at, bt) = build_pair(cfg, k, part, (Value::ZERO, Value::ONE), |s, r, a, bv, _| match s {
        G if r == I => bot,
        G => (a, bv),
        _ => bot,
    })?;
    let byz = members(part, &[H]);
    let dfaulty = members(part, &[G]);
    let alpha = Scenario::new(*cfg, k, at, byz.clone(), dfaulty.clone())?;
    let beta = Scenario::new(*cfg, k, bt, byz, dfaulty)?;
    Ok(SignedWitnessPair {
        alpha: SignedScenario::unsigned(alpha).with_minimal_forgeries(),
        beta: SignedScenario::unsigned(beta).with_minimal_forgeries(),
        indist_set: members(part, &[I]),
        expected_outputs: (Value::ZERO, Value::ONE),
    })
}

/// Two-round witness for `b = 0`, `max{2m+d, 2d+m} < n < 2m+2d`. Blocks
/// `[{p0}, G, H, I, J]` with `|G|, |H| ≤ m − 1` and `1 ≤ |I|, |J| ≤ d`.
/// `G ∪ {p0}` is d-faulty in `alpha`, `H ∪ {p0}` in `beta`; the processes
/// of `I` see the same two-round view in both.
pub fn two_round_lb_pair(cfg: &SystemConfig, part: &Partition) -> Result<WitnessPair> {
    let SystemConfig { m, d, .. } = *cfg;
    check_shape(
        WitnessKind::TwoRoundLb,
        cfg,
        part,
        &[(1, 1), (0, m - 1), (0, m - 1), (1, d), (1, d)],
    )?;
    const P0: usize = 0;
    const G2: usize = 1;
    const H2: usize = 2;
    const I2: usize = 3;
    const J2: usize = 4;
    let one = Value::ONE;
    let zero = Value::ZERO;
    let (at, bt) = build_pair(cfg, 2, part, (zero, one), |s, r, a, bv, level| match (s, level) {
        (P0, 1) => (if r == I2 { one } else { a }, if r == J2 { zero } else { bv }),
        (P0, _) => (if r == I2 { one } else { a }, if r == I2 { one } else { bv }),
        (G2, _) => (if r == I2 { one } else { a }, bv),
        (H2, _) => (a, if r == I2 { zero } else { bv }),
        _ => (a, bv),
    })?;
    let mut da = members(part, &[G2]);
    da.insert(part.transmitter());
    let mut db = members(part, &[H2]);
    db.insert(part.transmitter());
    Ok(WitnessPair {
        alpha: Scenario::new(*cfg, 2, at, BTreeSet::new(), da)?,
        beta: Scenario::new(*cfg, 2, bt, BTreeSet::new(), db)?,
        indist_set: members(part, &[I2]),
        expected_outputs: (zero, one),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(n: usize, m: usize, d: usize, b: usize) -> SystemConfig {
        SystemConfig::new(n, m, d, b).unwrap()
    }

    fn singletons(n: usize) -> Partition {
        Partition::new(ProcessId(0), (0..n).map(|p| BTreeSet::from([ProcessId(p)])).collect()).unwrap()
    }

    #[test]
    fn process_bound_singletons_pass_at_every_depth() {
        let c = cfg(5, 1, 1, 1);
        for k in 1..=4 {
            let w = process_bound_pair(&c, &singletons(5), k).unwrap();
            let r = w.check().unwrap();
            assert!(r.passed(), "k={k}: {r:?}");
            assert_eq!(w.indist_set, BTreeSet::from([ProcessId(4)]));
        }
    }

    #[test]
    fn process_bound_depth_two_by_hand() {
        // p0 = 0 ∈ G, 1 ∈ H, 2 ∈ I, 3 ∈ J, 4 ∈ K.
        let w = process_bound_pair(&cfg(5, 1, 1, 1), &singletons(5), 2).unwrap();
        let p = |v: &[usize]| v.iter().copied().map(ProcessId).collect::<Vec<_>>();
        // H relays to K what it holds in beta.
        assert_eq!(w.alpha.value(&p(&[0, 1, 4])).unwrap(), Value::ONE);
        assert_eq!(w.alpha.value(&p(&[0, 1, 2])).unwrap(), Value::ZERO);
        // J (Byzantine in alpha) echoes beta.
        assert_eq!(w.alpha.value(&p(&[0, 3, 2])).unwrap(), Value::ONE);
        // I (Byzantine in beta) echoes alpha.
        assert_eq!(w.beta.value(&p(&[0, 2, 1])).unwrap(), Value::ZERO);
        assert_eq!(w.beta.value(&p(&[0, 4, 1])).unwrap(), Value::ZERO);
        assert_eq!(w.beta.value(&p(&[0, 0, 4])).unwrap(), Value::ZERO);
        assert_eq!(w.beta.value(&p(&[0, 0, 1])).unwrap(), Value::ONE);
    }

    #[test]
    fn link_bound_singletons_pass() {
        let c = cfg(5, 1, 1, 1);
        for k in 1..=4 {
            let r = link_bound_pair(&c, &singletons(5), k).unwrap().check().unwrap();
            assert!(r.passed(), "k={k}: {r:?}");
        }
    }

    #[test]
    fn signed_views_are_all_bot() {
        let c = cfg(3, 1, 1, 1);
        for k in 1..=3 {
            let w = signed_pair(&c, &singletons(3), k).unwrap();
            assert!(w.check().unwrap().passed());
            let v = signed_view_of(&w.alpha, ProcessId(2)).unwrap();
            assert!(v.view().table().raw().iter().all(|x| x.is_bot()));
        }
    }

    #[test]
    fn two_round_pair_passes() {
        let c = cfg(7, 2, 2, 0);
        let part = Partition::new(
            ProcessId(0),
            vec![
                BTreeSet::from([ProcessId(0)]),
                BTreeSet::from([ProcessId(1)]),
                BTreeSet::from([ProcessId(2)]),
                BTreeSet::from([ProcessId(3), ProcessId(4)]),
                BTreeSet::from([ProcessId(5), ProcessId(6)]),
            ],
        )
        .unwrap();
        let r = two_round_lb_pair(&c, &part).unwrap().check().unwrap();
        assert!(r.passed(), "{r:?}");
    }

    #[test]
    fn refuses_inside_solvable_region() {
        let c = cfg(7, 1, 1, 1);
        assert!(process_bound_pair(&c, &singletons(7), 4).is_err());
        assert!(link_bound_pair(&c, &singletons(7), 4).is_err());
        let c = cfg(4, 1, 1, 1);
        assert!(signed_pair(&c, &singletons(4), 3).is_err());
    }

    #[test]
    fn refuses_bad_partition_caps() {
        let c = cfg(5, 1, 1, 2);
        let part = Partition::new(
            ProcessId(0),
            vec![
                BTreeSet::from([ProcessId(0), ProcessId(1)]),
                BTreeSet::from([ProcessId(2)]),
                BTreeSet::from([ProcessId(3)]),
                BTreeSet::new(),
                BTreeSet::from([ProcessId(4)]),
            ],
        )
        .unwrap();
        assert!(process_bound_pair(&c, &part, 3).is_err());
    }

    #[test]
    fn fixture_round_trip() {
        let w = process_bound_pair(&cfg(5, 1, 1, 1), &singletons(5), 2).unwrap();
        assert_eq!(WitnessPair::from_json(&w.to_json()).unwrap(), w);
    }
}
