//! Perfect-signature message model and the signed agreement algorithm.
//!
//! Signatures are simulated: every path carries, next to its value, the set
//! of chain positions whose signature does not authenticate the delivered
//! content. A chain verifies iff that set is empty. Admissibility forces a
//! position to be marked whenever a non-Byzantine signer never held the
//! delivered value, so no adversary can produce a verifying chain that
//! misattributes a value.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::agreement::DecisionReport;
use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::path::Path;
use crate::scenario::{
    check_clauses, view_of, Rule, Scenario, ScenarioFixture, ValidationReport, View, Violation,
};
use crate::value::{ProcessId, Value};

/// A value with its claimed signature chain `p0 … p(l−1)` (the receiver is
/// not a signer).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SignedChain {
    pub value: Value,
    pub signers: Vec<ProcessId>,
    pub forged_at: BTreeSet<usize>,
}

pub fn verify_chain(c: &SignedChain) -> bool {
    c.forged_at.is_empty()
}

fn mask_to_set(mask: u64) -> BTreeSet<usize> {
    (0..64).filter(|j| mask >> j & 1 == 1).collect()
}

fn set_to_mask(set: &BTreeSet<usize>) -> Result<u64> {
    set.iter().try_fold(0u64, |m, &j| {
        if j >= 64 {
            Err(Error::BadPath(format!("forged position {j} out of range")))
        } else {
            Ok(m | 1 << j)
        }
    })
}

/// Positions `j < len(path) − 1` whose signer is non-Byzantine but never
/// held `v`: those signatures cannot authenticate `v`.
pub(crate) fn required_forgeries(
    scn: &Scenario,
    path: &[ProcessId],
    v: Value,
) -> u64 {
    let mut mask = 0u64;
    let signers = path.len().saturating_sub(1);
    for j in 0..signers {
        if scn.is_byzantine(path[j]) {
            continue;
        }
        if scn.table().get_tail(&path[1..=j]) != v {
            mask |= 1 << j;
        }
    }
    mask
}

/// A scenario whose messages carry signature chains.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SignedScenario {
    inner: Scenario,
    /// Forged-position bitmask per table index.
    forged: Vec<u64>,
}

impl SignedScenario {
    pub fn new(inner: Scenario, forged: Vec<u64>) -> Result<Self> {
        if forged.len() != inner.table().raw().len() {
            return Err(Error::Precondition(format!(
                "{} forged masks for {} paths",
                forged.len(),
                inner.table().raw().len()
            )));
        }
        Ok(SignedScenario { inner, forged })
    }

    /// Every chain authentic: forged sets left empty.
    pub fn unsigned(inner: Scenario) -> Self {
        let forged = vec![0; inner.table().raw().len()];
        SignedScenario { inner, forged }
    }

    pub fn scenario(&self) -> &Scenario {
        &self.inner
    }

    pub fn cfg(&self) -> &SystemConfig {
        self.inner.cfg()
    }

    pub fn rounds(&self) -> usize {
        self.inner.rounds()
    }

    pub fn transmitter(&self) -> ProcessId {
        self.inner.transmitter()
    }

    pub fn chain(&self, path: &[ProcessId]) -> Result<SignedChain> {
        let value = self.inner.value(path)?;
        let idx = self.inner.table().space().index(&path[1..]);
        Ok(SignedChain {
            value,
            signers: path[..path.len() - 1].to_vec(),
            forged_at: mask_to_set(self.forged[idx]),
        })
    }

    pub fn set_chain(&mut self, path: &[ProcessId], value: Value, forged_at: &BTreeSet<usize>) -> Result<()> {
        let mask = set_to_mask(forged_at)?;
        self.inner.table_mut().set(path, value)?;
        let idx = self.inner.table().space().index(&path[1..]);
        self.forged[idx] = mask;
        Ok(())
    }

    /// Marks every position the unforgeability rule requires, given the
    /// current values. Used by constructions that only choose values.
    pub fn with_minimal_forgeries(mut self) -> Self {
        let space = self.inner.table().space().clone();
        let root = self.transmitter();
        let mut path = vec![root];
        let mut tail = Vec::new();
        for idx in 0..space.size() {
            space.decode_into(idx, &mut tail);
            path.truncate(1);
            path.extend_from_slice(&tail);
            let v = self.inner.table().raw()[idx];
            self.forged[idx] = required_forgeries(&self.inner, &path, v);
        }
        self
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&SignedFixture::from(self)).expect("fixture serializes")
    }

    pub fn from_json(s: &str) -> Result<SignedScenario> {
        let fx: SignedFixture = serde_json::from_str(s)?;
        SignedScenario::try_from(fx)
    }
}

/// Checks the oral-message clauses on chain contents (a correct relay must
/// pass value and forged set on unchanged) plus unforgeability.
pub fn validate_signed(s: &SignedScenario) -> ValidationReport {
    let scn = &s.inner;
    let raw = scn.table().raw();
    let forged = &s.forged;
    let mut report = check_clauses(scn.cfg(), scn.rounds(), scn.table(), scn.byz(), scn.dfaulty(), |a, b| {
        raw[a] != raw[b] || forged[a] != forged[b]
    });
    let space = scn.table().space();
    let root = scn.transmitter();
    let mut tail = Vec::new();
    let mut path = Vec::new();
    for idx in 0..space.size() {
        space.decode_into(idx, &mut tail);
        path.clear();
        path.push(root);
        path.extend_from_slice(&tail);
        let signers = tail.len();
        if forged[idx] >> signers != 0 {
            report.violations.push(Violation { path: Path(path.clone()), rule: Rule::MalformedChain });
            continue;
        }
        let missing = required_forgeries(scn, &path, raw[idx]) & !forged[idx];
        for j in (0..signers).filter(|j| missing >> j & 1 == 1) {
            report.violations.push(Violation {
                path: Path(path.clone()),
                rule: Rule::Unforgeability { position: j },
            });
        }
    }
    report.admissible = report.violations.is_empty();
    report
}

/// What one process sees of a signed scenario: values and forged sets on
/// every path ending in a hop to it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SignedView {
    view: View,
    forged: Vec<u64>,
}

impl SignedView {
    pub fn view(&self) -> &View {
        &self.view
    }

    pub fn cfg(&self) -> &SystemConfig {
        self.view.cfg()
    }

    pub fn rounds(&self) -> usize {
        self.view.rounds()
    }

    pub fn owner(&self) -> ProcessId {
        self.view.owner()
    }

    /// The chain `σ_owner(path)`.
    pub fn chain(&self, path: &[ProcessId]) -> Result<SignedChain> {
        let value = self.view.value(path)?;
        let idx = self.view.table().space().index(&path[1..]);
        Ok(SignedChain { value, signers: path.to_vec(), forged_at: mask_to_set(self.forged[idx]) })
    }

    fn verified_tail(&self, tail: &[ProcessId]) -> Option<Value> {
        let idx = self.view.table().space().index(tail);
        (self.forged[idx] == 0).then(|| self.view.table().raw()[idx])
    }
}

pub fn signed_view_of(s: &SignedScenario, p: ProcessId) -> Result<SignedView> {
    let view = view_of(&s.inner, p)?;
    let n = s.cfg().n;
    let src = s.inner.table().space();
    let mut forged = vec![0; view.table().raw().len()];
    for len in 0..s.rounds() {
        for code in 0..src.count(len) {
            forged[src.offset(len) + code] = s.forged[src.offset(len + 1) + code * n + p.0];
        }
    }
    Ok(SignedView { view, forged })
}

/// Values of every verifying chain the owner received along a path of
/// distinct processes with at most `max_labels` labels.
pub fn verified_set(v: &SignedView, max_labels: usize) -> BTreeSet<Value> {
    let mut out = BTreeSet::new();
    let mut tail = Vec::new();
    collect(v, max_labels.min(v.rounds()), &mut tail, &mut out);
    out
}

fn collect(v: &SignedView, max_labels: usize, tail: &mut Vec<ProcessId>, out: &mut BTreeSet<Value>) {
    if let Some(x) = v.verified_tail(tail) {
        out.insert(x);
    }
    if tail.len() + 1 == max_labels {
        return;
    }
    let tx = v.view.transmitter();
    for q in (0..v.cfg().n).map(ProcessId) {
        if q == tx || tail.contains(&q) {
            continue;
        }
        tail.push(q);
        collect(v, max_labels, tail, out);
        tail.pop();
    }
}

/// The `(b+2)`-round signed algorithm: collect the values of all verifying
/// chains over distinct-process paths and output the least of them (`⊥`
/// if none verifies).
pub fn sba_pp(v: &SignedView) -> Result<Value> {
    let cfg = v.cfg();
    if v.rounds() != cfg.b + 2 {
        return Err(Error::Precondition(format!(
            "SBA++ needs b + 2 = {} rounds, got {}",
            cfg.b + 2,
            v.rounds()
        )));
    }
    if !cfg.resilience_holds_signed() {
        return Err(Error::Precondition(format!("{cfg:?} violates n > m + d + b")));
    }
    Ok(verified_set(v, cfg.b + 2).into_iter().next().unwrap_or(Value::BOT))
}

/// Outputs of the signed algorithm plus the verified-value set of every
/// non-Byzantine process.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SignedReport {
    pub decision: DecisionReport,
    pub sets: BTreeMap<ProcessId, BTreeSet<Value>>,
    pub sets_equal: bool,
}

pub fn check_sba(s: &SignedScenario) -> Result<SignedReport> {
    let scn = &s.inner;
    let mut outputs = BTreeMap::new();
    let mut sets = BTreeMap::new();
    let honest: Vec<ProcessId> = scn.non_byzantine().collect();
    for &p in &honest {
        let v = signed_view_of(s, p)?;
        outputs.insert(p, sba_pp(&v)?);
        sets.insert(p, verified_set(&v, scn.cfg().b + 2));
    }
    let expected = (!scn.is_byzantine(scn.transmitter())).then(|| scn.initial_value());
    let mut it = sets.values();
    let sets_equal = match it.next() {
        None => true,
        Some(first) => it.all(|s| s == first),
    };
    Ok(SignedReport { decision: DecisionReport::judge(outputs, expected, honest.len()), sets, sets_equal })
}

/// On-disk form: the scenario fixture plus signer lists and forged
/// positions for every path.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SignedFixture {
    #[serde(flatten)]
    pub scenario: ScenarioFixture,
    pub chains: Vec<ChainRecord>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainRecord {
    pub path: Path,
    pub signers: Vec<ProcessId>,
    pub forged_at: Vec<usize>,
}

impl From<&SignedScenario> for SignedFixture {
    fn from(s: &SignedScenario) -> Self {
        let scenario = ScenarioFixture::from(&s.inner);
        let chains = scenario
            .values
            .iter()
            .map(|pv| {
                let c = s.chain(pv.path.labels()).expect("path from the same table");
                ChainRecord {
                    path: pv.path.clone(),
                    signers: c.signers,
                    forged_at: c.forged_at.into_iter().collect(),
                }
            })
            .collect();
        SignedFixture { scenario, chains }
    }
}

impl TryFrom<SignedFixture> for SignedScenario {
    type Error = Error;

    fn try_from(fx: SignedFixture) -> Result<SignedScenario> {
        let inner = Scenario::try_from(fx.scenario)?;
        let mut s = SignedScenario::unsigned(inner);
        for rec in fx.chains {
            let path = rec.path.labels();
            if path.is_empty() || rec.signers.as_slice() != &path[..path.len() - 1] {
                return Err(Error::Fixture(format!("signers of {} do not match its path", rec.path)));
            }
            let v = s.inner.value(path)?;
            s.set_chain(path, v, &rec.forged_at.into_iter().collect())?;
        }
        Ok(s)
    }
}
