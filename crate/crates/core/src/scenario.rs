//! Full-information scenarios and the views processes hold of them.
//!
//! A `k`-round scenario assigns a value to every relay path `p0 p1 … pl`
//! with `0 ≤ l ≤ k`: `σ(p0 … pl)` is what `p(l-1)` told `pl` that … `p0`
//! told `p1` was its initial value. A process `p` only sees the paths that
//! end in a hop to itself; its view is `σ_p(s) = σ(s·p)`.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::path::{Path, PathTable};
use crate::value::{ProcessId, Value};

/// A `k`-round scenario of an `(n, m, d, b)`-system together with the fault
/// sets `B(σ)` and `D(σ)` it claims.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Scenario {
    cfg: SystemConfig,
    k: usize,
    byz: BTreeSet<ProcessId>,
    dfaulty: BTreeSet<ProcessId>,
    table: PathTable,
}

impl Scenario {
    /// Wraps a value table of depth `k`. Admissibility is not checked here;
    /// use [`validate_scenario`].
    pub fn new(
        cfg: SystemConfig,
        k: usize,
        table: PathTable,
        byz: BTreeSet<ProcessId>,
        dfaulty: BTreeSet<ProcessId>,
    ) -> Result<Self> {
        cfg.check()?;
        if table.n() != cfg.n || table.depth() != k {
            return Err(Error::Precondition(format!(
                "value table has n = {}, depth = {}; expected n = {}, depth = {k}",
                table.n(),
                table.depth(),
                cfg.n
            )));
        }
        for p in byz.iter().chain(dfaulty.iter()) {
            if p.0 >= cfg.n {
                return Err(Error::ProcessOutOfRange { id: p.0, n: cfg.n });
            }
        }
        Ok(Scenario { cfg, k, byz, dfaulty, table })
    }

    /// A scenario in which every path carries `v` and nobody is faulty.
    pub fn constant(cfg: SystemConfig, k: usize, transmitter: ProcessId, v: Value) -> Result<Self> {
        let table = PathTable::new(cfg.n, k, transmitter, v)?;
        Scenario::new(cfg, k, table, BTreeSet::new(), BTreeSet::new())
    }

    pub fn cfg(&self) -> &SystemConfig {
        &self.cfg
    }

    pub fn rounds(&self) -> usize {
        self.k
    }

    pub fn transmitter(&self) -> ProcessId {
        self.table.root()
    }

    pub fn byz(&self) -> &BTreeSet<ProcessId> {
        &self.byz
    }

    pub fn dfaulty(&self) -> &BTreeSet<ProcessId> {
        &self.dfaulty
    }

    pub fn is_byzantine(&self, p: ProcessId) -> bool {
        self.byz.contains(&p)
    }

    pub fn table(&self) -> &PathTable {
        &self.table
    }

    pub(crate) fn table_mut(&mut self) -> &mut PathTable {
        &mut self.table
    }

    /// `σ(p0)`.
    pub fn initial_value(&self) -> Value {
        self.table.get_tail(&[])
    }

    pub fn value(&self, path: &[ProcessId]) -> Result<Value> {
        self.table.get(path)
    }

    pub fn value_at(&self, path: &Path) -> Result<Value> {
        self.table.get(path.labels())
    }

    pub fn non_byzantine(&self) -> impl Iterator<Item = ProcessId> + '_ {
        (0..self.cfg.n).map(ProcessId).filter(|p| !self.byz.contains(p))
    }

    /// The same values reinterpreted under a different configuration and
    /// fault sets.
    pub fn reinterpret(
        &self,
        cfg: SystemConfig,
        byz: BTreeSet<ProcessId>,
        dfaulty: BTreeSet<ProcessId>,
    ) -> Result<Scenario> {
        Scenario::new(cfg, self.k, self.table.clone(), byz, dfaulty)
    }

    /// The first `rounds` rounds of this scenario.
    pub fn truncated(&self, rounds: usize) -> Result<Scenario> {
        if rounds > self.k {
            return Err(Error::Precondition(format!(
                "cannot truncate a {}-round scenario to {rounds} rounds",
                self.k
            )));
        }
        Scenario::new(
            self.cfg,
            rounds,
            self.table.truncated(rounds),
            self.byz.clone(),
            self.dfaulty.clone(),
        )
    }
}

/// The local information `σ_p` of one process: `σ_p(s) = σ(s·p)` for every
/// path `s` of length `1..=k`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct View {
    cfg: SystemConfig,
    owner: ProcessId,
    k: usize,
    table: PathTable,
}

impl View {
    /// Builds a view directly from a table of depth `k − 1`.
    pub fn from_table(cfg: SystemConfig, owner: ProcessId, k: usize, table: PathTable) -> Result<Self> {
        if k == 0 || table.depth() + 1 != k || table.n() != cfg.n {
            return Err(Error::Precondition(format!(
                "a {k}-round view needs a table of depth {}",
                k.saturating_sub(1)
            )));
        }
        if owner.0 >= cfg.n {
            return Err(Error::ProcessOutOfRange { id: owner.0, n: cfg.n });
        }
        Ok(View { cfg, owner, k, table })
    }

    pub fn cfg(&self) -> &SystemConfig {
        &self.cfg
    }

    pub fn owner(&self) -> ProcessId {
        self.owner
    }

    pub fn rounds(&self) -> usize {
        self.k
    }

    pub fn transmitter(&self) -> ProcessId {
        self.table.root()
    }

    pub fn table(&self) -> &PathTable {
        &self.table
    }

    pub(crate) fn table_mut(&mut self) -> &mut PathTable {
        &mut self.table
    }

    pub fn value(&self, path: &[ProcessId]) -> Result<Value> {
        self.table.get(path)
    }

    #[inline]
    pub(crate) fn get_tail(&self, tail: &[ProcessId]) -> Value {
        self.table.get_tail(tail)
    }

    /// The first `rounds` rounds of this view.
    pub fn truncated(&self, rounds: usize) -> Result<View> {
        if rounds == 0 || rounds > self.k {
            return Err(Error::Precondition(format!(
                "cannot truncate a {}-round view to {rounds} rounds",
                self.k
            )));
        }
        View::from_table(self.cfg, self.owner, rounds, self.table.truncated(rounds - 1))
    }

    /// The entries of the final round only (paths of exactly `k` labels).
    pub fn final_round(&self) -> RoundSlice {
        let space = self.table.space();
        let len = self.k - 1;
        let start = space.offset(len);
        RoundSlice {
            transmitter: self.transmitter(),
            rounds: self.k,
            values: self.table.raw()[start..start + space.count(len)].to_vec(),
        }
    }
}

/// The last-round entries of a `k`-round view: a map from `p0 P^{k−1}` to
/// values, which is all a full-information algorithm needs as input.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RoundSlice {
    pub transmitter: ProcessId,
    pub rounds: usize,
    /// Indexed by the base-`n` code of the tail.
    pub values: Vec<Value>,
}

/// `σ_p`: the view of process `p` in `scn`.
pub fn view_of(scn: &Scenario, p: ProcessId) -> Result<View> {
    let n = scn.cfg.n;
    if p.0 >= n {
        return Err(Error::ProcessOutOfRange { id: p.0, n });
    }
    if scn.k == 0 {
        return Err(Error::Precondition("a 0-round scenario has no views".into()));
    }
    let mut table = PathTable::new(n, scn.k - 1, scn.transmitter(), Value::BOT)?;
    let src = scn.table.space();
    for len in 0..scn.k {
        let base = src.offset(len);
        let child_base = src.offset(len + 1);
        let raw_src = scn.table.raw();
        let dst = table.raw_mut();
        for code in 0..src.count(len) {
            dst[base + code] = raw_src[child_base + code * n + p.0];
        }
    }
    View::from_table(scn.cfg, p, scn.k, table)
}

/// The value the owner holds for a coordinate of a nested sub-scenario:
/// `σ^{p0…pi}_{s·owner}(pi · inner) = σ_owner(p0 … pi · inner · s)`.
pub fn view_lookup_nested(
    v: &View,
    prefix: &[ProcessId],
    inner: &[ProcessId],
    suffix: &[ProcessId],
) -> Result<Value> {
    let total = prefix.len() + inner.len() + suffix.len();
    if prefix.is_empty() || total > v.k {
        return Err(Error::BadPath(format!(
            "nested coordinate of length {total} in a {}-round view",
            v.k
        )));
    }
    let mut path = Vec::with_capacity(total);
    path.extend_from_slice(prefix);
    path.extend_from_slice(inner);
    path.extend_from_slice(suffix);
    v.value(&path)
}

/// Which admissibility clause a path breaks.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Rule {
    TooManyByzantine { count: usize, bound: usize },
    TooManyDFaulty { count: usize, bound: usize },
    OverlappingFaultSets { process: ProcessId },
    /// A process outside `B ∪ D` relayed a different value.
    CorrectProcessLied { sender: ProcessId },
    /// A d-faulty process corrupted more than `d` links in one round.
    LinkBudgetExceeded { sender: ProcessId, round: usize, links: usize, bound: usize },
    /// A signed chain attributes altered content to a non-Byzantine signer
    /// without marking that signature as forged.
    Unforgeability { position: usize },
    /// A chain's signer list does not match its path.
    MalformedChain,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub path: Path,
    pub rule: Rule,
}

/// Receivers to which a d-faulty process sent corrupted messages in one round.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinkSet {
    pub process: ProcessId,
    pub round: usize,
    pub receivers: BTreeSet<ProcessId>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub admissible: bool,
    pub violations: Vec<Violation>,
    pub inferred_link_sets: Vec<LinkSet>,
}

/// Shared clause checker. `differs(parent, child)` tells whether the value
/// received at `child = parent·q` differs from the one its sender holds at
/// `parent`; both are table indices.
pub(crate) fn check_clauses(
    cfg: &SystemConfig,
    k: usize,
    table: &PathTable,
    byz: &BTreeSet<ProcessId>,
    dfaulty: &BTreeSet<ProcessId>,
    differs: impl Fn(usize, usize) -> bool,
) -> ValidationReport {
    let root = table.root();
    let mut violations = Vec::new();
    if byz.len() > cfg.b {
        violations.push(Violation {
            path: Path::root(root),
            rule: Rule::TooManyByzantine { count: byz.len(), bound: cfg.b },
        });
    }
    if dfaulty.len() > cfg.m {
        violations.push(Violation {
            path: Path::root(root),
            rule: Rule::TooManyDFaulty { count: dfaulty.len(), bound: cfg.m },
        });
    }
    for p in byz.intersection(dfaulty) {
        violations.push(Violation {
            path: Path::root(root),
            rule: Rule::OverlappingFaultSets { process: *p },
        });
    }

    let n = cfg.n;
    let space = table.space();
    let mut links: BTreeMap<(ProcessId, usize), BTreeSet<ProcessId>> = BTreeMap::new();
    let mut tail = Vec::new();
    // A path of `len + 1` labels is sent onwards in round `len + 1`.
    for len in 0..k {
        let round = len + 1;
        for code in 0..space.count(len) {
            let parent = space.offset(len) + code;
            space.decode_into(parent, &mut tail);
            let sender = tail.last().copied().unwrap_or(root);
            if byz.contains(&sender) {
                continue;
            }
            let first_child = space.offset(len + 1) + code * n;
            for q in 0..n {
                if !differs(parent, first_child + q) {
                    continue;
                }
                if dfaulty.contains(&sender) {
                    links.entry((sender, round)).or_default().insert(ProcessId(q));
                } else {
                    let mut full = Vec::with_capacity(len + 2);
                    full.push(root);
                    full.extend_from_slice(&tail);
                    full.push(ProcessId(q));
                    violations.push(Violation {
                        path: Path(full),
                        rule: Rule::CorrectProcessLied { sender },
                    });
                }
            }
        }
    }
    let inferred: Vec<LinkSet> = links
        .into_iter()
        .map(|((process, round), receivers)| LinkSet { process, round, receivers })
        .collect();
    for ls in &inferred {
        if ls.receivers.len() > cfg.d {
            violations.push(Violation {
                path: Path::root(root),
                rule: Rule::LinkBudgetExceeded {
                    sender: ls.process,
                    round: ls.round,
                    links: ls.receivers.len(),
                    bound: cfg.d,
                },
            });
        }
    }
    ValidationReport { admissible: violations.is_empty(), violations, inferred_link_sets: inferred }
}

/// Checks the three admissibility clauses: fault-set sizes, correct
/// processes relaying faithfully, and at most `d` corrupted links per round
/// for each d-faulty process. Never fails; every breach is reported.
pub fn validate_scenario(scn: &Scenario) -> ValidationReport {
    let raw = scn.table.raw();
    check_clauses(&scn.cfg, scn.k, &scn.table, &scn.byz, &scn.dfaulty, |a, b| raw[a] != raw[b])
}

/// On-disk form of a scenario: values listed in lexicographic path order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScenarioFixture {
    pub config: SystemConfig,
    pub k: usize,
    pub transmitter: ProcessId,
    pub byz: Vec<ProcessId>,
    pub dfaulty: Vec<ProcessId>,
    pub values: Vec<PathValue>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathValue {
    pub path: Path,
    pub value: Value,
}

impl From<&Scenario> for ScenarioFixture {
    fn from(scn: &Scenario) -> Self {
        ScenarioFixture {
            config: scn.cfg,
            k: scn.k,
            transmitter: scn.transmitter(),
            byz: scn.byz.iter().copied().collect(),
            dfaulty: scn.dfaulty.iter().copied().collect(),
            values: scn
                .table
                .lexicographic()
                .into_iter()
                .map(|(path, value)| PathValue { path, value })
                .collect(),
        }
    }
}

impl TryFrom<ScenarioFixture> for Scenario {
    type Error = Error;

    fn try_from(fx: ScenarioFixture) -> Result<Scenario> {
        fx.config.check()?;
        let mut table = PathTable::new(fx.config.n, fx.k, fx.transmitter, Value::BOT)?;
        let expected = table.lexicographic();
        if expected.len() != fx.values.len() {
            return Err(Error::Fixture(format!(
                "expected {} path values, found {}",
                expected.len(),
                fx.values.len()
            )));
        }
        for ((want, _), got) in expected.iter().zip(&fx.values) {
            if *want != got.path {
                return Err(Error::Fixture(format!(
                    "path {} out of canonical order (expected {want})",
                    got.path
                )));
            }
            table.set(got.path.labels(), got.value)?;
        }
        Scenario::new(
            fx.config,
            fx.k,
            table,
            fx.byz.into_iter().collect(),
            fx.dfaulty.into_iter().collect(),
        )
    }
}

impl Scenario {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&ScenarioFixture::from(self)).expect("fixture serializes")
    }

    pub fn from_json(s: &str) -> Result<Scenario> {
        let fx: ScenarioFixture = serde_json::from_str(s)?;
        Scenario::try_from(fx)
    }
}
