//! View-Transform, its global counterpart Scenario-Transform, the classical
//! oral-messages decision rule, the two agreement algorithms built from
//! them, and the Termination/Validity/Agreement checker.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::local_majority::{apply_tail, LmKind};
use crate::scenario::{view_of, Scenario, View};
use crate::value::{ProcessId, Tally, Value};

/// One iteration of the view transform: every path `p0 p1 … pi s` with
/// `|s| ≤ k − window − i` is overwritten with the filter output for prefix
/// `p0 … pi` and suffix `s`, reading only the input view.
fn vt_step(cur: &View, kind: LmKind, i: usize) -> View {
    let top = cur.rounds() - kind.window();
    let mut next = cur.clone();
    let mut buf = Vec::new();
    for len in i..=top {
        let space = cur.table().space().clone();
        for code in 0..space.count(len) {
            let idx = space.offset(len) + code;
            let tail = space.decode(idx);
            let v = apply_tail(kind, cur, &tail[..i], &tail[i..], &mut buf);
            next.table_mut().raw_mut()[idx] = v;
        }
    }
    next
}

fn check_transform_rounds(k: usize, kind: LmKind) -> Result<()> {
    if k < kind.window() {
        return Err(Error::Precondition(format!(
            "{kind:?} view transform needs at least {} rounds, got {k}",
            kind.window()
        )));
    }
    Ok(())
}

/// Converts a `k`-round view with partial failures into a view free of
/// them: `k − 2` rounds for the three-round filter, `k − 1` for the
/// two-round one. Iterations run from the deepest prefix up to the root,
/// each on a fresh copy of the previous result.
pub fn view_transform(v: &View, kind: LmKind) -> Result<View> {
    check_transform_rounds(v.rounds(), kind)?;
    let top = v.rounds() - kind.window();
    let mut cur = v.clone();
    for i in (0..=top).rev() {
        cur = vt_step(&cur, kind, i);
    }
    cur.truncated(top + 1)
}

/// The omniscient counterpart of [`view_transform`]: applies every
/// non-Byzantine process's transform iteration to the whole scenario, then
/// makes every non-Byzantine sender look truthful to Byzantine receivers.
///
/// The result has `k − 2` (three-round filter) or `k − 1` (two-round)
/// rounds and is interpreted as a scenario of the `(n, 0, 0, b)`-system
/// with the same Byzantine set.
pub fn scenario_transform(scn: &Scenario, kind: LmKind) -> Result<Scenario> {
    let k = scn.rounds();
    check_transform_rounds(k, kind)?;
    let top = k - kind.window();
    let n = scn.cfg().n;
    let byz: Vec<ProcessId> = scn.byz().iter().copied().collect();
    let tx = scn.transmitter();
    let mut cur = scn.clone();
    for i in (0..=top).rev() {
        let mut next = cur.clone();
        let honest: Vec<ProcessId> = cur.non_byzantine().collect();
        for p in honest {
            let stepped = vt_step(&view_of(&cur, p)?, kind, i);
            let vspace = stepped.table().space().clone();
            let sspace = next.table().space().clone();
            for len in i..=top {
                for code in 0..vspace.count(len) {
                    let v = stepped.table().raw()[vspace.offset(len) + code];
                    next.table_mut().raw_mut()[sspace.offset(len + 1) + code * n + p.0] = v;
                }
            }
        }
        // Byzantine receivers get the sender's value from every
        // non-Byzantine sender on paths extending p0 … pi. At the root
        // iteration this includes the transmitter's own first-round sends.
        let space = next.table().space().clone();
        let first_len = if i == 0 { 0 } else { i + 1 };
        for len in first_len..k {
            for code in 0..space.count(len) {
                let idx = space.offset(len) + code;
                let sender = if len == 0 { tx } else { ProcessId(code % n) };
                if scn.is_byzantine(sender) {
                    continue;
                }
                let v = next.table().raw()[idx];
                let child = space.offset(len + 1) + code * n;
                for q in &byz {
                    next.table_mut().raw_mut()[child + q.0] = v;
                }
            }
        }
        cur = next;
    }
    cur.truncated(top + 1)?
        .reinterpret(scn.cfg().without_partial(), scn.byz().clone(), BTreeSet::new())
}

/// Classical oral-messages decision over the distinct-label subtree of a
/// view: leaves at depth `b + 1` return their stored value, inner nodes the
/// strict majority of their children (`⊥` on no majority).
pub fn om_decide(v: &View, b: usize) -> Result<Value> {
    if v.rounds() < b + 1 {
        return Err(Error::Precondition(format!(
            "OM({b}) needs a view of at least {} rounds, got {}",
            b + 1,
            v.rounds()
        )));
    }
    let mut path = Vec::with_capacity(b + 1);
    Ok(resolve(v, b + 1, &mut path))
}

fn resolve(v: &View, leaf_len: usize, tail: &mut Vec<ProcessId>) -> Value {
    let stored = v.get_tail(tail);
    if tail.len() + 1 == leaf_len {
        return stored;
    }
    let n = v.cfg().n;
    let tx = v.transmitter();
    let mut t = Tally::new();
    for q in (0..n).map(ProcessId) {
        if q == tx || tail.contains(&q) {
            continue;
        }
        tail.push(q);
        t.add(resolve(v, leaf_len, tail));
        tail.pop();
    }
    if t.total() == 0 {
        return stored;
    }
    t.strict_majority().unwrap_or(Value::BOT)
}

/// The `(b+3)`-round algorithm: three-round view transform, then OM(b).
pub fn ba_pp(v: &View) -> Result<Value> {
    let cfg = v.cfg();
    if v.rounds() != cfg.b + 3 {
        return Err(Error::Precondition(format!(
            "BA++ needs b + 3 = {} rounds, got {}",
            cfg.b + 3,
            v.rounds()
        )));
    }
    if !cfg.resilience_holds() {
        return Err(Error::Precondition(format!("{cfg:?} is outside the resilience bound")));
    }
    om_decide(&view_transform(v, LmKind::ThreeRound)?, cfg.b)
}

/// The `(b+2)`-round variant: two-round view transform, then OM(b).
pub fn ba_pp_fast(v: &View) -> Result<Value> {
    let cfg = v.cfg();
    if v.rounds() != cfg.b + 2 {
        return Err(Error::Precondition(format!(
            "fast BA++ needs b + 2 = {} rounds, got {}",
            cfg.b + 2,
            v.rounds()
        )));
    }
    if !cfg.fast_condition_holds() {
        return Err(Error::Precondition(format!("{cfg:?} violates n ≥ max{{2m+2d, b+1}} + 2b")));
    }
    om_decide(&view_transform(v, LmKind::TwoRound)?, cfg.b)
}

/// Decision functions over oral-message views.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    BaPp,
    BaPpFast,
    /// OM(b) applied directly, with no partial-failure filtering.
    Om,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::BaPp => "ba-pp",
            Algorithm::BaPpFast => "ba-pp-fast",
            Algorithm::Om => "om",
        }
    }

    pub fn rounds(self, cfg: &SystemConfig) -> usize {
        match self {
            Algorithm::BaPp => cfg.b + 3,
            Algorithm::BaPpFast => cfg.b + 2,
            Algorithm::Om => cfg.b + 1,
        }
    }

    /// Whether the algorithm's solvability precondition holds for `cfg`.
    pub fn supports(self, cfg: &SystemConfig) -> bool {
        match self {
            Algorithm::BaPp => cfg.resilience_holds(),
            Algorithm::BaPpFast => cfg.fast_condition_holds(),
            Algorithm::Om => cfg.m == 0 && cfg.n > 3 * cfg.b,
        }
    }

    pub fn decide(self, v: &View) -> Result<Value> {
        match self {
            Algorithm::BaPp => ba_pp(v),
            Algorithm::BaPpFast => ba_pp_fast(v),
            Algorithm::Om => om_decide(v, v.cfg().b),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Clause {
    Termination,
    Validity,
    Agreement,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BaViolation {
    pub clause: Clause,
    /// The process that broke validity, or a disagreeing pair.
    pub processes: Vec<ProcessId>,
}

/// Outputs of every non-Byzantine process and the three verdicts.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecisionReport {
    pub outputs: BTreeMap<ProcessId, Value>,
    pub termination_ok: bool,
    pub validity_ok: bool,
    pub agreement_ok: bool,
    pub witness: Option<BaViolation>,
}

impl DecisionReport {
    pub fn all_ok(&self) -> bool {
        self.termination_ok && self.validity_ok && self.agreement_ok
    }

    /// Judges a set of outputs. `expected` is the transmitter's initial
    /// value when it is non-Byzantine.
    pub fn judge(outputs: BTreeMap<ProcessId, Value>, expected: Option<Value>, everyone: usize) -> Self {
        let termination_ok = outputs.len() == everyone;
        let mut witness = None;
        if !termination_ok {
            witness = Some(BaViolation { clause: Clause::Termination, processes: vec![] });
        }
        let validity_ok = match expected {
            None => true,
            Some(want) => match outputs.iter().find(|(_, v)| **v != want) {
                None => true,
                Some((p, _)) => {
                    witness.get_or_insert(BaViolation { clause: Clause::Validity, processes: vec![*p] });
                    false
                }
            },
        };
        let mut it = outputs.iter();
        let agreement_ok = match it.next() {
            None => true,
            Some((p0, v0)) => match it.find(|(_, v)| *v != v0) {
                None => true,
                Some((p1, _)) => {
                    witness.get_or_insert(BaViolation {
                        clause: Clause::Agreement,
                        processes: vec![*p0, *p1],
                    });
                    false
                }
            },
        };
        DecisionReport { outputs, termination_ok, validity_ok, agreement_ok, witness }
    }
}

/// Runs an arbitrary decision function on the view of every non-Byzantine
/// process and judges the outputs.
pub fn check_with<F>(scn: &Scenario, mut decide: F) -> Result<DecisionReport>
where
    F: FnMut(&View) -> Result<Value>,
{
    let mut outputs = BTreeMap::new();
    let honest: Vec<ProcessId> = scn.non_byzantine().collect();
    for &p in &honest {
        outputs.insert(p, decide(&view_of(scn, p)?)?);
    }
    let expected = (!scn.is_byzantine(scn.transmitter())).then(|| scn.initial_value());
    Ok(DecisionReport::judge(outputs, expected, honest.len()))
}

/// [`check_with`] for one of the built-in algorithms. The scenario's round
/// count must match the algorithm.
pub fn check_ba(scn: &Scenario, algorithm: Algorithm) -> Result<DecisionReport> {
    let want = algorithm.rounds(scn.cfg());
    let ok = match algorithm {
        Algorithm::Om => scn.rounds() >= want,
        _ => scn.rounds() == want,
    };
    if !ok {
        return Err(Error::Precondition(format!(
            "{} needs {want} rounds, scenario has {}",
            algorithm.name(),
            scn.rounds()
        )));
    }
    check_with(scn, |v| algorithm.decide(v))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::path::PathTable;

    fn ids(v: &[usize]) -> Vec<ProcessId> {
        v.iter().copied().map(ProcessId).collect()
    }

    #[test]
    fn constant_view_transforms_to_constant() {
        let c = SystemConfig::new(7, 1, 1, 1).unwrap();
        let s = Scenario::constant(c, 3, ProcessId(0), Value::ONE).unwrap();
        let out = view_transform(&view_of(&s, ProcessId(1)).unwrap(), LmKind::ThreeRound).unwrap();
        assert_eq!(out.rounds(), 1);
        assert_eq!(out.value(&ids(&[0])).unwrap(), Value::ONE);
    }

    #[test]
    fn failure_free_transform_keeps_surviving_paths() {
        let c = SystemConfig::new(5, 1, 1, 0).unwrap();
        let s = Scenario::constant(c, 4, ProcessId(2), Value::ZERO).unwrap();
        let st = scenario_transform(&s, LmKind::ThreeRound).unwrap();
        assert_eq!(st.rounds(), 2);
        assert!(st.byz().is_empty() && st.dfaulty().is_empty());
        assert!(st.table().raw().iter().all(|v| *v == Value::ZERO));
        assert_eq!(*st.cfg(), c.without_partial());
    }

    #[test]
    fn om_zero_is_relay() {
        let c = SystemConfig::new(4, 0, 0, 0).unwrap();
        let mut t = PathTable::new(4, 1, ProcessId(0), Value::ZERO).unwrap();
        t.set(&ids(&[0]), Value::ONE).unwrap();
        let v = View::from_table(c, ProcessId(2), 2, t).unwrap();
        assert_eq!(om_decide(&v, 0).unwrap(), Value::ONE);
        assert_eq!(om_decide(&v, 1).unwrap(), Value::ZERO);
        assert!(om_decide(&v, 2).is_err());
    }

    #[test]
    fn om_constant_any_depth() {
        let c = SystemConfig::new(6, 0, 0, 1).unwrap();
        let s = Scenario::constant(c, 3, ProcessId(0), Value::ONE).unwrap();
        let v = view_of(&s, ProcessId(4)).unwrap();
        for b in 0..3 {
            assert_eq!(om_decide(&v, b).unwrap(), Value::ONE);
        }
    }

    #[test]
    fn round_preconditions() {
        let c = SystemConfig::new(7, 1, 1, 1).unwrap();
        let s = Scenario::constant(c, 3, ProcessId(0), Value::ONE).unwrap();
        assert!(check_ba(&s, Algorithm::BaPp).is_err());
        assert!(ba_pp(&view_of(&s, ProcessId(1)).unwrap()).is_err());
        let bad = SystemConfig::new(5, 1, 1, 1).unwrap();
        let s = Scenario::constant(bad, 4, ProcessId(0), Value::ONE).unwrap();
        assert!(ba_pp(&view_of(&s, ProcessId(1)).unwrap()).is_err());
        assert!(view_transform(&view_of(&s, ProcessId(1)).unwrap().truncated(2).unwrap(), LmKind::ThreeRound).is_err());
    }

    #[test]
    fn failure_free_reports_all_true() {
        let c = SystemConfig::new(7, 1, 1, 1).unwrap();
        let s = Scenario::constant(c, 4, ProcessId(0), Value::ZERO).unwrap();
        let r = check_ba(&s, Algorithm::BaPp).unwrap();
        assert!(r.all_ok());
        assert_eq!(r.outputs.len(), 7);
        assert!(r.outputs.values().all(|v| *v == Value::ZERO));

        let c = SystemConfig::new(6, 2, 1, 0).unwrap();
        let s = Scenario::constant(c, 2, ProcessId(3), Value::ONE).unwrap();
        let r = check_ba(&s, Algorithm::BaPpFast).unwrap();
        assert!(r.all_ok());
        assert!(r.outputs.values().all(|v| *v == Value::ONE));
    }

    #[test]
    fn judge_names_violations() {
        let outs: BTreeMap<ProcessId, Value> =
            [(ProcessId(1), Value::ZERO), (ProcessId(2), Value::ONE)].into();
        let r = DecisionReport::judge(outs.clone(), Some(Value::ZERO), 2);
        assert!(!r.validity_ok && !r.agreement_ok && r.termination_ok);
        assert_eq!(r.witness.unwrap().clause, Clause::Validity);
        let r = DecisionReport::judge(outs, None, 2);
        assert!(r.validity_ok);
        assert_eq!(r.witness.unwrap().processes, vec![ProcessId(1), ProcessId(2)]);
    }
}
