//! The chain of views showing that `b + 1` rounds never suffice once
//! partial failures are present.
//!
//! Views are compared on their final round only: a full-information
//! algorithm's decision depends on nothing else.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::path::PathTable;
use crate::scenario::{validate_scenario, view_of, RoundSlice, Scenario};
use crate::value::{ProcessId, Value};

use super::witness::WitnessKind;

/// `n^(b+1)`, the number of final-round entries of a `(b+1)`-round view.
pub fn chain_length(cfg: &SystemConfig) -> Result<u64> {
    (cfg.n as u64)
        .checked_pow(cfg.b as u32 + 1)
        .ok_or(Error::TooLarge { n: cfg.n, depth: cfg.b + 1, limit: u64::MAX })
}

/// The threshold view `alpha_x`: entry `w` is 0 when the radix-`n` number
/// spelled by `w` (transmitter first) is below `x`, else 1.
pub fn alpha_slice(cfg: &SystemConfig, transmitter: ProcessId, x: u64) -> Result<RoundSlice> {
    let n = cfg.n as u64;
    let count = chain_length(cfg)? / n;
    if count > crate::path::MAX_LEAVES {
        return Err(Error::TooLarge { n: cfg.n, depth: cfg.b, limit: crate::path::MAX_LEAVES });
    }
    let base = transmitter.0 as u64 * count;
    let values = (0..count)
        .map(|c| if base + c < x { Value::ZERO } else { Value::ONE })
        .collect();
    Ok(RoundSlice { transmitter, rounds: cfg.b + 1, values })
}

/// One link of the chain: a single admissible `(b+1)`-round scenario in
/// which one observer sees `alpha_x` and another sees `alpha_(x+1)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TimeLbStep {
    pub x: u64,
    pub alpha_x: RoundSlice,
    pub alpha_next: RoundSlice,
    pub link: Scenario,
    /// Non-Byzantine processes whose views are `alpha_x` and `alpha_(x+1)`.
    pub observers: (ProcessId, ProcessId),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimeLbCheck {
    pub x: u64,
    pub link_admissible: bool,
    pub first_view_matches: bool,
    pub second_view_matches: bool,
}

impl TimeLbCheck {
    pub fn passed(&self) -> bool {
        self.link_admissible && self.first_view_matches && self.second_view_matches
    }
}

impl TimeLbStep {
    pub fn check(&self) -> Result<TimeLbCheck> {
        let (a, b) = self.observers;
        let byz = self.link.byz();
        Ok(TimeLbCheck {
            x: self.x,
            link_admissible: validate_scenario(&self.link).admissible && !byz.contains(&a) && !byz.contains(&b),
            first_view_matches: view_of(&self.link, a)?.final_round() == self.alpha_x,
            second_view_matches: view_of(&self.link, b)?.final_round() == self.alpha_next,
        })
    }
}

fn digits(x: u64, n: usize, len: usize) -> Vec<usize> {
    let mut out = vec![0; len];
    let mut r = x;
    for slot in out.iter_mut().rev() {
        *slot = (r % n as u64) as usize;
        r /= n as u64;
    }
    out
}

/// Builds the link between `alpha_x` and `alpha_(x+1)` for
/// `0 ≤ x ≤ n^(b+1)`.
///
/// Write `x = q0 q1 … qb` in radix `n` and let the observers be the two
/// largest processes outside `{q0, …, qb}`. If the transmitter is not `q0`
/// the link is a constant failure-free scenario. Otherwise a path is 0
/// exactly when it first leaves the string `q0 … qb · observer1` with a
/// smaller label. When the `qi` are `b + 1` distinct processes, `qb`
/// additionally lies to the second observer only and becomes d-faulty,
/// the others Byzantine.
pub fn time_lb_family(cfg: &SystemConfig, transmitter: ProcessId, x: u64) -> Result<TimeLbStep> {
    cfg.check()?;
    if !WitnessKind::TimeLb.applies(cfg) {
        return Err(Error::Precondition(format!("time bound chain needs m, d > 0 and n > b + 3, got {cfg:?}")));
    }
    if transmitter.0 >= cfg.n {
        return Err(Error::ProcessOutOfRange { id: transmitter.0, n: cfg.n });
    }
    let top = chain_length(cfg)?;
    if x > top {
        return Err(Error::Precondition(format!("x = {x} exceeds n^(b+1) = {top}")));
    }
    let n = cfg.n;
    let b = cfg.b;
    let k = b + 1;
    let alpha_x = alpha_slice(cfg, transmitter, x)?;
    let alpha_next = alpha_slice(cfg, transmitter, x + 1)?;

    if x == top {
        let link = Scenario::constant(*cfg, k, transmitter, Value::ZERO)?;
        return Ok(TimeLbStep { x, alpha_x, alpha_next, link, observers: (ProcessId(n - 1), ProcessId(n - 2)) });
    }

    let q = digits(x, n, b + 1);
    let used: BTreeSet<usize> = q.iter().copied().collect();
    let mut free = (0..n).rev().filter(|p| !used.contains(p));
    let hi = free.next().expect("n > b + 3");
    let lo = free.next().expect("n > b + 3");
    let observers = (ProcessId(hi), ProcessId(lo));

    if transmitter.0 != q[0] {
        let v = if transmitter.0 < q[0] { Value::ZERO } else { Value::ONE };
        let link = Scenario::constant(*cfg, k, transmitter, v)?;
        return Ok(TimeLbStep { x, alpha_x, alpha_next, link, observers });
    }

    let mut target = q.clone();
    target.push(hi);
    let mut table = PathTable::new(n, k, transmitter, Value::ONE)?;
    let space = table.space().clone();
    let mut tail = Vec::new();
    for idx in 0..space.size() {
        space.decode_into(idx, &mut tail);
        let dev = tail.iter().enumerate().find(|(i, p)| p.0 != target[i + 1]);
        if let Some((i, p)) = dev {
            if p.0 < target[i + 1] {
                table.raw_mut()[idx] = Value::ZERO;
            }
        }
    }
    let (byz, dfaulty): (BTreeSet<ProcessId>, BTreeSet<ProcessId>) = if used.len() <= b {
        (used.iter().copied().map(ProcessId).collect(), BTreeSet::new())
    } else {
        let mut path: Vec<ProcessId> = q.iter().copied().map(ProcessId).collect();
        path.push(ProcessId(0));
        for r in (0..hi).filter(|&r| r != lo) {
            path[b + 1] = ProcessId(r);
            table.set(&path, Value::ONE)?;
        }
        (
            q[..b].iter().copied().map(ProcessId).collect(),
            BTreeSet::from([ProcessId(q[b])]),
        )
    };
    let link = Scenario::new(*cfg, k, table, byz, dfaulty)?;
    Ok(TimeLbStep { x, alpha_x, alpha_next, link, observers })
}
