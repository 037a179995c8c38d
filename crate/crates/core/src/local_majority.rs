//! Local-Majority filters.
//!
//! Both filters reconstruct, from the owner's view, what the sender `pi`
//! at the end of a prefix `p0 … pi` actually sent, by counting the copies
//! of its message relayed through other processes. All coordinates are
//! read through the nested-view identity
//! `σ^{p0…pi}_{s·owner}(pi w) = σ_owner(p0 … pi w s)`.

use crate::error::{Error, Result};
use crate::scenario::View;
use crate::value::{ProcessId, Tally, Value};

/// Which filter drives a view transform.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LmKind {
    /// Three-round filter; tolerates `n > max{2m+d, 2d+m, b} + 2b`.
    ThreeRound,
    /// Two-round filter; needs `n ≥ max{2m+2d, b+1} + 2b`.
    TwoRound,
}

impl LmKind {
    /// Rounds of the view consumed by one application.
    pub fn window(self) -> usize {
        match self {
            LmKind::ThreeRound => 3,
            LmKind::TwoRound => 2,
        }
    }
}

fn check_window(v: &View, prefix: &[ProcessId], suffix: &[ProcessId], window: usize) -> Result<()> {
    if prefix.is_empty() || prefix[0] != v.transmitter() {
        return Err(Error::Precondition("prefix must start at the transmitter".into()));
    }
    if let Some(p) = prefix.iter().chain(suffix).find(|p| p.0 >= v.cfg().n) {
        return Err(Error::ProcessOutOfRange { id: p.0, n: v.cfg().n });
    }
    // prefix holds i+1 labels; the deepest coordinate read is
    // p0 … pi · (window − 1 labels) · s.
    if prefix.len() + window - 1 + suffix.len() > v.rounds() {
        return Err(Error::Precondition(format!(
            "prefix of {} labels with suffix of {} does not fit a {}-round view",
            prefix.len(),
            suffix.len(),
            v.rounds()
        )));
    }
    Ok(())
}

/// Three-round Local-Majority over the nested sub-view
/// `σ^{prefix}_{suffix·owner}`.
///
/// For every `a ≠ pi`, a value held by at least `n − m − b − 1` of the
/// `n − 1` relays `σ_owner(prefix · a · c · suffix)` (`c ≠ a`) is added to
/// `S`. If two values reach the threshold for the same `a` (only possible
/// outside the resilience bound) nothing is added for that `a`. The output
/// is the strict-majority value of `S`, or `⊥`.
pub fn lm3(v: &View, prefix: &[ProcessId], suffix: &[ProcessId]) -> Result<Value> {
    check_window(v, prefix, suffix, 3)?;
    Ok(lm3_tail(v, &prefix[1..], suffix, &mut Vec::new()))
}

pub(crate) fn lm3_tail(
    v: &View,
    prefix_tail: &[ProcessId],
    suffix: &[ProcessId],
    buf: &mut Vec<ProcessId>,
) -> Value {
    let cfg = v.cfg();
    let n = cfg.n;
    let sender = prefix_tail.last().copied().unwrap_or(v.transmitter());
    let threshold = (n - 1).saturating_sub(cfg.m + cfg.b);
    let base = prefix_tail.len();
    buf.clear();
    buf.extend_from_slice(prefix_tail);
    buf.push(ProcessId(0));
    buf.push(ProcessId(0));
    buf.extend_from_slice(suffix);

    let mut s = Tally::new();
    for a in (0..n).filter(|&a| a != sender.0) {
        buf[base] = ProcessId(a);
        let mut relays = Tally::new();
        for c in (0..n).filter(|&c| c != a) {
            buf[base + 1] = ProcessId(c);
            relays.add(v.get_tail(buf));
        }
        if threshold == 0 {
            continue;
        }
        let qualified = relays.at_least(threshold);
        debug_assert!(
            qualified.len() <= 1 || !cfg.resilience_holds(),
            "two values reached the LM3 threshold inside the resilience bound"
        );
        if let [only] = qualified.as_slice() {
            s.add(*only);
        }
    }
    s.strict_majority().unwrap_or(Value::BOT)
}

/// Two-round Local-Majority: the value held by strictly more than half of
/// the `n − 1` entries `σ_owner(prefix · a · suffix)` with `a ≠ pi`, else `⊥`.
pub fn lm2(v: &View, prefix: &[ProcessId], suffix: &[ProcessId]) -> Result<Value> {
    check_window(v, prefix, suffix, 2)?;
    Ok(lm2_tail(v, &prefix[1..], suffix, &mut Vec::new()))
}

pub(crate) fn lm2_tail(
    v: &View,
    prefix_tail: &[ProcessId],
    suffix: &[ProcessId],
    buf: &mut Vec<ProcessId>,
) -> Value {
    let n = v.cfg().n;
    let sender = prefix_tail.last().copied().unwrap_or(v.transmitter());
    let base = prefix_tail.len();
    buf.clear();
    buf.extend_from_slice(prefix_tail);
    buf.push(ProcessId(0));
    buf.extend_from_slice(suffix);
    let mut t = Tally::new();
    for a in (0..n).filter(|&a| a != sender.0) {
        buf[base] = ProcessId(a);
        t.add(v.get_tail(buf));
    }
    t.strict_majority().unwrap_or(Value::BOT)
}

/// Dispatches on the filter kind (tail-based, no checks).
pub(crate) fn apply_tail(
    kind: LmKind,
    v: &View,
    prefix_tail: &[ProcessId],
    suffix: &[ProcessId],
    buf: &mut Vec<ProcessId>,
) -> Value {
    match kind {
        LmKind::ThreeRound => lm3_tail(v, prefix_tail, suffix, buf),
        LmKind::TwoRound => lm2_tail(v, prefix_tail, suffix, buf),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::SystemConfig;
    use crate::path::PathTable;
    use crate::scenario::{view_of, Scenario};

    fn ids(v: &[usize]) -> Vec<ProcessId> {
        v.iter().copied().map(ProcessId).collect()
    }

    #[test]
    fn constant_view_passes_through() {
        let c = SystemConfig::new(7, 1, 1, 1).unwrap();
        let s = Scenario::constant(c, 4, ProcessId(0), Value::ONE).unwrap();
        let v = view_of(&s, ProcessId(2)).unwrap();
        assert_eq!(lm3(&v, &ids(&[0]), &[]).unwrap(), Value::ONE);
        assert_eq!(lm3(&v, &ids(&[0, 4]), &[]).unwrap(), Value::ONE);
        assert_eq!(lm3(&v, &ids(&[0]), &ids(&[5])).unwrap(), Value::ONE);
        assert_eq!(lm2(&v, &ids(&[0, 3]), &ids(&[1])).unwrap(), Value::ONE);
    }

    #[test]
    fn window_preconditions() {
        let c = SystemConfig::new(7, 1, 1, 1).unwrap();
        let s = Scenario::constant(c, 3, ProcessId(0), Value::ONE).unwrap();
        let v = view_of(&s, ProcessId(2)).unwrap();
        assert!(lm3(&v, &ids(&[0]), &ids(&[1])).is_err());
        assert!(lm3(&v, &ids(&[0, 1]), &[]).is_err());
        assert!(lm3(&v, &ids(&[1]), &[]).is_err());
        assert!(lm2(&v, &ids(&[0, 1]), &[]).is_ok());
        assert!(lm2(&v, &ids(&[0]), &ids(&[1])).is_ok());
        assert!(lm2(&v, &ids(&[0, 1, 2]), &[]).is_err());
    }

    #[test]
    fn lm2_tie_is_bot() {
        // n = 5: four entries split 2/2.
        let c = SystemConfig::new(5, 0, 0, 1).unwrap();
        let mut table = PathTable::new(5, 1, ProcessId(0), Value::ZERO).unwrap();
        table.set(&ids(&[0, 1]), Value::ONE).unwrap();
        table.set(&ids(&[0, 2]), Value::ONE).unwrap();
        let v = View::from_table(c, ProcessId(4), 2, table).unwrap();
        assert_eq!(lm2(&v, &ids(&[0]), &[]).unwrap(), Value::BOT);
    }

    #[test]
    fn lm3_empty_support_is_bot() {
        // Relay sets are spread over three values, so none reaches n − m − b − 1 = 4.
        let c = SystemConfig::new(7, 1, 1, 1).unwrap();
        let mut table = PathTable::new(7, 2, ProcessId(0), Value::ZERO).unwrap();
        for a in 0..7 {
            for x in 0..7 {
                table.set(&ids(&[0, a, x]), crate::value::DEFAULT_DOMAIN[x % 3]).unwrap();
            }
        }
        let v = View::from_table(c, ProcessId(3), 3, table).unwrap();
        assert_eq!(lm3(&v, &ids(&[0]), &[]).unwrap(), Value::BOT);
    }
}
