//! Scenario generation: seeded random adversaries for fuzzing and the exact
//! lower-bound constructions.

mod random;
mod time_lb;
mod witness;

use std::collections::BTreeSet;

use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::scenario::View;
use crate::value::ProcessId;

pub use random::{random_scenario, random_signed_scenario, ByzStrategy, TamperLog};
pub use time_lb::{alpha_slice, chain_length, time_lb_family, TimeLbCheck, TimeLbStep};
pub use witness::{
    process_bound_pair, link_bound_pair, signed_pair, two_round_lb_pair, SignedWitnessPair, WitnessCheck,
    WitnessFixture, WitnessKind, WitnessPair,
};

/// Disjoint process blocks; the transmitter always sits in block 0.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Partition {
    transmitter: ProcessId,
    blocks: Vec<BTreeSet<ProcessId>>,
}

impl Partition {
    pub fn new(transmitter: ProcessId, blocks: Vec<BTreeSet<ProcessId>>) -> Result<Self> {
        if !blocks.first().is_some_and(|b0| b0.contains(&transmitter)) {
            return Err(Error::Precondition("the transmitter must be in the first block".into()));
        }
        let mut seen = BTreeSet::new();
        for p in blocks.iter().flatten() {
            if !seen.insert(*p) {
                return Err(Error::Precondition(format!("process {p} is in two blocks")));
            }
        }
        Ok(Partition { transmitter, blocks })
    }

    pub fn transmitter(&self) -> ProcessId {
        self.transmitter
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn block(&self, i: usize) -> &BTreeSet<ProcessId> {
        &self.blocks[i]
    }

    pub fn blocks(&self) -> &[BTreeSet<ProcessId>] {
        &self.blocks
    }

    pub fn block_of(&self, p: ProcessId) -> Option<usize> {
        self.blocks.iter().position(|b| b.contains(&p))
    }

    pub(crate) fn check_covers(&self, n: usize) -> Result<()> {
        let total: usize = self.blocks.iter().map(BTreeSet::len).sum();
        let in_range = self.blocks.iter().flatten().all(|p| p.0 < n);
        if total != n || !in_range {
            return Err(Error::Precondition(format!("blocks do not partition {n} processes")));
        }
        Ok(())
    }

    /// A partition for `kind` filled greedily: each block first gets its
    /// required minimum, then blocks are topped up to their caps in order.
    pub fn default_for(kind: WitnessKind, cfg: &SystemConfig, transmitter: ProcessId) -> Result<Self> {
        let SystemConfig { n, m, d, b } = *cfg;
        if transmitter.0 >= n {
            return Err(Error::ProcessOutOfRange { id: transmitter.0, n });
        }
        let caps: Vec<(usize, usize)> = match kind {
            WitnessKind::ProcessBound => vec![(1, m), (1, m), (1, b), (1, b), (1, d)],
            WitnessKind::LinkBound => vec![(1, m), (1, d), (1, d), (1, b), (1, b)],
            WitnessKind::Signed => vec![(1, m), (0, b), (1, d)],
            WitnessKind::TwoRoundLb => {
                vec![(1, 1), (0, m.saturating_sub(1)), (0, m.saturating_sub(1)), (1, d), (1, d)]
            }
            WitnessKind::TimeLb => {
                return Partition::new(transmitter, vec![(0..n).map(ProcessId).collect()]);
            }
        };
        let mut blocks = vec![BTreeSet::new(); caps.len()];
        blocks[0].insert(transmitter);
        let mut rest = (0..n).map(ProcessId).filter(|p| *p != transmitter);
        for (i, &(lo, _)) in caps.iter().enumerate() {
            while blocks[i].len() < lo {
                let p = rest.next().ok_or_else(|| {
                    Error::Precondition(format!("{n} processes cannot fill the {} blocks", kind.name()))
                })?;
                blocks[i].insert(p);
            }
        }
        for (i, &(_, hi)) in caps.iter().enumerate() {
            while blocks[i].len() < hi {
                match rest.next() {
                    Some(p) => {
                        blocks[i].insert(p);
                    }
                    None => break,
                }
            }
        }
        if rest.next().is_some() {
            return Err(Error::Precondition(format!(
                "{cfg:?} has too many processes for the {} blocks",
                kind.name()
            )));
        }
        Partition::new(transmitter, blocks)
    }
}

/// Whether two views of the same shape agree on every path.
pub fn views_equal(a: &View, b: &View) -> Result<bool> {
    if a.rounds() != b.rounds() || a.transmitter() != b.transmitter() || a.cfg().n != b.cfg().n {
        return Err(Error::Precondition(format!(
            "views differ in shape: {} vs {} rounds, transmitters {} and {}",
            a.rounds(),
            b.rounds(),
            a.transmitter(),
            b.transmitter()
        )));
    }
    Ok(a.table().raw() == b.table().raw())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{view_of, Scenario};
    use crate::value::Value;

    #[test]
    fn view_equality() {
        let c = SystemConfig::new(4, 0, 0, 1).unwrap();
        let s = Scenario::constant(c, 2, ProcessId(0), Value::ONE).unwrap();
        let v = view_of(&s, ProcessId(1)).unwrap();
        assert!(views_equal(&v, &v).unwrap());
        let mut t = s.clone();
        t.table_mut().set(&[ProcessId(0), ProcessId(2), ProcessId(1)], Value::ZERO).unwrap();
        assert!(!views_equal(&v, &view_of(&t, ProcessId(1)).unwrap()).unwrap());
        assert!(views_equal(&v, &v.truncated(1).unwrap()).is_err());
    }

    #[test]
    fn default_partitions_exist_exactly_where_bounds_fail() {
        for n in 1..=9 {
            for m in 0..=3 {
                for d in 0..=3 {
                    for b in 0..=3 {
                        let Ok(cfg) = SystemConfig::new(n, m, d, b) else { continue };
                        for kind in [WitnessKind::ProcessBound, WitnessKind::LinkBound, WitnessKind::Signed] {
                            let part = Partition::default_for(kind, &cfg, ProcessId(0));
                            if cfg.resilience_holds() && kind != WitnessKind::Signed {
                                assert!(!kind.applies(&cfg));
                            }
                            if cfg.resilience_holds_signed() && kind == WitnessKind::Signed {
                                assert!(!kind.applies(&cfg));
                            }
                            if kind.applies(&cfg) {
                                assert!(part.is_ok(), "{kind:?} {cfg:?}");
                            }
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn partition_rejects_overlap_and_misplaced_transmitter() {
        let a = BTreeSet::from([ProcessId(0), ProcessId(1)]);
        let b = BTreeSet::from([ProcessId(1)]);
        assert!(Partition::new(ProcessId(0), vec![a, b.clone()]).is_err());
        assert!(Partition::new(ProcessId(0), vec![b]).is_err());
    }
}
