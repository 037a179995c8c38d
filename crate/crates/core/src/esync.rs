//! Eventually-synchronous reliable broadcast for a static `(n, m, d, b)`
//! system.
//!
//! Message contents come from a static scenario (fixed d-faulty links,
//! fixed Byzantine behaviour); a delivery schedule only decides when each
//! message arrives. Every process relays a path as soon as it receives it,
//! and a decider fires as soon as its threshold is met.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap, HashMap};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::path::PathTable;
use crate::scenario::{validate_scenario, Scenario};
use crate::value::{ProcessId, Tally, Value, DEFAULT_DOMAIN};

/// Fault sets that stay fixed for the whole run.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StaticFaultConfig {
    pub byz: BTreeSet<ProcessId>,
    pub dfaulty: BTreeSet<ProcessId>,
    /// For each d-faulty process, the receivers it always lies to.
    pub fixed_links: BTreeMap<ProcessId, BTreeSet<ProcessId>>,
}

impl StaticFaultConfig {
    pub fn check(&self, cfg: &SystemConfig) -> Result<()> {
        let in_range = |p: &ProcessId| p.0 < cfg.n;
        let all_in_range = self.byz.iter().all(in_range)
            && self.dfaulty.iter().all(in_range)
            && self.fixed_links.iter().all(|(p, l)| in_range(p) && l.iter().all(in_range));
        if !all_in_range {
            return Err(Error::InvalidConfig("fault sets name processes outside 0..n".into()));
        }
        if self.byz.len() > cfg.b || self.dfaulty.len() > cfg.m || !self.byz.is_disjoint(&self.dfaulty) {
            return Err(Error::InvalidConfig(format!(
                "fault sets of sizes {} and {} do not fit {cfg:?}",
                self.byz.len(),
                self.dfaulty.len()
            )));
        }
        for (p, links) in &self.fixed_links {
            if !self.dfaulty.contains(p) || links.len() > cfg.d {
                return Err(Error::InvalidConfig(format!("link set of {p} is invalid")));
            }
        }
        Ok(())
    }

    /// Exactly `b` Byzantine and `m` d-faulty processes with `d` fixed
    /// victims each. The transmitter is never Byzantine here, but may be
    /// d-faulty.
    pub fn random(cfg: &SystemConfig, transmitter: ProcessId, seed: u64) -> Result<Self> {
        cfg.check()?;
        let n = cfg.n;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut others: Vec<ProcessId> = (0..n).map(ProcessId).filter(|p| *p != transmitter).collect();
        others.shuffle(&mut rng);
        if cfg.b > others.len() {
            return Err(Error::InvalidConfig("no room for a non-Byzantine transmitter".into()));
        }
        let byz: BTreeSet<ProcessId> = others.drain(..cfg.b).collect();
        let mut pool = others;
        if cfg.m > 0 && rng.gen_bool(0.5) {
            pool.push(transmitter);
            pool.shuffle(&mut rng);
        }
        let dfaulty: BTreeSet<ProcessId> = pool.into_iter().take(cfg.m).collect();
        let everyone: Vec<ProcessId> = (0..n).map(ProcessId).collect();
        let fixed_links = dfaulty
            .iter()
            .map(|p| (*p, everyone.choose_multiple(&mut rng, cfg.d).copied().collect()))
            .collect();
        let f = StaticFaultConfig { byz, dfaulty, fixed_links };
        f.check(cfg)?;
        Ok(f)
    }

    fn lies(&self, sender: ProcessId, receiver: ProcessId) -> bool {
        self.fixed_links.get(&sender).is_some_and(|l| l.contains(&receiver))
    }
}

/// A static scenario: d-faulty processes lie on their fixed links in every
/// round, Byzantine processes send seeded arbitrary values, everyone else
/// relays faithfully.
pub fn static_scenario(
    cfg: &SystemConfig,
    faults: &StaticFaultConfig,
    transmitter: ProcessId,
    tx_value: Value,
    rounds: usize,
    seed: u64,
) -> Result<Scenario> {
    faults.check(cfg)?;
    let n = cfg.n;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_57a7_1c00_0000);
    let flip_only = rng.gen_bool(0.5);
    let lie = |held: Value, rng: &mut ChaCha8Rng| {
        if flip_only {
            held.flipped()
        } else {
            *DEFAULT_DOMAIN.choose(rng).expect("nonempty")
        }
    };
    let mut table = PathTable::new(n, rounds, transmitter, tx_value)?;
    let space = table.space().clone();
    for len in 0..rounds {
        for code in 0..space.count(len) {
            let parent = space.offset(len) + code;
            let sender = ProcessId(if len == 0 { transmitter.0 } else { code % n });
            let held = table.raw()[parent];
            let first = space.offset(len + 1) + code * n;
            for q in 0..n {
                let v = if faults.byz.contains(&sender) || faults.lies(sender, ProcessId(q)) {
                    lie(held, &mut rng)
                } else {
                    held
                };
                table.raw_mut()[first + q] = v;
            }
        }
    }
    let scn = Scenario::new(*cfg, rounds, table, faults.byz.clone(), faults.dfaulty.clone())?;
    debug_assert!(validate_scenario(&scn).admissible);
    Ok(scn)
}

/// Per-link delays before global stabilization time.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeliverySchedule {
    pub gst: u64,
    pub delays: Vec<LinkDelay>,
}

/// Delay of every message `from → to` sent in `round`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinkDelay {
    pub from: ProcessId,
    pub to: ProcessId,
    pub round: usize,
    pub delay: u64,
}

impl DeliverySchedule {
    /// Delay 1 everywhere, synchronous from the start.
    pub fn synchronous() -> Self {
        DeliverySchedule { gst: 0, delays: Vec::new() }
    }

    /// Every message arrives at the instant it is sent.
    pub fn zero_delay(n: usize, rounds: usize) -> Self {
        let delays = (0..n)
            .flat_map(|f| (0..n).flat_map(move |t| (1..=rounds).map(move |r| (f, t, r))))
            .map(|(f, t, r)| LinkDelay { from: ProcessId(f), to: ProcessId(t), round: r, delay: 0 })
            .collect();
        DeliverySchedule { gst: u64::MAX, delays }
    }

    /// A hostile schedule: traffic from faulty senders and on lying links
    /// is fast, honest traffic is slowed down until a seeded GST.
    pub fn adversarial(cfg: &SystemConfig, faults: &StaticFaultConfig, rounds: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let gst = rng.gen_range(2..=30);
        let mut delays = Vec::new();
        for f in (0..cfg.n).map(ProcessId) {
            for t in (0..cfg.n).map(ProcessId) {
                for round in 1..=rounds {
                    let hostile = faults.byz.contains(&f) || faults.lies(f, t);
                    let delay = if hostile { 0 } else { rng.gen_range(1..=gst + 10) };
                    delays.push(LinkDelay { from: f, to: t, round, delay });
                }
            }
        }
        DeliverySchedule { gst, delays }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("schedule serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    fn lookup(&self) -> HashMap<(usize, usize, usize), u64> {
        self.delays.iter().map(|l| ((l.from.0, l.to.0, l.round), l.delay)).collect()
    }
}

/// Delivery time of a message sent at `sent`: its scheduled delay, but
/// never later than one tick after GST.
fn delivery_time(sent: u64, delay: u64, gst: u64) -> u64 {
    sent.saturating_add(delay).min(sent.max(gst).saturating_add(1))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Primitive {
    /// Two-round broadcast; needs `n ≥ 2m + 2d + 2b`, with `d` counted as
    /// at least 1.
    Rb2,
    /// Three-round broadcast; needs `n > max{2m+d, 2d+m, b} + 2b`.
    Rb3,
}

impl Primitive {
    pub fn rounds(self) -> usize {
        match self {
            Primitive::Rb2 => 2,
            Primitive::Rb3 => 3,
        }
    }

    pub fn supports(self, cfg: &SystemConfig) -> bool {
        match self {
            Primitive::Rb2 => cfg.n >= 2 * (cfg.m + cfg.d.max(1) + cfg.b),
            Primitive::Rb3 => cfg.resilience_holds(),
        }
    }

    pub fn parse(s: &str) -> Option<Primitive> {
        match s {
            "rb2" => Some(Primitive::Rb2),
            "rb3" => Some(Primitive::Rb3),
            _ => None,
        }
    }
}

/// Truthful relays a non-Byzantine transmitter can count on, excluding
/// itself: `n − m − b − d` when it is d-faulty, `n − 1 − m − b` when it is
/// correct. For `d ≥ 1` this is the usual `n − m − d − b`.
fn guaranteed_relays(cfg: &SystemConfig) -> usize {
    cfg.n.saturating_sub(cfg.m + cfg.b + cfg.d.max(1)).max(1)
}

/// Decider of the two-round broadcast at one process. Fed the round-two
/// entries `σ_p(p0 p1)` as they arrive; fires once `n − m − d − b` of them
/// agree (`n − m − b − 1` when `d = 0`).
#[derive(Clone, Debug)]
pub struct Rb2Decider {
    threshold: usize,
    seen: BTreeSet<ProcessId>,
    tally: Tally,
    decision: Option<Value>,
}

impl Rb2Decider {
    pub fn new(cfg: &SystemConfig) -> Self {
        Rb2Decider {
            threshold: guaranteed_relays(cfg),
            seen: BTreeSet::new(),
            tally: Tally::new(),
            decision: None,
        }
    }

    /// Records the entry relayed by `relay`; duplicates are ignored.
    pub fn receive(&mut self, relay: ProcessId, v: Value) -> Option<Value> {
        if self.decision.is_none() && self.seen.insert(relay) {
            self.tally.add(v);
            if let Some(&w) = self.tally.at_least(self.threshold).first() {
                self.decision = Some(w);
            }
        }
        self.decision
    }

    pub fn decision(&self) -> Option<Value> {
        self.decision
    }
}

/// Decider of the three-round broadcast at one process. For each first
/// relay `p1`, once `n − m − b − 1` third-hop entries `σ_p(p0 p1 p2)` agree
/// their value joins `S`; the process decides once `n − m − d − b`
/// members of `S` agree (`n − m − b − 1` when `d = 0`).
#[derive(Clone, Debug)]
pub struct Rb3Decider {
    relay_threshold: usize,
    decide_threshold: usize,
    per_relay: BTreeMap<ProcessId, (BTreeSet<ProcessId>, Tally)>,
    settled: BTreeSet<ProcessId>,
    s: Tally,
    decision: Option<Value>,
}

impl Rb3Decider {
    pub fn new(cfg: &SystemConfig) -> Self {
        Rb3Decider {
            relay_threshold: (cfg.n - 1).saturating_sub(cfg.m + cfg.b).max(1),
            decide_threshold: guaranteed_relays(cfg),
            per_relay: BTreeMap::new(),
            settled: BTreeSet::new(),
            s: Tally::new(),
            decision: None,
        }
    }

    /// Records `σ_p(p0 p1 p2) = v`.
    pub fn receive(&mut self, p1: ProcessId, p2: ProcessId, v: Value) -> Option<Value> {
        if self.decision.is_some() || self.settled.contains(&p1) {
            return self.decision;
        }
        let (seen, tally) = self.per_relay.entry(p1).or_insert_with(|| (BTreeSet::new(), Tally::new()));
        if !seen.insert(p2) {
            return self.decision;
        }
        tally.add(v);
        if let Some(&w) = tally.at_least(self.relay_threshold).first() {
            self.settled.insert(p1);
            self.s.add(w);
            if let Some(&x) = self.s.at_least(self.decide_threshold).first() {
                self.decision = Some(x);
            }
        }
        self.decision
    }

    pub fn decision(&self) -> Option<Value> {
        self.decision
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum RbOutcome {
    Decided { value: Value, time: u64 },
    Undecided,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RbReport {
    pub primitive: Primitive,
    pub horizon: u64,
    pub outcomes: BTreeMap<ProcessId, RbOutcome>,
    pub delivered: usize,
}

impl RbReport {
    pub fn decided_values(&self) -> BTreeMap<ProcessId, Option<Value>> {
        self.outcomes
            .iter()
            .map(|(p, o)| {
                let v = match o {
                    RbOutcome::Decided { value, .. } => Some(*value),
                    RbOutcome::Undecided => None,
                };
                (*p, v)
            })
            .collect()
    }

    /// Every listed process decided `v`.
    pub fn all_decided(&self, v: Value) -> bool {
        self.outcomes.values().all(|o| matches!(o, RbOutcome::Decided { value, .. } if *value == v))
    }
}

enum Decider {
    Two(Rb2Decider),
    Three(Rb3Decider),
}

/// Runs one broadcast from `transmitter` over a static scenario. Outcomes
/// are recorded for non-Byzantine processes only.
pub fn simulate_esync(
    scn: &Scenario,
    schedule: &DeliverySchedule,
    primitive: Primitive,
    horizon: u64,
) -> Result<RbReport> {
    let cfg = scn.cfg();
    if !primitive.supports(cfg) {
        return Err(Error::Precondition(format!("{primitive:?} is not guaranteed for {cfg:?}")));
    }
    let rounds = primitive.rounds();
    if scn.rounds() < rounds {
        return Err(Error::Precondition(format!(
            "{primitive:?} needs a {rounds}-round scenario, got {}",
            scn.rounds()
        )));
    }
    let n = cfg.n;
    let tx = scn.transmitter();
    let delays = schedule.lookup();
    let space = scn.table().space().clone();
    let mut deciders: Vec<Decider> = (0..n)
        .map(|_| match primitive {
            Primitive::Rb2 => Decider::Two(Rb2Decider::new(cfg)),
            Primitive::Rb3 => Decider::Three(Rb3Decider::new(cfg)),
        })
        .collect();
    let mut decided_at: Vec<Option<(Value, u64)>> = vec![None; n];

    // Events are (time, sequence, table index of the delivered path).
    let mut queue: BinaryHeap<Reverse<(u64, u64, usize)>> = BinaryHeap::new();
    let mut seq = 0u64;
    let mut send = |queue: &mut BinaryHeap<Reverse<(u64, u64, usize)>>, parent_code: usize, len: usize, sender: usize, now: u64| {
        // `len` is the parent's tail length; children are sent in round len + 1.
        let round = len + 1;
        for q in 0..n {
            let delay = delays.get(&(sender, q, round)).copied().unwrap_or(1);
            let at = delivery_time(now, delay, schedule.gst);
            let idx = space.offset(len + 1) + parent_code * n + q;
            queue.push(Reverse((at, seq, idx)));
            seq += 1;
        }
    };
    send(&mut queue, 0, 0, tx.0, 0);

    let mut delivered = 0usize;
    let mut tail = Vec::new();
    while let Some(Reverse((time, _, idx))) = queue.pop() {
        if time > horizon {
            break;
        }
        delivered += 1;
        space.decode_into(idx, &mut tail);
        let len = tail.len();
        let receiver = *tail.last().expect("delivered paths have a receiver");
        let v = scn.table().raw()[idx];
        // Only relays other than the transmitter count, and in the third
        // hop only second relays other than the first.
        let decision = match (&mut deciders[receiver.0], len) {
            (Decider::Two(d), 2) if tail[0] != tx => d.receive(tail[0], v),
            (Decider::Three(d), 3) if tail[0] != tx && tail[1] != tail[0] => d.receive(tail[0], tail[1], v),
            (Decider::Two(d), _) => d.decision(),
            (Decider::Three(d), _) => d.decision(),
        };
        if let (Some(v), None) = (decision, decided_at[receiver.0]) {
            decided_at[receiver.0] = Some((v, time));
        }
        if len < rounds {
            let code = idx - space.offset(len);
            send(&mut queue, code, len, receiver.0, time);
        }
    }

    let outcomes = scn
        .non_byzantine()
        .map(|p| {
            let o = match decided_at[p.0] {
                Some((value, time)) => RbOutcome::Decided { value, time },
                None => RbOutcome::Undecided,
            };
            (p, o)
        })
        .collect();
    Ok(RbReport { primitive, horizon, outcomes, delivered })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::local_majority::{lm2, lm3};
    use crate::scenario::view_of;

    fn cfg(n: usize, m: usize, d: usize, b: usize) -> SystemConfig {
        SystemConfig::new(n, m, d, b).unwrap()
    }

    #[test]
    fn failure_free_decides_quickly() {
        for (c, prim) in [(cfg(6, 1, 1, 1), Primitive::Rb2), (cfg(7, 1, 1, 1), Primitive::Rb3)] {
            let scn = static_scenario(&c, &StaticFaultConfig::default(), ProcessId(0), Value::ONE, 3, 0).unwrap();
            let r = simulate_esync(&scn, &DeliverySchedule::synchronous(), prim, 100).unwrap();
            assert!(r.all_decided(Value::ONE), "{r:?}");
            for o in r.outcomes.values() {
                assert_eq!(*o, RbOutcome::Decided { value: Value::ONE, time: prim.rounds() as u64 });
            }
        }
    }

    #[test]
    fn failure_free_thresholds_are_reachable() {
        let c = cfg(6, 0, 0, 0);
        let mut d = Rb2Decider::new(&c);
        for p in 1..5 {
            assert_eq!(d.receive(ProcessId(p), Value::ONE), None);
        }
        assert_eq!(d.receive(ProcessId(5), Value::ONE), Some(Value::ONE));
        for prim in [Primitive::Rb2, Primitive::Rb3] {
            let scn = static_scenario(&c, &StaticFaultConfig::default(), ProcessId(0), Value::ONE, 3, 0).unwrap();
            let r = simulate_esync(&scn, &DeliverySchedule::synchronous(), prim, 100).unwrap();
            assert!(r.all_decided(Value::ONE), "{prim:?} {r:?}");
        }
    }

    #[test]
    fn rb2_threshold_counts() {
        let c = cfg(6, 1, 1, 1);
        let mut d = Rb2Decider::new(&c);
        for p in 1..3 {
            assert_eq!(d.receive(ProcessId(p), Value::ZERO), None);
        }
        assert_eq!(d.receive(ProcessId(3), Value::ZERO), Some(Value::ZERO));
        assert_eq!(d.receive(ProcessId(4), Value::ONE), Some(Value::ZERO));
    }

    #[test]
    fn rb3_ignores_duplicates() {
        let c = cfg(7, 1, 1, 1);
        let mut d = Rb3Decider::new(&c);
        for _ in 0..10 {
            assert_eq!(d.receive(ProcessId(1), ProcessId(2), Value::ZERO), None);
        }
        assert!(d.decision().is_none());
    }

    #[test]
    fn delivery_bounded_after_gst() {
        assert_eq!(delivery_time(0, 100, 5), 6);
        assert_eq!(delivery_time(10, 100, 5), 11);
        assert_eq!(delivery_time(0, 0, 5), 0);
        assert_eq!(delivery_time(3, 2, 5), 5);
    }

    #[test]
    fn zero_delay_matches_synchronous_filters() {
        for seed in 0..40 {
            let c = cfg(8, 1, 1, 1);
            let f = StaticFaultConfig::random(&c, ProcessId(0), seed).unwrap();
            let scn = static_scenario(&c, &f, ProcessId(0), Value::ZERO, 3, seed).unwrap();
            let r = simulate_esync(&scn, &DeliverySchedule::zero_delay(8, 2), Primitive::Rb2, 10).unwrap();
            for (p, v) in r.decided_values() {
                let sync = lm2(&view_of(&scn, p).unwrap(), &[ProcessId(0)], &[]).unwrap();
                assert_eq!(v, Some(sync));
            }
            let c = cfg(7, 1, 1, 1);
            let f = StaticFaultConfig::random(&c, ProcessId(0), seed).unwrap();
            let scn = static_scenario(&c, &f, ProcessId(0), Value::ONE, 3, seed).unwrap();
            let r = simulate_esync(&scn, &DeliverySchedule::zero_delay(7, 3), Primitive::Rb3, 10).unwrap();
            for (p, v) in r.decided_values() {
                let sync = lm3(&view_of(&scn, p).unwrap(), &[ProcessId(0)], &[]).unwrap();
                assert_eq!(v, Some(sync));
            }
        }
    }

    #[test]
    fn schedule_json_round_trip() {
        let c = cfg(7, 1, 1, 1);
        let f = StaticFaultConfig::random(&c, ProcessId(2), 9).unwrap();
        let s = DeliverySchedule::adversarial(&c, &f, 3, 4);
        assert_eq!(DeliverySchedule::from_json(&s.to_json()).unwrap(), s);
    }
}
