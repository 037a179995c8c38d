//! Browser bindings. Every export takes plain numbers and strings and
//! returns a JSON string; errors become JS exceptions carrying the message.

use std::collections::BTreeMap;

use partial_ba::harness::{self, Target};
use partial_ba::{
    check_ba, check_sba, random_scenario, random_signed_scenario, ByzStrategy, ProcessId,
    SystemConfig, WitnessKind,
};
use serde::Serialize;
use wasm_bindgen::prelude::*;

#[derive(Serialize)]
struct AgreementRun {
    algorithm: &'static str,
    rounds: usize,
    transmitter: usize,
    initial_value: String,
    byzantine: Vec<usize>,
    d_faulty: Vec<usize>,
    /// What each process heard from the transmitter in the first round.
    first_round: BTreeMap<usize, String>,
    outputs: BTreeMap<usize, String>,
    termination: bool,
    validity: bool,
    agreement: bool,
}

fn config(n: usize, m: usize, d: usize, b: usize) -> Result<SystemConfig, String> {
    SystemConfig::new(n, m, d, b).map_err(|e| e.to_string())
}

fn to_json<T: Serialize>(v: &T) -> Result<String, String> {
    serde_json::to_string(v).map_err(|e| e.to_string())
}

pub fn check_json(n: usize, m: usize, d: usize, b: usize) -> Result<String, String> {
    to_json(&harness::check(&config(n, m, d, b)?))
}

pub fn agreement_json(
    n: usize,
    m: usize,
    d: usize,
    b: usize,
    algorithm: &str,
    strategy: &str,
    seed: u64,
) -> Result<String, String> {
    let cfg = config(n, m, d, b)?;
    let target = Target::parse(algorithm).ok_or_else(|| format!("unknown algorithm {algorithm:?}"))?;
    let strategy: ByzStrategy = strategy.parse().map_err(|e: partial_ba::Error| e.to_string())?;
    let k = target.rounds(&cfg);
    target.check(&cfg, k).map_err(|e| e.to_string())?;
    let tx = ProcessId((seed % n as u64) as usize);
    let (scn, report) = if target == Target::SbaPp {
        let (s, _) = random_signed_scenario(&cfg, k, tx, strategy, seed).map_err(|e| e.to_string())?;
        let r = check_sba(&s).map_err(|e| e.to_string())?;
        (s.scenario().clone(), r.decision)
    } else {
        let alg = match target {
            Target::BaPp => partial_ba::Algorithm::BaPp,
            Target::BaPpFast => partial_ba::Algorithm::BaPpFast,
            _ => partial_ba::Algorithm::Om,
        };
        let s = random_scenario(&cfg, k, tx, strategy, seed).map_err(|e| e.to_string())?;
        let r = check_ba(&s, alg).map_err(|e| e.to_string())?;
        (s, r)
    };
    let first_round = (0..n)
        .map(|q| {
            let v = scn.value(&[tx, ProcessId(q)]).map_err(|e| e.to_string())?;
            Ok((q, v.to_string()))
        })
        .collect::<Result<_, String>>()?;
    to_json(&AgreementRun {
        algorithm: target.name(),
        rounds: k,
        transmitter: tx.0,
        initial_value: scn.initial_value().to_string(),
        byzantine: scn.byz().iter().map(|p| p.0).collect(),
        d_faulty: scn.dfaulty().iter().map(|p| p.0).collect(),
        first_round,
        outputs: report.outputs.iter().map(|(p, v)| (p.0, v.to_string())).collect(),
        termination: report.termination_ok,
        validity: report.validity_ok,
        agreement: report.agreement_ok,
    })
}

pub fn witness_json(kind: &str, n: usize, m: usize, d: usize, b: usize) -> Result<String, String> {
    let cfg = config(n, m, d, b)?;
    let kind = WitnessKind::parse(kind).ok_or_else(|| format!("unknown witness {kind:?}"))?;
    let k = if kind == WitnessKind::Signed { b + 2 } else { b + 3 };
    let run = harness::run_witness(kind, &cfg, k, 20, 0, None).map_err(|e| e.to_string())?;
    to_json(&run)
}

/// Solvability verdicts for one configuration.
#[wasm_bindgen]
pub fn check(n: usize, m: usize, d: usize, b: usize) -> Result<String, JsValue> {
    check_json(n, m, d, b).map_err(|e| JsValue::from_str(&e))
}

/// Runs one algorithm on one seeded random scenario.
#[wasm_bindgen]
pub fn run_agreement(
    n: usize,
    m: usize,
    d: usize,
    b: usize,
    algorithm: &str,
    strategy: &str,
    seed: u64,
) -> Result<String, JsValue> {
    agreement_json(n, m, d, b, algorithm, strategy, seed).map_err(|e| JsValue::from_str(&e))
}

/// Builds and checks a lower-bound witness.
#[wasm_bindgen]
pub fn witness(kind: &str, n: usize, m: usize, d: usize, b: usize) -> Result<String, JsValue> {
    witness_json(kind, n, m, d, b).map_err(|e| JsValue::from_str(&e))
}
