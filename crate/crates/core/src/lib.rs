//! Byzantine agreement in systems where some processes are only partially
//! Byzantine: they may corrupt a bounded number of outgoing links per round.
//!
//! Executions are modelled as full-information scenarios, a map from relay
//! paths to values. Everything here is deterministic and offline.

pub mod adversary;
pub mod agreement;
pub mod config;
pub mod error;
pub mod esync;
pub mod harness;
pub mod local_majority;
pub mod path;
pub mod scenario;
pub mod signed;
pub mod value;

pub use agreement::{
    ba_pp, ba_pp_fast, check_ba, check_with, om_decide, scenario_transform, view_transform,
    Algorithm, BaViolation, Clause, DecisionReport,
};
pub use config::{fast_condition_holds, resilience_holds, resilience_holds_signed, SystemConfig};
pub use error::{Error, Result};
pub use local_majority::{lm2, lm3, LmKind};
pub use path::{Path, PathSpace, PathTable, MAX_LEAVES};
pub use scenario::{
    validate_scenario, view_lookup_nested, view_of, LinkSet, RoundSlice, Rule, Scenario,
    ScenarioFixture, ValidationReport, View, Violation,
};
pub use value::{ProcessId, Value, DEFAULT_DOMAIN};
pub use signed::{
    check_sba, sba_pp, signed_view_of, validate_signed, verified_set, verify_chain, SignedChain,
    SignedFixture, SignedReport, SignedScenario, SignedView,
};
pub use adversary::{
    process_bound_pair, link_bound_pair, random_scenario, random_signed_scenario, signed_pair, time_lb_family,
    two_round_lb_pair, views_equal, ByzStrategy, Partition, SignedWitnessPair, TimeLbStep,
    WitnessCheck, WitnessKind, WitnessPair,
};
pub use esync::{
    simulate_esync, static_scenario, DeliverySchedule, LinkDelay, Primitive, Rb2Decider,
    Rb3Decider, RbOutcome, RbReport, StaticFaultConfig,
};
pub use harness::{
    check, esync_campaign, replay, run_campaign, run_esync, run_witness, sweep, CampaignConfig,
    CampaignReport, CheckReport, EsyncCampaignReport, EsyncConfig, EsyncRun, ReplayReport,
    SweepCell, SweepConfig, Target, ViolationFixture, WitnessRun,
};
