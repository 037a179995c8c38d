use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use partial_ba::harness::{
    self, CampaignConfig, EsyncConfig, SweepConfig, Target,
};
use partial_ba::{
    ByzStrategy, DeliverySchedule, Error, Primitive, ProcessId, StaticFaultConfig, SystemConfig,
    Value, WitnessKind,
};

const CLEAN: u8 = 0;
const VIOLATION: u8 = 1;
const USAGE: u8 = 2;

#[derive(Parser)]
#[command(name = "pba", version, about = "Agreement checker for systems with partially Byzantine processes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Copy)]
struct SystemArgs {
    /// Number of processes.
    #[arg(long)]
    n: usize,
    /// Bound on d-faulty processes.
    #[arg(long, default_value_t = 0)]
    m: usize,
    /// Links each d-faulty process may corrupt per round.
    #[arg(long, default_value_t = 0)]
    d: usize,
    /// Bound on Byzantine processes.
    #[arg(long, default_value_t = 0)]
    b: usize,
}

impl SystemArgs {
    fn config(self) -> Result<SystemConfig, Error> {
        SystemConfig::new(self.n, self.m, self.d, self.b)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Print solvability verdicts and round counts.
    Check {
        #[command(flatten)]
        sys: SystemArgs,
        /// Also write the verdicts as JSON.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a seeded campaign of random scenarios against one algorithm.
    Fuzz {
        #[command(flatten)]
        sys: SystemArgs,
        /// ba-pp, ba-pp-fast, om or sba-pp.
        #[arg(long, default_value = "ba-pp", value_parser = parse_target)]
        algorithm: Target,
        /// Scenario rounds; defaults to what the algorithm needs.
        #[arg(long)]
        k: Option<usize>,
        #[arg(long, default_value_t = 1000)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "uniform")]
        strategy: ByzStrategy,
        /// Report file; violating scenarios go next to it.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build and check a lower-bound witness.
    Witness {
        /// process-bound, link-bound, signed, two-round-lb or time-lb.
        #[arg(value_parser = parse_witness)]
        kind: WitnessKind,
        #[command(flatten)]
        sys: SystemArgs,
        /// Depth of the recursive constructions.
        #[arg(long)]
        k: Option<usize>,
        /// Links sampled from the time-bound chain.
        #[arg(long, default_value_t = 20)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Where to write the scenario pair.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Simulate reliable broadcast under an eventually synchronous schedule.
    Esync {
        #[command(flatten)]
        sys: SystemArgs,
        /// rb2 or rb3.
        #[arg(long, default_value = "rb3", value_parser = parse_primitive)]
        primitive: Primitive,
        #[arg(long, default_value_t = 0)]
        transmitter: usize,
        #[arg(long, default_value_t = 1)]
        value: u8,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 10_000)]
        horizon: u64,
        /// Run without any faulty process.
        #[arg(long)]
        no_faults: bool,
        /// Schedule fixture; defaults to an adversarial schedule from the seed.
        #[arg(long, conflicts_with = "zero_delay")]
        schedule: Option<PathBuf>,
        /// Deliver every message instantly.
        #[arg(long)]
        zero_delay: bool,
        /// Campaign mode: number of fault draws.
        #[arg(long)]
        trials: Option<u64>,
        /// Campaign mode: adversarial schedules per draw.
        #[arg(long, default_value_t = 100)]
        schedules: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Mark every cell of a parameter grid solvable, unsolvable or fuzz-clean.
    Sweep {
        /// Range like 4..8 (inclusive) or a single value.
        #[arg(long, default_value = "4..8", value_parser = parse_range)]
        n: (usize, usize),
        #[arg(long, default_value = "0..2", value_parser = parse_range)]
        m: (usize, usize),
        #[arg(long, default_value = "0..2", value_parser = parse_range)]
        d: (usize, usize),
        #[arg(long, default_value = "0..1", value_parser = parse_range)]
        b: (usize, usize),
        /// Fuzz trials per solvable cell; 0 skips fuzzing.
        #[arg(long, default_value_t = 20)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "uniform")]
        strategy: ByzStrategy,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-check a persisted violation fixture.
    Replay {
        fixture: PathBuf,
    },
}

fn parse_target(s: &str) -> Result<Target, String> {
    Target::parse(s).ok_or_else(|| format!("unknown algorithm {s:?}"))
}

fn parse_witness(s: &str) -> Result<WitnessKind, String> {
    WitnessKind::parse(s).ok_or_else(|| format!("unknown witness {s:?}"))
}

fn parse_primitive(s: &str) -> Result<Primitive, String> {
    Primitive::parse(s).ok_or_else(|| format!("unknown primitive {s:?}"))
}

fn parse_range(s: &str) -> Result<(usize, usize), String> {
    let num = |t: &str| t.trim().parse::<usize>().map_err(|e| format!("{t:?}: {e}"));
    let (lo, hi) = match s.split_once("..") {
        Some((a, b)) => (num(a)?, num(b.trim_start_matches('='))?),
        None => (num(s)?, num(s)?),
    };
    if lo > hi {
        return Err(format!("empty range {s}"));
    }
    Ok((lo, hi))
}

fn write_json(path: &Path, body: &str) -> Result<(), Error> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    fs::write(path, body)?;
    Ok(())
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "solvable"
    } else {
        "unsolvable"
    }
}

fn pass(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}

fn run(cli: Cli) -> Result<u8, Error> {
    match cli.command {
        Command::Check { sys, out } => {
            let r = harness::check(&sys.config()?);
            println!("oral: {}, rounds b+3={}", verdict(r.oral_solvable), r.oral_rounds);
            println!("signed: {}, rounds b+2={}", verdict(r.signed_solvable), r.signed_rounds);
            println!(
                "fast: {}, rounds b+2={}",
                if r.fast_condition { "condition holds" } else { "condition fails" },
                r.fast_rounds
            );
            println!("lower bound: at least {} rounds", r.round_lower_bound);
            if let Some(out) = out {
                write_json(&out, &serde_json::to_string_pretty(&r)?)?;
            }
            Ok(CLEAN)
        }
        Command::Fuzz { sys, algorithm, k, trials, seed, strategy, out } => {
            let mut c = CampaignConfig::new(sys.config()?, algorithm, trials, seed);
            if let Some(k) = k {
                c.k = k;
            }
            c.strategy = strategy;
            c.output_path = out;
            let r = harness::run_campaign(&c)?;
            println!(
                "{}: {} trials, {} violations ({:.0} ms, {:.0} trials/s)",
                algorithm.name(),
                r.trials_run,
                r.violations.len(),
                r.timing.elapsed_ms,
                r.timing.trials_per_second
            );
            for v in &r.violations {
                println!("  seed {} breaks {} -> {}", v.seed, v.clause, v.fixture.display());
            }
            Ok(if r.clean() { CLEAN } else { VIOLATION })
        }
        Command::Witness { kind, sys, k, trials, seed, out } => {
            let cfg = sys.config()?;
            let k = k.unwrap_or(match kind {
                WitnessKind::Signed => cfg.b + 2,
                _ => cfg.b + 3,
            });
            let out = out.or_else(|| match kind {
                WitnessKind::TimeLb => None,
                _ => Some(PathBuf::from(format!("witness-{}.json", kind.name()))),
            });
            let r = harness::run_witness(kind, &cfg, k, trials, seed, out.as_deref())?;
            for a in &r.assertions {
                println!("{} {}", pass(a.passed), a.name);
            }
            if let Some(p) = &r.fixture {
                println!("pair written to {}", p.display());
            }
            println!("{}: {}", kind.name(), pass(r.passed()));
            Ok(if r.passed() { CLEAN } else { VIOLATION })
        }
        Command::Esync {
            sys,
            primitive,
            transmitter,
            value,
            seed,
            horizon,
            no_faults,
            schedule,
            zero_delay,
            trials,
            schedules,
            out,
        } => {
            let cfg = sys.config()?;
            if let Some(draws) = trials {
                let r = harness::esync_campaign(&cfg, primitive, draws, schedules, seed, horizon)?;
                println!(
                    "{:?}: {} draws x {} schedules, {} runs missed the value, {} draws schedule-dependent",
                    primitive,
                    r.draws,
                    r.schedules,
                    r.wrong_or_undecided.len(),
                    r.schedule_dependent.len()
                );
                if let Some(out) = out {
                    write_json(&out, &serde_json::to_string_pretty(&r)?)?;
                }
                return Ok(if r.clean() { CLEAN } else { VIOLATION });
            }
            let schedule = match (schedule, zero_delay) {
                (Some(p), _) => Some(DeliverySchedule::from_json(&fs::read_to_string(p)?)?),
                (None, true) => Some(DeliverySchedule::zero_delay(cfg.n, primitive.rounds())),
                (None, false) => None,
            };
            let value = Value::num(value);
            let c = EsyncConfig {
                cfg,
                primitive,
                transmitter: ProcessId(transmitter),
                value,
                horizon,
                seed,
                faults: no_faults.then(StaticFaultConfig::default),
                schedule,
            };
            let r = harness::run_esync(&c)?;
            for (p, v) in r.report.decided_values() {
                match v {
                    Some(v) => println!("process {p}: decided {v}"),
                    None => println!("process {p}: undecided"),
                }
            }
            println!("all decided {value}: {}", pass(r.delivered_transmitter_value));
            if let Some(out) = out {
                write_json(&out, &serde_json::to_string_pretty(&r)?)?;
            }
            Ok(if r.delivered_transmitter_value { CLEAN } else { VIOLATION })
        }
        Command::Sweep { n, m, d, b, trials, seed, strategy, out } => {
            let s = SweepConfig { n, m, d, b, trials, seed, strategy, ..Default::default() };
            let cells = harness::sweep(&s)?;
            println!("{:>3} {:>3} {:>3} {:>3}  {:<10} {:<10} fuzz", "n", "m", "d", "b", "oral", "signed");
            let mut dirty = false;
            for c in &cells {
                let fuzz = match c.fuzz_clean {
                    Some(true) => "clean",
                    Some(false) => {
                        dirty = true;
                        "VIOLATION"
                    }
                    None => "-",
                };
                let SystemConfig { n, m, d, b } = c.config;
                println!(
                    "{n:>3} {m:>3} {d:>3} {b:>3}  {:<10} {:<10} {fuzz}",
                    verdict(c.solvable),
                    verdict(c.signed_solvable)
                );
            }
            if let Some(out) = out {
                write_json(&out, &serde_json::to_string_pretty(&cells)?)?;
            }
            Ok(if dirty { VIOLATION } else { CLEAN })
        }
        Command::Replay { fixture } => {
            let r = harness::replay(&fixture)?;
            match &r.replayed_clause {
                Some(c) => println!("{} seed {}: {c} violated (recorded: {})", r.algorithm.name(), r.seed, r.recorded_clause),
                None => println!("{} seed {}: no violation (recorded: {})", r.algorithm.name(), r.seed, r.recorded_clause),
            }
            Ok(if r.replayed_clause.is_some() { VIOLATION } else { CLEAN })
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(USAGE)
        }
    }
}
