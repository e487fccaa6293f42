use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::Context;
use clap::{Parser, Subcommand};

use approxon::acceptance::{self, Setup, MUTABLE};
use approxon::adversary::SpecError;
use approxon::scenario::{run_scenario, Overrides, ScenarioSpec};
use approxon::sim::Quorum;

/// Exit status for a run with violations or a failed criterion.
const VIOLATIONS: u8 = 1;
/// Exit status for a scenario or command line that cannot be used.
const MALFORMED: u8 = 2;

#[derive(Parser)]
#[command(name = "approxon", about = "Run protocol scenarios and the acceptance suite", disable_version_flag = true)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a scenario file and print its JSON report.
    Run {
        scenario: PathBuf,
        /// Number of seeds, overriding the scenario.
        #[arg(long)]
        seeds: Option<u64>,
        /// Include the full event trace of every run.
        #[arg(long)]
        trace: bool,
        /// Also write per-run metrics as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Write the JSON report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the acceptance suite and print observed values against bounds.
    Check {
        /// Only criteria of this module.
        #[arg(long)]
        filter: Option<String>,
        /// Without a value: lower each quorum threshold in turn and report
        /// which criterion catches it. With a quorum name: run the suite with
        /// that threshold lowered.
        #[arg(long, num_args = 0..=1, default_missing_value = "all")]
        mutation: Option<String>,
    },
    /// Print the version.
    Version,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.cmd {
        Cmd::Run { scenario, seeds, trace, csv, out } => {
            run(&scenario, &Overrides { seeds, trace }, csv.as_deref(), out.as_deref())
        }
        Cmd::Check { filter, mutation } => check(filter.as_deref(), mutation.as_deref()),
        Cmd::Version => {
            println!("approxon {}", env!("CARGO_PKG_VERSION"));
            ExitCode::SUCCESS
        }
    }
}

/// Structured error on stderr: one JSON object naming the field.
fn malformed(e: &SpecError) -> ExitCode {
    let err = serde_json::json!({ "error": "invalid scenario", "field": e.field, "reason": e.reason });
    eprintln!("{err}");
    ExitCode::from(MALFORMED)
}

fn run(path: &Path, ov: &Overrides, csv: Option<&Path>, out: Option<&Path>) -> ExitCode {
    let report = match ScenarioSpec::load(path).and_then(|spec| run_scenario(&spec, ov)) {
        Ok(r) => r,
        Err(e) => return malformed(&e),
    };
    let written = (|| -> anyhow::Result<()> {
        let json = report.to_json();
        match out {
            Some(p) => std::fs::write(p, json + "\n").with_context(|| format!("writing {}", p.display()))?,
            None => println!("{json}"),
        }
        if let Some(p) = csv {
            std::fs::write(p, report.to_csv()).with_context(|| format!("writing {}", p.display()))?;
        }
        Ok(())
    })();
    if let Err(e) = written {
        eprintln!("approxon: {e:#}");
        return ExitCode::from(MALFORMED);
    }
    if report.aggregate.violations == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(VIOLATIONS)
    }
}

fn parse_quorum(name: &str) -> Option<Quorum> {
    let key = |s: &str| s.replace(['_', '-'], "").to_lowercase();
    MUTABLE.into_iter().find(|q| key(&format!("{q:?}")) == key(name))
}

fn check(filter: Option<&str>, mutation: Option<&str>) -> ExitCode {
    if let Some(f) = filter {
        if !acceptance::modules().contains(&f) {
            eprintln!("approxon: unknown module {f:?}; expected one of {:?}", acceptance::modules());
            return ExitCode::from(MALFORMED);
        }
    }
    let setup = match mutation {
        None => Setup::default(),
        Some("all") => return mutation_table(),
        Some(name) => match parse_quorum(name) {
            Some(q) => Setup { mutation: Some(q) },
            None => {
                let known: Vec<String> = MUTABLE.iter().map(|q| format!("{q:?}")).collect();
                eprintln!("approxon: unknown quorum {name:?}; expected one of {known:?}");
                return ExitCode::from(MALFORMED);
            }
        },
    };
    if let Some(q) = setup.mutation {
        println!("threshold {q:?} lowered by one; failures are expected");
    }
    let reports = acceptance::run_suite(filter, &setup, |r| println!("{}", r.line()));
    let passed = reports.iter().filter(|r| r.passed).count();
    println!("{passed} of {} criteria passed", reports.len());
    if passed == reports.len() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(VIOLATIONS)
    }
}

/// Every lowered threshold must fail some criterion.
fn mutation_table() -> ExitCode {
    let mut survived = 0;
    for q in MUTABLE {
        let start = Instant::now();
        let caught = acceptance::detect(q);
        let took = start.elapsed().as_secs_f64();
        match caught {
            Some(id) => println!("CAUGHT   {:<18} by criterion {id} after {took:.1}s", format!("{q:?}")),
            None => {
                survived += 1;
                println!("SURVIVED {:<18} every criterion passed ({took:.1}s)", format!("{q:?}"));
            }
        }
    }
    println!("{} of {} mutations caught", MUTABLE.len() - survived, MUTABLE.len());
    if survived == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(VIOLATIONS)
    }
}
