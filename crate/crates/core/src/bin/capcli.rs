//! `capcli <kind> --config <path> [--out <dir>] [--seed <u64>]`
//!
//! Exit status: 0 when every check passes, 1 when a check fails, 2 for an
//! invalid configuration and 3 when the experiment cannot run.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use confcap::experiment::{run, ExperimentConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "snake_case")]
enum Kind {
    Capacity,
    CompactCapacity,
    PointDecay,
    Mu,
    Triangle,
    Classify,
    Converge,
}

impl Kind {
    fn name(self) -> &'static str {
        match self {
            Kind::Capacity => "capacity",
            Kind::CompactCapacity => "compact_capacity",
            Kind::PointDecay => "point_decay",
            Kind::Mu => "mu",
            Kind::Triangle => "triangle",
            Kind::Classify => "classify",
            Kind::Converge => "converge",
        }
    }
}

/// Conformal capacity experiments on simplicial meshes.
#[derive(Debug, Parser)]
#[command(name = "capcli", version)]
struct Args {
    /// Experiment kind; must match `experiment.kind` in the config.
    kind: Kind,
    /// JSON experiment configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory for the report, CSV table and plot.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Overrides the configured seed.
    #[arg(long)]
    seed: Option<u64>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let args = Args::parse();

    let text = match std::fs::read_to_string(&args.config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", args.config.display());
            return ExitCode::from(2);
        }
    };
    let mut config = match ExperimentConfig::from_json(&text) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {}: {e}", args.config.display());
            return ExitCode::from(2);
        }
    };
    if config.experiment.kind() != args.kind.name() {
        eprintln!(
            "error: {}: experiment.kind is `{}` but `{}` was requested",
            args.config.display(),
            config.experiment.kind(),
            args.kind.name()
        );
        return ExitCode::from(2);
    }
    if args.seed.is_some() {
        config.seed = args.seed;
    }
    if let Err(e) = config.validate() {
        eprintln!("error: {}: {e}", args.config.display());
        return ExitCode::from(2);
    }

    let outcome = match run(&config) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(3);
        }
    };
    match outcome.write_to(&args.out) {
        Ok(paths) => {
            for p in paths {
                println!("wrote {}", p.display());
            }
        }
        Err(e) => {
            eprintln!("error: writing outputs: {e}");
            return ExitCode::from(3);
        }
    }
    for check in &outcome.report.checks {
        println!(
            "{} {}: {}",
            if check.passed { "PASS" } else { "FAIL" },
            check.name,
            check.detail
        );
    }
    if outcome.passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
