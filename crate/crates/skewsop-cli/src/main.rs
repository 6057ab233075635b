use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use skewsop::report::InvariantReport;

mod commands;
mod config;

use config::{Overrides, RunConfig};

/// Skew-orthogonal polynomial families, their band operators and invariant checks.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON run configuration
    #[arg(long, global = true, default_value = "skewsop.json")]
    config: PathBuf,
    /// output directory
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// working precision in significant digits (≤ 16 runs in f64)
    #[arg(long, global = true)]
    precision: Option<String>,
    #[arg(long, global = true)]
    seed: Option<String>,
    /// 1 or 4
    #[arg(long, global = true)]
    beta: Option<String>,
    /// window index / number of quaternion levels
    #[arg(long = "N", global = true)]
    n: Option<String>,
    /// comma-separated evaluation points
    #[arg(long, global = true)]
    x: Option<String>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// build the family and band operators
    Build,
    /// run every invariant suite
    Check,
    /// density scan (with the joint-density oracle for 2N ≤ 4)
    Density,
    /// folding, ladder, ODE and deformation matrices at each x
    Fold,
    /// fundamental matrices at x + i·imag
    Fund,
    /// Metropolis sampling against the kernel density
    Sample,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let ov = Overrides { out: cli.out, precision: cli.precision, seed: cli.seed, beta: cli.beta, n: cli.n, x: cli.x };
    let cfg = match RunConfig::load(&cli.config, &ov) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("config error: {e}");
            return ExitCode::from(2);
        }
    };
    let result = match cli.command {
        Command::Build => commands::build(&cfg),
        Command::Check => commands::check(&cfg),
        Command::Density => commands::density(&cfg),
        Command::Fold => commands::fold(&cfg),
        Command::Fund => commands::fund(&cfg),
        Command::Sample => commands::sample(&cfg),
    };
    match result {
        Ok(reports) => summarize(&reports),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn summarize(reports: &[InvariantReport]) -> ExitCode {
    for r in reports {
        let status = if r.pass { "PASS" } else { "FAIL" };
        let rel = if r.lower_bound { ">" } else { "<" };
        println!("{status} {} {:.3e} {rel} {:.0e}", r.invariant_id, r.residual, r.tolerance);
    }
    let failed = reports.iter().filter(|r| !r.pass).count();
    println!("{} of {} invariants pass", reports.len() - failed, reports.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
