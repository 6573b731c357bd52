//! Command-line front end for scenario runs.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use cqed::scenario::{
    compare_runs, convergence_sweep, derive_effective_report, exit_code, list_scenarios, run_scenario, RunOptions,
    ScenarioConfig, DEFAULT_SWEEP_TOL, LAMBDA_A_SI,
};
use cqed::Result;

#[derive(Parser)]
#[command(name = "cqed", version, about = "Engineered cavity-QED Hamiltonians: runs, comparisons, sweeps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Propagate a scenario and write its CSV.
    Run {
        /// Config file, or the name of a built-in scenario.
        #[arg(long)]
        config: String,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Run despite failed regime-validity margins (recorded in the CSV header).
        #[arg(long)]
        force: bool,
    },
    /// Deviation between one column of two CSV runs.
    Compare {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        #[arg(long)]
        column: String,
        /// Maximum allowed relative deviation.
        #[arg(long)]
        tol: f64,
    },
    /// Re-run a scenario at several cutoffs.
    Sweep {
        #[arg(long)]
        config: String,
        #[arg(long, value_delimiter = ',', required = true)]
        cutoffs: Vec<usize>,
        #[arg(long, default_value_t = DEFAULT_SWEEP_TOL)]
        tol: f64,
    },
    /// Second-order effective generator of a single-drive configuration.
    DeriveEffective {
        #[arg(long)]
        config: String,
    },
    /// Built-in scenario names.
    ListScenarios,
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Run { config, out, force } => {
            let cfg = ScenarioConfig::load(&config)?;
            let result = run_scenario(&cfg, &RunOptions { force })?;
            let path = out
                .or_else(|| cfg.output.path.clone())
                .unwrap_or_else(|| PathBuf::from(format!("{}.csv", cfg.scenario.name)));
            result.write_csv(&path)?;
            println!("{}", result.summary());
            println!("  units: λa = {LAMBDA_A_SI:e} s⁻¹; wrote {}", path.display());
            Ok(true)
        }
        Command::Compare { a, b, column, tol } => {
            let rep = compare_runs(&a, &b, &column, tol)?;
            println!("{rep}");
            Ok(rep.passed)
        }
        Command::Sweep { config, cutoffs, tol } => {
            let cfg = ScenarioConfig::load(&config)?;
            let rep = convergence_sweep(&cfg, &cutoffs, tol)?;
            println!("{rep}");
            Ok(true)
        }
        Command::DeriveEffective { config } => {
            let cfg = ScenarioConfig::load(&config)?;
            println!("{}", derive_effective_report(&cfg)?);
            Ok(true)
        }
        Command::ListScenarios => {
            for (name, desc) in list_scenarios() {
                println!("{name:<20} {desc}");
            }
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        // a failed comparison is a tolerance verdict, not a crash
        Ok(false) => ExitCode::from(4),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
