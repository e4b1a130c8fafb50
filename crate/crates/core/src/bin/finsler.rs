use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use finsler::spec::load_metric;
use finsler::verify::{eval_object, list_checks_table, run, RunConfig};
use finsler::{ChartPoint, FinslerError};

#[derive(Parser)]
#[command(name = "finsler", version, about = "Numerical Finsler geometry checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sweep sample points and run the selected checks.
    Verify {
        /// Preset name or path to a JSON metric description.
        #[arg(long)]
        metric: String,
        /// Comma-separated check ids, or `all`.
        #[arg(long, default_value = "all", value_delimiter = ',')]
        checks: Vec<String>,
        #[arg(long, default_value_t = 20)]
        points: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 1e-7)]
        tol: f64,
        #[arg(long, default_value_t = 1e-3)]
        floor: f64,
        /// Write the JSON report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the check registry.
    ListChecks,
    /// Print one object's components at a point.
    Eval {
        #[arg(long)]
        metric: String,
        /// e.g. "x=0.1,0.2;y=1,0"
        #[arg(long)]
        at: String,
        /// g, C, G, N, F, Rhat, R, Ric or Sc
        #[arg(long)]
        object: String,
    },
}

fn usage(e: FinslerError) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(2)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::ListChecks => {
            print!("{}", list_checks_table());
            ExitCode::SUCCESS
        }
        Command::Eval { metric, at, object } => {
            let s = match load_metric(&metric) {
                Ok(s) => s,
                Err(e) => return usage(e),
            };
            let p = match ChartPoint::parse(&at) {
                Ok(p) => p,
                Err(e) => return usage(e),
            };
            match eval_object(&s, &p, &object) {
                Ok(v) => {
                    println!("{}", serde_json::to_string_pretty(&v).expect("json"));
                    ExitCode::SUCCESS
                }
                Err(e @ FinslerError::Config(_)) => usage(e),
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(1)
                }
            }
        }
        Command::Verify {
            metric,
            checks,
            points,
            seed,
            tol,
            floor,
            out,
        } => {
            let config = RunConfig {
                metric,
                checks,
                points,
                seed,
                tol_identity: tol,
                floor_nonzero: floor,
            };
            let report = match run(&config) {
                Ok(r) => r,
                Err(e) => return usage(e),
            };
            let json = report.to_json();
            match out {
                Some(path) => {
                    if let Err(e) = std::fs::write(&path, &json) {
                        eprintln!("error: {}: {e}", path.display());
                        return ExitCode::from(2);
                    }
                    for c in &report.checks {
                        eprintln!("{:<28} {:<11} {}", c.id, c.verdict.to_string(), c.max_residual);
                    }
                }
                None => print!("{json}"),
            }
            if report.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
    }
}
