//! `splitmono`: batch runner for the splitting engines, reductions and certificates.
//!
//! Exit codes: 0 success, 1 malformed input or mismatched configs, 2 no
//! convergence, 3 constraint violation, 4 invalid reference solution,
//! 5 compared trajectories deviate beyond the tolerance.

mod commands;
mod config;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use splitmono::Error;

#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub const MALFORMED: u8 = 1;
    pub const NO_CONVERGENCE: u8 = 2;
    pub const CONSTRAINT: u8 = 3;
    pub const SOLUTION: u8 = 4;
    pub const DEVIATION: u8 = 5;

    pub fn malformed(message: impl Into<String>) -> Self {
        Failure { code: Self::MALFORMED, message: message.into() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::InvalidInput(_) | Error::DimError { .. } => Self::MALFORMED,
            Error::NoConvergence { .. } => Self::NO_CONVERGENCE,
            Error::ConstraintViolated { .. } | Error::MetricNotPositive { .. } => Self::CONSTRAINT,
            Error::SolutionInvalid { .. } => Self::SOLUTION,
        };
        Failure { code, message: e.to_string() }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::malformed(e.to_string())
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

#[derive(Parser)]
#[command(name = "splitmono", version, about = "Run, certify and compare variable-metric splitting schemes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one or more configurations and write their trace CSVs.
    Run {
        #[arg(required = true)]
        configs: Vec<PathBuf>,
        /// Trace output for a single config (default: the config's output.trace, else stdout).
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Worker threads for a batch of configs.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// Record wall-clock nanoseconds per iteration (otherwise 0).
        #[arg(long)]
        timing: bool,
    },
    /// Run a configuration and report certificate slacks and hypothesis verdicts as JSON.
    Certify {
        config: PathBuf,
        /// JSON file `{"x": [...], "v": [...]}` with the reference solution.
        #[arg(long)]
        solution: Option<PathBuf>,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Compare the trajectories of two configurations on the same problem.
    Compare {
        a: PathBuf,
        b: PathBuf,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        /// Number of iterations (default: the smaller max_iters of the two).
        #[arg(long)]
        iters: Option<usize>,
        /// Per-iteration deviation CSV.
        #[arg(long)]
        deviations: Option<PathBuf>,
    },
    /// Dump the dynamic step-size schedule as CSV.
    Schedule {
        #[arg(long)]
        gamma: f64,
        #[arg(long, default_value_t = 0.0)]
        mu: f64,
        /// Default μ + 1.
        #[arg(long)]
        lambda: Option<f64>,
        #[arg(long, default_value_t = 1.0)]
        tau1: f64,
        /// Default 1/(τ_1‖L‖²).
        #[arg(long)]
        sigma0: Option<f64>,
        #[arg(long, default_value_t = 1.0)]
        l_norm: f64,
        #[arg(long, default_value_t = 100)]
        n: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Report the hypotheses of the convergence theorems for a configuration, without running it.
    Check {
        config: PathBuf,
        /// Iterations over which varying metrics are checked (default: max_iters).
        #[arg(long)]
        horizon: Option<usize>,
    },
}

fn dispatch(command: Command) -> Result<(), Failure> {
    match command {
        Command::Run { configs, trace, jobs, timing } => commands::run(&configs, trace, jobs, timing),
        Command::Certify { config, solution, report } => commands::certify(&config, solution.as_deref(), report),
        Command::Compare { a, b, tol, iters, deviations } => commands::compare(&a, &b, tol, iters, deviations),
        Command::Schedule { gamma, mu, lambda, tau1, sigma0, l_norm, n, out } => {
            let lambda = lambda.unwrap_or(mu + 1.0);
            let sigma0 = sigma0.unwrap_or(1.0 / (tau1 * l_norm * l_norm));
            commands::schedule(gamma, mu, lambda, tau1, sigma0, l_norm, n, out)
        }
        Command::Check { config, horizon } => commands::check(&config, horizon),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(Failure::MALFORMED) } else { ExitCode::SUCCESS };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.code)
        }
    }
}
