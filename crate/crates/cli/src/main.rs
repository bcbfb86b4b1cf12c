//! `prony`: experiments on spike-train moments.
//!
//! Exit status is 0 for an affirmative answer (member, accepted sample, every
//! margin non-negative), 1 for a negative one and 2 for any error.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod spec;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use prony_core::sigma::SIGMA_TOL;

use commands::Report;
use spec::{BoundSweepSpec, RankDropSpec, SampleSpec};

#[derive(Parser)]
#[command(name = "prony", version, about = "Moment geometry of spike-train signals")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the power moments of a signal file as a JSON array.
    Moments {
        signal: PathBuf,
        /// Number of moments, starting from m_0 (default: twice the node count).
        #[arg(long)]
        count: Option<usize>,
    },
    /// Exact fitting of three moments by one spike.
    #[command(subcommand)]
    Sigma(SigmaCommand),
    /// Lower-bound certificates against the search oracle.
    #[command(subcommand)]
    Bound(BoundCommand),
    /// Numerical rank of noisy cluster Hankel matrices, as CSV.
    RankDrop {
        spec: PathBuf,
        /// Replace the seed list with a single seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Prony inversion.
    #[command(subcommand)]
    Prony(PronyCommand),
}

#[derive(Subcommand)]
enum SigmaCommand {
    /// Decide membership and print the certificate as JSON.
    Check {
        signal: PathBuf,
        #[arg(long, default_value_t = SIGMA_TOL)]
        tol: f64,
    },
    /// Build a member signal from nodes, branch, scale and complement
    /// coefficients.
    Sample {
        /// JSON file with any of `nodes`, `branch`, `lambda`, `u_coeffs`.
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        nodes: Option<Vec<f64>>,
        #[arg(long)]
        branch: Option<u8>,
        #[arg(long, allow_hyphen_values = true)]
        lambda: Option<f64>,
        /// Coordinates in the complement basis (d - 2 values, default zeros).
        #[arg(long = "u", value_delimiter = ',', allow_hyphen_values = true)]
        u_coeffs: Option<Vec<f64>>,
    },
}

#[derive(Subcommand)]
enum BoundCommand {
    /// Certificates and searched distances over a grid, as CSV.
    Sweep {
        spec: PathBuf,
        #[arg(long)]
        restarts: Option<usize>,
        /// Replace the seed list with a single seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum PronyCommand {
    /// Recover a signal from a JSON array of 2l moments.
    Solve {
        moments: PathBuf,
        /// Node count l (default: half the number of moments).
        #[arg(long)]
        nodes: Option<usize>,
    },
}

fn emit(report: &Report, output: Option<&Path>) -> Result<()> {
    match output {
        Some(path) => fs::write(path, format!("{}\n", report.body))
            .with_context(|| format!("writing {}", path.display())),
        None => {
            println!("{}", report.body);
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<bool> {
    let (report, output) = match cli.command {
        Command::Moments { signal, count } => (commands::moments(&signal, count)?, None),
        Command::Sigma(SigmaCommand::Check { signal, tol }) => {
            (commands::sigma_check(&signal, tol)?, None)
        }
        Command::Sigma(SigmaCommand::Sample {
            spec,
            nodes,
            branch,
            lambda,
            u_coeffs,
        }) => {
            let mut s: SampleSpec = match spec {
                Some(path) => spec::load(&path)?,
                None => SampleSpec::default(),
            };
            s.nodes = nodes.or(s.nodes);
            s.branch = branch.or(s.branch);
            s.lambda = lambda.or(s.lambda);
            s.u_coeffs = u_coeffs.or(s.u_coeffs);
            (commands::sigma_sample(s)?, None)
        }
        Command::Bound(BoundCommand::Sweep {
            spec,
            restarts,
            seed,
            samples,
            output,
        }) => {
            let mut s: BoundSweepSpec = spec::load(&spec)?;
            if let Some(r) = restarts {
                s.restarts = r;
            }
            if let Some(seed) = seed {
                s.seeds = vec![seed];
            }
            if let Some(n) = samples {
                s.samples = n;
            }
            let output = output.or(s.output.clone());
            (commands::bound_sweep(&s)?, output)
        }
        Command::RankDrop {
            spec,
            seed,
            samples,
            output,
        } => {
            let mut s: RankDropSpec = spec::load(&spec)?;
            if let Some(seed) = seed {
                s.seeds = vec![seed];
            }
            if let Some(n) = samples {
                s.samples = n;
            }
            let output = output.or(s.output.clone());
            (commands::rank_drop(&s)?, output)
        }
        Command::Prony(PronyCommand::Solve { moments, nodes }) => {
            (commands::prony_solve_file(&moments, nodes)?, None)
        }
    };
    emit(&report, output.as_deref())?;
    Ok(report.affirmative)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
