use std::path::PathBuf;
use std::process::ExitCode;

use bilevel_ggm::commands::{self, Outcome};
use bilevel_ggm::{CliResult, RunConfig, SolverConfig};
use clap::{Parser, Subcommand};

/// Joint estimation of group- and subject-level Gaussian graphical models.
#[derive(Parser)]
#[command(version)]
struct Cli {
    /// Exit with status 4 when a solver does not converge.
    #[arg(long, global = true)]
    strict: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic multi-subject data set with known networks.
    Simulate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Fit the model at the `lambda` of the config.
    Fit {
        #[arg(long)]
        config: PathBuf,
        /// Directory holding subject_<k>.csv files.
        #[arg(long)]
        data: PathBuf,
    },
    /// Search the `grid` of the config and keep the best fit.
    Tune {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        data: PathBuf,
    },
    /// Compare a fit directory with simulation truth; writes metrics.csv.
    Evaluate {
        #[arg(long)]
        fit: PathBuf,
        #[arg(long)]
        truth: PathBuf,
        /// Defaults to the fit directory.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Leave the diagonal out of the Frobenius and L1 errors.
        #[arg(long)]
        offdiag_only_norms: bool,
    },
    /// Graphical lasso on a single covariance matrix.
    Glasso {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        lambda: f64,
        /// Treat the input as an n x p data table instead of a covariance matrix.
        #[arg(long)]
        observations: bool,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        #[arg(long)]
        max_iter: Option<usize>,
        #[arg(long)]
        tol: Option<f64>,
    },
}

fn run(cli: &Cli) -> CliResult<Outcome> {
    match &cli.command {
        Command::Simulate { config } => commands::simulate(&RunConfig::load(config)?),
        Command::Fit { config, data } => commands::fit(&RunConfig::load(config)?, data),
        Command::Tune { config, data } => commands::tune(&RunConfig::load(config)?, data),
        Command::Evaluate {
            fit,
            truth,
            out,
            offdiag_only_norms,
        } => {
            let out = out.as_ref().unwrap_or(fit);
            commands::evaluate(fit, truth, out, *offdiag_only_norms)?;
            Ok(Outcome {
                converged: true,
                warnings: Vec::new(),
            })
        }
        Command::Glasso {
            input,
            lambda,
            observations,
            out,
            max_iter,
            tol,
        } => {
            let defaults = SolverConfig::default();
            let mut opts = defaults.glasso_options();
            opts.max_iter = max_iter.unwrap_or(opts.max_iter);
            opts.tol = tol.unwrap_or(opts.tol);
            commands::glasso(input, *lambda, *observations, &opts, out)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(outcome) => {
            for w in &outcome.warnings {
                eprintln!("warning: {w}");
            }
            if cli.strict && !outcome.converged {
                ExitCode::from(4)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
