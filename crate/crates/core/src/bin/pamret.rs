//! `pamret <experiment> [--config file.json] [overrides]`
//!
//! Exit codes: 0 success, 1 runtime failure, 2 bad configuration or input,
//! 3 landscape probe failure, 4 solver divergence.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use pamret::harness::{execute, exit, exit_code, Experiment, ExperimentConfig, Overrides};
use pamret::signal_models::EnsembleKind;
use pamret::solvers::Method;

#[derive(Parser, Debug)]
#[command(name = "pamret", version, about = "Phase retrieval experiments")]
struct Cli {
    /// success_rate, convergence, timing, noise, image or landscape
    experiment: Experiment,
    /// JSON config merged over the experiment defaults
    #[arg(long)]
    config: Option<PathBuf>,
    /// Comma-separated methods: pam1, pam2, saf, wf, twf, taf
    #[arg(long, value_delimiter = ',')]
    model: Option<Vec<Method>>,
    /// gaussian_real, gaussian_complex or cdp
    #[arg(long)]
    measure: Option<EnsembleKind>,
    #[arg(long)]
    n: Option<usize>,
    /// Comma-separated m/n ratios
    #[arg(long, value_delimiter = ',')]
    ratio: Option<Vec<f64>>,
    /// Comma-separated mask counts for cdp
    #[arg(long = "L", value_delimiter = ',')]
    l_values: Option<Vec<usize>>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    mu: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    /// Success tolerance on the relative error
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_iters: Option<usize>,
    /// Output file; stdout when absent
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    workers: Option<usize>,
}

fn run(cli: Cli) -> pamret::Result<i32> {
    let mut cfg = match &cli.config {
        Some(p) => ExperimentConfig::load(cli.experiment, p)?,
        None => ExperimentConfig::defaults(cli.experiment),
    };
    Overrides {
        methods: cli.model,
        measurement: cli.measure,
        n: cli.n,
        ratios: cli.ratio,
        l_values: cli.l_values,
        trials: cli.trials,
        seed: cli.seed,
        mu: cli.mu,
        beta: cli.beta,
        tol: cli.tol,
        max_iters: cli.max_iters,
        out: cli.out,
        workers: cli.workers,
    }
    .apply(&mut cfg)?;
    execute(&cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match run(cli) {
        Ok(code) => {
            match code {
                exit::DIVERGENCE => eprintln!("pamret: a solver diverged"),
                exit::PROBE_FAILURE => eprintln!("pamret: landscape probes failed"),
                _ => {}
            }
            code
        }
        Err(e) => {
            eprintln!("pamret: {e}");
            exit_code(&e)
        }
    };
    ExitCode::from(code as u8)
}
