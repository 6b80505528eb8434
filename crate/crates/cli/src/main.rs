mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hawknet_core::{Averaging, NormalizeMode};

use crate::config::RunConfig;

#[derive(Parser)]
#[command(name = "hawknet", version, about = "Feature-vector classifier tuned with Harris Hawks Optimization")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic Gaussian-blob dataset.
    Synth(SynthArgs),
    /// Train the baseline network and report on the test part.
    Train(TrainArgs),
    /// Search hyperparameters, train the best configuration and report.
    Optimize(OptimizeArgs),
    /// Evaluate a checkpoint on the test part of a dataset.
    Eval(EvalArgs),
}

#[derive(Args)]
struct Shared {
    /// TOML file of run settings; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Seed for every random choice of the run.
    #[arg(long)]
    seed: Option<u64>,
    /// Output file (synth) or directory (other commands).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for fitness evaluations.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    jobs: Option<u64>,
}

#[derive(Args)]
struct SynthArgs {
    #[command(flatten)]
    shared: Shared,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    per_class: Option<u64>,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    dim: Option<u64>,
    #[arg(long, value_parser = clap::value_parser!(u64).range(2..))]
    classes: Option<u64>,
    /// Distance between class centroids.
    #[arg(long)]
    separation: Option<f64>,
    /// Per-dimension noise standard deviation.
    #[arg(long)]
    noise: Option<f64>,
}

#[derive(Args)]
struct DataArgs {
    /// Dataset file (.lymf binary or .csv).
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    normalize: Option<NormalizeMode>,
    #[arg(long)]
    averaging: Option<Averaging>,
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    shared: Shared,
    #[command(flatten)]
    data: DataArgs,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    batch_size: Option<usize>,
    /// Hidden layer widths, comma separated.
    #[arg(long, value_delimiter = ',')]
    hidden: Option<Vec<usize>>,
    #[arg(long)]
    dropout: Option<f64>,
}

#[derive(Args)]
struct OptimizeArgs {
    #[command(flatten)]
    shared: Shared,
    #[command(flatten)]
    data: DataArgs,
    #[arg(long)]
    hawks: Option<usize>,
    #[arg(long)]
    iters: Option<usize>,
    /// Training epochs per fitness evaluation.
    #[arg(long)]
    epoch_budget: Option<usize>,
    /// Epochs for the final training of the best configuration.
    #[arg(long)]
    epochs: Option<usize>,
    /// Baseline metrics.csv to print side by side with the optimized model.
    #[arg(long)]
    compare: Option<PathBuf>,
    /// Record wall time per trial in trials.csv.
    #[arg(long)]
    record_timing: bool,
    /// Fault injection: fitness trainings with this batch size diverge.
    #[arg(long, hide = true)]
    fail_batch_size: Option<usize>,
}

#[derive(Args)]
struct EvalArgs {
    #[command(flatten)]
    shared: Shared,
    #[command(flatten)]
    data: DataArgs,
    /// Checkpoint written by train or optimize.
    #[arg(long)]
    model: PathBuf,
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

fn resolve(shared: &Shared) -> error::Result<config::LoadedConfig> {
    let mut loaded = config::load(shared.config.as_deref())?;
    let c = &mut loaded.config;
    if shared.seed.is_some() {
        c.seed = shared.seed;
    }
    if shared.out.is_some() {
        c.out.clone_from(&shared.out);
    }
    set(&mut c.jobs, shared.jobs.map(|j| j as usize));
    Ok(loaded)
}

fn apply_data(c: &mut RunConfig, d: &DataArgs) {
    if d.data.is_some() {
        c.dataset.clone_from(&d.data);
    }
    set(&mut c.normalize, d.normalize);
    set(&mut c.averaging, d.averaging);
}

fn run(cli: Cli) -> error::Result<()> {
    match cli.command {
        Command::Synth(a) => {
            let mut loaded = resolve(&a.shared)?;
            let c = &mut loaded.config;
            set(&mut c.per_class, a.per_class.map(|v| v as usize));
            set(&mut c.dim, a.dim.map(|v| v as usize));
            set(&mut c.classes, a.classes.map(|v| v as usize));
            set(&mut c.separation, a.separation);
            set(&mut c.noise_sigma, a.noise);
            commands::synth(&loaded.config)
        }
        Command::Train(a) => {
            let mut loaded = resolve(&a.shared)?;
            let c = &mut loaded.config;
            apply_data(c, &a.data);
            set(&mut c.max_epochs, a.epochs);
            set(&mut c.learning_rate, a.lr);
            set(&mut c.batch_size, a.batch_size);
            set(&mut c.hidden_widths, a.hidden);
            set(&mut c.dropout_rate, a.dropout);
            commands::train(&loaded)
        }
        Command::Optimize(a) => {
            let mut loaded = resolve(&a.shared)?;
            let c = &mut loaded.config;
            apply_data(c, &a.data);
            set(&mut c.n_hawks, a.hawks);
            set(&mut c.max_iters, a.iters);
            set(&mut c.epoch_budget, a.epoch_budget);
            set(&mut c.max_epochs, a.epochs);
            let opts = commands::OptimizeOptions {
                compare: a.compare,
                record_timing: a.record_timing,
                fail_batch_size: a.fail_batch_size,
            };
            commands::optimize(&loaded, &opts)
        }
        Command::Eval(a) => {
            let mut loaded = resolve(&a.shared)?;
            apply_data(&mut loaded.config, &a.data);
            commands::eval(&loaded, &a.model)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.kind as u8)
        }
    }
}
