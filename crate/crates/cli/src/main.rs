//! `stormlens`: train and explain solar eruption forecasters from the
//! command line.

mod commands;
mod config;
mod error;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use stormlens::Method;

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "stormlens", version, about = "Interpretable solar eruption prediction")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Flat `key = value` config file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Global seed; every stochastic step derives its own stream from it.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Artifact directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Dataset CSV [default: <out>/synth.csv].
    #[arg(long, global = true)]
    data: Option<PathBuf>,

    /// Model checkpoint [default: <out>/model.json].
    #[arg(long, global = true)]
    model: Option<PathBuf>,

    #[arg(long, global = true, value_parser = ["exact", "kernel", "gradient"])]
    method: Option<String>,

    /// Index of a window in the test split.
    #[arg(long, global = true)]
    sample_id: Option<usize>,

    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Correlation of the planted partner feature (synth).
    #[arg(long, global = true, allow_negative_numbers = true)]
    rho: Option<f64>,

    #[arg(long, global = true)]
    epochs: Option<usize>,

    /// Override any config key; repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic dataset with a planted dominant feature.
    Synth,
    /// Train the attention LSTM and report held-out skill.
    Train,
    /// Score a checkpoint on the held-out split.
    Evaluate,
    /// SHAP explanations of the test split, with summary plots.
    ExplainGlobal,
    /// LIME explanation of one test window.
    ExplainLocal,
    /// Feature correlations and dependence plots.
    Correlate,
}

impl Cli {
    fn resolve(&self) -> CliResult<RunConfig> {
        let mut c = RunConfig::default();
        if let Some(path) = &self.config {
            c.apply_file(path)?;
        }
        for pair in &self.set {
            c.apply_pair(pair)?;
        }
        if let Some(v) = self.seed {
            c.seed = v;
        }
        if let Some(v) = &self.out {
            c.out = v.clone();
        }
        if let Some(v) = &self.data {
            c.data = Some(v.clone());
        }
        if let Some(v) = &self.model {
            c.model = Some(v.clone());
        }
        if let Some(v) = &self.method {
            c.method = v.parse::<Method>()?;
        }
        if let Some(v) = self.threads {
            c.threads = Some(v);
        }
        if let Some(v) = self.rho {
            c.rho = v;
        }
        if let Some(v) = self.epochs {
            c.epochs = v;
        }
        c.validate()?;
        Ok(c)
    }
}

fn run(cli: &Cli) -> CliResult<()> {
    let config = cli.resolve()?;
    if let Some(n) = config.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Internal(format!("thread pool: {e}")))?;
    }
    match cli.command {
        Command::Synth => commands::synth(&config),
        Command::Train => commands::train_cmd(&config),
        Command::Evaluate => commands::evaluate_cmd(&config),
        Command::ExplainGlobal => commands::explain_global(&config),
        Command::ExplainLocal => commands::explain_local_cmd(&config, cli.sample_id),
        Command::Correlate => commands::correlate(&config),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
