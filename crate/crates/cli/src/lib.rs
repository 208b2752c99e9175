//! Command-line driver: preprocessing, training, cross validation, evaluation and
//! feature analysis over the `imicnn-core` pipeline.

pub mod commands;
pub mod config;
pub mod error;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub use commands::{cmd_eval, cmd_features, cmd_loso, cmd_preprocess, cmd_synth, cmd_train, SynthSpec};
pub use config::{GlobalArgs, RunConfig, TrainOverrides};
pub use error::{CliError, Exit};

#[derive(Debug, Parser)]
#[command(name = "imicnn", version, about = "Inferior MI detection from three-lead ECG")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a synthetic WFDB cohort into the data directory.
    Synth {
        #[arg(long, default_value_t = 3)]
        hc: usize,
        #[arg(long, default_value_t = 3)]
        imi: usize,
        #[arg(long, default_value_t = 1)]
        records: usize,
        /// Record length in seconds.
        #[arg(long, default_value_t = 32.0)]
        duration: f64,
    },
    /// Build the sample dataset from the data directory.
    Preprocess,
    /// Train on every sample of the dataset and write a checkpoint.
    Train {
        #[arg(long)]
        dataset: Option<PathBuf>,
    },
    /// Leave-one-patient-out cross validation.
    Loso {
        #[arg(long)]
        dataset: Option<PathBuf>,
    },
    /// Confusion matrix and metrics of a checkpoint on a dataset.
    Eval {
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[arg(long)]
        dataset: Option<PathBuf>,
    },
    /// Dump pooled features and report their separability.
    Features {
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[arg(long)]
        dataset: Option<PathBuf>,
    },
}

pub fn run(cli: &Cli) -> Result<(), CliError> {
    let cfg = RunConfig::resolve(&cli.global)?;
    match &cli.command {
        Command::Synth {
            hc,
            imi,
            records,
            duration,
        } => {
            let spec = SynthSpec {
                hc_patients: *hc,
                imi_patients: *imi,
                records_per_patient: *records,
                duration_s: *duration,
                seed: None,
            };
            cmd_synth(&cfg, &spec).map(drop)
        }
        Command::Preprocess => cmd_preprocess(&cfg).map(drop),
        Command::Train { dataset } => cmd_train(&cfg, dataset.as_deref()).map(drop),
        Command::Loso { dataset } => cmd_loso(&cfg, dataset.as_deref()).map(drop),
        Command::Eval { checkpoint, dataset } => cmd_eval(&cfg, checkpoint.as_deref(), dataset.as_deref()).map(drop),
        Command::Features { checkpoint, dataset } => {
            cmd_features(&cfg, checkpoint.as_deref(), dataset.as_deref()).map(drop)
        }
    }
}
