//! Run configuration: built-in defaults, then the TOML file, then command-line flags.

use std::path::{Path, PathBuf};

use clap::Args;
use imicnn_core::ingest::DEFAULT_LOCALIZATIONS;
use imicnn_core::{PipelineConfig, TrainConfig};
use serde::Deserialize;

use crate::error::{CliError, Exit, ExitContext};

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct PathsSection {
    data_dir: Option<PathBuf>,
    out_dir: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct IngestSection {
    localizations: Option<Vec<String>>,
}

/// On-disk layout of the `--config` file.
#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct FileConfig {
    paths: PathsSection,
    ingest: IngestSection,
    pipeline: PipelineConfig,
    train: TrainConfig,
}

/// Flags shared by every subcommand.
#[derive(Debug, Clone, Default, Args)]
pub struct GlobalArgs {
    /// TOML file with [paths], [ingest], [pipeline] and [train] sections.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true, value_name = "DIR")]
    pub data_dir: Option<PathBuf>,
    #[arg(long, global = true, value_name = "DIR")]
    pub out_dir: Option<PathBuf>,
    /// Comma-separated infarction localizations counted as inferior MI.
    #[arg(long, global = true, value_delimiter = ',', value_name = "LIST")]
    pub localizations: Option<Vec<String>>,
    #[command(flatten)]
    pub train: TrainOverrides,
}

#[derive(Debug, Clone, Default, Args)]
pub struct TrainOverrides {
    #[arg(long, global = true)]
    pub lr_init: Option<f64>,
    #[arg(long, global = true)]
    pub lr_min: Option<f64>,
    #[arg(long, global = true)]
    pub lr_factor: Option<f64>,
    #[arg(long, global = true)]
    pub plateau_patience: Option<usize>,
    #[arg(long, global = true)]
    pub stop_patience: Option<usize>,
    #[arg(long, global = true)]
    pub max_epochs: Option<usize>,
    #[arg(long, global = true)]
    pub batch_size: Option<usize>,
    #[arg(long, global = true)]
    pub beta1: Option<f64>,
    #[arg(long, global = true)]
    pub beta2: Option<f64>,
    #[arg(long, global = true)]
    pub adam_epsilon: Option<f64>,
    #[arg(long, global = true)]
    pub lambda_l2: Option<f64>,
}

impl TrainOverrides {
    fn apply(&self, t: &mut TrainConfig) {
        macro_rules! set {
            ($($f:ident),*) => { $(if let Some(v) = self.$f { t.$f = v; })* };
        }
        set!(
            lr_init,
            lr_min,
            lr_factor,
            plateau_patience,
            stop_patience,
            max_epochs,
            batch_size,
            beta1,
            beta2,
            adam_epsilon,
            lambda_l2
        );
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub data_dir: PathBuf,
    pub out_dir: PathBuf,
    pub pipeline: PipelineConfig,
    /// `train.seed` is the run seed.
    pub train: TrainConfig,
    pub localizations: Vec<String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            data_dir: PathBuf::from("data"),
            out_dir: PathBuf::from("out"),
            pipeline: PipelineConfig::default(),
            train: TrainConfig::default(),
            localizations: DEFAULT_LOCALIZATIONS.iter().map(|s| s.to_string()).collect(),
        }
    }
}

impl RunConfig {
    pub fn seed(&self) -> u64 {
        self.train.seed
    }

    pub fn resolve(args: &GlobalArgs) -> Result<Self, CliError> {
        let file = match &args.config {
            Some(path) => load_file(path)?,
            None => FileConfig::default(),
        };
        let mut cfg = RunConfig {
            pipeline: file.pipeline,
            train: file.train,
            ..RunConfig::default()
        };
        if let Some(d) = file.paths.data_dir {
            cfg.data_dir = d;
        }
        if let Some(d) = file.paths.out_dir {
            cfg.out_dir = d;
        }
        if let Some(l) = file.ingest.localizations {
            cfg.localizations = l;
        }

        if let Some(d) = &args.data_dir {
            cfg.data_dir = d.clone();
        }
        if let Some(d) = &args.out_dir {
            cfg.out_dir = d.clone();
        }
        if let Some(l) = &args.localizations {
            cfg.localizations = l
                .iter()
                .map(|s| s.trim().to_string())
                .filter(|s| !s.is_empty())
                .collect();
        }
        if let Some(s) = args.seed {
            cfg.train.seed = s;
        }
        args.train.apply(&mut cfg.train);

        cfg.pipeline.validate().exit(Exit::Parse)?;
        cfg.train.validate().exit(Exit::Parse)?;
        if cfg.localizations.is_empty() {
            return Err(CliError::msg(Exit::Parse, "localization list is empty"));
        }
        Ok(cfg)
    }

    pub fn out_path(&self, name: &str) -> PathBuf {
        self.out_dir.join(name)
    }
}

fn load_file(path: &Path) -> Result<FileConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::msg(Exit::Missing, format!("cannot read config {}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| CliError::msg(Exit::Parse, format!("{}: {e}", path.display())))
}
