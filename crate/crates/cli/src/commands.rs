//! Subcommand implementations. Each returns a small summary for callers and tests; reports
//! go to stdout, progress to the log.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use imicnn_core::dsp::{read_dataset, write_dataset, DatasetManifest, DspError};
use imicnn_core::eval::{lopo_samples_with, metrics, predict_labels, predict_probs, CvReport};
use imicnn_core::featquality::{extract_features, write_features, FeatureQuality};
use imicnn_core::ingest::{
    build_patient_set, find_headers, load_record, synth_patient_set, write_record, Diagnosis, EcgRecord, IngestError,
};
use imicnn_core::nn::{load_checkpoint, save_checkpoint, CheckpointHeader};
use imicnn_core::train::{fit_with, Adam, EpochRecord, TrainError, TrainLog};
use imicnn_core::{make_samples, Architecture, Confusion, Label, Metrics, ModelParams, Sample};
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::{CliError, Exit, ExitContext};

pub const DATASET_FILE: &str = "dataset.json";
pub const CHECKPOINT_FILE: &str = "model.json";
pub const TRAIN_LOG_FILE: &str = "train_log.jsonl";
pub const TRAIN_SUMMARY_FILE: &str = "train_summary.json";
pub const CV_REPORT_FILE: &str = "cv_report.json";
pub const CV_TABLE_FILE: &str = "cv_table.txt";
pub const EVAL_REPORT_FILE: &str = "eval_report.json";
pub const FEATURES_FILE: &str = "features.json";
pub const FEATURE_REPORT_FILE: &str = "feature_quality.json";
pub const FEATURE_TABLE_FILE: &str = "feature_quality.txt";
/// Optional file in the data directory describing a synthetic cohort to generate in memory.
pub const SYNTH_SPEC_FILE: &str = "synth.toml";

const METHOD: &str = "CNN (3-lead)";

/// Synthetic cohort description, read from [`SYNTH_SPEC_FILE`] or given to `synth`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthSpec {
    pub hc_patients: usize,
    pub imi_patients: usize,
    #[serde(default = "one")]
    pub records_per_patient: usize,
    #[serde(default = "default_duration")]
    pub duration_s: f64,
    /// Falls back to the run seed.
    #[serde(default)]
    pub seed: Option<u64>,
}

fn one() -> usize {
    1
}

fn default_duration() -> f64 {
    32.0
}

impl SynthSpec {
    fn records(&self, cfg: &RunConfig) -> Vec<EcgRecord> {
        let set = synth_patient_set(
            self.hc_patients,
            self.imi_patients,
            self.records_per_patient,
            self.duration_s,
            f64::from(cfg.pipeline.fs_in),
            self.seed.unwrap_or(cfg.seed()),
        );
        set.patients().iter().flat_map(|p| p.records.clone()).collect()
    }
}

fn create_out_dir(cfg: &RunConfig) -> Result<(), CliError> {
    std::fs::create_dir_all(&cfg.out_dir)
        .map_err(|e| CliError::msg(Exit::Failure, format!("{}: {e}", cfg.out_dir.display())))
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::msg(Exit::Failure, format!("{}: {e}", path.display())))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    write_text(path, &(serde_json::to_string_pretty(value)? + "\n"))
}

fn require(path: &Path, what: &str) -> Result<(), CliError> {
    if path.is_file() {
        Ok(())
    } else {
        Err(CliError::msg(
            Exit::Missing,
            format!("{what} not found: {}", path.display()),
        ))
    }
}

/// Writes a synthetic WFDB tree (`<data_dir>/<patient>/<record>.hea|.dat`).
pub fn cmd_synth(cfg: &RunConfig, spec: &SynthSpec) -> Result<usize, CliError> {
    let records = spec.records(cfg);
    for r in &records {
        write_record(&cfg.data_dir, r)?;
    }
    println!(
        "wrote {} records for {} patients to {}",
        records.len(),
        spec.hc_patients + spec.imi_patients,
        cfg.data_dir.display()
    );
    Ok(records.len())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PreprocessSummary {
    pub imi: usize,
    pub hc: usize,
    pub patients: usize,
    pub records: usize,
}

fn load_records(cfg: &RunConfig) -> Result<Vec<EcgRecord>, CliError> {
    if !cfg.data_dir.is_dir() {
        return Err(CliError::msg(
            Exit::Missing,
            format!("data directory not found: {}", cfg.data_dir.display()),
        ));
    }
    let spec_path = cfg.data_dir.join(SYNTH_SPEC_FILE);
    if spec_path.is_file() {
        let text = std::fs::read_to_string(&spec_path)?;
        let spec: SynthSpec =
            toml::from_str(&text).map_err(|e| CliError::msg(Exit::Parse, format!("{}: {e}", spec_path.display())))?;
        return Ok(spec.records(cfg));
    }

    let mut records = Vec::new();
    let mut skipped = 0usize;
    for hea in find_headers(&cfg.data_dir)? {
        match load_record(&hea, &cfg.localizations) {
            Ok(r) if r.diagnosis == Diagnosis::Other => skipped += 1,
            Ok(r) => records.push(r),
            Err(e @ (IngestError::MalformedHeader(_) | IngestError::UnsupportedFormat(_))) => {
                return Err(CliError::new(Exit::Parse, e).context_path(&hea));
            }
            Err(e @ IngestError::LengthMismatch { .. }) => return Err(CliError::new(Exit::Parse, e).context_path(&hea)),
            Err(e @ IngestError::MissingLead { .. }) => {
                log::warn!("skipping {}: {e}", hea.display());
                skipped += 1;
            }
            Err(e) => return Err(e.into()),
        }
    }
    log::info!("{} records selected, {skipped} skipped", records.len());
    Ok(records)
}

impl CliError {
    fn context_path(self, path: &Path) -> Self {
        Self {
            exit: self.exit,
            error: self.error.context(path.display().to_string()),
        }
    }
}

/// Reads records (or a synthetic spec) from the data directory and writes the sample dataset.
pub fn cmd_preprocess(cfg: &RunConfig) -> Result<PreprocessSummary, CliError> {
    let records = load_records(cfg)?;
    let set = build_patient_set(records).exit(Exit::Parse)?;
    let mut samples: Vec<Sample> = Vec::new();
    for patient in set.patients() {
        for record in &patient.records {
            match make_samples(record, &cfg.pipeline) {
                Ok(s) => samples.extend(s),
                Err(e @ DspError::RateMismatch { .. }) => {
                    log::warn!("skipping {}/{}: {e}", patient.patient_id, record.record_name);
                }
                Err(e) => return Err(e.into()),
            }
        }
    }
    if samples.is_empty() {
        return Err(CliError::msg(
            Exit::Empty,
            format!("no samples selected from {}", cfg.data_dir.display()),
        ));
    }
    create_out_dir(cfg)?;
    write_dataset(&cfg.out_path(DATASET_FILE), &samples, &cfg.pipeline, Some(cfg.seed()))?;

    let count = |l: Label| samples.iter().filter(|s| s.label == l).count();
    let summary = PreprocessSummary {
        imi: count(Label::Imi),
        hc: count(Label::Hc),
        patients: set.len(),
        records: set.n_records(),
    };
    println!("IMI: {}, HC: {}", summary.imi, summary.hc);
    log::info!("{} patients, {} records", summary.patients, summary.records);
    Ok(summary)
}

fn load_dataset(cfg: &RunConfig, path: Option<&Path>) -> Result<(PathBuf, DatasetManifest, Vec<Sample>), CliError> {
    let path = path.map_or_else(|| cfg.out_path(DATASET_FILE), Path::to_path_buf);
    require(&path, "dataset")?;
    let (manifest, samples) = read_dataset(&path).exit(Exit::Dataset)?;
    if samples.is_empty() {
        return Err(CliError::msg(
            Exit::Dataset,
            format!("{} holds no samples", path.display()),
        ));
    }
    Ok((path, manifest, samples))
}

fn load_model(cfg: &RunConfig, path: Option<&Path>) -> Result<(CheckpointHeader, ModelParams), CliError> {
    let path = path.map_or_else(|| cfg.out_path(CHECKPOINT_FILE), Path::to_path_buf);
    require(&path, "checkpoint")?;
    load_checkpoint(&path).exit(Exit::Dataset)
}

fn print_epoch(e: &EpochRecord) {
    log::info!(
        "epoch {:>3}  loss {:.6}  acc {:.4}  lr {:.0e}  ({:.2} s)",
        e.epoch,
        e.loss,
        e.accuracy,
        e.lr,
        e.wall_time_s
    );
}

/// Trains one model on every sample of the dataset.
pub fn cmd_train(cfg: &RunConfig, dataset: Option<&Path>) -> Result<TrainLog, CliError> {
    let (_, _, samples) = load_dataset(cfg, dataset)?;
    let mut params = ModelParams::init(&Architecture::default(), cfg.seed());
    let mut adam = Adam::new(params.trainables(), &cfg.train);
    let started = Instant::now();
    let log = fit_with(&samples, &mut params, &cfg.train, &mut adam, print_epoch).map_err(|e| match e {
        TrainError::EmptyDataset | TrainError::ShapeMismatch(_) | TrainError::Nn(_) => CliError::new(Exit::Dataset, e),
        TrainError::InvalidConfig(_) => CliError::new(Exit::Parse, e),
        TrainError::Diverged { .. } => CliError::new(Exit::Failure, e),
    })?;

    create_out_dir(cfg)?;
    save_checkpoint(&cfg.out_path(CHECKPOINT_FILE), &params, cfg.seed())?;
    write_text(&cfg.out_path(TRAIN_LOG_FILE), &log.to_jsonl())?;
    write_json(&cfg.out_path(TRAIN_SUMMARY_FILE), &log)?;
    log::info!(
        "{} epochs ({:?}), final loss {:.6}, best loss {:.6}",
        log.epochs.len(),
        log.stop_reason,
        log.final_loss,
        log.best_loss
    );
    log::info!("training took {:.1} s", started.elapsed().as_secs_f64());
    Ok(log)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvOutput {
    pub seed: u64,
    pub dataset: String,
    #[serde(flatten)]
    pub report: CvReport,
}

/// Leave-one-patient-out cross validation over the dataset.
pub fn cmd_loso(cfg: &RunConfig, dataset: Option<&Path>) -> Result<CvReport, CliError> {
    let (path, _, samples) = load_dataset(cfg, dataset)?;
    let report = lopo_samples_with(&samples, &cfg.train, &Architecture::default(), |f| {
        log::info!(
            "fold {:>3} {}: {} samples, ac {:.2}%, {} epochs",
            f.fold,
            f.held_out_patient,
            f.n_samples,
            f.ac,
            f.epochs
        )
    })
    .map_err(|e| CliError::new(Exit::Dataset, e))?;

    create_out_dir(cfg)?;
    let table = report.table(METHOD);
    write_json(
        &cfg.out_path(CV_REPORT_FILE),
        &CvOutput {
            seed: cfg.seed(),
            dataset: path.display().to_string(),
            report: report.clone(),
        },
    )?;
    write_text(&cfg.out_path(CV_TABLE_FILE), &table)?;
    print!("{table}");
    println!(
        "{} patients; Se averaged over {} folds, Sp over {} folds",
        report.patient_count, report.se_folds, report.sp_folds
    );
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub seed: u64,
    pub dataset: String,
    pub n_samples: usize,
    pub confusion: Confusion,
    pub metrics: Metrics,
}

fn fmt_pct(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".into(), |v| format!("{v:.2}%"))
}

/// Inference with a checkpoint over a dataset; prints the confusion matrix and metrics.
pub fn cmd_eval(cfg: &RunConfig, checkpoint: Option<&Path>, dataset: Option<&Path>) -> Result<EvalReport, CliError> {
    let (header, params) = load_model(cfg, checkpoint)?;
    let (path, _, samples) = load_dataset(cfg, dataset)?;
    let probs = predict_probs(&params, &samples, 256).exit(Exit::Dataset)?;
    let truth: Vec<Label> = samples.iter().map(|s| s.label).collect();
    let confusion = Confusion::from_labels(&truth, &predict_labels(&probs));
    let m = metrics(&confusion)?;
    let report = EvalReport {
        seed: header.seed,
        dataset: path.display().to_string(),
        n_samples: samples.len(),
        confusion,
        metrics: m,
    };
    create_out_dir(cfg)?;
    write_json(&cfg.out_path(EVAL_REPORT_FILE), &report)?;
    print!("{}", confusion.table());
    println!("Ac: {:.2}%  Se: {}  Sp: {}", m.ac, fmt_pct(m.se), fmt_pct(m.sp));
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureReport {
    pub seed: u64,
    pub dataset: String,
    #[serde(flatten)]
    pub quality: FeatureQuality,
    pub per_patient: BTreeMap<String, usize>,
}

/// Pooled feature dump and separability report for a checkpoint over a dataset.
pub fn cmd_features(
    cfg: &RunConfig,
    checkpoint: Option<&Path>,
    dataset: Option<&Path>,
) -> Result<FeatureQuality, CliError> {
    let (header, params) = load_model(cfg, checkpoint)?;
    let (path, _, samples) = load_dataset(cfg, dataset)?;
    let fs = extract_features(&samples, &params).exit(Exit::Dataset)?;
    let quality = FeatureQuality::compute(&fs).exit(Exit::Dataset)?;
    create_out_dir(cfg)?;
    write_features(&cfg.out_path(FEATURES_FILE), &fs, &samples)?;
    let mut per_patient = BTreeMap::new();
    for s in &samples {
        *per_patient.entry(s.patient_id.clone()).or_insert(0) += 1;
    }
    write_json(
        &cfg.out_path(FEATURE_REPORT_FILE),
        &FeatureReport {
            seed: header.seed,
            dataset: path.display().to_string(),
            quality: quality.clone(),
            per_patient,
        },
    )?;
    let table = quality.table(METHOD);
    write_text(&cfg.out_path(FEATURE_TABLE_FILE), &table)?;
    print!("{table}");
    if quality.duplicate_conflicts > 0 {
        log::warn!(
            "{} feature vectors duplicate a vector of the other class",
            quality.duplicate_conflicts
        );
    }
    Ok(quality)
}
