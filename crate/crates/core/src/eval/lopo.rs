use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{metrics, predict_labels, predict_probs, Confusion, EvalError};
use crate::dsp::{make_samples, PipelineConfig, Sample};
use crate::ingest::PatientSet;
use crate::nn::{Architecture, ModelParams};
use crate::train::{fit, StopReason, TrainConfig};
use crate::Label;

/// Outcome for one held-out patient.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldReport {
    pub fold: usize,
    pub held_out_patient: String,
    pub label: Label,
    pub seed: u64,
    pub n_samples: usize,
    pub train_patients: Vec<String>,
    pub n_train_samples: usize,
    pub epochs: usize,
    pub stop_reason: StopReason,
    pub confusion: Confusion,
    pub ac: f64,
    pub se: Option<f64>,
    pub sp: Option<f64>,
    /// IMI probability per held-out sample, in dataset order.
    pub imi_probs: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub patient_count: usize,
    pub sample_count: usize,
    pub folds: Vec<FoldReport>,
    /// Mean of the per-fold accuracies.
    pub avg_ac: f64,
    pub avg_se: Option<f64>,
    pub avg_sp: Option<f64>,
    /// Number of folds contributing to `avg_se` / `avg_sp`.
    pub se_folds: usize,
    pub sp_folds: usize,
    pub pooled: Confusion,
}

fn mean(values: impl Iterator<Item = f64>) -> (Option<f64>, usize) {
    let (s, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    ((n > 0).then(|| s / n as f64), n)
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".into(), |v| format!("{v:.2}"))
}

impl CvReport {
    /// One-row summary in the `Method | Avg. Ac% | Se% | Sp%` layout.
    pub fn table(&self, method: &str) -> String {
        let w = method.len().max(6);
        format!(
            "{:<w$} | {:>8} | {:>6} | {:>6}\n{:<w$} | {:>8.2} | {:>6} | {:>6}\n",
            "Method",
            "Avg. Ac%",
            "Se%",
            "Sp%",
            method,
            self.avg_ac,
            fmt_opt(self.avg_se),
            fmt_opt(self.avg_sp),
        )
    }
}

/// Preprocesses every record of `patients`, then runs [`lopo_samples`] with the default
/// architecture.
pub fn lopo(patients: &PatientSet, cfg: &TrainConfig, pipeline: &PipelineConfig) -> Result<CvReport, EvalError> {
    let records: Vec<_> = patients.patients().iter().flat_map(|p| &p.records).collect();
    let per_record = records
        .par_iter()
        .map(|r| make_samples(r, pipeline))
        .collect::<Result<Vec<_>, _>>()?;
    let samples: Vec<Sample> = per_record.into_iter().flatten().collect();
    lopo_samples(&samples, cfg, &Architecture::default())
}

pub fn lopo_samples(samples: &[Sample], cfg: &TrainConfig, arch: &Architecture) -> Result<CvReport, EvalError> {
    lopo_samples_with(samples, cfg, arch, |_| {})
}

/// One fold per patient (ascending id): a fresh model seeded with `cfg.seed + fold` is
/// trained on every other patient's samples and evaluated in inference mode on the held-out
/// patient. Folds run in parallel; `on_fold` sees each finished fold.
pub fn lopo_samples_with<F>(
    samples: &[Sample],
    cfg: &TrainConfig,
    arch: &Architecture,
    on_fold: F,
) -> Result<CvReport, EvalError>
where
    F: Fn(&FoldReport) + Sync,
{
    let mut by_patient: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, s) in samples.iter().enumerate() {
        by_patient.entry(&s.patient_id).or_default().push(i);
    }
    if by_patient.len() < 2 {
        return Err(EvalError::InsufficientPatients(format!(
            "{} patient(s)",
            by_patient.len()
        )));
    }
    for class in [Label::Hc, Label::Imi] {
        if !samples.iter().any(|s| s.label == class) {
            return Err(EvalError::InsufficientPatients(format!("no {class} samples")));
        }
    }
    let patients: Vec<(&str, Vec<usize>)> = by_patient.into_iter().collect();

    let folds = patients
        .par_iter()
        .enumerate()
        .map(|(fold, (held_out, test_idx))| {
            let train: Vec<Sample> = samples.iter().filter(|s| s.patient_id != *held_out).cloned().collect();
            let train_patients: Vec<String> = patients
                .iter()
                .filter(|(p, _)| p != held_out)
                .map(|(p, _)| p.to_string())
                .collect();
            let seed = cfg.seed.wrapping_add(fold as u64);
            let fold_cfg = TrainConfig { seed, ..cfg.clone() };
            let mut params = ModelParams::init(arch, seed);
            let log = fit(&train, &mut params, &fold_cfg)?;

            let test: Vec<&Sample> = test_idx.iter().map(|&i| &samples[i]).collect();
            let probs = predict_probs(&params, test.iter().copied(), 256)?;
            let predicted = predict_labels(&probs);
            let truth: Vec<Label> = test.iter().map(|s| s.label).collect();
            let confusion = Confusion::from_labels(&truth, &predicted);
            let m = metrics(&confusion)?;
            let report = FoldReport {
                fold,
                held_out_patient: held_out.to_string(),
                label: truth[0],
                seed,
                n_samples: test.len(),
                train_patients,
                n_train_samples: train.len(),
                epochs: log.epochs.len(),
                stop_reason: log.stop_reason,
                confusion,
                ac: m.ac,
                se: m.se,
                sp: m.sp,
                imi_probs: (0..test.len()).map(|r| probs.row(r)[1]).collect(),
            };
            on_fold(&report);
            Ok(report)
        })
        .collect::<Result<Vec<_>, EvalError>>()?;

    let mut pooled = Confusion::default();
    folds.iter().for_each(|f| pooled.merge(&f.confusion));
    let (avg_ac, _) = mean(folds.iter().map(|f| f.ac));
    let (avg_se, se_folds) = mean(folds.iter().filter_map(|f| f.se));
    let (avg_sp, sp_folds) = mean(folds.iter().filter_map(|f| f.sp));
    Ok(CvReport {
        patient_count: patients.len(),
        sample_count: samples.len(),
        folds,
        avg_ac: avg_ac.unwrap_or(0.0),
        avg_se,
        avg_sp,
        se_folds,
        sp_folds,
        pooled,
    })
}
