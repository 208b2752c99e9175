//! End-to-end scenarios on synthetic data.

#![allow(dead_code)]

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use imicnn_core::dsp::{make_samples, PipelineConfig, Sample};
use imicnn_core::eval::lopo_samples;
use imicnn_core::ingest::{synth_patient_set, synth_record};
use imicnn_core::nn::{Architecture, ModelParams};
use imicnn_core::train::{fit, TrainConfig};
use imicnn_core::Label;

/// `per_class` healthy then `per_class` IMI samples, one 4 s record each.
pub fn separable_samples(per_class: usize, seed: u64) -> Vec<Sample> {
    let cfg = PipelineConfig::default();
    let mut out = Vec::new();
    for (k, label) in [Label::Hc, Label::Imi].into_iter().enumerate() {
        for i in 0..per_class {
            let s = seed + (k * per_class + i) as u64;
            let mut samples = make_samples(&synth_record(label, 4.0, 1000.0, s), &cfg).unwrap();
            assert_eq!(samples.len(), 1);
            out.push(samples.remove(0));
        }
    }
    out
}

#[derive(Debug)]
pub struct Trainability {
    pub epochs: usize,
    pub first_perfect_epoch: Option<usize>,
    pub lr_in_range: bool,
    pub lr_non_increasing: bool,
    pub elapsed: Duration,
}

pub fn trainability(seed: u64) -> Trainability {
    let data = separable_samples(20, 100);
    let cfg = TrainConfig {
        seed,
        ..TrainConfig::default()
    };
    let mut params = ModelParams::init(&Architecture::default(), seed);
    let t = Instant::now();
    let log = fit(&data, &mut params, &cfg).unwrap();
    let lrs: Vec<f64> = log.epochs.iter().map(|e| e.lr).collect();
    Trainability {
        epochs: log.epochs.len(),
        first_perfect_epoch: log.epochs.iter().find(|e| e.accuracy == 1.0).map(|e| e.epoch),
        lr_in_range: lrs.iter().all(|&lr| (1e-5..=1e-3).contains(&lr)),
        lr_non_increasing: lrs.windows(2).all(|w| w[1] <= w[0]),
        elapsed: t.elapsed(),
    }
}

#[derive(Debug)]
pub struct LopoIntegrity {
    pub patients: usize,
    pub folds: usize,
    /// Every sample is held out in exactly one fold.
    pub partition: bool,
    /// No fold trains on its held-out patient, and every other patient is trained on.
    pub no_leak: bool,
}

pub fn lopo_integrity(seed: u64) -> LopoIntegrity {
    let set = synth_patient_set(3, 3, 1, 8.0, 1000.0, seed);
    let cfg = PipelineConfig::default();
    let samples: Vec<Sample> = set
        .patients()
        .iter()
        .flat_map(|p| &p.records)
        .flat_map(|r| make_samples(r, &cfg).unwrap())
        .collect();
    let train_cfg = TrainConfig {
        seed,
        max_epochs: 5,
        ..TrainConfig::default()
    };
    let report = lopo_samples(&samples, &train_cfg, &Architecture::default()).unwrap();

    let all: BTreeSet<&str> = samples.iter().map(|s| s.patient_id.as_str()).collect();
    let held: Vec<&str> = report.folds.iter().map(|f| f.held_out_patient.as_str()).collect();
    let held_set: BTreeSet<&str> = held.iter().copied().collect();
    let per_patient = |p: &str| samples.iter().filter(|s| s.patient_id == p).count();
    let partition = held.len() == held_set.len()
        && held_set == all
        && report
            .folds
            .iter()
            .all(|f| f.n_samples == per_patient(&f.held_out_patient))
        && report.folds.iter().map(|f| f.n_samples).sum::<usize>() == samples.len()
        && report.pooled.total() as usize == samples.len();
    let no_leak = report.folds.iter().all(|f| {
        let train: BTreeSet<&str> = f.train_patients.iter().map(String::as_str).collect();
        !train.contains(f.held_out_patient.as_str())
            && train.len() + 1 == all.len()
            && f.n_train_samples + f.n_samples == samples.len()
    });
    LopoIntegrity {
        patients: all.len(),
        folds: report.folds.len(),
        partition,
        no_leak,
    }
}
