//! Synthetic three-lead ECG for desk-scale experiments.
//!
//! Each beat is a sum of Gaussian bumps (P, Q, R, S, T). The IMI variant deepens and
//! widens the Q wave and inverts the T wave on all three inferior leads.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::{Diagnosis, EcgRecord, RecordHeader, SignalSpec, StorageFormat};
use crate::Label;

/// Canonical lead names in sample order.
pub const LEADS: [&str; 3] = ["ii", "iii", "avf"];

const LEAD_GAIN: [f64; 3] = [1.0, 0.55, 0.78];
const ADC_GAIN: f64 = 2000.0;

#[derive(Debug, Clone, Copy)]
pub struct SynthOptions {
    /// Standard deviation of additive white noise, mV.
    pub noise_std: f64,
    /// Amplitude of the sinusoidal baseline drift, mV.
    pub drift_amp: f64,
}

impl Default for SynthOptions {
    fn default() -> Self {
        Self {
            noise_std: 0.02,
            drift_amp: 0.15,
        }
    }
}

impl SynthOptions {
    pub fn clean() -> Self {
        Self {
            noise_std: 0.0,
            drift_amp: 0.0,
        }
    }
}

/// (offset from R peak in s, amplitude in mV, width in s)
type Bump = (f64, f64, f64);

fn template(label: Label) -> [Bump; 5] {
    let p = (-0.20, 0.12, 0.025);
    let r = (0.0, 1.1, 0.011);
    let s = (0.035, -0.22, 0.010);
    match label {
        Label::Hc => [p, (-0.035, -0.08, 0.010), r, s, (0.28, 0.30, 0.045)],
        Label::Imi => [p, (-0.04, -0.45, 0.018), (0.0, 0.85, 0.011), s, (0.28, -0.25, 0.05)],
    }
}

fn beat_value(bumps: &[Bump; 5], dt: f64) -> f64 {
    bumps
        .iter()
        .map(|&(mu, a, w)| {
            let z = (dt - mu) / w;
            a * (-0.5 * z * z).exp()
        })
        .sum()
}

pub fn synth_record(label: Label, duration: f64, rate: f64, seed: u64) -> EcgRecord {
    synth_record_with(&SynthOptions::default(), label, duration, rate, seed)
}

/// Deterministic in `(opts, label, duration, rate, seed)`; each lead has `round(duration * rate)` samples.
pub fn synth_record_with(opts: &SynthOptions, label: Label, duration: f64, rate: f64, seed: u64) -> EcgRecord {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = (duration * rate).round().max(0.0) as usize;

    let bpm = 72.0 + rng.random_range(-4.0..4.0);
    let rr = 60.0 / bpm;
    let scale = rng.random_range(0.85..1.15);
    let bumps = template(label);

    let mut beats = Vec::new();
    let mut t = rng.random_range(0.0..rr);
    while t < duration + 1.0 {
        beats.push(t);
        t += rr * (1.0 + 0.02 * rng.random_range(-1.0..1.0));
    }

    let mut clean = vec![0.0; n];
    let (lo, hi) = (-0.45, 0.6);
    for &bt in &beats {
        let start = (((bt + lo) * rate).floor().max(0.0)) as usize;
        let end = (((bt + hi) * rate).ceil().max(0.0) as usize).min(n);
        for (i, v) in clean.iter_mut().enumerate().take(end).skip(start) {
            *v += beat_value(&bumps, i as f64 / rate - bt);
        }
    }

    let noise = Normal::new(0.0, opts.noise_std.max(0.0)).expect("finite std");
    let mut leads = BTreeMap::new();
    for (name, gain) in LEADS.iter().zip(LEAD_GAIN) {
        let f = rng.random_range(0.1..0.45);
        let phase = rng.random_range(0.0..std::f64::consts::TAU);
        let series = clean
            .iter()
            .enumerate()
            .map(|(i, &c)| {
                let t = i as f64 / rate;
                let drift = opts.drift_amp * (std::f64::consts::TAU * f * t + phase).sin();
                let eps = if opts.noise_std > 0.0 {
                    noise.sample(&mut rng)
                } else {
                    0.0
                };
                scale * gain * c + drift + eps
            })
            .collect();
        leads.insert((*name).to_string(), series);
    }

    EcgRecord {
        patient_id: format!("synth{seed:04}"),
        record_name: format!("s{seed:04}"),
        sampling_rate: rate,
        leads,
        diagnosis: match label {
            Label::Hc => Diagnosis::HealthyControl,
            Label::Imi => Diagnosis::InferiorMI,
        },
    }
}

/// PTB-style header comments for a diagnosis.
pub fn diagnosis_comments(diagnosis: Diagnosis) -> Vec<String> {
    match diagnosis {
        Diagnosis::HealthyControl => vec!["# Reason for admission: Healthy control".into()],
        Diagnosis::InferiorMI => vec![
            "# Reason for admission: Myocardial infarction".into(),
            "# Acute infarction (localization): inferior".into(),
        ],
        Diagnosis::Other => vec!["# Reason for admission: n/a".into()],
    }
}

/// Encodes a record as a WFDB header plus format-16 payload (gain 2000 ADC/mV, baseline 0).
pub fn to_wfdb(record: &EcgRecord) -> (RecordHeader, Vec<u8>) {
    let file_name = format!("{}.dat", record.record_name);
    let names: Vec<&String> = record.leads.keys().collect();
    let n_samples = record.leads.values().next().map_or(0, Vec::len);
    let raw: Vec<Vec<i16>> = record
        .leads
        .values()
        .map(|s| {
            s.iter()
                .map(|v| (v * ADC_GAIN).round().clamp(f64::from(i16::MIN), f64::from(i16::MAX)) as i16)
                .collect()
        })
        .collect();
    let header = RecordHeader {
        record_name: record.record_name.clone(),
        n_signals: names.len(),
        sampling_rate: record.sampling_rate,
        n_samples,
        signal_specs: names
            .iter()
            .map(|name| SignalSpec {
                file_name: file_name.clone(),
                lead_name: (*name).clone(),
                format: StorageFormat::Fmt16,
                gain: ADC_GAIN,
                baseline: 0,
                units: "mV".into(),
            })
            .collect(),
        comments: diagnosis_comments(record.diagnosis),
    };
    (header, super::interleave_fmt16(&raw))
}
