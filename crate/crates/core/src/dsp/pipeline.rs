use serde::{Deserialize, Serialize};

use super::{remove_baseline, resample, savgol, DspError};
use crate::ingest::{EcgRecord, LEADS};
use crate::Label;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub fs_in: u32,
    pub fs_mid: u32,
    pub fs_out: u32,
    /// First median stage width, samples at `fs_mid`.
    pub median_w1: usize,
    /// Second median stage width, samples at `fs_mid`.
    pub median_w2: usize,
    pub sg_order: usize,
    pub sg_frame: usize,
    pub segment_len: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            fs_in: 1000,
            fs_mid: 250,
            fs_out: 64,
            median_w1: 125,
            median_w2: 249,
            sg_order: 3,
            sg_frame: 15,
            segment_len: 196,
        }
    }
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

// Up/down factors taking `from` Hz to `to` Hz.
fn ratio(from: u32, to: u32) -> (usize, usize) {
    let (p, q) = (to as usize, from as usize);
    let g = gcd(p, q);
    (p / g, q / g)
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<(), DspError> {
        let bad = |m: &str| Err(DspError::InvalidConfig(m.to_string()));
        if !(self.fs_in > self.fs_mid && self.fs_mid > self.fs_out && self.fs_out > 0) {
            return bad("rates must satisfy fs_in > fs_mid > fs_out > 0");
        }
        if self.median_w1 % 2 == 0 || self.median_w2 % 2 == 0 {
            return bad("median windows must be odd");
        }
        if self.sg_frame % 2 == 0 || self.sg_frame <= self.sg_order {
            return bad("sg_frame must be odd and larger than sg_order");
        }
        if self.segment_len == 0 {
            return bad("segment_len must be positive");
        }
        Ok(())
    }

    /// Samples per input length after both resampling stages.
    pub fn output_len(&self, n_in: usize) -> usize {
        let (p1, q1) = ratio(self.fs_in, self.fs_mid);
        let (p2, q2) = ratio(self.fs_mid, self.fs_out);
        ((n_in * p1).div_ceil(q1) * p2).div_ceil(q2)
    }

    pub fn samples_per_record(&self, n_in: usize) -> usize {
        self.output_len(n_in) / self.segment_len
    }
}

/// Non-overlapping windows of `seg_len`; a trailing remainder is dropped.
pub fn segment(x: &[f64], seg_len: usize) -> Vec<&[f64]> {
    if seg_len == 0 {
        return Vec::new();
    }
    x.chunks_exact(seg_len).collect()
}

/// One network input: leads II, III, aVF stacked lead-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    /// `3 * seg_len` values: lead II, then III, then aVF.
    pub x: Vec<f64>,
    pub seg_len: usize,
    pub label: Label,
    pub patient_id: String,
    pub record_name: String,
    pub segment_index: usize,
}

impl Sample {
    pub const N_LEADS: usize = 3;

    pub fn lead(&self, i: usize) -> &[f64] {
        &self.x[i * self.seg_len..(i + 1) * self.seg_len]
    }
}

/// Runs one lead through resample, baseline removal, smoothing and the second resample.
pub fn process_lead(x: &[f64], cfg: &PipelineConfig) -> Result<Vec<f64>, DspError> {
    let (p1, q1) = ratio(cfg.fs_in, cfg.fs_mid);
    let (p2, q2) = ratio(cfg.fs_mid, cfg.fs_out);
    let mid = resample(x, p1, q1)?;
    let flat = remove_baseline(&mid, cfg.median_w1, cfg.median_w2)?;
    let smooth = savgol(&flat, cfg.sg_order, cfg.sg_frame)?;
    resample(&smooth, p2, q2)
}

pub fn make_samples(record: &EcgRecord, cfg: &PipelineConfig) -> Result<Vec<Sample>, DspError> {
    cfg.validate()?;
    let label = record
        .diagnosis
        .label()
        .ok_or_else(|| DspError::Unlabeled(record.record_name.clone()))?;
    if record.sampling_rate != f64::from(cfg.fs_in) {
        return Err(DspError::RateMismatch {
            expected: f64::from(cfg.fs_in),
            actual: record.sampling_rate,
        });
    }

    let mut leads = Vec::with_capacity(LEADS.len());
    for name in LEADS {
        let series = record.lead(name).ok_or_else(|| DspError::MissingLead {
            record: record.record_name.clone(),
            lead: name.to_string(),
        })?;
        if cfg.samples_per_record(series.len()) == 0 {
            return Ok(Vec::new());
        }
        leads.push(process_lead(series, cfg)?);
    }

    let seg = cfg.segment_len;
    let n_seg = leads.iter().map(|l| l.len() / seg).min().unwrap_or(0);
    Ok((0..n_seg)
        .map(|k| {
            let mut x = Vec::with_capacity(LEADS.len() * seg);
            for l in &leads {
                x.extend_from_slice(&l[k * seg..(k + 1) * seg]);
            }
            Sample {
                x,
                seg_len: seg,
                label,
                patient_id: record.patient_id.clone(),
                record_name: record.record_name.clone(),
                segment_index: k,
            }
        })
        .collect())
}
