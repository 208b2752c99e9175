//! Confusion-matrix metrics and the leave-one-patient-out harness.

mod lopo;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dsp::{DspError, Sample};
use crate::nn::{batch_tensor, ModelParams, NnError, Tensor};
use crate::train::TrainError;
use crate::Label;

pub use lopo::{lopo, lopo_samples, lopo_samples_with, CvReport, FoldReport};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("confusion matrix is empty")]
    EmptyConfusion,
    #[error("leave-one-patient-out needs at least two patients and both classes: {0}")]
    InsufficientPatients(String),
    #[error(transparent)]
    Train(#[from] TrainError),
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error(transparent)]
    Dsp(#[from] DspError),
}

/// Counts with IMI as the positive class.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: u64,
    pub tn: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl Confusion {
    pub fn from_labels(truth: &[Label], predicted: &[Label]) -> Self {
        let mut c = Self::default();
        for (&t, &p) in truth.iter().zip(predicted) {
            match (t, p) {
                (Label::Imi, Label::Imi) => c.tp += 1,
                (Label::Hc, Label::Hc) => c.tn += 1,
                (Label::Hc, Label::Imi) => c.fp += 1,
                (Label::Imi, Label::Hc) => c.fn_ += 1,
            }
        }
        c
    }

    pub fn total(&self) -> u64 {
        self.tp + self.tn + self.fp + self.fn_
    }

    pub fn merge(&mut self, other: &Confusion) {
        self.tp += other.tp;
        self.tn += other.tn;
        self.fp += other.fp;
        self.fn_ += other.fn_;
    }

    /// Two-by-two layout with actual classes as rows and predictions as columns.
    pub fn table(&self) -> String {
        format!(
            "                 Predicted\n                 {:>8} {:>8}\nActual   HC      {:>8} {:>8}\n         IMI     {:>8} {:>8}\n",
            "HC", "IMI", self.tn, self.fp, self.fn_, self.tp
        )
    }
}

/// Accuracy, sensitivity and specificity in percent. Sensitivity is absent without IMI
/// samples, specificity without HC samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub ac: f64,
    pub se: Option<f64>,
    pub sp: Option<f64>,
}

pub fn metrics(c: &Confusion) -> Result<Metrics, EvalError> {
    let total = c.total();
    if total == 0 {
        return Err(EvalError::EmptyConfusion);
    }
    let pct = |num: u64, den: u64| (den > 0).then(|| num as f64 / den as f64 * 100.0);
    Ok(Metrics {
        ac: (c.tp + c.tn) as f64 / total as f64 * 100.0,
        se: pct(c.tp, c.tp + c.fn_),
        sp: pct(c.tn, c.tn + c.fp),
    })
}

/// Argmax decision per row; a 0.5/0.5 tie is IMI.
pub fn predict_labels(probs: &Tensor) -> Vec<Label> {
    let rows = probs.shape().first().copied().unwrap_or(0);
    (0..rows).map(|r| Label::from_probs(probs.row(r))).collect()
}

/// Inference-mode class probabilities `[N, 2]` for `samples`, evaluated in chunks.
pub fn predict_probs<'a, I>(params: &ModelParams, samples: I, chunk: usize) -> Result<Tensor, NnError>
where
    I: IntoIterator<Item = &'a Sample>,
{
    let samples: Vec<&Sample> = samples.into_iter().collect();
    let k = params.arch.n_classes;
    let mut out = Vec::with_capacity(samples.len() * k);
    for part in samples.chunks(chunk.max(1)) {
        let seg = part[0].seg_len;
        let x = batch_tensor(part.iter().map(|s| s.x.as_slice()), params.arch.n_leads, seg)?;
        out.extend_from_slice(params.infer(&x)?.probs.data());
    }
    Tensor::from_vec(&[samples.len(), k], out)
}
