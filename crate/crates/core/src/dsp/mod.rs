//! Preprocessing chain: resample, baseline removal, smoothing, segmentation.

mod dataset;
mod median;
mod pipeline;
mod resample;
mod savgol;

use std::path::PathBuf;

use thiserror::Error;

pub use dataset::{read_dataset, write_dataset, DatasetManifest, SampleEntry, DATASET_FORMAT};
pub use median::{median_filter, remove_baseline};
pub use pipeline::{make_samples, process_lead, segment, PipelineConfig, Sample};
pub use resample::{design_filter, resample};
pub use savgol::{fit_weights, savgol, savgol_kernel};

#[derive(Debug, Error)]
pub enum DspError {
    #[error("empty input series")]
    EmptyInput,
    #[error("invalid resampling ratio {p}/{q}")]
    BadRatio { p: usize, q: usize },
    #[error("median window {0} must be odd and positive")]
    EvenWindow(usize),
    #[error("Savitzky-Golay frame {frame} must be odd and exceed order {order}")]
    BadFrame { order: usize, frame: usize },
    #[error("record {record} lacks lead {lead}")]
    MissingLead { record: String, lead: String },
    #[error("record sampled at {actual} Hz, pipeline expects {expected} Hz")]
    RateMismatch { expected: f64, actual: f64 },
    #[error("record {0} carries no HC/IMI label")]
    Unlabeled(String),
    #[error("invalid pipeline config: {0}")]
    InvalidConfig(String),
    #[error("dataset: {0}")]
    Dataset(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}
