//! Inferior myocardial infarction detection from three-lead ECG.
//!
//! The crate is organized as a pipeline:
//!
//! - [`ingest`]: WFDB header/format-16 parsing, diagnosis labelling, patient grouping,
//!   and a synthetic ECG generator for desk-scale experiments.
//! - [`dsp`]: resampling, two-stage median baseline removal, Savitzky-Golay smoothing,
//!   and segmentation into fixed-length three-lead samples.
//! - [`nn`]: a small dense-tensor engine with the layers of the shallow inception
//!   network and their analytic gradients.
//! - [`train`]: loss, Adam, reduce-on-plateau schedule, early stopping, and the
//!   mini-batch training loop.
//! - [`eval`]: confusion matrix metrics and the leave-one-patient-out harness.
//! - [`featquality`]: geometric separability index and intra-class distance of
//!   the pooled feature vectors.
//!
//! All numerics run in `f64`. Files on disk store `f32` blobs.

pub mod blob;
pub mod dsp;
pub mod error;
pub mod eval;
pub mod featquality;
pub mod ingest;
pub mod nn;
pub mod train;

mod label;

pub use error::{Error, Result};
pub use label::Label;

pub use dsp::{make_samples, PipelineConfig, Sample};
pub use eval::{lopo, metrics, Confusion, CvReport, FoldReport, Metrics};
pub use featquality::{extract_features, gsi, intra_class_distance, FeatureSet};
pub use ingest::{Diagnosis, EcgRecord, PatientSet, RecordHeader};
pub use nn::{Architecture, Mode, ModelParams, Tensor};
pub use train::{fit, TrainConfig, TrainLog};
