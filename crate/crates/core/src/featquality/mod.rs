//! Separability of learned feature vectors: geometric separability index and mean
//! within-class Euclidean distance.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::blob;
use crate::dsp::Sample;
use crate::nn::{batch_tensor, ModelParams, NnError};
use crate::Label;

#[derive(Debug, Error)]
pub enum FeatError {
    #[error("need at least {needed} feature vectors, got {got}")]
    TooFewVectors { needed: usize, got: usize },
    #[error("feature vector {index} has dimension {got}, expected {expected}")]
    DimensionMismatch { index: usize, got: usize, expected: usize },
    #[error("{vectors} vectors but {labels} labels")]
    LabelCount { vectors: usize, labels: usize },
    #[error("malformed feature dump: {0}")]
    Dump(String),
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Labeled feature vectors of a common dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSet {
    vectors: Vec<Vec<f64>>,
    labels: Vec<Label>,
}

impl FeatureSet {
    pub fn new(vectors: Vec<Vec<f64>>, labels: Vec<Label>) -> Result<Self, FeatError> {
        if vectors.len() != labels.len() {
            return Err(FeatError::LabelCount {
                vectors: vectors.len(),
                labels: labels.len(),
            });
        }
        if let Some(first) = vectors.first() {
            let d = first.len();
            if let Some((index, v)) = vectors.iter().enumerate().find(|(_, v)| v.len() != d) {
                return Err(FeatError::DimensionMismatch {
                    index,
                    got: v.len(),
                    expected: d,
                });
            }
        }
        Ok(Self { vectors, labels })
    }

    pub fn vectors(&self) -> &[Vec<f64>] {
        &self.vectors
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.vectors.first().map_or(0, Vec::len)
    }

    pub fn count(&self, class: Label) -> usize {
        self.labels.iter().filter(|&&l| l == class).count()
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Pooled GAP feature vectors from an inference-mode forward pass.
pub fn extract_features(samples: &[Sample], params: &ModelParams) -> Result<FeatureSet, FeatError> {
    let mut vectors = Vec::with_capacity(samples.len());
    for part in samples.chunks(256) {
        let x = batch_tensor(
            part.iter().map(|s| s.x.as_slice()),
            params.arch.n_leads,
            part[0].seg_len,
        )?;
        let feats = params.infer(&x)?.features;
        vectors.extend((0..part.len()).map(|r| feats.row(r).to_vec()));
    }
    FeatureSet::new(vectors, samples.iter().map(|s| s.label).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GsiReport {
    pub gsi: f64,
    /// Vectors with an exact duplicate carrying the other label.
    pub duplicate_conflicts: usize,
}

/// Fraction of vectors whose nearest other vector has the same label. Among equidistant
/// neighbours the lowest index wins.
pub fn gsi_report(fs: &FeatureSet) -> Result<GsiReport, FeatError> {
    let n = fs.len();
    if n < 2 {
        return Err(FeatError::TooFewVectors { needed: 2, got: n });
    }
    let v = &fs.vectors;
    let per_row: Vec<(bool, bool)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut best = (f64::INFINITY, usize::MAX);
            let mut conflict = false;
            for j in (0..n).filter(|&j| j != i) {
                let d = sq_dist(&v[i], &v[j]);
                if d < best.0 {
                    best = (d, j);
                }
                if d == 0.0 && fs.labels[j] != fs.labels[i] {
                    conflict = true;
                }
            }
            (fs.labels[best.1] == fs.labels[i], conflict)
        })
        .collect();
    let hits = per_row.iter().filter(|r| r.0).count();
    let duplicate_conflicts = per_row.iter().filter(|r| r.1).count();
    if duplicate_conflicts > 0 {
        log::warn!("{duplicate_conflicts} feature vectors have an identical vector with the other label");
    }
    Ok(GsiReport {
        gsi: hits as f64 / n as f64,
        duplicate_conflicts,
    })
}

pub fn gsi(fs: &FeatureSet) -> Result<f64, FeatError> {
    gsi_report(fs).map(|r| r.gsi)
}

/// Mean Euclidean distance over unordered pairs of distinct vectors of `class`.
pub fn intra_class_distance(fs: &FeatureSet, class: Label) -> Result<f64, FeatError> {
    let members: Vec<&[f64]> = fs
        .vectors
        .iter()
        .zip(&fs.labels)
        .filter(|(_, &l)| l == class)
        .map(|(v, _)| v.as_slice())
        .collect();
    let n = members.len();
    if n < 2 {
        return Err(FeatError::TooFewVectors { needed: 2, got: n });
    }
    let row_sums: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| members[i + 1..].iter().map(|b| sq_dist(members[i], b).sqrt()).sum())
        .collect();
    let pairs = (n * (n - 1) / 2) as f64;
    Ok(row_sums.iter().sum::<f64>() / pairs)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureQuality {
    pub n_hc: usize,
    pub n_imi: usize,
    pub dim: usize,
    pub gsi: f64,
    pub duplicate_conflicts: usize,
    pub intra_hc: f64,
    pub intra_imi: f64,
}

impl FeatureQuality {
    pub fn compute(fs: &FeatureSet) -> Result<Self, FeatError> {
        let g = gsi_report(fs)?;
        Ok(Self {
            n_hc: fs.count(Label::Hc),
            n_imi: fs.count(Label::Imi),
            dim: fs.dim(),
            gsi: g.gsi,
            duplicate_conflicts: g.duplicate_conflicts,
            intra_hc: intra_class_distance(fs, Label::Hc)?,
            intra_imi: intra_class_distance(fs, Label::Imi)?,
        })
    }

    /// One-row summary in the `Method | GSI | D_HC | D_IMI` layout.
    pub fn table(&self, method: &str) -> String {
        let w = method.len().max(6);
        format!(
            "{:<w$} | {:>6} | {:>8} | {:>8}\n{:<w$} | {:>6.4} | {:>8.4} | {:>8.4}\n",
            "Method", "GSI", "D_HC", "D_IMI", method, self.gsi, self.intra_hc, self.intra_imi
        )
    }
}

pub const FEATURES_FORMAT: &str = "imicnn-features/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureEntry {
    pub patient_id: String,
    pub record: String,
    pub segment_index: usize,
    pub label: Label,
}

/// JSON side of a feature dump; the sibling blob holds `n * dim` `f32` values row by row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureManifest {
    pub format: String,
    pub n: usize,
    pub dim: usize,
    pub dtype: String,
    pub blob: String,
    pub entries: Vec<FeatureEntry>,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> FeatError + '_ {
    move |source| FeatError::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub fn write_features(path: &Path, fs: &FeatureSet, samples: &[Sample]) -> Result<FeatureManifest, FeatError> {
    if samples.len() != fs.len() {
        return Err(FeatError::LabelCount {
            vectors: fs.len(),
            labels: samples.len(),
        });
    }
    let blob_name = blob::blob_name_for(path);
    let manifest = FeatureManifest {
        format: FEATURES_FORMAT.into(),
        n: fs.len(),
        dim: fs.dim(),
        dtype: "f32le".into(),
        blob: blob_name.clone(),
        entries: samples
            .iter()
            .map(|s| FeatureEntry {
                patient_id: s.patient_id.clone(),
                record: s.record_name.clone(),
                segment_index: s.segment_index,
                label: s.label,
            })
            .collect(),
    };
    let flat: Vec<f64> = fs.vectors.iter().flatten().copied().collect();
    let blob_path = blob::sibling(path, &blob_name);
    blob::write_f32le(&blob_path, &flat).map_err(io_err(&blob_path))?;
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    std::fs::write(path, json).map_err(io_err(path))?;
    Ok(manifest)
}

pub fn read_features(path: &Path) -> Result<(FeatureManifest, FeatureSet), FeatError> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    let manifest: FeatureManifest = serde_json::from_str(&text).map_err(|e| FeatError::Dump(e.to_string()))?;
    if manifest.format != FEATURES_FORMAT || manifest.entries.len() != manifest.n {
        return Err(FeatError::Dump(format!("{}: bad header", path.display())));
    }
    let blob_path = blob::sibling(path, &manifest.blob);
    let flat = blob::read_f32le(&blob_path).map_err(io_err(&blob_path))?;
    if flat.len() != manifest.n * manifest.dim {
        return Err(FeatError::Dump(format!(
            "blob has {} values, expected {}",
            flat.len(),
            manifest.n * manifest.dim
        )));
    }
    let vectors = if manifest.dim == 0 {
        vec![Vec::new(); manifest.n]
    } else {
        flat.chunks(manifest.dim).map(<[f64]>::to_vec).collect()
    };
    let labels = manifest.entries.iter().map(|e| e.label).collect();
    let fs = FeatureSet::new(vectors, labels)?;
    Ok((manifest, fs))
}
