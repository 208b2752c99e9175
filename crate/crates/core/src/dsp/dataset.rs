//! Preprocessed dataset files: a JSON manifest plus a flat `f32` blob with
//! `3 * segment_len` values per sample (lead II, then III, then aVF).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{DspError, PipelineConfig, Sample};
use crate::blob;
use crate::ingest::LEADS;
use crate::Label;

pub const DATASET_FORMAT: &str = "imicnn-dataset/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleEntry {
    pub patient_id: String,
    pub record: String,
    pub segment_index: usize,
    pub label: Label,
    /// Byte offset of the sample in the blob.
    pub offset: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub format: String,
    pub seed: Option<u64>,
    pub leads: Vec<String>,
    pub segment_len: usize,
    pub values_per_sample: usize,
    pub dtype: String,
    pub blob: String,
    pub pipeline: PipelineConfig,
    pub samples: Vec<SampleEntry>,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> DspError + '_ {
    move |source| DspError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Writes `manifest_path` and its sibling blob. Output bytes depend only on the inputs.
pub fn write_dataset(
    manifest_path: &Path,
    samples: &[Sample],
    pipeline: &PipelineConfig,
    seed: Option<u64>,
) -> Result<DatasetManifest, DspError> {
    let seg = pipeline.segment_len;
    let vps = LEADS.len() * seg;
    let mut values = Vec::with_capacity(samples.len() * vps);
    let mut entries = Vec::with_capacity(samples.len());
    for (i, s) in samples.iter().enumerate() {
        if s.seg_len != seg || s.x.len() != vps {
            return Err(DspError::Dataset(format!(
                "sample {i} has {} values, expected {vps}",
                s.x.len()
            )));
        }
        entries.push(SampleEntry {
            patient_id: s.patient_id.clone(),
            record: s.record_name.clone(),
            segment_index: s.segment_index,
            label: s.label,
            offset: (i * vps * 4) as u64,
        });
        values.extend_from_slice(&s.x);
    }

    let manifest = DatasetManifest {
        format: DATASET_FORMAT.into(),
        seed,
        leads: LEADS.iter().map(|s| s.to_string()).collect(),
        segment_len: seg,
        values_per_sample: vps,
        dtype: "f32le".into(),
        blob: blob::blob_name_for(manifest_path),
        pipeline: pipeline.clone(),
        samples: entries,
    };
    let blob_path = blob::sibling(manifest_path, &manifest.blob);
    blob::write_f32le(&blob_path, &values).map_err(io_err(&blob_path))?;
    let json = serde_json::to_string_pretty(&manifest).map_err(|e| DspError::Dataset(e.to_string()))?;
    std::fs::write(manifest_path, json + "\n").map_err(io_err(manifest_path))?;
    Ok(manifest)
}

pub fn read_dataset(manifest_path: &Path) -> Result<(DatasetManifest, Vec<Sample>), DspError> {
    let text = std::fs::read_to_string(manifest_path).map_err(io_err(manifest_path))?;
    let manifest: DatasetManifest =
        serde_json::from_str(&text).map_err(|e| DspError::Dataset(format!("{}: {e}", manifest_path.display())))?;
    if manifest.format != DATASET_FORMAT {
        return Err(DspError::Dataset(format!(
            "unknown dataset format {:?}",
            manifest.format
        )));
    }
    let seg = manifest.segment_len;
    let vps = manifest.values_per_sample;
    if seg == 0 || vps != LEADS.len() * seg {
        return Err(DspError::Dataset(format!(
            "values_per_sample {vps} does not match 3 leads x {seg}"
        )));
    }
    let blob_path: PathBuf = blob::sibling(manifest_path, &manifest.blob);
    let values = blob::read_f32le(&blob_path).map_err(io_err(&blob_path))?;
    if values.len() != manifest.samples.len() * vps {
        return Err(DspError::Dataset(format!(
            "blob holds {} values, manifest describes {}",
            values.len(),
            manifest.samples.len() * vps
        )));
    }
    let samples = manifest
        .samples
        .iter()
        .map(|e| {
            let start = usize::try_from(e.offset).unwrap_or(usize::MAX) / 4;
            if e.offset % 4 != 0 || start + vps > values.len() {
                return Err(DspError::Dataset(format!("bad offset {} for {}", e.offset, e.record)));
            }
            Ok(Sample {
                x: values[start..start + vps].to_vec(),
                seg_len: seg,
                label: e.label,
                patient_id: e.patient_id.clone(),
                record_name: e.record.clone(),
                segment_index: e.segment_index,
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok((manifest, samples))
}
