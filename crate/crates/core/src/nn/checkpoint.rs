//! Model checkpoints: a JSON header plus a flat `f32` blob of every stored tensor in
//! [`ModelParams::state_tensors`] order.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Architecture, ModelParams, NnError};
use crate::blob;

pub const CHECKPOINT_FORMAT: &str = "imicnn-checkpoint/1";

const LAYOUT: &str = "for lead in (ii, iii, avf), for window ascending: conv_w[window,1,filters], \
conv_b[filters], bn_gamma[filters], bn_beta[filters], bn_running_mean[filters], bn_running_var[filters]; \
then dense_w[features,classes], dense_b[classes]";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointHeader {
    pub format: String,
    pub architecture: Architecture,
    pub trainable_count: usize,
    pub stored_count: usize,
    pub seed: u64,
    pub dtype: String,
    pub blob: String,
    pub layout: String,
}

fn io(path: &Path) -> impl FnOnce(std::io::Error) -> NnError + '_ {
    move |source| NnError::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub fn save_checkpoint(path: &Path, params: &ModelParams, seed: u64) -> Result<CheckpointHeader, NnError> {
    let values: Vec<f64> = params
        .state_tensors()
        .iter()
        .flat_map(|t| t.data().iter().copied())
        .collect();
    let header = CheckpointHeader {
        format: CHECKPOINT_FORMAT.into(),
        architecture: params.arch.clone(),
        trainable_count: params.trainable_count(),
        stored_count: values.len(),
        seed,
        dtype: "f32le".into(),
        blob: blob::blob_name_for(path),
        layout: LAYOUT.into(),
    };
    let blob_path = blob::sibling(path, &header.blob);
    blob::write_f32le(&blob_path, &values).map_err(io(&blob_path))?;
    let json = serde_json::to_string_pretty(&header).map_err(|e| NnError::Checkpoint(e.to_string()))?;
    std::fs::write(path, json + "\n").map_err(io(path))?;
    Ok(header)
}

pub fn load_checkpoint(path: &Path) -> Result<(CheckpointHeader, ModelParams), NnError> {
    let text = std::fs::read_to_string(path).map_err(io(path))?;
    let header: CheckpointHeader =
        serde_json::from_str(&text).map_err(|e| NnError::Checkpoint(format!("{}: {e}", path.display())))?;
    if header.format != CHECKPOINT_FORMAT {
        return Err(NnError::Checkpoint(format!(
            "unknown checkpoint format {:?}",
            header.format
        )));
    }
    let blob_path = blob::sibling(path, &header.blob);
    let values = blob::read_f32le(&blob_path).map_err(io(&blob_path))?;

    let mut params = ModelParams::init(&header.architecture, header.seed);
    let expected: usize = params.state_tensors().iter().map(|t| t.len()).sum();
    if values.len() != expected || header.stored_count != expected {
        return Err(NnError::Checkpoint(format!(
            "blob holds {} values, architecture needs {expected}",
            values.len()
        )));
    }
    let mut at = 0;
    for t in params.state_tensors_mut() {
        let n = t.len();
        t.data_mut().copy_from_slice(&values[at..at + n]);
        at += n;
    }
    Ok((header, params))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::Tensor;

    #[test]
    fn save_load_round_trip_at_f32() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        let mut p = ModelParams::init(&Architecture::default(), 17);
        p.leads[2][6].bn.running_mean = Tensor::full(&[4], 0.125);
        let header = save_checkpoint(&path, &p, 17).unwrap();
        assert_eq!(header.trainable_count, 2054);
        assert_eq!(header.stored_count, 2054 + 3 * 7 * 8);
        assert_eq!(
            std::fs::metadata(dir.path().join("model.bin")).unwrap().len(),
            4 * header.stored_count as u64
        );

        let (h2, q) = load_checkpoint(&path).unwrap();
        assert_eq!(h2, header);
        for (a, b) in p.state_tensors().iter().zip(q.state_tensors()) {
            assert_eq!(a.shape(), b.shape());
            for (x, y) in a.data().iter().zip(b.data()) {
                assert_eq!(*x as f32, *y as f32);
            }
        }
        assert_eq!(q.leads[2][6].bn.running_mean.data(), &[0.125; 4]);
    }

    #[test]
    fn missing_checkpoint_is_io_error() {
        let err = load_checkpoint(Path::new("/nonexistent/model.json")).unwrap_err();
        assert!(matches!(err, NnError::Io { .. }));
    }
}
