//! Flat little-endian `f32` blobs shared by the dataset, checkpoint and feature files.

use std::io::{self, Write};
use std::path::Path;

pub fn encode_f32le(values: &[f64]) -> Vec<u8> {
    let mut out = Vec::with_capacity(values.len() * 4);
    for &v in values {
        out.extend_from_slice(&(v as f32).to_le_bytes());
    }
    out
}

pub fn decode_f32le(bytes: &[u8]) -> io::Result<Vec<f64>> {
    if bytes.len() % 4 != 0 {
        return Err(io::Error::new(
            io::ErrorKind::InvalidData,
            format!("blob length {} is not a multiple of 4", bytes.len()),
        ));
    }
    Ok(bytes
        .chunks_exact(4)
        .map(|c| f64::from(f32::from_le_bytes([c[0], c[1], c[2], c[3]])))
        .collect())
}

pub fn write_f32le(path: &Path, values: &[f64]) -> io::Result<()> {
    let mut f = io::BufWriter::new(std::fs::File::create(path)?);
    f.write_all(&encode_f32le(values))?;
    f.flush()
}

pub fn read_f32le(path: &Path) -> io::Result<Vec<f64>> {
    decode_f32le(&std::fs::read(path)?)
}

/// Path of a sibling file named `name` next to `manifest`.
pub fn sibling(manifest: &Path, name: &str) -> std::path::PathBuf {
    manifest.parent().unwrap_or_else(|| Path::new(".")).join(name)
}

/// Blob file name paired with a manifest: same stem, `.bin` extension.
pub fn blob_name_for(manifest: &Path) -> String {
    let stem = manifest
        .file_stem()
        .map_or_else(|| "data".into(), |s| s.to_string_lossy().into_owned());
    format!("{stem}.bin")
}
