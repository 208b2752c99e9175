//! Format-16 signal payloads.

use std::collections::BTreeMap;

use super::{IngestError, RecordHeader};

/// Splits an interleaved format-16 payload into one raw series per signal.
pub fn deinterleave_fmt16(bytes: &[u8], n_signals: usize) -> Result<Vec<Vec<i16>>, IngestError> {
    let frame = n_signals * 2;
    if n_signals == 0 || bytes.len() % frame != 0 {
        return Err(IngestError::LengthMismatch {
            expected: frame,
            actual: bytes.len(),
        });
    }
    let n = bytes.len() / frame;
    let mut out = vec![Vec::with_capacity(n); n_signals];
    for chunk in bytes.chunks_exact(frame) {
        for (s, pair) in chunk.chunks_exact(2).enumerate() {
            out[s].push(i16::from_le_bytes([pair[0], pair[1]]));
        }
    }
    Ok(out)
}

/// Inverse of [`deinterleave_fmt16`]. All series must share one length.
pub fn interleave_fmt16(signals: &[Vec<i16>]) -> Vec<u8> {
    let n = signals.first().map_or(0, Vec::len);
    debug_assert!(signals.iter().all(|s| s.len() == n));
    let mut out = Vec::with_capacity(n * signals.len() * 2);
    for t in 0..n {
        for s in signals {
            out.extend_from_slice(&s[t].to_le_bytes());
        }
    }
    out
}

/// Decodes a `.dat` payload into physical units: `(raw - baseline) / gain`.
pub fn read_signals(header: &RecordHeader, bytes: &[u8]) -> Result<BTreeMap<String, Vec<f64>>, IngestError> {
    if let Some(first) = header.signal_specs.first() {
        if header.signal_specs.iter().any(|s| s.file_name != first.file_name) {
            return Err(IngestError::UnsupportedFormat(
                "signals spread over several files".into(),
            ));
        }
    }
    let expected = header.n_signals * header.n_samples * 2;
    if bytes.len() != expected {
        return Err(IngestError::LengthMismatch {
            expected,
            actual: bytes.len(),
        });
    }
    let raw = deinterleave_fmt16(bytes, header.n_signals)?;
    Ok(header
        .signal_specs
        .iter()
        .zip(raw)
        .map(|(spec, series)| {
            let base = f64::from(spec.baseline);
            let mv = series.into_iter().map(|v| (f64::from(v) - base) / spec.gain).collect();
            (spec.lead_name.clone(), mv)
        })
        .collect())
}
