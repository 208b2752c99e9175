//! WFDB `.hea` header parsing (single-segment records, storage format 16 only).

use std::fmt::Write as _;

use super::IngestError;

/// Default ADC gain used by WFDB when a signal line omits it.
const WFDB_DEFAULT_GAIN: f64 = 200.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StorageFormat {
    /// Interleaved little-endian signed 16-bit samples.
    Fmt16,
}

/// One signal line of a header.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalSpec {
    pub file_name: String,
    pub lead_name: String,
    pub format: StorageFormat,
    /// ADC units per physical unit (mV).
    pub gain: f64,
    /// ADC value corresponding to 0 mV.
    pub baseline: i32,
    pub units: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecordHeader {
    pub record_name: String,
    pub n_signals: usize,
    pub sampling_rate: f64,
    pub n_samples: usize,
    pub signal_specs: Vec<SignalSpec>,
    /// Comment lines, verbatim and in file order (including the leading `#`).
    pub comments: Vec<String>,
}

fn malformed(msg: impl Into<String>) -> IngestError {
    IngestError::MalformedHeader(msg.into())
}

/// Parses a WFDB header payload.
pub fn parse_header(bytes: &[u8]) -> Result<RecordHeader, IngestError> {
    let text = std::str::from_utf8(bytes).map_err(|_| malformed("header is not valid UTF-8"))?;

    let mut comments = Vec::new();
    let mut lines = Vec::new();
    for raw in text.lines() {
        let line = raw.trim_end_matches('\r');
        let trimmed = line.trim_start();
        if trimmed.starts_with('#') {
            comments.push(line.to_string());
        } else if !trimmed.is_empty() {
            lines.push(trimmed);
        }
    }

    let (record_line, signal_lines) = lines.split_first().ok_or_else(|| malformed("missing record line"))?;
    let fields: Vec<&str> = record_line.split_whitespace().collect();
    if fields.len() < 4 {
        return Err(malformed(format!(
            "record line needs name, signal count, rate and length: {record_line:?}"
        )));
    }

    let record_name = fields[0];
    if record_name.contains('/') {
        return Err(IngestError::UnsupportedFormat(format!(
            "multi-segment record {record_name}"
        )));
    }
    let n_signals: usize = fields[1]
        .parse()
        .map_err(|_| malformed(format!("bad signal count {:?}", fields[1])))?;
    if n_signals == 0 {
        return Err(malformed("record declares zero signals"));
    }
    let sampling_rate = parse_rate(fields[2])?;
    let n_samples: usize = fields[3]
        .parse()
        .map_err(|_| malformed(format!("bad sample count {:?}", fields[3])))?;

    if signal_lines.len() != n_signals {
        return Err(malformed(format!(
            "record declares {n_signals} signals but {} signal lines follow",
            signal_lines.len()
        )));
    }

    let signal_specs = signal_lines
        .iter()
        .enumerate()
        .map(|(i, line)| parse_signal_line(i, line))
        .collect::<Result<Vec<_>, _>>()?;

    Ok(RecordHeader {
        record_name: record_name.to_string(),
        n_signals,
        sampling_rate,
        n_samples,
        signal_specs,
        comments,
    })
}

// "1000", "1000/1000", "1000(0)" all mean 1000 Hz.
fn parse_rate(field: &str) -> Result<f64, IngestError> {
    let head = field.split(['/', '(']).next().unwrap_or_default();
    match head.parse::<f64>() {
        Ok(r) if r > 0.0 && r.is_finite() => Ok(r),
        _ => Err(malformed(format!("bad sampling rate {field:?}"))),
    }
}

fn parse_signal_line(index: usize, line: &str) -> Result<SignalSpec, IngestError> {
    let fields: Vec<&str> = line.split_whitespace().collect();
    if fields.len() < 2 {
        return Err(malformed(format!("signal line {index} too short: {line:?}")));
    }

    let format = match fields[1] {
        "16" => StorageFormat::Fmt16,
        other => return Err(IngestError::UnsupportedFormat(format!("storage format {other}"))),
    };

    let adc_zero: i32 = match fields.get(4) {
        Some(s) => s.parse().map_err(|_| malformed(format!("bad adc zero {s:?}")))?,
        None => 0,
    };

    let (gain, baseline, units) = match fields.get(2) {
        Some(spec) => parse_gain_field(spec, adc_zero)?,
        None => (WFDB_DEFAULT_GAIN, adc_zero, "mV".to_string()),
    };
    if gain == 0.0 {
        return Err(malformed(format!("signal {index} has zero gain")));
    }

    let lead_name = if fields.len() > 8 {
        fields[8..].join(" ")
    } else {
        format!("sig{index}")
    };

    Ok(SignalSpec {
        file_name: fields[0].to_string(),
        lead_name,
        format,
        gain,
        baseline,
        units,
    })
}

// gain[(baseline)][/units]
fn parse_gain_field(spec: &str, adc_zero: i32) -> Result<(f64, i32, String), IngestError> {
    let (gain_part, units) = match spec.split_once('/') {
        Some((g, u)) => (g, u.to_string()),
        None => (spec, "mV".to_string()),
    };
    let (gain_str, baseline) = match gain_part.split_once('(') {
        Some((g, rest)) => {
            let b = rest
                .strip_suffix(')')
                .and_then(|b| b.parse::<i32>().ok())
                .ok_or_else(|| malformed(format!("bad baseline in {spec:?}")))?;
            (g, b)
        }
        None => (gain_part, adc_zero),
    };
    let gain: f64 = gain_str.parse().map_err(|_| malformed(format!("bad gain {spec:?}")))?;
    if !gain.is_finite() {
        return Err(malformed(format!("bad gain {spec:?}")));
    }
    Ok((gain, baseline, units))
}

impl RecordHeader {
    /// Renders the header back to WFDB text. Parsing the result yields an equal header.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{} {} {} {}",
            self.record_name, self.n_signals, self.sampling_rate, self.n_samples
        );
        for s in &self.signal_specs {
            let _ = writeln!(
                out,
                "{} 16 {}({})/{} 16 {} 0 0 0 {}",
                s.file_name, s.gain, s.baseline, s.units, s.baseline, s.lead_name
            );
        }
        for c in &self.comments {
            let _ = writeln!(out, "{c}");
        }
        out
    }
}
