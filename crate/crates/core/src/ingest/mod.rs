//! Record ingestion: WFDB parsing, lead selection, diagnosis labels, patient grouping.

mod diagnosis;
mod header;
mod signal;
mod synth;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::Label;

pub use diagnosis::{classify_diagnosis, Diagnosis, DEFAULT_LOCALIZATIONS};
pub use header::{parse_header, RecordHeader, SignalSpec, StorageFormat};
pub use signal::{deinterleave_fmt16, interleave_fmt16, read_signals};
pub use synth::{diagnosis_comments, synth_record, synth_record_with, to_wfdb, SynthOptions, LEADS};

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("malformed header: {0}")]
    MalformedHeader(String),
    #[error("unsupported format: {0}")]
    UnsupportedFormat(String),
    #[error("signal payload has {actual} octets, expected {expected}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("patient {0} has records with conflicting labels")]
    ConflictingLabels(String),
    #[error("record {0} is neither healthy control nor inferior MI")]
    UnlabeledRecord(String),
    #[error("record {record} lacks lead {lead}")]
    MissingLead { record: String, lead: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// One multi-lead recording in millivolts.
#[derive(Debug, Clone, PartialEq)]
pub struct EcgRecord {
    pub patient_id: String,
    pub record_name: String,
    pub sampling_rate: f64,
    pub leads: BTreeMap<String, Vec<f64>>,
    pub diagnosis: Diagnosis,
}

impl EcgRecord {
    /// Case-insensitive lead lookup.
    pub fn lead(&self, name: &str) -> Option<&[f64]> {
        self.leads
            .iter()
            .find(|(k, _)| k.eq_ignore_ascii_case(name))
            .map(|(_, v)| v.as_slice())
    }

    pub fn n_samples(&self) -> usize {
        self.leads.values().next().map_or(0, Vec::len)
    }

    /// Keeps only leads II, III and aVF under their canonical lowercase names.
    pub fn select_leads(mut self) -> Result<Self, IngestError> {
        let mut selected = BTreeMap::new();
        for lead in LEADS {
            let key = self
                .leads
                .keys()
                .find(|k| k.eq_ignore_ascii_case(lead))
                .cloned()
                .ok_or_else(|| IngestError::MissingLead {
                    record: self.record_name.clone(),
                    lead: lead.to_string(),
                })?;
            let series = self.leads.remove(&key).expect("key just found");
            selected.insert(lead.to_string(), series);
        }
        self.leads = selected;
        Ok(self)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Patient {
    pub patient_id: String,
    pub label: Label,
    pub records: Vec<EcgRecord>,
}

/// Labelled patients in ascending id order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PatientSet {
    patients: Vec<Patient>,
}

impl PatientSet {
    pub fn patients(&self) -> &[Patient] {
        &self.patients
    }

    pub fn len(&self) -> usize {
        self.patients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patients.is_empty()
    }

    pub fn n_records(&self) -> usize {
        self.patients.iter().map(|p| p.records.len()).sum()
    }
}

/// Resolves one label per patient, rejecting patients whose records disagree.
pub fn patient_labels<'a, I>(entries: I) -> Result<BTreeMap<String, Label>, IngestError>
where
    I: IntoIterator<Item = (&'a str, Label)>,
{
    let mut labels = BTreeMap::new();
    for (id, label) in entries {
        match labels.insert(id.to_string(), label) {
            Some(prev) if prev != label => return Err(IngestError::ConflictingLabels(id.to_string())),
            _ => {}
        }
    }
    Ok(labels)
}

pub fn build_patient_set(records: Vec<EcgRecord>) -> Result<PatientSet, IngestError> {
    let mut entries = Vec::with_capacity(records.len());
    for r in &records {
        let label = r
            .diagnosis
            .label()
            .ok_or_else(|| IngestError::UnlabeledRecord(r.record_name.clone()))?;
        entries.push((r.patient_id.as_str(), label));
    }
    let labels = patient_labels(entries)?;

    let mut grouped: BTreeMap<String, Vec<EcgRecord>> = BTreeMap::new();
    for r in records {
        grouped.entry(r.patient_id.clone()).or_default().push(r);
    }
    let patients = grouped
        .into_iter()
        .map(|(patient_id, records)| Patient {
            label: labels[&patient_id],
            patient_id,
            records,
        })
        .collect();
    Ok(PatientSet { patients })
}

fn read_file(path: &Path) -> Result<Vec<u8>, IngestError> {
    std::fs::read(path).map_err(|source| IngestError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_header(hea_path: &Path) -> Result<RecordHeader, IngestError> {
    parse_header(&read_file(hea_path)?)
}

/// Loads a record from its `.hea` path, keeping leads II, III and aVF.
///
/// The patient id is the name of the directory holding the header (PTB layout:
/// `patient001/s0010_re.hea`).
pub fn load_record<L: AsRef<str>>(hea_path: &Path, localizations: &[L]) -> Result<EcgRecord, IngestError> {
    let header = load_header(hea_path)?;
    let dir = hea_path.parent().unwrap_or_else(|| Path::new("."));
    let dat_name = header
        .signal_specs
        .first()
        .map(|s| s.file_name.clone())
        .unwrap_or_default();
    let bytes = read_file(&dir.join(dat_name))?;
    let leads = read_signals(&header, &bytes)?;
    let record = EcgRecord {
        patient_id: patient_id_for(hea_path),
        record_name: header.record_name.clone(),
        sampling_rate: header.sampling_rate,
        leads,
        diagnosis: classify_diagnosis(&header.comments, localizations),
    };
    record.select_leads()
}

/// Writes `record` as `<root>/<patient_id>/<record_name>.hea` plus its format-16 `.dat`.
pub fn write_record(root: &Path, record: &EcgRecord) -> Result<PathBuf, IngestError> {
    let dir = root.join(&record.patient_id);
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| IngestError::Io { path, source }
    };
    std::fs::create_dir_all(&dir).map_err(io(&dir))?;
    let (header, payload) = to_wfdb(record);
    let dat = dir.join(&header.signal_specs[0].file_name);
    std::fs::write(&dat, payload).map_err(io(&dat))?;
    let hea = dir.join(format!("{}.hea", record.record_name));
    std::fs::write(&hea, header.to_text()).map_err(io(&hea))?;
    Ok(hea)
}

pub fn patient_id_for(hea_path: &Path) -> String {
    hea_path
        .parent()
        .and_then(Path::file_name)
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "unknown".into())
}

/// All `.hea` files below `dir`, sorted by path.
pub fn find_headers(dir: &Path) -> Result<Vec<PathBuf>, IngestError> {
    let mut out = Vec::new();
    for entry in walkdir::WalkDir::new(dir).sort_by_file_name() {
        let entry = entry.map_err(|e| IngestError::Io {
            path: dir.to_path_buf(),
            source: e.into(),
        })?;
        if entry.file_type().is_file() && entry.path().extension().is_some_and(|e| e == "hea") {
            out.push(entry.into_path());
        }
    }
    Ok(out)
}

/// Synthetic cohort: `n_hc` healthy then `n_imi` IMI patients named `patient000`, `patient001`, ...
pub fn synth_patient_set(
    n_hc: usize,
    n_imi: usize,
    records_per_patient: usize,
    duration: f64,
    rate: f64,
    seed: u64,
) -> PatientSet {
    let mut records = Vec::new();
    for k in 0..n_hc + n_imi {
        let label = if k < n_hc { Label::Hc } else { Label::Imi };
        for r in 0..records_per_patient {
            let rec_seed = seed.wrapping_mul(10_007).wrapping_add((k * 101 + r) as u64);
            let mut rec = synth_record(label, duration, rate, rec_seed);
            rec.patient_id = format!("patient{k:03}");
            rec.record_name = format!("s{k:03}{r:02}");
            records.push(rec);
        }
    }
    build_patient_set(records).expect("synthetic labels are consistent")
}
