use serde::{Deserialize, Serialize};

use crate::Label;

pub const DEFAULT_LOCALIZATIONS: &[&str] = &["inferior"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Diagnosis {
    HealthyControl,
    InferiorMI,
    Other,
}

impl Diagnosis {
    pub fn label(self) -> Option<Label> {
        match self {
            Diagnosis::HealthyControl => Some(Label::Hc),
            Diagnosis::InferiorMI => Some(Label::Imi),
            Diagnosis::Other => None,
        }
    }
}

// Value of a "# Key: value" comment when the key matches case-insensitively.
fn comment_value<'a>(comment: &'a str, key: &str) -> Option<&'a str> {
    let body = comment.trim_start().trim_start_matches('#').trim_start();
    let (k, v) = body.split_once(':')?;
    k.trim().eq_ignore_ascii_case(key).then(|| v.trim())
}

/// Maps PTB header comments to a diagnosis.
///
/// `localizations` lists the acute-infarction localization values counted as inferior MI;
/// comparison is case-insensitive on the trimmed value.
pub fn classify_diagnosis<C: AsRef<str>, L: AsRef<str>>(comments: &[C], localizations: &[L]) -> Diagnosis {
    let mut reason = None;
    let mut localization = None;
    for c in comments {
        let c = c.as_ref();
        if let Some(v) = comment_value(c, "reason for admission") {
            reason = Some(v.to_ascii_lowercase());
        } else if let Some(v) = comment_value(c, "acute infarction (localization)") {
            localization = Some(v.to_ascii_lowercase());
        }
    }
    let Some(reason) = reason else {
        return Diagnosis::Other;
    };
    if reason.contains("healthy control") {
        return Diagnosis::HealthyControl;
    }
    if reason.contains("myocardial infarction") {
        if let Some(loc) = localization {
            if localizations
                .iter()
                .any(|l| l.as_ref().trim().eq_ignore_ascii_case(&loc))
            {
                return Diagnosis::InferiorMI;
            }
        }
    }
    Diagnosis::Other
}
