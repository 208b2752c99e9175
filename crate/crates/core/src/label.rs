use std::fmt;

use serde::{Deserialize, Serialize};

/// Binary class of a sample or patient. IMI is the positive class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Label {
    Hc = 0,
    Imi = 1,
}

impl Label {
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        match i {
            0 => Some(Label::Hc),
            1 => Some(Label::Imi),
            _ => None,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::Hc => f.write_str("HC"),
            Label::Imi => f.write_str("IMI"),
        }
    }
}

impl Label {
    /// Argmax of `[p_hc, p_imi]`; an exact tie goes to IMI.
    pub fn from_probs(row: &[f64]) -> Self {
        if row[1] >= row[0] {
            Label::Imi
        } else {
            Label::Hc
        }
    }
}
