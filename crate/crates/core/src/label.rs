use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Class of a single corn kernel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum KernelLabel {
    Normal,
    Abnormal,
}

impl KernelLabel {
    pub const ALL: [KernelLabel; 2] = [KernelLabel::Normal, KernelLabel::Abnormal];

    /// Training target: Normal is the positive class.
    pub fn encode(self) -> f64 {
        match self {
            KernelLabel::Normal => 1.0,
            KernelLabel::Abnormal => 0.0,
        }
    }

    /// Inverse of [`encode`](Self::encode); only exact 0 or 1 are accepted.
    pub fn decode(value: f64) -> Result<Self> {
        if value == 1.0 {
            Ok(KernelLabel::Normal)
        } else if value == 0.0 {
            Ok(KernelLabel::Abnormal)
        } else {
            Err(Error::invalid(format!("target {value} is neither 0 nor 1")))
        }
    }

    /// Lower-case directory name used by the dataset layout.
    pub fn dir_name(self) -> &'static str {
        match self {
            KernelLabel::Normal => "normal",
            KernelLabel::Abnormal => "abnormal",
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            KernelLabel::Normal => "Normal",
            KernelLabel::Abnormal => "Abnormal",
        }
    }
}

impl fmt::Display for KernelLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for KernelLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "normal" => Ok(KernelLabel::Normal),
            "abnormal" => Ok(KernelLabel::Abnormal),
            _ => Err(Error::invalid(format!("unknown label {s:?}"))),
        }
    }
}
