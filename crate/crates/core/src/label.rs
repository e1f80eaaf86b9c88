use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// Ground truth or predicted class. Generated images are the positive class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Real,
    Dng,
}

impl Label {
    /// Numeric code used in feature files: real = 0, dng = 1.
    pub fn code(self) -> i32 {
        match self {
            Label::Real => 0,
            Label::Dng => 1,
        }
    }

    pub fn from_code(code: i32) -> Option<Option<Label>> {
        match code {
            0 => Some(Some(Label::Real)),
            1 => Some(Some(Label::Dng)),
            -1 => Some(None),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Real => "real",
            Label::Dng => "dng",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "real" | "0" => Ok(Label::Real),
            "dng" | "1" => Ok(Label::Dng),
            other => Err(Error::InvalidHyperparameter(format!(
                "unknown label {other:?}"
            ))),
        }
    }
}
