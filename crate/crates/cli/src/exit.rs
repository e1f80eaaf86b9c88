//! Process exit codes and the error type carrying them.

use std::fmt;

pub const OK: u8 = 0;
/// Some inputs failed and were skipped.
pub const PARTIAL: u8 = 2;
/// A model could not be loaded or trained.
pub const MODEL: u8 = 3;
pub const USAGE: u8 = 64;
pub const IO: u8 = 74;

#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn usage(message: impl Into<String>) -> Self {
        Self {
            code: USAGE,
            message: message.into(),
        }
    }

    pub fn io(message: impl Into<String>) -> Self {
        Self {
            code: IO,
            message: message.into(),
        }
    }

    /// Any error while loading or fitting a model, except failures to write it.
    pub fn model(e: colorstat::Error) -> Self {
        Self {
            code: MODEL,
            message: e.to_string(),
        }
    }
}

impl From<colorstat::Error> for Failure {
    fn from(e: colorstat::Error) -> Self {
        use colorstat::Error as E;
        let code = match e {
            E::Io(_) | E::Decode { .. } | E::UnsupportedFormat(_) | E::Format { .. } => IO,
            _ => USAGE,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Self::io(e.to_string())
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}
