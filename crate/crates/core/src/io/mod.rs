//! Problem file readers/writers and the JSON solution report.

mod cbf;
mod json;
mod sdpa;

use thiserror::Error;

use crate::model::ModelError;

pub use cbf::{read_cbf, write_cbf, CbfCone, CbfProblem};
pub use json::{solution_json, solution_value, write_solution_json, SOLUTION_KEYS};
pub use sdpa::{read_sdpa, sdpa_needs_complex, write_sdpa, SdpaEntry, SdpaProblem};

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("line {line}: unsupported cone `{keyword}`")]
    UnsupportedCone { line: usize, keyword: String },
    #[error("model cannot be written in this format: {0}")]
    Unrepresentable(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

pub(crate) fn perr<T>(line: usize, msg: impl Into<String>) -> Result<T, FormatError> {
    Err(FormatError::Parse { line, msg: msg.into() })
}

/// Input formats recognized by file suffix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Sdpa { complex: bool },
    Cbf,
}

impl Format {
    pub fn from_path(path: &str) -> Option<Format> {
        let lower = path.to_ascii_lowercase();
        if lower.ends_with(".dat-s") {
            Some(Format::Sdpa { complex: false })
        } else if lower.ends_with(".dat-c") {
            Some(Format::Sdpa { complex: true })
        } else if lower.ends_with(".cbf") {
            Some(Format::Cbf)
        } else {
            None
        }
    }
}

/// 17 significant digits, enough to reproduce every `f64` exactly.
pub(crate) fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Lines with their 1-based numbers, CR stripped.
pub(crate) fn numbered_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.split('\n').enumerate().map(|(i, l)| (i + 1, l.strip_suffix('\r').unwrap_or(l)))
}

pub(crate) fn parse_num<T: std::str::FromStr>(tok: &str, line: usize, what: &str) -> Result<T, FormatError> {
    tok.parse::<T>().or_else(|_| perr(line, format!("invalid {what} `{tok}`")))
}
