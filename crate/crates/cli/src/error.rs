use std::path::Path;

use thiserror::Error;

/// CLI failure classes, each with a fixed process exit code:
/// 2 input-format, 3 configuration, 4 evaluation-undefined.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("input error: {0}")]
    Input(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("evaluation undefined: {0}")]
    EvalUndefined(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::Config(_) => 3,
            CliError::EvalUndefined(_) => 4,
        }
    }
}

impl From<tmuad_core::Error> for CliError {
    fn from(e: tmuad_core::Error) -> Self {
        match e {
            tmuad_core::Error::SingleClassLabels => CliError::EvalUndefined(e.to_string()),
            other => CliError::Input(other.to_string()),
        }
    }
}

impl From<tmuad_synth::SynthError> for CliError {
    fn from(e: tmuad_synth::SynthError) -> Self {
        match e {
            tmuad_synth::SynthError::Core(c) => c.into(),
            other => CliError::Config(other.to_string()),
        }
    }
}

pub fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Input(format!("{}: {e}", path.display()))
}

/// serde_json reports line/column; the byte offset is recomputed so format
/// errors can name an exact position in the file.
pub fn json_err(path: &Path, bytes: &[u8], e: serde_json::Error) -> CliError {
    let (line, column) = (e.line(), e.column());
    let mut offset = 0usize;
    let mut seen_lines = 1usize;
    for (i, &b) in bytes.iter().enumerate() {
        if seen_lines == line {
            offset = i + column.saturating_sub(1);
            break;
        }
        if b == b'\n' {
            seen_lines += 1;
        }
    }
    CliError::Input(format!(
        "{}: malformed JSON at byte {offset} (line {line}, column {column}): {e}",
        path.display()
    ))
}

pub type Result<T> = std::result::Result<T, CliError>;
