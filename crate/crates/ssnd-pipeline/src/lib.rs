//! File formats, model adapters, the end-to-end pipeline runner, and the
//! command-line interface on top of `ssnd-core`.

pub mod cli;
pub mod config;
pub mod io;
pub mod model;
pub mod pipeline;
pub mod report;

use std::fmt;
use std::path::PathBuf;

/// Errors carry the pipeline stage or file they came from.
#[derive(Debug)]
pub enum PipelineError {
    Io { path: PathBuf, source: std::io::Error },
    Wav { path: PathBuf, message: String },
    Parse { path: PathBuf, line: usize, message: String },
    Format { path: PathBuf, message: String },
    Config(String),
    Stage { stage: &'static str, message: String },
}

impl PipelineError {
    pub fn stage(stage: &'static str, err: impl fmt::Display) -> Self {
        PipelineError::Stage { stage, message: err.to_string() }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        PipelineError::Io { path: path.into(), source }
    }
}

impl fmt::Display for PipelineError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PipelineError::Io { path, source } => write!(f, "{}: {source}", path.display()),
            PipelineError::Wav { path, message } => write!(f, "{}: {message}", path.display()),
            PipelineError::Parse { path, line, message } => {
                write!(f, "{}:{line}: {message}", path.display())
            }
            PipelineError::Format { path, message } => {
                write!(f, "{}: {message}", path.display())
            }
            PipelineError::Config(message) => write!(f, "config: {message}"),
            PipelineError::Stage { stage, message } => write!(f, "{stage}: {message}"),
        }
    }
}

impl std::error::Error for PipelineError {}

pub type Result<T> = std::result::Result<T, PipelineError>;
