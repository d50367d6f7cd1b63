//! One error type for the whole binary; every failure is printed to stderr
//! as a single machine-readable JSON line before exiting nonzero.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    File {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: String,
        source: serde_json::Error,
    },
    #[error(transparent)]
    Event(#[from] evocular::EventError),
    #[error(transparent)]
    Detect(#[from] evocular::DetectError),
    #[error(transparent)]
    Stats(#[from] evocular::StatsError),
    #[error(transparent)]
    Liveness(#[from] evocular::LivenessError),
    #[error(transparent)]
    Eval(#[from] evocular::EvalError),
    #[error(transparent)]
    Synth(#[from] evocular::SynthError),
    /// Argument or file-content contract violations.
    #[error("{0}")]
    Invalid(String),
}

impl CliError {
    /// Stable machine-readable discriminant for the error JSON.
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::File { .. } => "io",
            CliError::Json { .. } => "json",
            CliError::Event(_) => "event",
            CliError::Detect(_) => "detect",
            CliError::Stats(_) => "stats",
            CliError::Liveness(_) => "liveness",
            CliError::Eval(_) => "eval",
            CliError::Synth(_) => "synth",
            CliError::Invalid(_) => "invalid",
        }
    }
}

pub fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Invalid(msg.into())
}
