use std::path::PathBuf;

/// Errors produced anywhere in the simulator, the verification bench or the harness.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid coefficient: {what} at v = {v} (value {value})")]
    InvalidCoefficient { what: String, v: f64, value: f64 },

    #[error("field belongs to a different grid")]
    GridMismatch,

    #[error("linear solver stalled after {iterations} iterations (relative residual {residual:e})")]
    SolverStall { iterations: usize, residual: f64 },

    #[error("positivity failure: min u = {min:e} after the density stage")]
    PositivityFailure { min: f64 },

    #[error("invalid configuration: {field}: {message}")]
    InvalidConfig { field: String, message: String },

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },

    #[error("window too short: series spans {span} but tau = {tau}")]
    WindowTooShort { span: f64, tau: f64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("snapshot format: {0}")]
    Snapshot(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::InvalidConfig {
            field: field.into(),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
