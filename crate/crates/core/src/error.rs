use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid value for `{field}`: {reason}")]
    Validation { field: String, reason: String },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("unknown {kind} `{name}` (available: {available})")]
    UnknownStrategy {
        kind: &'static str,
        name: String,
        available: String,
    },

    #[error("ladder integration failed at t = {time:.6e} s after {steps} steps: {reason}")]
    Integration {
        time: f64,
        steps: usize,
        reason: String,
    },

    #[error(
        "momentum ladder saturated: edge population {edge_population:.3e} with {states} states (cap {cap})"
    )]
    LadderSaturated {
        edge_population: f64,
        states: usize,
        cap: usize,
    },

    #[error("no common fringe extremum found; per-scan extrema: {0}")]
    ResonanceNotFound(String),

    #[error("degenerate scan set: {0}")]
    DegenerateScans(String),

    #[error("fit failed: {reason} (residual rms {residual_rms:.3e})")]
    Fit { reason: String, residual_rms: f64 },

    #[error("schedule error: {0}")]
    Schedule(String),

    #[error("parse error in {context}: {message}")]
    Parse { context: String, message: String },

    #[error("I/O error on {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn validation(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Validation {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn parse(context: impl Into<String>, message: impl ToString) -> Self {
        Error::Parse {
            context: context.into(),
            message: message.to_string(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
