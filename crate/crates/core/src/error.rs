use std::fmt;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Solver substage in which a non-finite value was first seen.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Explicit,
    Diffusion,
    Projection,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Explicit => "explicit update",
            Stage::Diffusion => "implicit diffusion",
            Stage::Projection => "pressure projection",
        })
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, key: Option<String>, message: String },

    #[error("pressure right-hand side is incompatible: mean {mean:e} exceeds {tolerance:e}")]
    Incompatible { mean: f64, tolerance: f64 },

    #[error("numerical blow-up during {stage} at step {step}")]
    BlowUp { stage: Stage, step: usize },

    #[error("scenario `{scenario}`: {source}")]
    Scenario {
        scenario: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn parse(line: usize, key: Option<&str>, message: impl Into<String>) -> Self {
        Error::Parse { line, key: key.map(str::to_owned), message: message.into() }
    }

    /// The innermost error, looking through scenario wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Scenario { source, .. } => source.root(),
            other => other,
        }
    }
}
