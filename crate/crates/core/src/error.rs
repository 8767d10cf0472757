use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("position count must be odd, got {0}")]
    EvenPositions(usize),

    #[error("{what} {value} out of range [0, {bound})")]
    OutOfRange {
        what: &'static str,
        value: usize,
        bound: usize,
    },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("state is not normalized (norm {0})")]
    NotNormalized(f64),

    #[error("operator is not unitary (deviation {0:e})")]
    NotUnitary(f64),

    #[error("lemma construction failed for ({l},{s}) / ({l2},{s2}) at P={positions}: {reason}")]
    LemmaConstruction {
        positions: usize,
        l: usize,
        s: char,
        l2: usize,
        s2: char,
        reason: String,
    },

    #[error("checkpoint does not match the requested grid: {0}")]
    CheckpointMismatch(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for errors caused by bad user input rather than a failing computation or IO.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidParameter(_)
                | Error::EvenPositions(_)
                | Error::OutOfRange { .. }
                | Error::DimensionMismatch { .. }
                | Error::NotNormalized(_)
                | Error::NotUnitary(_)
                | Error::CheckpointMismatch(_)
        )
    }
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
