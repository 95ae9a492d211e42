use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty input")]
    EmptyInput,

    #[error("degenerate target rate: {0} output samples")]
    DegenerateRate(usize),

    #[error("invalid argument `{arg}`: {reason}")]
    InvalidArgument { arg: &'static str, reason: String },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("input shorter than receptive field ({len} < {needed})")]
    TooShort { len: usize, needed: usize },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("label unalignable: {label_len} labels need {needed} frames, got {frames}")]
    Unalignable {
        label_len: usize,
        needed: usize,
        frames: usize,
    },

    #[error("latency budget violated: receptive field {rf} samples >= {budget}")]
    LatencyBudget { rf: usize, budget: usize },

    #[error("symbol {0:?} is not in the alphabet")]
    UnknownSymbol(char),

    #[error("init support too small: observed pair {0} has zero probability")]
    ZeroSupport(usize),

    #[error("{path}:{line}: {reason}")]
    Parse {
        path: String,
        line: usize,
        reason: String,
    },

    #[error("non-monotonic timestamps at line {0}")]
    NonMonotonic(usize),

    #[error("bad file format: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    pub(crate) fn invalid(arg: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidArgument {
            arg,
            reason: reason.into(),
        }
    }
}
