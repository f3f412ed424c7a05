use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed WAV file: {0}")]
    MalformedFile(String),

    #[error("unsupported audio format: {0}")]
    UnsupportedFormat(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("sample rate mismatch: {0} Hz vs {1} Hz")]
    SampleRateMismatch(u32, u32),

    #[error("signal too short: {len} samples, at least {needed} required")]
    SignalTooShort { len: usize, needed: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("numerical failure{}: {what}", .iteration.map(|i| format!(" at iteration {i}")).unwrap_or_default())]
    NumericalFailure {
        iteration: Option<usize>,
        what: String,
    },

    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid signal: {0}")]
    InvalidSignal(String),

    #[error("no frames above the energy gate")]
    NoActiveFrames,
}

impl Error {
    pub(crate) fn numerical(what: impl Into<String>) -> Self {
        Error::NumericalFailure {
            iteration: None,
            what: what.into(),
        }
    }

    pub(crate) fn dims(what: impl Into<String>) -> Self {
        Error::DimensionMismatch(what.into())
    }

    /// Attaches an iteration index to a numerical failure; other variants pass through.
    pub fn at_iteration(self, iteration: usize) -> Self {
        match self {
            Error::NumericalFailure { what, .. } => Error::NumericalFailure {
                iteration: Some(iteration),
                what,
            },
            other => other,
        }
    }
}
