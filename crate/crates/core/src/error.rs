use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("step size must be positive and finite, got {0}")]
    NonPositiveStep(f64),
    #[error("noise intensity must be positive, got {0}")]
    NonPositiveNoise(f64),
    #[error("unknown scheme `{0}`")]
    UnknownScheme(String),
    #[error("power-law fit needs at least 3 points inside the window, found {0}")]
    TooFewPoints(usize),
    #[error("non-positive error {error} at h = {h}; cannot take logarithms")]
    NonPositiveError { h: f64, error: f64 },
    #[error("histogram holds no in-range samples")]
    EmptyHistogram,
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
