use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("calibration failed: {0}")]
    Calibration(String),

    #[error("thermionic extraction failed at {stage}: {reason}")]
    Extraction { stage: &'static str, reason: String },

    #[error(
        "reset did not converge after {pulses} pulses (last resistance {last_resistance:.6e} ohm)"
    )]
    Reset { pulses: usize, last_resistance: f64 },

    #[error("resistance {resistance:.6e} ohm outside thermometer band [{band_low:.6e}, {band_high:.6e}] ohm")]
    OutOfRange {
        resistance: f64,
        band_low: f64,
        band_high: f64,
    },

    #[error("protocol error: {0}")]
    Protocol(String),

    #[error("config error for key '{key}': {reason}")]
    Config { key: String, reason: String },

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn config(key: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            reason: reason.into(),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}
