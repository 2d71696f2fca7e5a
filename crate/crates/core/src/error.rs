use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the function.
    #[error("domain error: {0}")]
    Domain(String),

    /// A query falls outside the range covered by the data (no extrapolation).
    #[error("{value} is outside the covered range [{lo}, {hi}]")]
    OutOfRange { value: f64, lo: f64, hi: f64 },

    #[error("validation error: {0}")]
    Validation(String),

    #[error("configuration error: {0}")]
    Config(String),

    /// A reflector sits beyond the distance that one pulse period can resolve.
    #[error("range ambiguity: component '{label}' at {position_m} m is beyond the unambiguous range {max_m:.3} m")]
    RangeAmbiguity { label: String, position_m: f64, max_m: f64 },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("{path}: line {line}: {message}")]
    Parse { path: PathBuf, line: u64, message: String },

    /// Wraps a failure that happened while processing one wavelength.
    #[error("at {wavelength_nm} nm: {source}")]
    AtWavelength {
        wavelength_nm: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn at_wavelength(wavelength_nm: f64, source: Error) -> Self {
        Error::AtWavelength {
            wavelength_nm,
            source: Box::new(source),
        }
    }

    /// True for failures of a numerical procedure (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::Numerical(_) => true,
            Error::AtWavelength { source, .. } => source.is_numerical(),
            _ => false,
        }
    }
}
