use thiserror::Error;

/// Failures raised by the numerical routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("unsupported domain: {0}")]
    UnsupportedDomain(String),
    #[error("point ({re}, {im}) is not strictly inside the domain")]
    OutsideDomain { re: f64, im: f64 },
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("ill-conditioned {what} (measure {value:e})")]
    Conditioning { what: String, value: f64 },
    #[error("pole on the closed domain: {0}")]
    Pole(String),
    #[error("subspace is not co-invariant (defect {0:e})")]
    NotCoinvariant(f64),
    #[error("operator does not have the required shape: {0}")]
    Shape(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

impl Error {
    pub(crate) fn outside(z: num_complex::Complex64) -> Self {
        Error::OutsideDomain { re: z.re, im: z.im }
    }

    pub(crate) fn conditioning(what: impl Into<String>, value: f64) -> Self {
        Error::Conditioning {
            what: what.into(),
            value,
        }
    }

    /// True for failures caused by numerical conditioning rather than bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::Conditioning { .. } | Error::NotCoinvariant(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
