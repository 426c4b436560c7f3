use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is not Hermitian (max |M - M^dag| = {0:e})")]
    NonHermitian(f64),

    #[error("not a density matrix: {0}")]
    InvalidState(String),

    /// supp(rho) is not contained in supp(sigma); the relative entropy is +inf.
    #[error("relative entropy diverges: support of the first state is not contained in the second")]
    DivergentSupport,

    #[error("relative entropy diverges at step {step} (t = {time})")]
    DivergentSupportAt { step: usize, time: f64 },

    #[error("positivity lost at step {step} (t = {time}): min eigenvalue {min_eigenvalue:e}; reduce dt")]
    PositivityLoss {
        step: usize,
        time: f64,
        min_eigenvalue: f64,
    },

    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: String, reason: String },

    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn param(field: &str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            field: field.to_string(),
            reason: reason.into(),
        }
    }

    /// Attach the time step to a support failure.
    pub(crate) fn at_step(self, step: usize, time: f64) -> Self {
        match self {
            Error::DivergentSupport => Error::DivergentSupportAt { step, time },
            e => e,
        }
    }

    /// True for failures of the numerics (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::DivergentSupport
                | Error::DivergentSupportAt { .. }
                | Error::PositivityLoss { .. }
                | Error::NonHermitian(_)
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
