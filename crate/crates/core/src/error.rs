use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error(
        "quadrature did not converge on [{lo:e}, {hi:e}]: error estimate {achieved:e} \
         exceeds target {target:e} after {intervals} subintervals"
    )]
    Quadrature {
        lo: f64,
        hi: f64,
        achieved: f64,
        target: f64,
        intervals: usize,
    },

    #[error("probability floor excluded {mass:e} of outcome mass (limit {limit:e})")]
    ExcludedMass { mass: f64, limit: f64 },

    #[error("rejection sampling efficiency {efficiency:.4} is below the 1% limit")]
    RejectionEfficiency { efficiency: f64 },

    #[error("model `{model}` does not support {what}")]
    Unsupported { model: &'static str, what: &'static str },
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
