use thiserror::Error;

/// Failure modes surfaced by the toolkit.
///
/// `Regime`, `Support`, `Precondition`, and `Params` all mean the request was
/// outside what an operation accepts; `NonConvergence` means the request was
/// legal but an iterative engine could not certify its answer within budget.
#[derive(Debug, Error)]
pub enum Error {
    /// Parameter combination outside the supported regime of a constructor.
    #[error("unsupported regime: {0}")]
    Regime(String),

    /// An exponent or argument outside the working interval.
    #[error("outside support: {0}")]
    Support(String),

    /// A documented operation precondition does not hold for these inputs.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// Malformed or out-of-range construction parameters.
    #[error("bad parameters: {0}")]
    Params(String),

    /// An iterative engine exhausted its budget without a certified answer.
    #[error("did not converge: {0}")]
    NonConvergence(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// True when the error reports a refused input rather than a numerical
    /// failure.
    pub fn is_input_error(&self) -> bool {
        !matches!(self, Error::NonConvergence(_))
    }
}
