use thiserror::Error;

/// Errors raised by the numerical routines in this crate.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter is outside the domain where the formula is defined.
    #[error("{name} = {value} is outside the admissible range {range}")]
    Domain {
        name: &'static str,
        value: f64,
        range: &'static str,
    },

    /// A quadrature or iteration did not reach its target accuracy.
    #[error("{what} did not converge: error estimate {estimate:e} exceeds target {target:e}")]
    NotConverged {
        what: String,
        estimate: f64,
        target: f64,
    },

    /// Pointwise evaluation requested at a non-smooth point of a profile.
    #[error("evaluation at the kink x = {0} of a one-sided profile is undefined")]
    EvaluationAtKink(f64),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Root bracket could not be located in the sweep range.
    #[error("no sign change of lambda(beta) - s found for beta in [{lo:e}, {hi:e}]")]
    BracketNotFound { lo: f64, hi: f64 },

    /// A computed quantity violates a bound that holds for the exact problem.
    #[error("bound violated: {0}")]
    BoundViolation(String),

    /// Discrete principal eigenvector changed sign (discretization fault).
    #[error("principal eigenvector is not single-signed (min/max ratio {0:e})")]
    SignChangingEigenvector(f64),

    /// A least-squares fit was rejected by its own residual test.
    #[error("fit rejected: {0}")]
    FitRejected(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn check_order(s: f64) -> Result<()> {
    if s > 0.0 && s < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain {
            name: "s",
            value: s,
            range: "(0, 1)",
        })
    }
}
