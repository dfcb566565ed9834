use thiserror::Error;

/// Errors raised by the numerical engines and samplers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum CritError {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("{op}: argument out of domain ({detail})")]
    Domain { op: &'static str, detail: String },

    #[error("{op}: could not bracket a root")]
    NoBracket { op: &'static str },

    #[error("{op}: root solve did not converge after {iterations} iterations")]
    RootNotConverged { op: &'static str, iterations: usize },

    #[error("{op}: adaptive quadrature hit the recursion limit")]
    QuadratureNotConverged { op: &'static str },

    #[error("ODE step size underflow at t = {t}")]
    StepSizeUnderflow { t: f64 },

    #[error("ODE solver exceeded {steps} steps")]
    TooManySteps { steps: usize },

    #[error("coefficient a_{index} = {value:e} violates the intensity sign pattern")]
    InvalidCoefficients { index: usize, value: f64 },

    #[error("series truncation J = {order} leaves mass defect {defect:e} above {bound:e}; increase J")]
    MassDefect { order: usize, defect: f64, bound: f64 },

    #[error("{op}: requires family {expected}")]
    WrongFamily { op: &'static str, expected: &'static str },

    #[error("fit rejected: {0}")]
    DegenerateFit(String),
}

pub type Result<T> = std::result::Result<T, CritError>;

pub(crate) fn domain(op: &'static str, detail: impl Into<String>) -> CritError {
    CritError::Domain {
        op,
        detail: detail.into(),
    }
}
