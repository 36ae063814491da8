use std::fmt;

use thiserror::Error;

/// A parameter inequality that a builder or schedule refuses to violate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Constraint {
    /// `mu * tau_1 < 2 * gamma`
    StepCurvature,
    /// `lambda >= mu + 1`
    Relaxation,
    /// `sigma_0 * tau_1 * ||L||^2 <= 1`
    StepProduct,
    /// `gamma > 0`
    StrongMonotonicity,
    /// `1/tau - c ||L||^2 > 1/(2 eta)`
    VuCondatStep,
    /// `c tau ||L||^2 < 1`
    BchStep,
    /// `tau_k L L* + M2^k >= sigma_k^{-1} Id`
    MetricLowerBound,
    /// `(tau_k/tau_{k+1}) L L* + M2^k/tau_{k+1} >= (tau_{k+1}/tau_{k+2}) L L* + M2^{k+1}/tau_{k+2}`
    MetricMonotonicity,
    /// The cocoercive term must vanish for this scheme.
    ZeroForward,
    /// A positive scalar parameter.
    Positive(&'static str),
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Constraint::StepCurvature => f.write_str("μτ_1 < 2γ"),
            Constraint::Relaxation => f.write_str("λ ≥ μ + 1"),
            Constraint::StepProduct => f.write_str("σ_0τ_1‖L‖² ≤ 1"),
            Constraint::StrongMonotonicity => f.write_str("γ > 0"),
            Constraint::VuCondatStep => f.write_str("1/τ − c‖L‖² > 1/(2η)"),
            Constraint::BchStep => f.write_str("cτ‖L‖² < 1"),
            Constraint::MetricLowerBound => f.write_str("τ_k LL* + M2^k ≽ σ_k^{-1} Id"),
            Constraint::MetricMonotonicity => {
                f.write_str("(τ_k/τ_{k+1}) LL* + M2^k/τ_{k+1} ≽ (τ_{k+1}/τ_{k+2}) LL* + M2^{k+1}/τ_{k+2}")
            }
            Constraint::ZeroForward => f.write_str("C = 0"),
            Constraint::Positive(name) => write!(f, "{name} > 0"),
        }
    }
}

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimError { expected: usize, found: usize },
    #[error("metric is not positive definite (minimum eigenvalue {min_eigenvalue:e})")]
    MetricNotPositive { min_eigenvalue: f64 },
    #[error("no convergence after {iterations} iterations (last residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("constraint violated: {constraint} ({detail})")]
    ConstraintViolated { constraint: Constraint, detail: String },
    #[error("reference solution is not a primal-dual solution (primal residual {primal:e}, dual residual {dual:e})")]
    SolutionInvalid { primal: f64, dual: f64 },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn violated(constraint: Constraint, detail: impl Into<String>) -> Self {
        Error::ConstraintViolated { constraint, detail: detail.into() }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimError { expected, found })
    }
}
