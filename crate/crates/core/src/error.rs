use thiserror::Error;

use crate::model::{Transition, Violation};

/// Errors raised anywhere in the illness-death toolkit.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum IdmError {
    #[error("invalid model parameters: {}", join_violations(.0))]
    InvalidParams(Vec<Violation>),
    #[error("time must be positive, got {0}")]
    NonPositiveTime(f64),
    #[error("interval start {s} exceeds interval end {t}")]
    IntervalOrder { s: f64, t: f64 },
    #[error("progression time t1 is required for the 1->2 hazard under a semi-Markov clock")]
    MissingProgressionTime,
    #[error("progression time t1 = {t1} must precede {t}")]
    ProgressionOrder { t1: f64, t: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(
        "quadrature on [{a}, {b}] did not converge after {subdivisions} subdivisions \
         (estimate {estimate:e}, error {abs_error:e})"
    )]
    Quadrature {
        a: f64,
        b: f64,
        subdivisions: usize,
        estimate: f64,
        abs_error: f64,
    },
    #[error("root finding did not converge for target {target}")]
    RootFinding { target: f64 },
    #[error("survival does not fall below {threshold:e} before time {horizon:e}; moments diverge")]
    Truncation { horizon: f64, threshold: f64 },
    #[error("probability {value} lies outside [0, 1] beyond tolerance")]
    ProbabilityOutOfRange { value: f64 },
    #[error("no subjects")]
    NoSubjects,
    #[error("subject {id}: {reason}")]
    Record { id: String, reason: String },
    #[error("transition {0} has no observed events and cannot be estimated")]
    NonIdentifiable(Transition),
    #[error("degenerate input: {0}")]
    Degenerate(String),
}

impl IdmError {
    /// Numerical failures (as opposed to rejected inputs).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            IdmError::Quadrature { .. }
                | IdmError::RootFinding { .. }
                | IdmError::Truncation { .. }
                | IdmError::ProbabilityOutOfRange { .. }
                | IdmError::NonIdentifiable(_)
                | IdmError::Degenerate(_)
        )
    }
}

fn join_violations(v: &[Violation]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")
}

pub type Result<T, E = IdmError> = std::result::Result<T, E>;
