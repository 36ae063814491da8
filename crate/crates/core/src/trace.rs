use std::fmt;

use crate::error::Error;

/// Iterates produced by an engine run. `states[0]` is the starting point.
/// When history recording is off only the start and the last iterate are kept.
#[derive(Debug, Clone)]
pub struct Trace<S> {
    pub states: Vec<S>,
    pub converged: bool,
    pub iterations: usize,
}

impl<S> Trace<S> {
    pub fn last(&self) -> &S {
        self.states.last().expect("trace holds at least the start")
    }
}

/// A failed run together with everything computed before the failure.
#[derive(Debug)]
pub struct RunError<S> {
    pub error: Error,
    pub trace: Trace<S>,
}

impl<S> fmt::Display for RunError<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} after {} iterations", self.error, self.trace.iterations)
    }
}

impl<S: fmt::Debug> std::error::Error for RunError<S> {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        Some(&self.error)
    }
}

/// Iteration budget and stopping rule shared by both engines.
///
/// A run stops when `||s_{k+1} - s_k|| <= stop_tol * (1 + ||s_k||)` or, if
/// `kkt_tol` is set, when both KKT residuals drop below it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StopRule<T> {
    pub max_iters: usize,
    pub stop_tol: T,
    pub kkt_tol: Option<T>,
    pub record: bool,
}

impl<T: crate::Scalar> Default for StopRule<T> {
    fn default() -> Self {
        StopRule { max_iters: 10_000, stop_tol: T::lit(1e-12), kkt_tol: None, record: true }
    }
}

impl<T: crate::Scalar> StopRule<T> {
    pub fn iterations(max_iters: usize) -> Self {
        StopRule { max_iters, ..Self::default() }
    }

    pub fn with_stop_tol(mut self, tol: T) -> Self {
        self.stop_tol = tol;
        self
    }

    pub fn with_kkt_tol(mut self, tol: T) -> Self {
        self.kkt_tol = Some(tol);
        self
    }

    /// Keep only the start and the final iterate.
    pub fn without_history(mut self) -> Self {
        self.record = false;
        self
    }
}
