//! Generalized resolvents `(U + A)^{-1}` for a positive semidefinite metric `U`.

use crate::error::{check_dim, Error, Result};
use crate::hilbert::MetricOperator;
use crate::linalg::{Lu, Vector};
use crate::operators::monotone::Operator;
use crate::scalar::Scalar;

pub const DEFAULT_MAX_INNER_ITERATIONS: usize = 10_000;

#[derive(Debug, Clone)]
enum Strategy<T> {
    /// `A x = T x + t`: solve `(U + T) p = r - t`.
    Dense { lu: Lu<T>, offset: Vector<T> },
    /// `U = rho I`: `p = J_{A/rho}(r / rho)`.
    ScaledIdentity { rho: T },
    /// `p <- J_{A/rho}((r - U p + rho p) / rho)` with `rho = lambda_max(U)`.
    FixedPoint { metric: MetricOperator<T>, rho: T },
}

/// Evaluates `p = (U + A)^{-1} r` for a fixed pair `(U, A)`; any matrix
/// factorization is done once at construction.
#[derive(Debug, Clone)]
pub struct ResolventKernel<T> {
    op: Operator<T>,
    strategy: Strategy<T>,
    tol: T,
    max_iters: usize,
}

impl<T: Scalar> ResolventKernel<T> {
    pub fn new(u: &MetricOperator<T>, op: &Operator<T>) -> Result<Self> {
        check_dim(u.dim(), op.dim())?;
        let strategy = if let Some((m, t)) = op.affine_part() {
            let system = u.matrix().add(&m)?;
            match Lu::factor(&system) {
                Ok(lu) => Strategy::Dense { lu, offset: t },
                Err(_) => return Err(Error::MetricNotPositive { min_eigenvalue: u.min_eigenvalue().to_f64_lossy() }),
            }
        } else if let Some(rho) = u.as_scaled_identity() {
            if !(rho > u.default_tol()) {
                return Err(Error::MetricNotPositive { min_eigenvalue: rho.to_f64_lossy() });
            }
            Strategy::ScaledIdentity { rho }
        } else {
            let lmin = u.min_eigenvalue();
            if !(lmin > u.default_tol()) {
                return Err(Error::MetricNotPositive { min_eigenvalue: lmin.to_f64_lossy() });
            }
            Strategy::FixedPoint { metric: u.clone(), rho: u.max_eigenvalue() }
        };
        Ok(ResolventKernel {
            op: op.clone(),
            strategy,
            tol: T::lit(T::INNER_TOL),
            max_iters: DEFAULT_MAX_INNER_ITERATIONS,
        })
    }

    pub fn with_tolerance(mut self, tol: T, max_iters: usize) -> Self {
        self.tol = tol;
        self.max_iters = max_iters;
        self
    }

    pub fn dim(&self) -> usize {
        self.op.dim()
    }

    pub fn strategy_name(&self) -> &'static str {
        match self.strategy {
            Strategy::Dense { .. } => "dense",
            Strategy::ScaledIdentity { .. } => "scaled-identity",
            Strategy::FixedPoint { .. } => "fixed-point",
        }
    }

    pub fn apply(&self, r: &Vector<T>) -> Result<Vector<T>> {
        self.solve(r, None)
    }

    /// Same as [`apply`](Self::apply) but warm-starts the inner iteration.
    pub fn apply_from(&self, r: &Vector<T>, start: &Vector<T>) -> Result<Vector<T>> {
        self.solve(r, Some(start))
    }

    fn solve(&self, r: &Vector<T>, start: Option<&Vector<T>>) -> Result<Vector<T>> {
        check_dim(self.dim(), r.dim())?;
        match &self.strategy {
            Strategy::Dense { lu, offset } => lu.solve(&(r - offset)),
            Strategy::ScaledIdentity { rho } => self.op.resolvent(T::one() / *rho, &r.scale(T::one() / *rho)),
            Strategy::FixedPoint { metric, rho } => {
                let inv = T::one() / *rho;
                let mut p = match start {
                    Some(s) => {
                        check_dim(self.dim(), s.dim())?;
                        s.clone()
                    }
                    None => r.scale(inv),
                };
                let mut residual = T::infinity();
                for _ in 0..self.max_iters {
                    let up = metric.apply(&p)?;
                    let arg = (r - &up).add_scaled(*rho, &p).scale(inv);
                    let next = self.op.resolvent(inv, &arg)?;
                    residual = next.dist(&p);
                    let done = residual <= self.tol * (T::one() + next.norm());
                    p = next;
                    if done {
                        return Ok(p);
                    }
                }
                Err(Error::NoConvergence { iterations: self.max_iters, residual: residual.to_f64_lossy() })
            }
        }
    }
}

/// One-shot `(U + A)^{-1} r`.
pub fn generalized_resolvent<T: Scalar>(
    u: &MetricOperator<T>,
    a: &Operator<T>,
    r: &Vector<T>,
    tol: T,
) -> Result<Vector<T>> {
    ResolventKernel::new(u, a)?.with_tolerance(tol, DEFAULT_MAX_INNER_ITERATIONS).apply(r)
}
