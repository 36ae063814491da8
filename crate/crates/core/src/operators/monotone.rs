use std::fmt::Debug;
use std::sync::Arc;

use crate::error::{check_dim, Error, Result};
use crate::hilbert::MetricOperator;
use crate::linalg::{solve, Lu, Matrix, Vector};
use crate::operators::prox::ProxFunction;
use crate::scalar::Scalar;

/// A maximally monotone operator known through its resolvents.
pub trait MonotoneOperator<T: Scalar>: Send + Sync + Debug {
    fn dim(&self) -> usize;

    /// `J_{gamma A}(x) = (Id + gamma A)^{-1} x`, for `gamma > 0`.
    fn resolvent(&self, gamma: T, x: &Vector<T>) -> Result<Vector<T>>;

    /// Strong monotonicity modulus (0 if unknown).
    fn strong_monotonicity(&self) -> T {
        T::zero()
    }

    /// `(T, t)` when `A x = T x + t` is single-valued and affine.
    fn affine_part(&self) -> Option<(Matrix<T>, Vector<T>)> {
        None
    }
}

/// `A x = T x + t` with `T + T*` positive semidefinite.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineOperator<T> {
    matrix: Matrix<T>,
    offset: Vector<T>,
}

impl<T: Scalar> AffineOperator<T> {
    pub fn new(matrix: Matrix<T>, offset: Vector<T>) -> Result<Self> {
        if !matrix.is_square() || matrix.rows() != offset.dim() {
            return Err(Error::invalid("affine operator needs a square matrix matching the offset"));
        }
        if !matrix.is_finite() || !offset.is_finite() {
            return Err(Error::invalid("affine operator has non-finite coefficients"));
        }
        let sym = MetricOperator::new(matrix.add(&matrix.transpose())?.scale(T::half()))?;
        if !sym.is_psd(sym.default_tol()) {
            return Err(Error::invalid("affine operator is not monotone (T + T* not PSD)"));
        }
        Ok(AffineOperator { matrix, offset })
    }

    pub fn linear(matrix: Matrix<T>) -> Result<Self> {
        let n = matrix.rows();
        Self::new(matrix, Vector::zeros(n))
    }

    pub fn matrix(&self) -> &Matrix<T> {
        &self.matrix
    }

    pub fn offset(&self) -> &Vector<T> {
        &self.offset
    }

    pub fn apply(&self, x: &Vector<T>) -> Result<Vector<T>> {
        Ok(&self.matrix.mul_vec(x)? + &self.offset)
    }
}

/// Monotone operator catalog used by the engines.
#[derive(Debug, Clone)]
pub enum Operator<T> {
    Zero {
        dim: usize,
    },
    Affine(AffineOperator<T>),
    /// `∂f` for a catalog function; its resolvent is `prox_f`.
    Subdifferential(ProxFunction<T>),
    /// `A^{-1}`, evaluated through the resolvent identity of the inner operator.
    Inverse(Box<Operator<T>>),
    Custom(Arc<dyn MonotoneOperator<T>>),
}

impl<T: Scalar> Operator<T> {
    pub fn zero(dim: usize) -> Self {
        Operator::Zero { dim }
    }

    pub fn subdifferential(f: ProxFunction<T>) -> Self {
        Operator::Subdifferential(f)
    }

    pub fn affine(matrix: Matrix<T>, offset: Vector<T>) -> Result<Self> {
        Ok(Operator::Affine(AffineOperator::new(matrix, offset)?))
    }

    /// `A^{-1}`; inverting twice returns the original operator.
    pub fn inverse(self) -> Self {
        match self {
            Operator::Inverse(inner) => *inner,
            other => Operator::Inverse(Box::new(other)),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Operator::Zero { dim } => *dim,
            Operator::Affine(a) => a.offset.dim(),
            Operator::Subdifferential(f) => f.dim(),
            Operator::Inverse(inner) => inner.dim(),
            Operator::Custom(c) => c.dim(),
        }
    }

    pub fn resolvent(&self, gamma: T, x: &Vector<T>) -> Result<Vector<T>> {
        if !(gamma > T::zero()) {
            return Err(Error::invalid("resolvent parameter must be positive"));
        }
        check_dim(self.dim(), x.dim())?;
        match self {
            Operator::Zero { .. } => Ok(x.clone()),
            Operator::Affine(a) => {
                let system = a.matrix.scale(gamma).shift_diagonal(T::one());
                solve(&system, &x.add_scaled(-gamma, &a.offset))
            }
            Operator::Subdifferential(f) => f.prox(gamma, x),
            Operator::Inverse(inner) => {
                // J_{γA^{-1}}(x) = x - γ J_{γ^{-1}A}(x/γ)
                let inv = T::one() / gamma;
                let p = inner.resolvent(inv, &x.scale(inv))?;
                Ok(x.add_scaled(-gamma, &p))
            }
            Operator::Custom(c) => c.resolvent(gamma, x),
        }
    }

    pub fn strong_monotonicity(&self) -> T {
        match self {
            Operator::Zero { .. } => T::zero(),
            Operator::Affine(a) => {
                MetricOperator::new(a.matrix.add(&a.matrix.transpose()).expect("square").scale(T::half()))
                    .map_or(T::zero(), |m| m.min_eigenvalue().max(T::zero()))
            }
            Operator::Subdifferential(f) => f.strong_convexity(),
            Operator::Inverse(inner) => match inner.affine_part() {
                Some((m, _)) if m.asymmetry() == T::zero() => {
                    let lmax = MetricOperator::new(m).map_or(T::zero(), |m| m.max_eigenvalue());
                    if lmax > T::zero() {
                        T::one() / lmax
                    } else {
                        T::zero()
                    }
                }
                _ => T::zero(),
            },
            Operator::Custom(c) => c.strong_monotonicity(),
        }
    }

    pub fn affine_part(&self) -> Option<(Matrix<T>, Vector<T>)> {
        match self {
            Operator::Zero { dim } => Some((Matrix::zeros(*dim, *dim), Vector::zeros(*dim))),
            Operator::Affine(a) => Some((a.matrix.clone(), a.offset.clone())),
            Operator::Subdifferential(f) => f.affine_subgradient(),
            Operator::Inverse(inner) => {
                let (m, t) = inner.affine_part()?;
                let inv = Lu::factor(&m).ok()?.inverse().ok()?;
                let off = inv.mul_vec(&t).ok()?;
                Some((inv, -off))
            }
            Operator::Custom(c) => c.affine_part(),
        }
    }

    /// `u ∈ A x`, tested as `x = J_A(x + u)` to within `tol`.
    pub fn contains(&self, x: &Vector<T>, u: &Vector<T>, tol: T) -> Result<bool> {
        check_dim(self.dim(), u.dim())?;
        let p = self.resolvent(T::one(), &(x + u))?;
        Ok(p.dist(x) <= tol)
    }
}

impl<T: Scalar> MonotoneOperator<T> for Operator<T> {
    fn dim(&self) -> usize {
        Operator::dim(self)
    }

    fn resolvent(&self, gamma: T, x: &Vector<T>) -> Result<Vector<T>> {
        Operator::resolvent(self, gamma, x)
    }

    fn strong_monotonicity(&self) -> T {
        Operator::strong_monotonicity(self)
    }

    fn affine_part(&self) -> Option<(Matrix<T>, Vector<T>)> {
        Operator::affine_part(self)
    }
}
