//! Finite-dimensional stand-ins for the Hilbert-space layer: linear maps,
//! self-adjoint metrics, operator norms and Loewner-order predicates.

use std::sync::OnceLock;

use crate::error::{check_dim, Error, Result};
use crate::linalg::{largest_singular_value, symmetric_eigenvalues, Matrix, Vector};
use crate::scalar::Scalar;

/// Dense linear map `L : R^n -> R^m` together with its adjoint.
#[derive(Debug, Clone)]
pub struct DenseLinearMap<T> {
    matrix: Matrix<T>,
    norm: OnceLock<T>,
}

impl<T: Scalar> PartialEq for DenseLinearMap<T> {
    fn eq(&self, other: &Self) -> bool {
        self.matrix == other.matrix
    }
}

impl<T: Scalar> DenseLinearMap<T> {
    pub fn new(matrix: Matrix<T>) -> Result<Self> {
        if matrix.rows() == 0 || matrix.cols() == 0 {
            return Err(Error::invalid("linear map needs at least one row and one column"));
        }
        if !matrix.is_finite() {
            return Err(Error::invalid("linear map has non-finite coefficients"));
        }
        Ok(DenseLinearMap { matrix, norm: OnceLock::new() })
    }

    pub fn identity(n: usize) -> Self {
        Self::new(Matrix::identity(n)).expect("identity is valid")
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        Self::new(Matrix::from_rows(rows)?)
    }

    pub fn rows(&self) -> usize {
        self.matrix.rows()
    }

    pub fn cols(&self) -> usize {
        self.matrix.cols()
    }

    pub fn matrix(&self) -> &Matrix<T> {
        &self.matrix
    }

    pub fn apply(&self, x: &Vector<T>) -> Result<Vector<T>> {
        self.matrix.mul_vec(x)
    }

    pub fn adjoint_apply(&self, y: &Vector<T>) -> Result<Vector<T>> {
        self.matrix.tr_mul_vec(y)
    }

    pub fn adjoint(&self) -> Self {
        DenseLinearMap { matrix: self.matrix.transpose(), norm: self.norm.clone() }
    }

    pub fn scaled(&self, a: T) -> Self {
        DenseLinearMap::new(self.matrix.scale(a)).expect("scaling keeps the map finite")
    }

    /// `||L||`, the largest singular value. Cached after the first call.
    pub fn norm(&self) -> T {
        *self.norm.get_or_init(|| largest_singular_value(&self.matrix).expect("validated finite"))
    }
}

/// Largest singular value of `l`.
pub fn operator_norm<T: Scalar>(l: &DenseLinearMap<T>) -> T {
    l.norm()
}

/// `L* L` as a metric on the domain.
pub fn gram<T: Scalar>(l: &DenseLinearMap<T>) -> MetricOperator<T> {
    let m = l.matrix().transpose().matmul(l.matrix()).expect("shapes agree");
    MetricOperator::from_symmetric_unchecked(m.symmetrized())
}

/// `L L*` as a metric on the codomain.
pub fn cogram<T: Scalar>(l: &DenseLinearMap<T>) -> MetricOperator<T> {
    let m = l.matrix().matmul(&l.matrix().transpose()).expect("shapes agree");
    MetricOperator::from_symmetric_unchecked(m.symmetrized())
}

/// Self-adjoint operator on `R^n`. Positivity is not part of the type: the
/// accelerated engine uses non-PSD metrics and checks positivity only on the
/// combinations it actually inverts.
#[derive(Debug, Clone)]
pub struct MetricOperator<T> {
    matrix: Matrix<T>,
    spectrum: OnceLock<Vec<T>>,
}

impl<T: Scalar> PartialEq for MetricOperator<T> {
    fn eq(&self, other: &Self) -> bool {
        self.matrix == other.matrix
    }
}

impl<T: Scalar> MetricOperator<T> {
    /// Accepts a square matrix that is symmetric to `1e-12` relative and
    /// stores its exact symmetric part.
    pub fn new(matrix: Matrix<T>) -> Result<Self> {
        if !matrix.is_square() || matrix.rows() == 0 {
            return Err(Error::invalid("metric must be a non-empty square matrix"));
        }
        if !matrix.is_finite() {
            return Err(Error::invalid("metric has non-finite coefficients"));
        }
        let tol = T::lit(1e-12) * (T::one() + matrix.max_abs());
        if matrix.asymmetry() > tol {
            return Err(Error::invalid("metric is not symmetric"));
        }
        Ok(Self::from_symmetric_unchecked(matrix.symmetrized()))
    }

    pub(crate) fn from_symmetric_unchecked(matrix: Matrix<T>) -> Self {
        MetricOperator { matrix, spectrum: OnceLock::new() }
    }

    /// Builds a metric whose eigenvalues are already known, skipping the
    /// decomposition. `eigenvalues` must be sorted ascending.
    pub(crate) fn with_spectrum(matrix: Matrix<T>, eigenvalues: Vec<T>) -> Self {
        let spectrum = OnceLock::new();
        let _ = spectrum.set(eigenvalues);
        MetricOperator { matrix, spectrum }
    }

    pub fn zeros(n: usize) -> Self {
        Self::scaled_identity(n, T::zero())
    }

    pub fn identity(n: usize) -> Self {
        Self::scaled_identity(n, T::one())
    }

    pub fn scaled_identity(n: usize, a: T) -> Self {
        Self::with_spectrum(Matrix::scaled_identity(n, a), vec![a; n])
    }

    pub fn diagonal(diag: &[T]) -> Self {
        let mut sorted = diag.to_vec();
        sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
        Self::with_spectrum(Matrix::diagonal(diag), sorted)
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn matrix(&self) -> &Matrix<T> {
        &self.matrix
    }

    pub fn apply(&self, x: &Vector<T>) -> Result<Vector<T>> {
        self.matrix.mul_vec(x)
    }

    /// `<x, U x>`
    pub fn seminorm_sq(&self, x: &Vector<T>) -> Result<T> {
        Ok(x.dot(&self.apply(x)?))
    }

    /// Eigenvalues in ascending order, computed once.
    pub fn eigenvalues(&self) -> &[T] {
        self.spectrum.get_or_init(|| symmetric_eigenvalues(&self.matrix).expect("validated finite"))
    }

    pub fn min_eigenvalue(&self) -> T {
        self.eigenvalues()[0]
    }

    pub fn max_eigenvalue(&self) -> T {
        *self.eigenvalues().last().expect("non-empty")
    }

    pub fn spectral_radius(&self) -> T {
        self.min_eigenvalue().abs().max(self.max_eigenvalue().abs())
    }

    /// Default comparison tolerance: `LOEWNER_TOL * (1 + spectral radius)`.
    pub fn default_tol(&self) -> T {
        T::lit(T::LOEWNER_TOL) * (T::one() + self.spectral_radius())
    }

    pub fn is_psd(&self, tol: T) -> bool {
        self.min_eigenvalue() >= -tol
    }

    /// Returns `rho` when the metric equals `rho * Id` to within `1e-12`
    /// relative.
    pub fn as_scaled_identity(&self) -> Option<T> {
        let n = self.dim();
        let rho = self.matrix.get(0, 0);
        let tol = T::lit(1e-12) * rho.abs().max(T::one());
        for i in 0..n {
            for j in 0..n {
                let target = if i == j { rho } else { T::zero() };
                if (self.matrix.get(i, j) - target).abs() > tol {
                    return None;
                }
            }
        }
        Some(rho)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        check_dim(self.dim(), other.dim())?;
        Ok(Self::from_symmetric_unchecked(self.matrix.add(&other.matrix)?))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        check_dim(self.dim(), other.dim())?;
        Ok(Self::from_symmetric_unchecked(self.matrix.sub(&other.matrix)?))
    }

    pub fn scale(&self, a: T) -> Self {
        let matrix = self.matrix.scale(a);
        match self.spectrum.get() {
            Some(eigs) => {
                let mut e: Vec<T> = eigs.iter().map(|&v| v * a).collect();
                e.sort_by(|x, y| x.partial_cmp(y).expect("finite"));
                Self::with_spectrum(matrix, e)
            }
            None => Self::from_symmetric_unchecked(matrix),
        }
    }

    /// `a * self + b * Id`, reusing a cached spectrum when there is one.
    pub fn affine(&self, a: T, b: T) -> Self {
        let matrix = self.matrix.scale(a).shift_diagonal(b);
        match self.spectrum.get() {
            Some(eigs) => {
                let mut e: Vec<T> = eigs.iter().map(|&v| a * v + b).collect();
                e.sort_by(|x, y| x.partial_cmp(y).expect("finite"));
                Self::with_spectrum(matrix, e)
            }
            None => Self::from_symmetric_unchecked(matrix),
        }
    }
}

pub fn seminorm_sq<T: Scalar>(u: &MetricOperator<T>, x: &Vector<T>) -> Result<T> {
    u.seminorm_sq(x)
}

/// Smallest eigenvalue of `U1 - U2`; `U1 ≽ U2` iff it is non-negative.
pub fn loewner_gap<T: Scalar>(u1: &MetricOperator<T>, u2: &MetricOperator<T>) -> Result<T> {
    if u1.dim() != u2.dim() {
        return Err(Error::DimError { expected: u1.dim(), found: u2.dim() });
    }
    if let (Some(a), Some(b)) = (u1.as_scaled_identity(), u2.as_scaled_identity()) {
        return Ok(a - b);
    }
    Ok(u1.sub(u2)?.min_eigenvalue())
}

/// `U1 ≽ U2` up to `tol`: `min eig(U1 - U2) >= -tol`.
pub fn loewner_geq<T: Scalar>(u1: &MetricOperator<T>, u2: &MetricOperator<T>, tol: T) -> Result<bool> {
    Ok(loewner_gap(u1, u2)? >= -tol)
}

/// `U ∈ P_alpha`: `min eig(U) >= alpha - tol`.
pub fn in_p_alpha<T: Scalar>(u: &MetricOperator<T>, alpha: T, tol: T) -> Result<bool> {
    if !(alpha > T::zero()) {
        return Err(Error::invalid("alpha must be positive"));
    }
    Ok(u.min_eigenvalue() >= alpha - tol)
}
