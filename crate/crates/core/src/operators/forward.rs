use crate::error::{check_dim, Error, Result};
use crate::hilbert::{DenseLinearMap, MetricOperator};
use crate::linalg::{Matrix, Vector};
use crate::scalar::Scalar;

/// Single-valued forward term `C`: either cocoercive (`eta > 0`) or monotone
/// and Lipschitz with modulus `mu`. The zero map is a separate case since it
/// is cocoercive for every `eta`.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardMap<T> {
    dim: usize,
    affine: Option<(Matrix<T>, Vector<T>)>,
    lipschitz: T,
    cocoercivity: Option<T>,
}

impl<T: Scalar> ForwardMap<T> {
    pub fn zero(dim: usize) -> Self {
        ForwardMap { dim, affine: None, lipschitz: T::zero(), cocoercivity: None }
    }

    /// Gradient of `1/2 x'Hx + b'x` with `H` symmetric PSD; cocoercive with
    /// `eta = 1 / lambda_max(H)`.
    pub fn gradient(hessian: Matrix<T>, linear: Vector<T>) -> Result<Self> {
        let dim = linear.dim();
        let metric = MetricOperator::new(hessian)?;
        check_dim(dim, metric.dim())?;
        if !metric.is_psd(metric.default_tol()) {
            return Err(Error::invalid("gradient map needs a PSD hessian"));
        }
        let lmax = metric.max_eigenvalue().max(T::zero());
        if lmax == T::zero() && linear.norm_inf() == T::zero() {
            return Ok(Self::zero(dim));
        }
        let cocoercivity = if lmax > T::zero() { Some(T::one() / lmax) } else { None };
        Ok(ForwardMap { dim, affine: Some((metric.matrix().clone(), linear)), lipschitz: lmax, cocoercivity })
    }

    /// `C x = M x + t` with `M + M*` PSD, e.g. a skew map. Cocoercive only
    /// when `M` is symmetric.
    pub fn monotone_lipschitz(matrix: Matrix<T>, offset: Vector<T>) -> Result<Self> {
        let dim = offset.dim();
        if matrix.rows() != dim || matrix.cols() != dim {
            return Err(Error::invalid("forward map matrix must be square and match the offset"));
        }
        let sym = MetricOperator::new(matrix.add(&matrix.transpose())?.scale(T::half()))?;
        if !sym.is_psd(sym.default_tol()) {
            return Err(Error::invalid("forward map is not monotone"));
        }
        if matrix.asymmetry() == T::zero() {
            return Self::gradient(matrix, offset);
        }
        let lipschitz = DenseLinearMap::new(matrix.clone())?.norm();
        Ok(ForwardMap { dim, affine: Some((matrix, offset)), lipschitz, cocoercivity: None })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_zero(&self) -> bool {
        self.affine.is_none()
    }

    pub fn lipschitz(&self) -> T {
        self.lipschitz
    }

    /// Cocoercivity modulus `eta`; `None` for the zero map (any `eta` works)
    /// and for non-cocoercive maps.
    pub fn cocoercivity(&self) -> Option<T> {
        self.cocoercivity
    }

    pub fn is_cocoercive(&self) -> bool {
        self.is_zero() || self.cocoercivity.is_some()
    }

    /// `1 / (2 eta)`, zero for the zero map.
    pub fn half_inverse_cocoercivity(&self) -> T {
        match self.cocoercivity {
            Some(eta) => T::one() / (T::two() * eta),
            None => T::zero(),
        }
    }

    pub fn affine_parts(&self) -> Option<(&Matrix<T>, &Vector<T>)> {
        self.affine.as_ref().map(|(m, t)| (m, t))
    }

    pub fn apply(&self, x: &Vector<T>) -> Result<Vector<T>> {
        check_dim(self.dim, x.dim())?;
        match &self.affine {
            None => Ok(Vector::zeros(self.dim)),
            Some((m, t)) => Ok(&m.mul_vec(x)? + t),
        }
    }
}
