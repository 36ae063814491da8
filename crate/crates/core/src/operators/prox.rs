//! Catalog of closed, proper, convex functions with closed-form proximal maps.

use crate::error::{check_dim, Error, Result};
use crate::hilbert::MetricOperator;
use crate::linalg::{solve, Lu, Matrix, Vector};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub enum ProxKind<T> {
    /// `f = 0`
    Zero,
    /// `f(x) = w ||x||_1`
    L1 { weight: T },
    /// `f(x) = (w/2) ||x||^2`
    SquaredL2 { weight: T },
    /// Indicator of the box `[lo, hi]^n`.
    Box { lo: T, hi: T },
    /// `f(x) = 1/2 x'Qx + q'x` with `Q` symmetric PSD.
    Quadratic { hessian: Matrix<T>, linear: Vector<T> },
    /// `f(x) = a ||x||_1 + (b/2) ||x||^2`
    ElasticNet { l1: T, l2: T },
    /// Fenchel conjugate of the inner function.
    Conjugate(Box<ProxFunction<T>>),
    /// `f(x) = inner(x - shift)`
    Translated { inner: Box<ProxFunction<T>>, shift: Vector<T> },
    /// `f(x) = factor * inner(x)`, `factor > 0`
    Scaled { inner: Box<ProxFunction<T>>, factor: T },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProxFunction<T> {
    dim: usize,
    kind: ProxKind<T>,
}

fn soft<T: Scalar>(v: T, t: T) -> T {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        T::zero()
    }
}

fn nonneg<T: Scalar>(name: &str, v: T) -> Result<()> {
    if v.is_finite() && v >= T::zero() {
        Ok(())
    } else {
        Err(Error::invalid(format!("{name} must be finite and non-negative")))
    }
}

impl<T: Scalar> ProxFunction<T> {
    pub fn zero(dim: usize) -> Self {
        ProxFunction { dim, kind: ProxKind::Zero }
    }

    pub fn l1(dim: usize, weight: T) -> Result<Self> {
        nonneg("l1 weight", weight)?;
        Ok(ProxFunction { dim, kind: ProxKind::L1 { weight } })
    }

    pub fn squared_l2(dim: usize, weight: T) -> Result<Self> {
        nonneg("squared-l2 weight", weight)?;
        Ok(ProxFunction { dim, kind: ProxKind::SquaredL2 { weight } })
    }

    pub fn box_indicator(dim: usize, lo: T, hi: T) -> Result<Self> {
        if !(lo <= hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::invalid("box needs finite lo <= hi"));
        }
        Ok(ProxFunction { dim, kind: ProxKind::Box { lo, hi } })
    }

    pub fn quadratic(hessian: Matrix<T>, linear: Vector<T>) -> Result<Self> {
        let dim = linear.dim();
        if hessian.rows() != dim || hessian.cols() != dim {
            return Err(Error::invalid("quadratic hessian must be square and match the linear term"));
        }
        let metric = MetricOperator::new(hessian)?;
        if !metric.is_psd(metric.default_tol()) {
            return Err(Error::invalid("quadratic hessian must be positive semidefinite"));
        }
        if !linear.is_finite() {
            return Err(Error::invalid("quadratic linear term is not finite"));
        }
        Ok(ProxFunction { dim, kind: ProxKind::Quadratic { hessian: metric.matrix().clone(), linear } })
    }

    pub fn elastic_net(dim: usize, l1: T, l2: T) -> Result<Self> {
        nonneg("elastic-net l1 weight", l1)?;
        nonneg("elastic-net l2 weight", l2)?;
        Ok(ProxFunction { dim, kind: ProxKind::ElasticNet { l1, l2 } })
    }

    pub fn conjugate(self) -> Self {
        match self.kind {
            ProxKind::Conjugate(inner) => *inner,
            kind => ProxFunction {
                dim: self.dim,
                kind: ProxKind::Conjugate(Box::new(ProxFunction { dim: self.dim, kind })),
            },
        }
    }

    pub fn translated(self, shift: Vector<T>) -> Result<Self> {
        check_dim(self.dim, shift.dim())?;
        Ok(ProxFunction { dim: self.dim, kind: ProxKind::Translated { inner: Box::new(self), shift } })
    }

    pub fn scaled(self, factor: T) -> Result<Self> {
        if !(factor > T::zero()) || !factor.is_finite() {
            return Err(Error::invalid("scaling factor must be positive"));
        }
        Ok(ProxFunction { dim: self.dim, kind: ProxKind::Scaled { inner: Box::new(self), factor } })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> &ProxKind<T> {
        &self.kind
    }

    /// `prox_{gamma f}(x)`, the unique minimizer of `f(y) + ||y - x||^2 / (2 gamma)`.
    pub fn prox(&self, gamma: T, x: &Vector<T>) -> Result<Vector<T>> {
        if !(gamma > T::zero()) {
            return Err(Error::invalid("prox parameter must be positive"));
        }
        check_dim(self.dim, x.dim())?;
        Ok(match &self.kind {
            ProxKind::Zero => x.clone(),
            ProxKind::L1 { weight } => {
                let t = gamma * *weight;
                x.map(|v| soft(v, t))
            }
            ProxKind::SquaredL2 { weight } => x.scale(T::one() / (T::one() + gamma * *weight)),
            ProxKind::Box { lo, hi } => x.map(|v| v.max(*lo).min(*hi)),
            ProxKind::Quadratic { hessian, linear } => {
                let system = hessian.scale(gamma).shift_diagonal(T::one());
                solve(&system, &x.add_scaled(-gamma, linear))?
            }
            ProxKind::ElasticNet { l1, l2 } => {
                let t = gamma * *l1;
                let shrink = T::one() / (T::one() + gamma * *l2);
                x.map(|v| soft(v, t) * shrink)
            }
            ProxKind::Conjugate(inner) => {
                // Moreau: prox_{γ f*}(x) = x - γ prox_{f/γ}(x/γ)
                let p = inner.prox(T::one() / gamma, &x.scale(T::one() / gamma))?;
                x.add_scaled(-gamma, &p)
            }
            ProxKind::Translated { inner, shift } => &inner.prox(gamma, &(x - shift))? + shift,
            ProxKind::Scaled { inner, factor } => inner.prox(gamma * *factor, x)?,
        })
    }

    /// `prox_{gamma f*}(x)` through the Moreau decomposition.
    pub fn conjugate_prox(&self, gamma: T, x: &Vector<T>) -> Result<Vector<T>> {
        if !(gamma > T::zero()) {
            return Err(Error::invalid("prox parameter must be positive"));
        }
        let p = self.prox(T::one() / gamma, &x.scale(T::one() / gamma))?;
        Ok(x.add_scaled(-gamma, &p))
    }

    /// `f(x)`, possibly `+inf`. `None` when no closed form is available.
    pub fn value(&self, x: &Vector<T>) -> Option<T> {
        if x.dim() != self.dim {
            return None;
        }
        Some(match &self.kind {
            ProxKind::Zero => T::zero(),
            ProxKind::L1 { weight } => *weight * x.iter().map(|v| v.abs()).sum::<T>(),
            ProxKind::SquaredL2 { weight } => *weight * T::half() * x.norm_sq(),
            ProxKind::Box { lo, hi } => {
                if x.iter().all(|v| *v >= *lo && *v <= *hi) {
                    T::zero()
                } else {
                    T::infinity()
                }
            }
            ProxKind::Quadratic { hessian, linear } => T::half() * x.dot(&hessian.mul_vec(x).ok()?) + linear.dot(x),
            ProxKind::ElasticNet { l1, l2 } => {
                *l1 * x.iter().map(|v| v.abs()).sum::<T>() + *l2 * T::half() * x.norm_sq()
            }
            ProxKind::Conjugate(inner) => inner.conjugate_value(x)?,
            ProxKind::Translated { inner, shift } => inner.value(&(x - shift))?,
            ProxKind::Scaled { inner, factor } => *factor * inner.value(x)?,
        })
    }

    /// `f*(u)`, possibly `+inf`. `None` when no closed form is available.
    pub fn conjugate_value(&self, u: &Vector<T>) -> Option<T> {
        if u.dim() != self.dim {
            return None;
        }
        let indicator = |inside: bool| if inside { T::zero() } else { T::infinity() };
        Some(match &self.kind {
            ProxKind::Zero => indicator(u.iter().all(|v| *v == T::zero())),
            ProxKind::L1 { weight } => indicator(u.norm_inf() <= *weight),
            ProxKind::SquaredL2 { weight } => {
                if *weight > T::zero() {
                    u.norm_sq() / (T::two() * *weight)
                } else {
                    indicator(u.iter().all(|v| *v == T::zero()))
                }
            }
            ProxKind::Box { lo, hi } => u.iter().map(|&v| (*hi * v).max(*lo * v)).sum(),
            ProxKind::Quadratic { hessian, linear } => {
                let d = u - linear;
                let w = Lu::factor(hessian).ok()?.solve(&d).ok()?;
                T::half() * d.dot(&w)
            }
            ProxKind::ElasticNet { l1, l2 } => {
                if *l2 > T::zero() {
                    u.iter()
                        .map(|v| {
                            let e = (v.abs() - *l1).max(T::zero());
                            e * e
                        })
                        .sum::<T>()
                        / (T::two() * *l2)
                } else {
                    indicator(u.norm_inf() <= *l1)
                }
            }
            ProxKind::Conjugate(inner) => inner.value(u)?,
            ProxKind::Translated { inner, shift } => inner.conjugate_value(u)? + shift.dot(u),
            ProxKind::Scaled { inner, factor } => *factor * inner.conjugate_value(&u.scale(T::one() / *factor))?,
        })
    }

    /// Modulus of strong convexity known in closed form (0 when none).
    pub fn strong_convexity(&self) -> T {
        match &self.kind {
            ProxKind::SquaredL2 { weight } => *weight,
            ProxKind::ElasticNet { l2, .. } => *l2,
            ProxKind::Quadratic { hessian, .. } => {
                MetricOperator::new(hessian.clone()).map_or(T::zero(), |m| m.min_eigenvalue().max(T::zero()))
            }
            ProxKind::Translated { inner, .. } => inner.strong_convexity(),
            ProxKind::Scaled { inner, factor } => *factor * inner.strong_convexity(),
            ProxKind::Conjugate(inner) => match inner.affine_subgradient() {
                Some((m, _)) => {
                    let lmax = MetricOperator::new(m).map_or(T::zero(), |m| m.max_eigenvalue());
                    if lmax > T::zero() {
                        T::one() / lmax
                    } else {
                        T::zero()
                    }
                }
                None => T::zero(),
            },
            _ => T::zero(),
        }
    }

    /// `(T, t)` with `∂f(x) = {T x + t}` when the subdifferential is affine.
    pub fn affine_subgradient(&self) -> Option<(Matrix<T>, Vector<T>)> {
        let n = self.dim;
        match &self.kind {
            ProxKind::Zero => Some((Matrix::zeros(n, n), Vector::zeros(n))),
            ProxKind::L1 { weight } if *weight == T::zero() => Some((Matrix::zeros(n, n), Vector::zeros(n))),
            ProxKind::SquaredL2 { weight } => Some((Matrix::scaled_identity(n, *weight), Vector::zeros(n))),
            ProxKind::ElasticNet { l1, l2 } if *l1 == T::zero() => {
                Some((Matrix::scaled_identity(n, *l2), Vector::zeros(n)))
            }
            ProxKind::Quadratic { hessian, linear } => Some((hessian.clone(), linear.clone())),
            ProxKind::Translated { inner, shift } => {
                let (m, t) = inner.affine_subgradient()?;
                let ms = m.mul_vec(shift).ok()?;
                Some((m, &t - &ms))
            }
            ProxKind::Scaled { inner, factor } => {
                let (m, t) = inner.affine_subgradient()?;
                Some((m.scale(*factor), t.scale(*factor)))
            }
            ProxKind::Conjugate(inner) => {
                let (m, t) = inner.affine_subgradient()?;
                let inv = Lu::factor(&m).ok()?.inverse().ok()?;
                let off = inv.mul_vec(&t).ok()?;
                Some((inv, -off))
            }
            _ => None,
        }
    }
}
