//! Monotone operators, proximal maps, forward terms and generalized resolvents.

mod forward;
mod generalized;
mod monotone;
mod prox;

pub use forward::ForwardMap;
pub use generalized::{generalized_resolvent, ResolventKernel, DEFAULT_MAX_INNER_ITERATIONS};
pub use monotone::{AffineOperator, MonotoneOperator, Operator};
pub use prox::{ProxFunction, ProxKind};

use crate::error::Result;
use crate::linalg::Vector;
use crate::scalar::Scalar;

/// `J_{gamma A}(x)`.
pub fn resolvent<T: Scalar>(a: &Operator<T>, gamma: T, x: &Vector<T>) -> Result<Vector<T>> {
    a.resolvent(gamma, x)
}

/// `J_{gamma A^{-1}}(x) = x - gamma J_{A/gamma}(x/gamma)`.
pub fn inverse_resolvent<T: Scalar>(a: &Operator<T>, gamma: T, x: &Vector<T>) -> Result<Vector<T>> {
    if !(gamma > T::zero()) {
        return Err(crate::error::Error::invalid("resolvent parameter must be positive"));
    }
    let inv = T::one() / gamma;
    let p = a.resolvent(inv, &x.scale(inv))?;
    Ok(x.add_scaled(-gamma, &p))
}

pub fn prox<T: Scalar>(f: &ProxFunction<T>, gamma: T, x: &Vector<T>) -> Result<Vector<T>> {
    f.prox(gamma, x)
}

pub fn conjugate_prox<T: Scalar>(f: &ProxFunction<T>, gamma: T, x: &Vector<T>) -> Result<Vector<T>> {
    f.conjugate_prox(gamma, x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use crate::hilbert::MetricOperator;
    use crate::linalg::Matrix;
    use proptest::prelude::*;

    fn v(x: &[f64]) -> Vector<f64> {
        Vector::from_f64(x)
    }

    #[test]
    fn resolvent_examples() {
        let two = Operator::affine(Matrix::scaled_identity(1, 2.0), v(&[0.0])).unwrap();
        assert!((resolvent(&two, 1.0, &v(&[3.0])).unwrap()[0] - 1.0).abs() < 1e-15);
        // J_{A^{-1}}(3) = 3 - J_A(3) = 2
        assert!((inverse_resolvent(&two, 1.0, &v(&[3.0])).unwrap()[0] - 2.0).abs() < 1e-15);
        let zero = Operator::<f64>::zero(2);
        assert_eq!(resolvent(&zero, 7.0, &v(&[1.0, -2.0])).unwrap(), v(&[1.0, -2.0]));
        assert!(matches!(resolvent(&zero, 0.0, &v(&[1.0, 1.0])), Err(Error::InvalidInput(_))));
        assert!(matches!(resolvent(&zero, 1.0, &v(&[1.0])), Err(Error::DimError { .. })));
    }

    #[test]
    fn non_monotone_affine_rejected() {
        assert!(Operator::affine(Matrix::scaled_identity(2, -1.0), v(&[0.0, 0.0])).is_err());
        let skew = Matrix::from_rows(&[vec![0.0, 1.0], vec![-1.0, 0.0]]).unwrap();
        assert!(Operator::affine(skew, v(&[0.0, 0.0])).is_ok());
    }

    #[test]
    fn membership() {
        let l1 = Operator::subdifferential(ProxFunction::l1(1, 1.0).unwrap());
        assert!(l1.contains(&v(&[0.0]), &v(&[0.3]), 1e-12).unwrap());
        assert!(l1.contains(&v(&[2.0]), &v(&[1.0]), 1e-12).unwrap());
        assert!(!l1.contains(&v(&[2.0]), &v(&[0.5]), 1e-12).unwrap());
    }

    #[test]
    fn generalized_resolvent_strategies() {
        // U = I, A = 0 returns r
        let r = v(&[1.0, 2.0]);
        let p = generalized_resolvent(&MetricOperator::identity(2), &Operator::zero(2), &r, 1e-12).unwrap();
        assert!(p.dist(&r) < 1e-15);
        // U = 2I, A = ∂(½‖·‖²): p = r / 3
        let a = Operator::subdifferential(ProxFunction::squared_l2(2, 1.0).unwrap());
        let k = ResolventKernel::new(&MetricOperator::scaled_identity(2, 2.0), &a).unwrap();
        assert_eq!(k.strategy_name(), "dense");
        assert!(k.apply(&r).unwrap().dist(&r.scale(1.0 / 3.0)) < 1e-15);
        // singular U with a non-affine A
        let l1 = Operator::subdifferential(ProxFunction::l1(2, 1.0).unwrap());
        assert!(matches!(
            ResolventKernel::new(&MetricOperator::diagonal(&[1.0, 0.0]), &l1),
            Err(Error::MetricNotPositive { .. })
        ));
        // non-scalar U with a nonsmooth A goes through the fixed point
        let u = MetricOperator::diagonal(&[1.0, 3.0]);
        let k = ResolventKernel::new(&u, &l1).unwrap();
        assert_eq!(k.strategy_name(), "fixed-point");
        let p = k.apply(&v(&[4.0, 6.0])).unwrap();
        // componentwise: u_i p_i + sign(p_i) = r_i
        assert!(p.dist(&v(&[3.0, 5.0 / 3.0])) < 1e-10);
    }

    #[test]
    fn fixed_point_budget_exhausted() {
        let l1 = Operator::subdifferential(ProxFunction::l1(2, 1.0).unwrap());
        let u = MetricOperator::diagonal(&[1e-3, 1.0]);
        let k = ResolventKernel::new(&u, &l1).unwrap().with_tolerance(1e-15, 3);
        assert!(matches!(k.apply(&v(&[4.0, 6.0])), Err(Error::NoConvergence { .. })));
    }

    fn any_function() -> impl Strategy<Value = ProxFunction<f64>> {
        prop_oneof![
            (0.0..3.0f64).prop_map(|w| ProxFunction::l1(3, w).unwrap()),
            (0.0..3.0f64).prop_map(|w| ProxFunction::squared_l2(3, w).unwrap()),
            (-2.0..0.0f64, 0.0..2.0f64).prop_map(|(lo, hi)| ProxFunction::box_indicator(3, lo, hi).unwrap()),
            (0.0..2.0f64, 0.0..2.0f64).prop_map(|(a, b)| ProxFunction::elastic_net(3, a, b).unwrap()),
        ]
    }

    proptest! {
        #[test]
        fn moreau_identity(f in any_function(), gamma in 0.05..5.0f64, x in prop::collection::vec(-5.0..5.0f64, 3)) {
            let x = Vector::new(x);
            let p = f.prox(gamma, &x).unwrap();
            let d = f.conjugate_prox(1.0 / gamma, &x.scale(1.0 / gamma)).unwrap();
            prop_assert!((&p + &d.scale(gamma)).dist(&x) <= 1e-12 * (1.0 + x.norm()));
        }

        #[test]
        fn resolvent_is_firmly_nonexpansive(f in any_function(), gamma in 0.05..5.0f64,
                x in prop::collection::vec(-5.0..5.0f64, 3), y in prop::collection::vec(-5.0..5.0f64, 3)) {
            let a = Operator::subdifferential(f);
            let (x, y) = (Vector::new(x), Vector::new(y));
            let (px, py) = (a.resolvent(gamma, &x).unwrap(), a.resolvent(gamma, &y).unwrap());
            let lhs = px.dist(&py).powi(2);
            let rhs = (&px - &py).dot(&(&x - &y));
            prop_assert!(lhs <= rhs + 1e-12);
        }

        #[test]
        fn double_inverse_resolvent(gamma in 0.05..5.0f64, x in prop::collection::vec(-5.0..5.0f64, 3)) {
            let a = Operator::subdifferential(ProxFunction::l1(3, 0.7).unwrap());
            let x = Vector::new(x);
            let direct = a.resolvent(gamma, &x).unwrap();
            let twice = Operator::Inverse(Box::new(Operator::Inverse(Box::new(a)))).resolvent(gamma, &x).unwrap();
            prop_assert!(direct.dist(&twice) <= 1e-12 * (1.0 + x.norm()));
        }
    }
}
