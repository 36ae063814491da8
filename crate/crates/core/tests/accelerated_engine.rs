use splitmono::accelerated::{check_metric_family, rate_certificate, tau_at};
use splitmono::hilbert::gram;
use splitmono::unified::ReferenceSolution;
use splitmono::*;

fn v(x: &[f64]) -> Vector<f64> {
    Vector::from_f64(x)
}

const GAMMA: f64 = 1.5;

fn problem() -> AccProblem<f64> {
    let a = Operator::subdifferential(
        ProxFunction::elastic_net(2, 0.3, GAMMA).unwrap().translated(v(&[2.0, -1.0])).unwrap(),
    );
    let b = Operator::subdifferential(ProxFunction::l1(3, 0.2).unwrap());
    let h = Matrix::from_rows(&[vec![0.6, 0.1], vec![0.1, 0.3]]).unwrap();
    let c = ForwardMap::gradient(h, v(&[0.1, 0.0])).unwrap();
    let l = DenseLinearMap::from_rows(&[vec![1.0, 0.5], vec![0.0, 1.0], vec![-1.0, 0.3]]).unwrap();
    AccProblem::new(a, b, c, l, GAMMA).unwrap()
}

fn reference(p: &InclusionProblem<f64>) -> ReferenceSolution<f64> {
    let c = 1.0;
    let eta = p.c().cocoercivity().unwrap_or(f64::INFINITY);
    let inv_tau = c * p.l().norm().powi(2) + 1.0 / (2.0 * eta) + 1.0;
    let m1 = gram(p.l()).affine(-c, inv_tau);
    let config = AdmmConfig::new(c, MetricSchedule::constant(m1), MetricSchedule::zeros(p.dim_g()))
        .unwrap()
        .with_stop(StopRule::iterations(200_000).with_stop_tol(0.0).with_kkt_tol(1e-14).without_history());
    let trace = UnifiedAdmm::new(p, config).unwrap().run(AdmmState::zeros(p)).unwrap();
    ReferenceSolution::with_tolerance(p, trace.last().x.clone(), trace.last().y.clone(), 1e-12).unwrap()
}

#[test]
fn schedule_guards() {
    assert!(ParamSchedule::<f64>::init(1.0, 0.0, 1.0, 1.0, 1.0, 1.0).is_ok());
    let err = ParamSchedule::<f64>::init(1.0, 3.0, 5.0, 1.0, 0.1, 1.0).unwrap_err();
    assert!(matches!(err, Error::ConstraintViolated { constraint: Constraint::StepCurvature, .. }));
    let err = ParamSchedule::<f64>::init(1.0, 1.0, 1.0, 0.5, 0.1, 1.0).unwrap_err();
    assert!(matches!(err, Error::ConstraintViolated { constraint: Constraint::Relaxation, .. }));
    assert!(ParamSchedule::<f64>::init(1.0, 1.0, 2.0, 0.5, 0.1, 1.0).is_ok());
    let err = ParamSchedule::<f64>::init(1.0, 0.0, 1.0, 1.0, 1.0, 1.01).unwrap_err();
    assert!(matches!(err, Error::ConstraintViolated { constraint: Constraint::StepProduct, .. }));
    let err = ParamSchedule::<f64>::init(0.0, 0.0, 1.0, 1.0, 1.0, 1.0).unwrap_err();
    assert!(matches!(err, Error::ConstraintViolated { constraint: Constraint::StrongMonotonicity, .. }));
    assert!(err.to_string().contains("γ > 0"));
}

#[test]
fn schedule_values() {
    let mut s = ParamSchedule::<f64>::init(1.0, 0.0, 1.0, 1.0, 1.0, 1.0).unwrap();
    let (theta0, tau2, sigma1) = s.step(0);
    assert!((theta0 - 0.577_350_269_189_625_8).abs() < 1e-15);
    assert!((tau2 - 0.577_350_269_189_625_8).abs() < 1e-15);
    assert!((sigma1 - 3f64.sqrt()).abs() < 1e-15);
    let (_, tau3, _) = s.step(1);
    assert!((tau3 - tau2 / (1.0 + 2.0 * tau2).sqrt()).abs() < 1e-15);
    assert!((tau3 - 0.393_319_8).abs() < 1e-6);
}

#[test]
fn schedule_invariants() {
    let mut s = ParamSchedule::<f64>::init(1.0, 0.5, 2.0, 0.5, 0.5, 1.0).unwrap();
    assert!(s.flags().strong);
    s.ensure(10_000);
    let product = s.tau(1) * s.sigma(0);
    for k in 0..10_000 {
        assert!((s.tau(k + 1) * s.sigma(k) - product).abs() <= 1e-14 * product);
        assert!(s.theta(k) > 0.0 && s.theta(k) <= 1.0);
        assert!(s.tau(k + 2) < s.tau(k + 1));
        if k > 0 {
            assert!(s.theta(k) >= s.theta(k - 1));
        }
    }
    let direct = tau_at::<f64>(1.0, 0.5, 2.0, 0.5, 5000, false);
    assert!((direct - s.tau(5000)).abs() < 1e-15);
}

#[test]
fn constant_schedule_is_flat() {
    let mut s = ParamSchedule::<f64>::constant(0.3, 2.0, 1.0, 1.0).unwrap();
    assert_eq!(s.step(7), (1.0, 0.3, 2.0));
}

#[test]
fn step_size_asymptote() {
    for (lambda, target) in [(1.0, 1.0), (2.0, 2.0)] {
        let s = ParamSchedule::<f64>::init(1.0, 0.0, lambda, 1.0, 1.0, 1.0).unwrap();
        let value = s.tau_asymptote(1_000_000);
        assert!((value - target).abs() / target <= 0.02, "{value}");
    }
    let s = ParamSchedule::<f64>::init(1.0, 0.0, 1.0, 0.2, 1.0, 1.0).unwrap();
    let values: Vec<f64> = [1_000usize, 10_000, 100_000].iter().map(|&n| s.tau_asymptote(n)).collect();
    assert!(values.windows(2).all(|w| w[0] < w[1]));
}

#[test]
fn strong_monotonicity_sampling() {
    let p = problem();
    assert!(p.strong_monotonicity_gap(200, 3).unwrap() >= -1e-12);
    let fake = AccProblem::from_inclusion(p.inclusion().clone(), 10.0).unwrap();
    assert!(fake.strong_monotonicity_gap(200, 3).unwrap() < 0.0);
}

fn schedule_for(p: &AccProblem<f64>, lambda: f64, tau1: f64) -> ParamSchedule<f64> {
    let ln = p.inclusion().l().norm();
    ParamSchedule::<f64>::init(p.gamma(), p.mu(), lambda, tau1, 1.0 / (tau1 * ln * ln), ln).unwrap()
}

#[test]
fn solution_is_stationary() {
    let p = problem();
    let sol = reference(p.inclusion());
    let z = p.inclusion().l().adjoint_apply(&sol.y).unwrap().scale(-1.0);
    let start = AccState::new(sol.x.clone(), z, sol.y.clone());
    for family in [MetricFamily::ChoicePD, MetricFamily::InvSigmaId] {
        let mut engine = AccEngine::new(&p, schedule_for(&p, 2.0, 0.5), AccConfig::new(family)).unwrap();
        let states = engine.iterate(&start, 5).unwrap();
        for s in &states[1..] {
            assert!(s.x.dist(&sol.x) < 1e-10);
            assert!(s.y.dist(&sol.y) < 1e-10);
            assert!(s.z.dist(&start.z) < 1e-10);
        }
    }
}

#[test]
fn primal_update_matches_resolvent_form() {
    let p = problem();
    let q = p.inclusion();
    let sched = schedule_for(&p, 2.0, 0.5);
    let mut engine = AccEngine::new(&p, sched, AccConfig::new(MetricFamily::InvSigmaId)).unwrap();
    let states = engine.iterate(&AccState::new(v(&[1.0, 1.0]), v(&[0.5, -0.5]), v(&[0.1, 0.2, 0.3])), 50).unwrap();
    let s = engine.schedule();
    for w in states.windows(2) {
        let (cur, next) = (&w[0], &w[1]);
        let step = s.tau(cur.k + 1) / s.lambda();
        let lsy = q.l().adjoint_apply(&next.y).unwrap();
        let arg = &cur.x + &(&lsy + &q.c().apply(&cur.x).unwrap()).scale(-step);
        let x = q.a().resolvent(step, &arg).unwrap();
        assert!(x.dist(&next.x) < 1e-10);
    }
}

#[test]
fn rate_certificate_is_zero_at_solution() {
    let p = problem();
    let sol = reference(p.inclusion());
    let z = p.inclusion().l().adjoint_apply(&sol.y).unwrap().scale(-1.0);
    let start = AccState::new(sol.x.clone(), z, sol.y.clone());
    let sched = schedule_for(&p, 2.0, 0.5);
    let mut engine = AccEngine::new(&p, sched.clone(), AccConfig::new(MetricFamily::ChoicePD)).unwrap();
    let states = engine.iterate(&start, 10).unwrap();
    let report = rate_certificate(p.inclusion(), &sched, &MetricFamily::ChoicePD, &states, &sol).unwrap();
    assert!(report.rhs.abs() < 1e-12);
    assert!(report.rows.iter().all(|r| r.lhs.abs() < 1e-12));
}

#[test]
fn rate_certificate_along_run() {
    let p = problem();
    let sol = reference(p.inclusion());
    for family in [MetricFamily::ChoicePD, MetricFamily::InvSigmaId] {
        let sched = schedule_for(&p, 2.0, 0.5);
        let mut engine = AccEngine::new(&p, sched.clone(), AccConfig::new(family.clone())).unwrap();
        let start = AccState::new(v(&[3.0, -2.0]), v(&[0.0, 1.0]), v(&[0.5, 0.5, -0.5]));
        let states = engine.iterate(&start, 2000).unwrap();
        let report = rate_certificate(p.inclusion(), &sched, &family, &states, &sol).unwrap();
        assert!(report.holds(1e-8), "{family:?}: {}", report.min_slack());
    }
}

#[test]
fn metric_family_reports() {
    let p = problem();
    let l = p.inclusion().l();
    let mut sched = schedule_for(&p, 2.0, 0.5);
    let report = check_metric_family(&MetricFamily::ChoicePD, &mut sched, l, 200).unwrap();
    assert!(report.holds());
    assert!(report.mon1.witness.abs() < 1e-12);

    // L = Id and σ_0τ_1 = 1
    let id = DenseLinearMap::identity(2);
    let mut sched = ParamSchedule::<f64>::init(1.0, 0.0, 1.0, 1.0, 1.0, 1.0).unwrap();
    let report = check_metric_family(&MetricFamily::Zero, &mut sched, &id, 200).unwrap();
    assert!(report.holds(), "{report:?}");
    let report = check_metric_family(&MetricFamily::TauId, &mut sched, &id, 200).unwrap();
    assert!(report.holds(), "{report:?}");

    let flat = DenseLinearMap::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0]]).unwrap();
    let ln = flat.norm();
    let mut sched = ParamSchedule::<f64>::init(1.0, 0.0, 1.0, 1.0, 1.0 / (ln * ln), ln).unwrap();
    let report = check_metric_family(&MetricFamily::Zero, &mut sched, &flat, 20).unwrap();
    assert!(!report.mon1.holds);
    assert!(!report.preset.unwrap().holds);
}

#[test]
fn rank_deficient_zero_family_rejected() {
    let a = Operator::subdifferential(ProxFunction::squared_l2(2, 1.0).unwrap());
    let b = Operator::subdifferential(ProxFunction::l1(2, 1.0).unwrap());
    let flat = DenseLinearMap::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0]]).unwrap();
    let ln = flat.norm();
    let p = AccProblem::new(a, b, ForwardMap::zero(2), flat, 1.0).unwrap();
    let sched = ParamSchedule::<f64>::init(1.0, 0.0, 1.0, 1.0, 1.0 / (ln * ln), ln).unwrap();
    let err = AccEngine::new(&p, sched, AccConfig::new(MetricFamily::Zero)).err().unwrap();
    assert!(matches!(err, Error::ConstraintViolated { constraint: Constraint::MetricLowerBound, .. }));
}

#[test]
fn zero_forward_step_matches_unified_on_dual_pair() {
    // A, B strongly monotone enough; C = 0
    let a = Operator::subdifferential(ProxFunction::elastic_net(2, 0.4, 1.0).unwrap());
    let b =
        Operator::subdifferential(ProxFunction::squared_l2(3, 2.0).unwrap().translated(v(&[1.0, 0.0, -1.0])).unwrap());
    let l = DenseLinearMap::from_rows(&[vec![1.0, 0.5], vec![0.0, 1.0], vec![-1.0, 0.3]]).unwrap();
    let p = InclusionProblem::new(a.clone(), b.clone(), ForwardMap::zero(2), l.clone()).unwrap();
    let c = 0.4;
    let m2 = MetricOperator::scaled_identity(3, 0.7);
    let fixed = m2.clone();
    let family = MetricFamily::custom(move |_, _| fixed.clone());
    let sched = ParamSchedule::<f64>::constant(c, 10.0, 1.0, l.norm()).unwrap();
    let mut acc = AccEngine::unchecked(&p, sched, AccConfig::new(family)).unwrap();

    let dual = InclusionProblem::new(b.inverse(), a.inverse(), ForwardMap::zero(3), l.adjoint().scaled(-1.0)).unwrap();
    let config = AdmmConfig::new(c, MetricSchedule::constant(m2), MetricSchedule::zeros(2)).unwrap();
    let mut unified = UnifiedAdmm::new(&dual, config).unwrap();

    let start = AccState::new(v(&[1.0, -1.0]), v(&[0.2, 0.3]), v(&[0.5, 0.0, 2.0]));
    let mut sa = start.clone();
    let mut su = AdmmState::new(start.y.clone(), start.z.clone(), start.x.clone());
    for _ in 0..50 {
        sa = acc.step(&sa).unwrap();
        su = unified.step(&su).unwrap();
        assert!(sa.y.dist(&su.x) < 1e-9);
        assert!(sa.z.dist(&su.z) < 1e-9);
        assert!(sa.x.dist(&su.y) < 1e-9);
    }
}
