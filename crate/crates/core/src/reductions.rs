//! Named splitting methods as configurations of the two engines, each paired
//! with a direct implementation of the method's own update rules.

use std::fmt;
use std::str::FromStr;

use crate::accelerated::{check_metric_family, AccConfig, AccEngine, AccState, MetricFamily, ParamSchedule};
use crate::error::{check_dim, Constraint, Error, Result};
use crate::hilbert::{cogram, gram, MetricOperator};
use crate::linalg::{solve, Vector};
use crate::operators::{inverse_resolvent, Operator, ProxFunction};
use crate::scalar::Scalar;
use crate::unified::{AdmmConfig, AdmmState, InclusionProblem, MetricSchedule, UnifiedAdmm};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ReductionKind {
    VuCondat,
    Bch,
    ChambollePock,
    ClassicalAdmm,
    VariableMetricAdmm,
    AccChambollePock,
    AccClassicalAdmm,
}

impl ReductionKind {
    pub const ALL: [ReductionKind; 7] = [
        ReductionKind::VuCondat,
        ReductionKind::Bch,
        ReductionKind::ChambollePock,
        ReductionKind::ClassicalAdmm,
        ReductionKind::VariableMetricAdmm,
        ReductionKind::AccChambollePock,
        ReductionKind::AccClassicalAdmm,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ReductionKind::VuCondat => "VuCondat",
            ReductionKind::Bch => "BCH",
            ReductionKind::ChambollePock => "ChambollePock",
            ReductionKind::ClassicalAdmm => "ClassicalADMM",
            ReductionKind::VariableMetricAdmm => "VariableMetricADMM",
            ReductionKind::AccChambollePock => "AccChambollePock",
            ReductionKind::AccClassicalAdmm => "AccClassicalADMM",
        }
    }

    pub fn is_accelerated(self) -> bool {
        matches!(self, ReductionKind::AccChambollePock | ReductionKind::AccClassicalAdmm)
    }
}

impl fmt::Display for ReductionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ReductionKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ReductionKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::invalid(format!("unknown reduction {s:?}")))
    }
}

/// Update rules written out in the form the original method states them.
#[derive(Debug, Clone)]
pub enum DirectScheme<T> {
    /// `x⁺ = J_{τA}(x - τCx - τL*(2y - y⁻))`, `y⁺ = J_{cB^{-1}}(y + cLx⁺)`; also covers the `C = 0` case.
    VuCondat { tau: T, c: T },
    /// Same recursion written with `prox_{τf}` and `prox_{cg*}`.
    ChambollePock { tau: T, c: T },
    /// Argmin forms with zero metrics.
    ClassicalAdmm { c: T },
    /// Argmin forms with constant metrics `M1`, `M2` and a linearized `h`.
    VariableMetricAdmm { c: T, m1: MetricOperator<T>, m2: MetricOperator<T> },
    /// `y⁺ = J_{σ_k B^{-1}}[y + σ_k L(x + θ_{k-1}(x - x⁻))]`, `x⁺ = J_{(τ_{k+1}/λ)A}[x + (τ_{k+1}/λ)(-L*y⁺ - Cx)]`.
    AccChambollePock { schedule: ParamSchedule<T> },
    /// Argmin forms over `g*` and `f*` with `λ = 1`.
    AccClassicalAdmm { schedule: ParamSchedule<T>, family: MetricFamily<T> },
}

/// Anything that produces a trajectory from a start `(x⁰, z⁰, y⁰)`.
#[derive(Debug, Clone)]
pub enum Scheme<T> {
    Unified(AdmmConfig<T>),
    Accelerated { schedule: ParamSchedule<T>, family: MetricFamily<T> },
    Direct(DirectScheme<T>),
}

#[derive(Debug, Clone)]
pub struct Reduction<T> {
    pub kind: ReductionKind,
    pub engine: Scheme<T>,
    pub direct: Scheme<T>,
}

/// Parameters for [`build`]; each method reads the fields it needs.
#[derive(Debug, Clone)]
pub struct ReductionParams<T> {
    pub tau: Option<T>,
    pub c: Option<T>,
    pub m1: Option<MetricOperator<T>>,
    pub m2: Option<MetricOperator<T>>,
    pub schedule: Option<ParamSchedule<T>>,
    pub family: Option<MetricFamily<T>>,
}

impl<T> Default for ReductionParams<T> {
    fn default() -> Self {
        ReductionParams { tau: None, c: None, m1: None, m2: None, schedule: None, family: None }
    }
}

fn required<V: Clone>(v: &Option<V>, name: &str, kind: ReductionKind) -> Result<V> {
    v.clone().ok_or_else(|| Error::invalid(format!("{kind} needs parameter {name}")))
}

pub fn build<T: Scalar>(
    kind: ReductionKind,
    problem: &InclusionProblem<T>,
    params: &ReductionParams<T>,
) -> Result<Reduction<T>> {
    let tau = || required(&params.tau, "tau", kind);
    let c = || required(&params.c, "c", kind);
    let schedule = || required(&params.schedule, "schedule", kind);
    match kind {
        ReductionKind::VuCondat => build_vu_condat(problem, tau()?, c()?),
        ReductionKind::Bch => build_bch(problem, tau()?, c()?),
        ReductionKind::ChambollePock => build_chambolle_pock(problem, tau()?, c()?),
        ReductionKind::ClassicalAdmm => build_classical_admm(problem, c()?),
        ReductionKind::VariableMetricAdmm => {
            let m1 = params.m1.clone().unwrap_or_else(|| MetricOperator::zeros(problem.dim_h()));
            let m2 = params.m2.clone().unwrap_or_else(|| MetricOperator::zeros(problem.dim_g()));
            build_variable_metric_admm(problem, c()?, m1, m2)
        }
        ReductionKind::AccChambollePock => build_acc_chambolle_pock(problem, schedule()?),
        ReductionKind::AccClassicalAdmm => {
            build_acc_classical_admm(problem, schedule()?, params.family.clone().unwrap_or(MetricFamily::TauId))
        }
    }
}

fn positive<T: Scalar>(name: &'static str, v: T) -> Result<()> {
    if v > T::zero() && v.is_finite() {
        Ok(())
    } else {
        Err(Error::violated(Constraint::Positive(name), format!("{name} = {v}")))
    }
}

fn require_zero_forward<T: Scalar>(problem: &InclusionProblem<T>) -> Result<()> {
    if problem.c().is_zero() {
        Ok(())
    } else {
        Err(Error::violated(Constraint::ZeroForward, "the forward term must vanish"))
    }
}

fn variational<T: Scalar>(problem: &InclusionProblem<T>) -> Result<(ProxFunction<T>, ProxFunction<T>)> {
    match (problem.a(), problem.b()) {
        (Operator::Subdifferential(f), Operator::Subdifferential(g)) => Ok((f.clone(), g.clone())),
        _ => Err(Error::invalid("this method needs A = ∂f and B = ∂g")),
    }
}

/// `M1 = τ^{-1} Id - c L*L`, `M2 = 0`
fn vu_condat_config<T: Scalar>(problem: &InclusionProblem<T>, tau: T, c: T) -> Result<AdmmConfig<T>> {
    let m1 = gram(problem.l()).affine(-c, T::one() / tau);
    AdmmConfig::new(c, MetricSchedule::constant(m1), MetricSchedule::zeros(problem.dim_g()))
}

pub fn build_vu_condat<T: Scalar>(problem: &InclusionProblem<T>, tau: T, c: T) -> Result<Reduction<T>> {
    positive("τ", tau)?;
    positive("c", c)?;
    if !problem.c().is_cocoercive() {
        return Err(Error::invalid("the forward term must be cocoercive"));
    }
    let ln2 = problem.l().norm().powi(2);
    let margin = T::one() / tau - c * ln2 - problem.c().half_inverse_cocoercivity();
    if !(margin > T::zero()) {
        return Err(Error::violated(
            Constraint::VuCondatStep,
            format!("1/τ − c‖L‖² − 1/(2η) = {margin} is not positive"),
        ));
    }
    Ok(Reduction {
        kind: ReductionKind::VuCondat,
        engine: Scheme::Unified(vu_condat_config(problem, tau, c)?),
        direct: Scheme::Direct(DirectScheme::VuCondat { tau, c }),
    })
}

fn bch_guard<T: Scalar>(problem: &InclusionProblem<T>, tau: T, c: T) -> Result<()> {
    positive("τ", tau)?;
    positive("c", c)?;
    require_zero_forward(problem)?;
    let product = c * tau * problem.l().norm().powi(2);
    if !(product < T::one()) {
        return Err(Error::violated(Constraint::BchStep, format!("cτ‖L‖² = {product} is not below 1")));
    }
    Ok(())
}

pub fn build_bch<T: Scalar>(problem: &InclusionProblem<T>, tau: T, c: T) -> Result<Reduction<T>> {
    bch_guard(problem, tau, c)?;
    Ok(Reduction {
        kind: ReductionKind::Bch,
        engine: Scheme::Unified(vu_condat_config(problem, tau, c)?),
        direct: Scheme::Direct(DirectScheme::VuCondat { tau, c }),
    })
}

pub fn build_chambolle_pock<T: Scalar>(problem: &InclusionProblem<T>, tau: T, c: T) -> Result<Reduction<T>> {
    bch_guard(problem, tau, c)?;
    variational(problem)?;
    Ok(Reduction {
        kind: ReductionKind::ChambollePock,
        engine: Scheme::Unified(vu_condat_config(problem, tau, c)?),
        direct: Scheme::Direct(DirectScheme::ChambollePock { tau, c }),
    })
}

/// Zero metrics. When `cL*L` is singular and `A` has no linear
/// representation the first step fails with `MetricNotPositive`.
pub fn build_classical_admm<T: Scalar>(problem: &InclusionProblem<T>, c: T) -> Result<Reduction<T>> {
    positive("c", c)?;
    require_zero_forward(problem)?;
    variational(problem)?;
    Ok(Reduction {
        kind: ReductionKind::ClassicalAdmm,
        engine: Scheme::Unified(AdmmConfig::classical(problem, c)?),
        direct: Scheme::Direct(DirectScheme::ClassicalAdmm { c }),
    })
}

pub fn build_variable_metric_admm<T: Scalar>(
    problem: &InclusionProblem<T>,
    c: T,
    m1: MetricOperator<T>,
    m2: MetricOperator<T>,
) -> Result<Reduction<T>> {
    positive("c", c)?;
    variational(problem)?;
    check_dim(problem.dim_h(), m1.dim())?;
    check_dim(problem.dim_g(), m2.dim())?;
    for m in [&m1, &m2] {
        if !m.is_psd(m.default_tol()) {
            return Err(Error::MetricNotPositive { min_eigenvalue: m.min_eigenvalue().to_f64_lossy() });
        }
    }
    let config = AdmmConfig::new(c, MetricSchedule::constant(m1.clone()), MetricSchedule::constant(m2.clone()))?;
    Ok(Reduction {
        kind: ReductionKind::VariableMetricAdmm,
        engine: Scheme::Unified(config),
        direct: Scheme::Direct(DirectScheme::VariableMetricAdmm { c, m1, m2 }),
    })
}

fn schedule_guard<T: Scalar>(problem: &InclusionProblem<T>, schedule: &ParamSchedule<T>) -> Result<()> {
    let product = schedule.sigma0() * schedule.tau1() * problem.l().norm().powi(2);
    if !(product <= T::one() + T::lit(1e-12)) {
        return Err(Error::violated(Constraint::StepProduct, format!("σ_0τ_1‖L‖² = {product} > 1")));
    }
    let flags = schedule.flags();
    let failing = [
        (flags.step_curvature, Constraint::StepCurvature),
        (flags.relaxation, Constraint::Relaxation),
        (flags.step_product, Constraint::StepProduct),
    ];
    for (ok, constraint) in failing {
        if !ok {
            return Err(Error::violated(constraint, "schedule does not satisfy the step constraints"));
        }
    }
    if schedule.is_constant() {
        return Err(Error::violated(Constraint::StrongMonotonicity, "accelerated methods need γ > 0"));
    }
    Ok(())
}

pub fn build_acc_chambolle_pock<T: Scalar>(
    problem: &InclusionProblem<T>,
    schedule: ParamSchedule<T>,
) -> Result<Reduction<T>> {
    schedule_guard(problem, &schedule)?;
    Ok(Reduction {
        kind: ReductionKind::AccChambollePock,
        engine: Scheme::Accelerated { schedule: schedule.clone(), family: MetricFamily::ChoicePD },
        direct: Scheme::Direct(DirectScheme::AccChambollePock { schedule }),
    })
}

pub fn build_acc_classical_admm<T: Scalar>(
    problem: &InclusionProblem<T>,
    schedule: ParamSchedule<T>,
    family: MetricFamily<T>,
) -> Result<Reduction<T>> {
    schedule_guard(problem, &schedule)?;
    require_zero_forward(problem)?;
    variational(problem)?;
    if schedule.lambda() != T::one() {
        return Err(Error::invalid(format!("{} needs λ = 1", ReductionKind::AccClassicalAdmm)));
    }
    if !matches!(family, MetricFamily::Zero | MetricFamily::TauId) {
        return Err(Error::invalid(format!(
            "{} uses the Zero or TauId metric family",
            ReductionKind::AccClassicalAdmm
        )));
    }
    let mut probe = schedule.clone();
    let report = check_metric_family(&family, &mut probe, problem.l(), 1)?;
    if let Some(v) = report.preset.filter(|v| !v.holds) {
        return Err(Error::violated(Constraint::MetricLowerBound, format!("{} (witness {:e})", v.name, v.witness)));
    }
    Ok(Reduction {
        kind: ReductionKind::AccClassicalAdmm,
        engine: Scheme::Accelerated { schedule: schedule.clone(), family: family.clone() },
        direct: Scheme::Direct(DirectScheme::AccClassicalAdmm { schedule, family }),
    })
}

const ARGMIN_TOL: f64 = 1e-14;
/// stop once the step length has not improved for this many iterations
const ARGMIN_STALL: usize = 200;
const ARGMIN_MAX_ITERS: usize = 1_000_000;

/// `argmin_x f(x) + ½ x'Hx + lin'x` with `H` PSD.
fn argmin_composite<T: Scalar>(
    f: &ProxFunction<T>,
    h: &MetricOperator<T>,
    lin: &Vector<T>,
    start: &Vector<T>,
) -> Result<Vector<T>> {
    if let Some((q, qlin)) = f.affine_subgradient() {
        return solve(&h.matrix().add(&q)?, &-(lin + &qlin));
    }
    if let Some(rho) = h.as_scaled_identity().filter(|r| *r > T::zero()) {
        return f.prox(T::one() / rho, &lin.scale(-T::one() / rho));
    }
    let lmax = h.max_eigenvalue();
    if !(lmax > T::zero()) {
        return Err(Error::MetricNotPositive { min_eigenvalue: lmax.to_f64_lossy() });
    }
    let t = T::one() / lmax;
    let tol = T::lit(ARGMIN_TOL);
    let mut x = start.clone();
    let mut change = T::infinity();
    let (mut best, mut since_best) = (T::infinity(), 0);
    for _ in 0..ARGMIN_MAX_ITERS {
        let grad = &h.apply(&x)? + lin;
        let next = f.prox(t, &x.add_scaled(-t, &grad))?;
        change = next.dist(&x);
        let scale = T::one() + next.norm();
        if change < best {
            (best, since_best) = (change, 0);
        } else {
            since_best += 1;
        }
        let stalled = since_best >= ARGMIN_STALL && best <= T::lit(1e3) * tol * scale;
        let done = change <= tol * scale || stalled;
        x = next;
        if done {
            return Ok(x);
        }
    }
    Err(Error::NoConvergence { iterations: ARGMIN_MAX_ITERS, residual: change.to_f64_lossy() })
}

fn quadratic_form<T: Scalar>(c: T, base: &MetricOperator<T>, m: &MetricOperator<T>) -> Result<MetricOperator<T>> {
    base.scale(c).add(m)
}

impl<T: Scalar> Scheme<T> {
    /// `n + 1` states starting with `start`. For direct schemes the `z`
    /// component is recovered from the recursion so that all three
    /// components can be compared.
    pub fn trajectory(
        &self,
        problem: &InclusionProblem<T>,
        start: &AdmmState<T>,
        n: usize,
    ) -> Result<Vec<AdmmState<T>>> {
        match self {
            Scheme::Unified(config) => UnifiedAdmm::new(problem, config.clone())?.iterate(start, n),
            Scheme::Accelerated { schedule, family } => {
                AccEngine::unchecked(problem, schedule.clone(), AccConfig::new(family.clone()))?.iterate(start, n)
            }
            Scheme::Direct(d) => d.trajectory(problem, start, n),
        }
    }
}

impl<T: Scalar> DirectScheme<T> {
    pub fn trajectory(
        &self,
        problem: &InclusionProblem<T>,
        start: &AdmmState<T>,
        n: usize,
    ) -> Result<Vec<AdmmState<T>>> {
        match self {
            DirectScheme::VuCondat { tau, c } => primal_dual_run(problem, start, n, *tau, *c, false),
            DirectScheme::ChambollePock { tau, c } => primal_dual_run(problem, start, n, *tau, *c, true),
            DirectScheme::ClassicalAdmm { c } => {
                let m1 = MetricOperator::zeros(problem.dim_h());
                let m2 = MetricOperator::zeros(problem.dim_g());
                admm_run(problem, start, n, *c, &m1, &m2)
            }
            DirectScheme::VariableMetricAdmm { c, m1, m2 } => admm_run(problem, start, n, *c, m1, m2),
            DirectScheme::AccChambollePock { schedule } => acc_pd_run(problem, start, n, schedule.clone()),
            DirectScheme::AccClassicalAdmm { schedule, family } => {
                acc_admm_run(problem, start, n, schedule.clone(), family)
            }
        }
    }
}

/// The `(x, y)` recursion shared by the Vũ–Condat, BCH and Chambolle–Pock
/// schemes. The engine's start `(x⁰, z⁰, y⁰)` corresponds to a virtual
/// `y^{-1} = y⁰ + c(z⁰ - Lx⁰)`.
fn primal_dual_run<T: Scalar>(
    problem: &InclusionProblem<T>,
    start: &AdmmState<T>,
    n: usize,
    tau: T,
    c: T,
    prox_form: bool,
) -> Result<Vec<AdmmState<T>>> {
    let l = problem.l();
    let fg = if prox_form { Some(variational(problem)?) } else { None };
    let mut out = vec![start.clone()];
    let mut y_prev = start.y.add_scaled(c, &(&start.z - &l.apply(&start.x)?));
    let (mut x, mut y) = (start.x.clone(), start.y.clone());
    for k in 0..n {
        let bar = &y.scale(T::two()) - &y_prev;
        let arg = &x.add_scaled(-tau, &problem.c().apply(&x)?) - &l.adjoint_apply(&bar)?.scale(tau);
        let arg_y_of = |x_next: &Vector<T>| -> Result<Vector<T>> { Ok(y.add_scaled(c, &l.apply(x_next)?)) };
        let (x_next, y_next) = match &fg {
            Some((f, g)) => {
                let x_next = f.prox(tau, &arg)?;
                let y_next = g.conjugate_prox(c, &arg_y_of(&x_next)?)?;
                (x_next, y_next)
            }
            None => {
                let x_next = problem.a().resolvent(tau, &arg)?;
                let y_next = inverse_resolvent(problem.b(), c, &arg_y_of(&x_next)?)?;
                (x_next, y_next)
            }
        };
        // z = Lx - (y⁺ - y)/c
        let z = l.apply(&x_next)?.add_scaled(-T::one() / c, &(&y_next - &y));
        y_prev = std::mem::replace(&mut y, y_next.clone());
        x = x_next.clone();
        out.push(AdmmState { k: k + 1, x: x_next, z, y: y_next });
    }
    Ok(out)
}

/// Argmin forms `x⁺ = argmin f + ⟨·, ∇h(x)⟩ + c/2‖L· - z + y/c‖² + ½‖· - x‖²_{M1}` and
/// `z⁺ = argmin g + c/2‖Lx⁺ - · + y/c‖² + ½‖· - z‖²_{M2}`.
fn admm_run<T: Scalar>(
    problem: &InclusionProblem<T>,
    start: &AdmmState<T>,
    n: usize,
    c: T,
    m1: &MetricOperator<T>,
    m2: &MetricOperator<T>,
) -> Result<Vec<AdmmState<T>>> {
    let (f, g) = variational(problem)?;
    let l = problem.l();
    let hx = quadratic_form(c, &gram(l), m1)?;
    let hz = m2.affine(T::one(), c);
    let mut out = vec![start.clone()];
    for k in 0..n {
        let s = out.last().expect("non-empty");
        // linear term of the x-subproblem: ∇h(x) - cL*(z - y/c) - M1 x
        let shifted = s.z.add_scaled(-T::one() / c, &s.y);
        let lin_x = &(&problem.c().apply(&s.x)? - &l.adjoint_apply(&shifted)?.scale(c)) - &m1.apply(&s.x)?;
        let x = argmin_composite(&f, &hx, &lin_x, &s.x)?;
        let lx = l.apply(&x)?;
        let lin_z = -(&lx.add_scaled(T::one() / c, &s.y).scale(c) + &m2.apply(&s.z)?);
        let z = argmin_composite(&g, &hz, &lin_z, &s.z)?;
        let y = s.y.add_scaled(c, &(&lx - &z));
        out.push(AdmmState { k: k + 1, x, z, y });
    }
    Ok(out)
}

/// Direct accelerated primal-dual recursion. At `k = 0` the extrapolation
/// `θ_{-1}(x⁰ - x^{-1})` is replaced by `-τ_0(z⁰ + L*y⁰)`, which is what the
/// engine's first step uses.
fn acc_pd_run<T: Scalar>(
    problem: &InclusionProblem<T>,
    start: &AccState<T>,
    n: usize,
    mut sched: ParamSchedule<T>,
) -> Result<Vec<AccState<T>>> {
    let l = problem.l();
    check_dim(problem.dim_h(), start.z.dim())?;
    sched.ensure(n);
    let lambda = sched.lambda();
    let mut out = vec![start.clone()];
    let mut extrapolation = (&start.z + &l.adjoint_apply(&start.y)?).scale(-sched.tau(0));
    for k in 0..n {
        let s = out.last().expect("non-empty");
        let sigma = sched.sigma(k);
        let bar = &s.x + &extrapolation;
        let y = inverse_resolvent(problem.b(), sigma, &s.y.add_scaled(sigma, &l.apply(&bar)?))?;
        let step = sched.tau(k + 1) / lambda;
        let lsy = l.adjoint_apply(&y)?;
        let arg = s.x.add_scaled(-step, &(&lsy + &problem.c().apply(&s.x)?));
        let x = problem.a().resolvent(step, &arg)?;
        let theta = sched.theta(k);
        let dx = &x - &s.x;
        // z⁺ = -L*y⁺ - θ_k (x⁺ - x) / τ_{k+1}
        let z = &(-&lsy) - &dx.scale(theta / sched.tau(k + 1));
        extrapolation = dx.scale(theta);
        out.push(AccState { k: k + 1, x, z, y });
    }
    Ok(out)
}

/// Argmin forms of the accelerated scheme with `λ = 1`, `C = 0`.
fn acc_admm_run<T: Scalar>(
    problem: &InclusionProblem<T>,
    start: &AccState<T>,
    n: usize,
    mut sched: ParamSchedule<T>,
    family: &MetricFamily<T>,
) -> Result<Vec<AccState<T>>> {
    let (f, g) = variational(problem)?;
    let g_star = g.conjugate();
    let l = problem.l();
    check_dim(problem.dim_h(), start.z.dim())?;
    sched.ensure(n);
    let cg = cogram(l);
    let mut out = vec![start.clone()];
    for k in 0..n {
        let s = out.last().expect("non-empty");
        let tau = sched.tau(k);
        let m2 = family.m2(k, &sched, &cg);
        let hy = cg.scale(tau).add(&m2)?;
        // τ_k/2 ‖L*y + z - x/τ_k‖² + ½‖y - y^k‖²_{M2}: linear term τ_k L(z - x/τ_k) - M2 y^k
        let lin = &l.apply(&s.z.add_scaled(-T::one() / tau, &s.x))?.scale(tau) - &m2.apply(&s.y)?;
        let y = argmin_composite(&g_star, &hy, &lin, &s.y)?;
        let tau_next = sched.tau(k + 1);
        let theta = sched.theta(k);
        let lsy = l.adjoint_apply(&y)?;
        let w = &s.x.scale(T::one() / tau_next) - &lsy;
        let u = f.conjugate_prox(T::one() / tau_next, &w)?;
        let z = &lsy.scale(theta - T::one()) + &u.scale(theta);
        let x = s.x.add_scaled(-tau_next / theta, &(&lsy + &z));
        out.push(AccState { k: k + 1, x, z, y });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Equivalence<T> {
    pub max_deviation: T,
    pub at_k: usize,
    pub deviations: Vec<T>,
    pub tol: T,
}

impl<T: Scalar> Equivalence<T> {
    pub fn passed(&self) -> bool {
        self.max_deviation <= self.tol
    }
}

/// Maximum over `k <= n` of the distance between the two trajectories.
pub fn equivalence_check<T: Scalar>(
    a: &Scheme<T>,
    b: &Scheme<T>,
    problem: &InclusionProblem<T>,
    start: &AdmmState<T>,
    n: usize,
    tol: T,
) -> Result<Equivalence<T>> {
    let ta = a.trajectory(problem, start, n)?;
    let tb = b.trajectory(problem, start, n)?;
    Ok(compare_trajectories(&ta, &tb, tol))
}

pub fn compare_trajectories<T: Scalar>(ta: &[AdmmState<T>], tb: &[AdmmState<T>], tol: T) -> Equivalence<T> {
    let deviations: Vec<T> = ta.iter().zip(tb).map(|(p, q)| p.dist(q)).collect();
    let (at_k, max_deviation) = deviations.iter().copied().enumerate().fold((0, T::zero()), |(bk, bv), (k, v)| {
        if v > bv || v.is_nan() {
            (k, v)
        } else {
            (bk, bv)
        }
    });
    Equivalence { max_deviation, at_k, deviations, tol }
}

impl<T: Scalar> Reduction<T> {
    pub fn check(
        &self,
        problem: &InclusionProblem<T>,
        start: &AdmmState<T>,
        n: usize,
        tol: T,
    ) -> Result<Equivalence<T>> {
        equivalence_check(&self.engine, &self.direct, problem, start, n, tol)
    }
}
