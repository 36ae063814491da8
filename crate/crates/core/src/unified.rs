//! Variable-metric ADMM for `0 ∈ Ax + L*B(Lx) + Cx`, with the hypothesis
//! checkers and per-iteration Fejér certificates of its convergence theory.

use std::fmt;
use std::sync::Arc;

use crate::error::{check_dim, Error, Result};
use crate::hilbert::{gram, loewner_gap, DenseLinearMap, MetricOperator};
use crate::linalg::Vector;
use crate::operators::{ForwardMap, Operator, ResolventKernel, DEFAULT_MAX_INNER_ITERATIONS};
use crate::scalar::Scalar;
use crate::trace::{RunError, StopRule, Trace};

/// Solution pairs are accepted as references when both KKT residuals are below this.
pub const SOLUTION_TOL: f64 = 1e-8;

/// `A` on `H`, `B` on `G`, forward term `C` on `H` and `L : H -> G`.
#[derive(Debug, Clone)]
pub struct InclusionProblem<T> {
    a: Operator<T>,
    b: Operator<T>,
    c: ForwardMap<T>,
    l: DenseLinearMap<T>,
}

impl<T: Scalar> InclusionProblem<T> {
    pub fn new(a: Operator<T>, b: Operator<T>, c: ForwardMap<T>, l: DenseLinearMap<T>) -> Result<Self> {
        check_dim(l.cols(), a.dim())?;
        check_dim(l.cols(), c.dim())?;
        check_dim(l.rows(), b.dim())?;
        Ok(InclusionProblem { a, b, c, l })
    }

    /// `A = B = C = 0`, `L = Id` on `R^n`.
    pub fn zero(n: usize) -> Self {
        InclusionProblem {
            a: Operator::zero(n),
            b: Operator::zero(n),
            c: ForwardMap::zero(n),
            l: DenseLinearMap::identity(n),
        }
    }

    pub fn a(&self) -> &Operator<T> {
        &self.a
    }

    pub fn b(&self) -> &Operator<T> {
        &self.b
    }

    pub fn c(&self) -> &ForwardMap<T> {
        &self.c
    }

    pub fn l(&self) -> &DenseLinearMap<T> {
        &self.l
    }

    pub fn dim_h(&self) -> usize {
        self.l.cols()
    }

    pub fn dim_g(&self) -> usize {
        self.l.rows()
    }

    /// `(||x - J_A(x - L*v - Cx)||, ||v - J_{B^{-1}}(v + Lx)||)`; both vanish
    /// exactly at primal-dual solutions.
    pub fn kkt_residual(&self, x: &Vector<T>, v: &Vector<T>) -> Result<(T, T)> {
        check_dim(self.dim_h(), x.dim())?;
        check_dim(self.dim_g(), v.dim())?;
        let lsv = self.l.adjoint_apply(v)?;
        let cx = self.c.apply(x)?;
        let p = self.a.resolvent(T::one(), &(&(x - &lsv) - &cx))?;
        let lx = self.l.apply(x)?;
        let q = crate::operators::inverse_resolvent(&self.b, T::one(), &(v + &lx))?;
        Ok((x.dist(&p), v.dist(&q)))
    }
}

/// Iterate `(x^k, z^k, y^k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct AdmmState<T> {
    pub k: usize,
    pub x: Vector<T>,
    pub z: Vector<T>,
    pub y: Vector<T>,
}

impl<T: Scalar> AdmmState<T> {
    pub fn new(x: Vector<T>, z: Vector<T>, y: Vector<T>) -> Self {
        AdmmState { k: 0, x, z, y }
    }

    pub fn zeros(problem: &InclusionProblem<T>) -> Self {
        Self::new(Vector::zeros(problem.dim_h()), Vector::zeros(problem.dim_g()), Vector::zeros(problem.dim_g()))
    }

    /// `(x*, Lx*, y*)`, the fixed point associated with a primal-dual solution.
    pub fn embedded(problem: &InclusionProblem<T>, x: &Vector<T>, y: &Vector<T>) -> Result<Self> {
        Ok(Self::new(x.clone(), problem.l().apply(x)?, y.clone()))
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.z.is_finite() && self.y.is_finite()
    }

    pub fn norm(&self) -> T {
        (self.x.norm_sq() + self.z.norm_sq() + self.y.norm_sq()).sqrt()
    }

    pub fn dist(&self, other: &Self) -> T {
        let dx = self.x.dist(&other.x);
        let dz = self.z.dist(&other.z);
        let dy = self.y.dist(&other.y);
        (dx * dx + dz * dz + dy * dy).sqrt()
    }
}

/// A metric sequence `k -> M^k`.
#[derive(Clone)]
pub enum MetricSchedule<T> {
    Constant(MetricOperator<T>),
    /// `M^k = base + s(k) Id`
    Shifted {
        base: MetricOperator<T>,
        shift: Arc<dyn Fn(usize) -> T + Send + Sync>,
    },
    Custom {
        dim: usize,
        generator: Arc<dyn Fn(usize) -> MetricOperator<T> + Send + Sync>,
    },
}

impl<T: fmt::Debug> fmt::Debug for MetricSchedule<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MetricSchedule::Constant(m) => f.debug_tuple("Constant").field(m).finish(),
            MetricSchedule::Shifted { base, .. } => {
                f.debug_struct("Shifted").field("base", base).finish_non_exhaustive()
            }
            MetricSchedule::Custom { dim, .. } => f.debug_struct("Custom").field("dim", dim).finish_non_exhaustive(),
        }
    }
}

impl<T: Scalar> MetricSchedule<T> {
    pub fn constant(m: MetricOperator<T>) -> Self {
        MetricSchedule::Constant(m)
    }

    pub fn zeros(n: usize) -> Self {
        MetricSchedule::Constant(MetricOperator::zeros(n))
    }

    pub fn scaled_identity(n: usize, a: T) -> Self {
        MetricSchedule::Constant(MetricOperator::scaled_identity(n, a))
    }

    pub fn shifted(base: MetricOperator<T>, shift: impl Fn(usize) -> T + Send + Sync + 'static) -> Self {
        MetricSchedule::Shifted { base, shift: Arc::new(shift) }
    }

    /// `M^k = s(k) Id`
    pub fn scalar_sequence(n: usize, s: impl Fn(usize) -> T + Send + Sync + 'static) -> Self {
        Self::shifted(MetricOperator::zeros(n), s)
    }

    pub fn custom(dim: usize, generator: impl Fn(usize) -> MetricOperator<T> + Send + Sync + 'static) -> Self {
        MetricSchedule::Custom { dim, generator: Arc::new(generator) }
    }

    pub fn dim(&self) -> usize {
        match self {
            MetricSchedule::Constant(m) => m.dim(),
            MetricSchedule::Shifted { base, .. } => base.dim(),
            MetricSchedule::Custom { dim, .. } => *dim,
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, MetricSchedule::Constant(_))
    }

    pub fn at(&self, k: usize) -> MetricOperator<T> {
        match self {
            MetricSchedule::Constant(m) => m.clone(),
            MetricSchedule::Shifted { base, shift } => base.affine(T::one(), shift(k)),
            MetricSchedule::Custom { generator, .. } => generator(k),
        }
    }

    /// Smallest eigenvalue of `M^k - M^{k+1}`.
    pub fn decrease_gap(&self, k: usize) -> Result<T> {
        match self {
            MetricSchedule::Constant(_) => Ok(T::zero()),
            MetricSchedule::Shifted { shift, .. } => Ok(shift(k) - shift(k + 1)),
            MetricSchedule::Custom { .. } => loewner_gap(&self.at(k), &self.at(k + 1)),
        }
    }
}

#[derive(Debug, Clone)]
pub struct AdmmConfig<T> {
    pub c: T,
    pub m1: MetricSchedule<T>,
    pub m2: MetricSchedule<T>,
    /// When set, every `cL*L + M1^k` must have smallest eigenvalue at least this.
    pub alpha_floor: Option<T>,
    pub stop: StopRule<T>,
    pub inner_tol: T,
    pub inner_max_iters: usize,
}

impl<T: Scalar> AdmmConfig<T> {
    pub fn new(c: T, m1: MetricSchedule<T>, m2: MetricSchedule<T>) -> Result<Self> {
        if !(c > T::zero()) || !c.is_finite() {
            return Err(Error::invalid("penalty parameter c must be positive"));
        }
        Ok(AdmmConfig {
            c,
            m1,
            m2,
            alpha_floor: None,
            stop: StopRule::default(),
            inner_tol: T::lit(T::INNER_TOL),
            inner_max_iters: DEFAULT_MAX_INNER_ITERATIONS,
        })
    }

    /// Zero metrics: the classical method of multipliers splitting.
    pub fn classical(problem: &InclusionProblem<T>, c: T) -> Result<Self> {
        Self::new(c, MetricSchedule::zeros(problem.dim_h()), MetricSchedule::zeros(problem.dim_g()))
    }

    pub fn with_stop(mut self, stop: StopRule<T>) -> Self {
        self.stop = stop;
        self
    }

    pub fn with_inner(mut self, tol: T, max_iters: usize) -> Self {
        self.inner_tol = tol;
        self.inner_max_iters = max_iters;
        self
    }

    pub fn with_alpha_floor(mut self, alpha: T) -> Self {
        self.alpha_floor = Some(alpha);
        self
    }

    fn check_dims(&self, problem: &InclusionProblem<T>) -> Result<()> {
        check_dim(problem.dim_h(), self.m1.dim())?;
        check_dim(problem.dim_g(), self.m2.dim())
    }
}

/// Unified engine bound to one problem; caches the generalized-resolvent
/// kernels while the metrics stay constant.
pub struct UnifiedAdmm<'p, T: Scalar> {
    problem: &'p InclusionProblem<T>,
    config: AdmmConfig<T>,
    gram: MetricOperator<T>,
    x_kernel: Option<(usize, ResolventKernel<T>)>,
    z_kernel: Option<(usize, ResolventKernel<T>)>,
}

impl<'p, T: Scalar> UnifiedAdmm<'p, T> {
    pub fn new(problem: &'p InclusionProblem<T>, config: AdmmConfig<T>) -> Result<Self> {
        config.check_dims(problem)?;
        Ok(UnifiedAdmm { problem, config, gram: gram(problem.l()), x_kernel: None, z_kernel: None })
    }

    pub fn config(&self) -> &AdmmConfig<T> {
        &self.config
    }

    pub fn problem(&self) -> &InclusionProblem<T> {
        self.problem
    }

    fn kernel_x(&mut self, k: usize) -> Result<&ResolventKernel<T>> {
        let fresh = match &self.x_kernel {
            Some((cached, _)) => *cached != k && !self.config.m1.is_constant(),
            None => true,
        };
        if fresh {
            let c = self.config.c;
            let u = match &self.config.m1 {
                MetricSchedule::Shifted { base, shift } => {
                    // c L*L + base + s(k) Id; the spectrum of the sum is shared across k
                    let sum = self.gram.scale(c).add(base)?;
                    sum.affine(T::one(), shift(k))
                }
                m1 => self.gram.scale(c).add(&m1.at(k))?,
            };
            if let Some(alpha) = self.config.alpha_floor {
                let lmin = u.min_eigenvalue();
                if lmin < alpha {
                    return Err(Error::MetricNotPositive { min_eigenvalue: lmin.to_f64_lossy() });
                }
            }
            let kernel = ResolventKernel::new(&u, self.problem.a())?
                .with_tolerance(self.config.inner_tol, self.config.inner_max_iters);
            self.x_kernel = Some((k, kernel));
        }
        Ok(&self.x_kernel.as_ref().expect("just built").1)
    }

    fn kernel_z(&mut self, k: usize) -> Result<&ResolventKernel<T>> {
        let fresh = match &self.z_kernel {
            Some((cached, _)) => *cached != k && !self.config.m2.is_constant(),
            None => true,
        };
        if fresh {
            let u = self.config.m2.at(k).affine(T::one(), self.config.c);
            let kernel = ResolventKernel::new(&u, self.problem.b())?
                .with_tolerance(self.config.inner_tol, self.config.inner_max_iters);
            self.z_kernel = Some((k, kernel));
        }
        Ok(&self.z_kernel.as_ref().expect("just built").1)
    }

    /// One pass of the x-, z- and y-updates.
    pub fn step(&mut self, s: &AdmmState<T>) -> Result<AdmmState<T>> {
        let p = self.problem;
        check_dim(p.dim_h(), s.x.dim())?;
        check_dim(p.dim_g(), s.z.dim())?;
        check_dim(p.dim_g(), s.y.dim())?;
        let (k, c) = (s.k, self.config.c);

        // x^{k+1} = (cL*L + M1^k + A)^{-1}[cL*z - L*y + M1^k x - Cx]
        let m1x = self.config.m1.at(k).apply(&s.x)?;
        let cx = p.c().apply(&s.x)?;
        let dual = s.y.add_scaled(-c, &s.z);
        let rx = &(&m1x - &p.l().adjoint_apply(&dual)?) - &cx;
        let x = self.kernel_x(k)?.apply_from(&rx, &s.x)?;

        // z^{k+1} = (c Id + M2^k + B)^{-1}[cLx^{k+1} + y + M2^k z]
        let lx = p.l().apply(&x)?;
        let m2z = self.config.m2.at(k).apply(&s.z)?;
        let rz = &lx.scale(c) + &(&s.y + &m2z);
        let z = self.kernel_z(k)?.apply_from(&rz, &s.z)?;

        let y = s.y.add_scaled(c, &(&lx - &z));
        let next = AdmmState { k: k + 1, x, z, y };
        if !next.is_finite() {
            return Err(Error::NoConvergence { iterations: k + 1, residual: f64::INFINITY });
        }
        Ok(next)
    }

    /// Exactly `n` steps from `start`, returning all `n + 1` states.
    pub fn iterate(&mut self, start: &AdmmState<T>, n: usize) -> Result<Vec<AdmmState<T>>> {
        let mut out = Vec::with_capacity(n + 1);
        out.push(start.clone());
        for _ in 0..n {
            let next = self.step(out.last().expect("non-empty"))?;
            out.push(next);
        }
        Ok(out)
    }

    pub fn run(&mut self, start: AdmmState<T>) -> std::result::Result<Trace<AdmmState<T>>, RunError<AdmmState<T>>> {
        self.run_with(start, &mut |_, _| {})
    }

    /// Runs until the stop rule fires; `monitor` sees every `(s_k, s_{k+1})`.
    pub fn run_with(
        &mut self,
        start: AdmmState<T>,
        monitor: &mut dyn FnMut(&AdmmState<T>, &AdmmState<T>),
    ) -> std::result::Result<Trace<AdmmState<T>>, RunError<AdmmState<T>>> {
        let stop = self.config.stop;
        let mut trace = Trace { states: vec![start.clone()], converged: false, iterations: 0 };
        if !start.is_finite() {
            return Err(RunError { error: Error::invalid("starting point is not finite"), trace });
        }
        if let Some(tol) = stop.kkt_tol {
            // a start that is already a fixed point needs no iterations
            let at_rest = crate::unified::at_rest(self.problem, &start, self.problem.l().apply(&start.x), tol);
            match at_rest {
                Ok(true) => {
                    trace.converged = true;
                    return Ok(trace);
                }
                Ok(false) => {}
                Err(error) => return Err(RunError { error, trace }),
            }
        }
        let mut current = start;
        let mut change = T::infinity();
        for _ in 0..stop.max_iters {
            let next = match self.step(&current) {
                Ok(n) => n,
                Err(error) => return Err(RunError { error, trace }),
            };
            monitor(&current, &next);
            change = next.dist(&current);
            let mut done = change <= stop.stop_tol * (T::one() + current.norm());
            if let (false, Some(tol)) = (done, stop.kkt_tol) {
                match self.problem.kkt_residual(&next.x, &next.y) {
                    Ok((rp, rd)) => done = rp <= tol && rd <= tol,
                    Err(error) => return Err(RunError { error, trace }),
                }
            }
            trace.iterations += 1;
            if stop.record {
                trace.states.push(next.clone());
            } else {
                trace.states.truncate(1);
                trace.states.push(next.clone());
            }
            current = next;
            if done {
                trace.converged = true;
                return Ok(trace);
            }
        }
        Err(RunError {
            error: Error::NoConvergence { iterations: stop.max_iters, residual: change.to_f64_lossy() },
            trace,
        })
    }
}

/// One step with a freshly built engine.
pub fn admm_step<T: Scalar>(
    problem: &InclusionProblem<T>,
    config: &AdmmConfig<T>,
    state: &AdmmState<T>,
) -> Result<AdmmState<T>> {
    UnifiedAdmm::new(problem, config.clone())?.step(state)
}

pub fn run<T: Scalar>(
    problem: &InclusionProblem<T>,
    config: &AdmmConfig<T>,
    start: AdmmState<T>,
    monitor: &mut dyn FnMut(&AdmmState<T>, &AdmmState<T>),
) -> std::result::Result<Trace<AdmmState<T>>, RunError<AdmmState<T>>> {
    match UnifiedAdmm::new(problem, config.clone()) {
        Ok(mut engine) => engine.run_with(start, monitor),
        Err(error) => Err(RunError { error, trace: Trace { states: vec![start], converged: false, iterations: 0 } }),
    }
}

/// A primal-dual pair `(x*, v*)` validated against the KKT residual.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceSolution<T> {
    pub x: Vector<T>,
    pub lx: Vector<T>,
    pub y: Vector<T>,
    pub kkt: (T, T),
}

impl<T: Scalar> ReferenceSolution<T> {
    pub fn new(problem: &InclusionProblem<T>, x: Vector<T>, y: Vector<T>) -> Result<Self> {
        Self::with_tolerance(problem, x, y, T::lit(SOLUTION_TOL))
    }

    pub fn with_tolerance(problem: &InclusionProblem<T>, x: Vector<T>, y: Vector<T>, tol: T) -> Result<Self> {
        let (rp, rd) = problem.kkt_residual(&x, &y)?;
        if !(rp <= tol && rd <= tol) {
            return Err(Error::SolutionInvalid { primal: rp.to_f64_lossy(), dual: rd.to_f64_lossy() });
        }
        let lx = problem.l().apply(&x)?;
        Ok(ReferenceSolution { x, lx, y, kkt: (rp, rd) })
    }
}

/// `1/2 ||x - x*||²_{M1^k} + 1/2 ||z - Lx*||²_{M2^k + c Id} + (2c)^{-1} ||y - y*||²`
pub fn lyapunov<T: Scalar>(config: &AdmmConfig<T>, s: &AdmmState<T>, sol: &ReferenceSolution<T>) -> Result<T> {
    energy(config, s.k, s, sol)
}

fn energy<T: Scalar>(config: &AdmmConfig<T>, k: usize, s: &AdmmState<T>, sol: &ReferenceSolution<T>) -> Result<T> {
    let c = config.c;
    let dx = &s.x - &sol.x;
    let dz = &s.z - &sol.lx;
    let dy = &s.y - &sol.y;
    let half = T::half();
    Ok(half * config.m1.at(k).seminorm_sq(&dx)?
        + half * (config.m2.at(k).seminorm_sq(&dz)? + c * dz.norm_sq())
        + dy.norm_sq() / (T::two() * c))
}

/// Which Fejér-type inequality to certify.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FejerMode {
    /// `C` cocoercive with modulus `eta`.
    Cocoercive,
    /// `C = 0`.
    ZeroForward,
    /// `C = 0` with the two-step form used under assumption (III); needs `k >= 1`.
    ZeroForwardIII,
}

impl FejerMode {
    pub fn for_problem<T: Scalar>(problem: &InclusionProblem<T>) -> Self {
        if problem.c().is_zero() {
            FejerMode::ZeroForward
        } else {
            FejerMode::Cocoercive
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FejerCertificate<T> {
    pub k: usize,
    pub mode: FejerMode,
    pub lhs: T,
    pub rhs: T,
    pub slack: T,
    /// Subtracted residual terms of the right-hand side, in the order they
    /// appear in the inequality.
    pub terms: Vec<T>,
}

impl<T: Scalar> FejerCertificate<T> {
    /// `slack >= -tol (1 + |rhs|)`.
    pub fn holds(&self, tol: T) -> bool {
        self.slack >= -tol * (T::one() + self.rhs.abs())
    }
}

/// Evaluates both sides of the Fejér inequality between `cur = s_k` and
/// `next = s_{k+1}`. `prev = s_{k-1}` is required for
/// [`FejerMode::ZeroForwardIII`].
pub fn fejer_certificate<T: Scalar>(
    problem: &InclusionProblem<T>,
    config: &AdmmConfig<T>,
    mode: FejerMode,
    prev: Option<&AdmmState<T>>,
    cur: &AdmmState<T>,
    next: &AdmmState<T>,
    sol: &ReferenceSolution<T>,
) -> Result<FejerCertificate<T>> {
    let k = cur.k;
    if next.k != k + 1 {
        return Err(Error::invalid("certificate needs consecutive iterates"));
    }
    let c = config.c;
    let half = T::half();
    let m1k = config.m1.at(k);
    let m2k = config.m2.at(k);
    let lhs_base = energy(config, k + 1, next, sol)?;
    let rhs_base = energy(config, k, cur, sol)?;
    let dx = &cur.x - &next.x;
    let dz = &cur.z - &next.z;
    match mode {
        FejerMode::Cocoercive | FejerMode::ZeroForward => {
            let lxn = problem.l().apply(&next.x)?;
            let t1 = half * c * cur.z.dist(&lxn).powi(2);
            let t3 = half * m2k.seminorm_sq(&dz)?;
            let mut terms = vec![t1];
            if mode == FejerMode::Cocoercive {
                let eta = problem
                    .c()
                    .cocoercivity()
                    .ok_or_else(|| Error::invalid("cocoercive certificate needs a cocoercive forward term"))?;
                let t2 = half * (m1k.seminorm_sq(&dx)? - dx.norm_sq() / (T::two() * eta));
                let cdiff = &problem.c().apply(&sol.x)? - &problem.c().apply(&cur.x)?;
                let t4 = (cdiff.scale(eta) + dx.scale(half)).norm_sq() / eta;
                terms.extend([t2, t3, t4]);
            } else {
                terms.extend([half * m1k.seminorm_sq(&dx)?, t3]);
            }
            let rhs = terms.iter().fold(rhs_base, |acc, t| acc - *t);
            Ok(FejerCertificate { k, mode, lhs: lhs_base, rhs, slack: rhs - lhs_base, terms })
        }
        FejerMode::ZeroForwardIII => {
            let prev = prev.ok_or_else(|| Error::invalid("the (III) certificate needs the previous iterate"))?;
            if k == 0 || prev.k + 1 != k {
                return Err(Error::invalid("the (III) certificate is defined for k >= 1 with consecutive iterates"));
            }
            let m2prev = config.m2.at(k - 1);
            let lhs = lhs_base + half * m2k.seminorm_sq(&dz)?;
            let dzp = &prev.z - &cur.z;
            let dy = &next.y - &cur.y;
            let terms = vec![half * m1k.seminorm_sq(&dx)?, half * c * dz.norm_sq(), dy.norm_sq() / (T::two() * c)];
            let rhs = terms.iter().fold(rhs_base + half * m2prev.seminorm_sq(&dzp)?, |acc, t| acc - *t);
            Ok(FejerCertificate { k, mode, lhs, rhs, slack: rhs - lhs, terms })
        }
    }
}

/// One assumption of a convergence theorem, with the eigenvalue that decides it.
#[derive(Debug, Clone, PartialEq)]
pub struct Verdict {
    pub name: String,
    pub holds: bool,
    /// Smallest relevant eigenvalue over the horizon.
    pub witness: f64,
    /// Iteration index at which the witness was attained.
    pub at_k: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HypothesisReport {
    pub theorem: &'static str,
    pub horizon: usize,
    pub standing: Vec<Verdict>,
    pub assumptions: Vec<Verdict>,
}

impl HypothesisReport {
    pub fn verdict(&self, name: &str) -> Option<&Verdict> {
        self.standing.iter().chain(&self.assumptions).find(|v| v.name == name)
    }

    /// Standing conditions hold and at least one numbered assumption holds.
    pub fn satisfied(&self) -> bool {
        self.standing.iter().all(|v| v.holds) && self.assumptions.iter().any(|v| v.holds)
    }
}

struct Tracker {
    min: f64,
    at: usize,
}

impl Tracker {
    fn new() -> Self {
        Tracker { min: f64::INFINITY, at: 0 }
    }

    fn push(&mut self, k: usize, v: f64) {
        if v < self.min {
            self.min = v;
            self.at = k;
        }
    }

    fn verdict(&self, name: &str, holds: impl Fn(f64) -> bool) -> Verdict {
        Verdict { name: name.to_string(), holds: holds(self.min), witness: self.min, at_k: self.at }
    }
}

fn tol_for<T: Scalar>(m: &MetricOperator<T>) -> f64 {
    m.default_tol().to_f64_lossy()
}

fn schedule_indices<T: Scalar>(s: &MetricSchedule<T>, horizon: usize) -> usize {
    if s.is_constant() {
        0
    } else {
        horizon
    }
}

fn psd_and_monotone<T: Scalar>(
    psd_name: &str,
    mono_name: &str,
    sched: &MetricSchedule<T>,
    shift: T,
    horizon: usize,
) -> Result<(f64, Verdict, Verdict, f64)> {
    let mut lmin = Tracker::new();
    let mut gap = Tracker::new();
    let mut tol = 0.0f64;
    let last = schedule_indices(sched, horizon);
    for k in 0..=last {
        let m = sched.at(k);
        tol = tol.max(tol_for(&m));
        lmin.push(k, (m.min_eigenvalue() - shift).to_f64_lossy());
        if k < horizon {
            gap.push(k, sched.decrease_gap(k)?.to_f64_lossy());
        }
    }
    if horizon == 0 || sched.is_constant() {
        gap.push(0, 0.0);
    }
    let psd = lmin.verdict(psd_name, |w| w >= -tol);
    let mono = gap.verdict(mono_name, |w| w >= -tol);
    Ok((lmin.min, psd, mono, tol))
}

fn gram_verdict<T: Scalar>(problem: &InclusionProblem<T>) -> (f64, f64) {
    let g = gram(problem.l());
    (g.min_eigenvalue().to_f64_lossy(), tol_for(&g))
}

/// Checks the hypotheses of the convergence theorem for cocoercive `C` over
/// `k <= horizon`.
pub fn check_hypotheses_thm_cocoercive<T: Scalar>(
    problem: &InclusionProblem<T>,
    config: &AdmmConfig<T>,
    horizon: usize,
) -> Result<HypothesisReport> {
    config.check_dims(problem)?;
    let shift = problem.c().half_inverse_cocoercivity();
    let (w1, m1_psd, m1_mono, tol1) =
        psd_and_monotone("M1^k - Id/(2η) PSD", "M1^k ≽ M1^(k+1)", &config.m1, shift, horizon)?;
    let (m2_min, m2_psd, m2_mono, tol2) =
        psd_and_monotone("M2^k PSD", "M2^k ≽ M2^(k+1)", &config.m2, T::zero(), horizon)?;
    let (g_min, g_tol) = gram_verdict(problem);
    let mut standing = vec![m1_psd, m1_mono, m2_psd, m2_mono];
    if !problem.c().is_cocoercive() {
        standing.push(Verdict { name: "C cocoercive".into(), holds: false, witness: 0.0, at_k: 0 });
    }
    let i = Verdict { name: "I".into(), holds: w1 > tol1, witness: w1, at_k: standing[0].at_k };
    let ii = Verdict {
        name: "II".into(),
        holds: g_min > g_tol && m2_min > tol2,
        witness: g_min.min(m2_min),
        at_k: standing[2].at_k,
    };
    Ok(HypothesisReport { theorem: "cocoercive", horizon, standing, assumptions: vec![i, ii] })
}

/// Checks the hypotheses of the convergence theorem for `C = 0` over
/// `k <= horizon`.
pub fn check_hypotheses_thm_c0<T: Scalar>(
    problem: &InclusionProblem<T>,
    config: &AdmmConfig<T>,
    horizon: usize,
) -> Result<HypothesisReport> {
    config.check_dims(problem)?;
    let (m1_min, m1_psd, m1_mono, tol1) =
        psd_and_monotone("M1^k PSD", "M1^k ≽ M1^(k+1)", &config.m1, T::zero(), horizon)?;
    let (m2_min, m2_psd, m2_mono, tol2) =
        psd_and_monotone("M2^k PSD", "M2^k ≽ M2^(k+1)", &config.m2, T::zero(), horizon)?;
    let (g_min, g_tol) = gram_verdict(problem);
    let mut standing = vec![m1_psd, m1_mono, m2_psd, m2_mono];
    if !problem.c().is_zero() {
        standing.push(Verdict {
            name: "C = 0".into(),
            holds: false,
            witness: problem.c().lipschitz().to_f64_lossy(),
            at_k: 0,
        });
    }
    let i = Verdict { name: "I".into(), holds: m1_min > tol1, witness: m1_min, at_k: standing[0].at_k };
    let ii = Verdict {
        name: "II".into(),
        holds: g_min > g_tol && m2_min > tol2,
        witness: g_min.min(m2_min),
        at_k: standing[2].at_k,
    };
    // (III): 2 M2^{k+1} ≽ M2^k ≽ M2^{k+1}
    let mut left = Tracker::new();
    let last = schedule_indices(&config.m2, horizon);
    for k in 0..=last {
        let gap = match &config.m2 {
            MetricSchedule::Constant(m) => m.min_eigenvalue(),
            MetricSchedule::Shifted { base, shift } => {
                base.affine(T::one(), T::two() * shift(k + 1) - shift(k)).min_eigenvalue()
            }
            MetricSchedule::Custom { .. } => loewner_gap(&config.m2.at(k + 1).scale(T::two()), &config.m2.at(k))?,
        };
        left.push(k, gap.to_f64_lossy());
    }
    let m2_mono_holds = standing[3].holds;
    let iii = Verdict {
        name: "III".into(),
        holds: g_min > g_tol && left.min >= -tol2 && m2_mono_holds,
        witness: g_min.min(left.min),
        at_k: left.at,
    };
    Ok(HypothesisReport { theorem: "zero-forward", horizon, standing, assumptions: vec![i, ii, iii] })
}

/// KKT residuals and `‖z - z*‖` all within `tol`.
pub(crate) fn at_rest<T: Scalar>(
    problem: &InclusionProblem<T>,
    s: &AdmmState<T>,
    z_star: Result<Vector<T>>,
    tol: T,
) -> Result<bool> {
    let (rp, rd) = problem.kkt_residual(&s.x, &s.y)?;
    Ok(rp <= tol && rd <= tol && s.z.dist(&z_star?) <= tol)
}
