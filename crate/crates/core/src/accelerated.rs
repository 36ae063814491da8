//! Dynamic step-size variant for strongly monotone `A + C`: parameter
//! schedule, metric families and the O(1/n) rate certificate.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{check_dim, Constraint, Error, Result};
use crate::hilbert::{cogram, loewner_gap, DenseLinearMap, MetricOperator};
use crate::linalg::Vector;
use crate::operators::{inverse_resolvent, ForwardMap, Operator, ResolventKernel, DEFAULT_MAX_INNER_ITERATIONS};
use crate::scalar::Scalar;
use crate::trace::{RunError, StopRule, Trace};
use crate::unified::{AdmmState, InclusionProblem, ReferenceSolution, Verdict};

/// Iterates of the accelerated scheme share the `(x, z, y)` layout, but
/// here `z` lives in `H` alongside `x`.
pub type AccState<T> = AdmmState<T>;

/// `(0, 0, 0)` with `x, z ∈ H` and `y ∈ G`.
pub fn zero_state<T: Scalar>(problem: &InclusionProblem<T>) -> AccState<T> {
    AccState::new(Vector::zeros(problem.dim_h()), Vector::zeros(problem.dim_h()), Vector::zeros(problem.dim_g()))
}

/// Inclusion problem whose `A + C` is `gamma`-strongly monotone and whose
/// `C` is monotone and Lipschitz.
#[derive(Debug, Clone)]
pub struct AccProblem<T> {
    inner: InclusionProblem<T>,
    gamma: T,
}

impl<T: Scalar> AccProblem<T> {
    pub fn new(a: Operator<T>, b: Operator<T>, c: ForwardMap<T>, l: DenseLinearMap<T>, gamma: T) -> Result<Self> {
        Self::from_inclusion(InclusionProblem::new(a, b, c, l)?, gamma)
    }

    pub fn from_inclusion(inner: InclusionProblem<T>, gamma: T) -> Result<Self> {
        if !(gamma > T::zero()) || !gamma.is_finite() {
            return Err(Error::violated(
                Constraint::StrongMonotonicity,
                format!("γ = {gamma} is not a positive strong monotonicity modulus"),
            ));
        }
        Ok(AccProblem { inner, gamma })
    }

    pub fn inclusion(&self) -> &InclusionProblem<T> {
        &self.inner
    }

    pub fn gamma(&self) -> T {
        self.gamma
    }

    /// Lipschitz modulus of `C`.
    pub fn mu(&self) -> T {
        self.inner.c().lipschitz()
    }

    /// Smallest value of `<x - x', u - u'> - gamma ||x - x'||²` over sampled
    /// graph points `(x, u)` of `A + C`, obtained as `x = J_A(w)`,
    /// `u = w - x + Cx`. Non-negative (up to round-off) when the modulus is valid.
    pub fn strong_monotonicity_gap(&self, samples: usize, seed: u64) -> Result<T> {
        let n = self.inner.dim_h();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let point = |rng: &mut ChaCha8Rng| -> Result<(Vector<T>, Vector<T>)> {
            let w = Vector::new((0..n).map(|_| T::lit(rng.random_range(-5.0..5.0))).collect());
            let x = self.inner.a().resolvent(T::one(), &w)?;
            let u = &(&w - &x) + &self.inner.c().apply(&x)?;
            Ok((x, u))
        };
        let mut worst = T::infinity();
        for _ in 0..samples {
            let (x1, u1) = point(&mut rng)?;
            let (x2, u2) = point(&mut rng)?;
            let dx = &x1 - &x2;
            let gap = dx.dot(&(&u1 - &u2)) - self.gamma * dx.norm_sq();
            worst = worst.min(gap);
        }
        Ok(worst)
    }
}

/// Step-size sequences. Indexing follows the convergence theory: `tau(k)`
/// is `τ_k` for `k >= 1` and `tau(0)` is defined as `τ_1`; `theta(k)` is
/// `θ_k` for `k >= 0`; `sigma(k)` is `σ_k` for `k >= 0`. The recursion is
///
/// `θ_k = 1 / sqrt(1 + τ_{k+1}(2γ - μτ_{k+1})/λ)`, `τ_{k+2} = θ_k τ_{k+1}`,
/// `σ_{k+1} = σ_k / θ_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamSchedule<T> {
    gamma: T,
    mu: T,
    lambda: T,
    tau1: T,
    sigma0: T,
    l_norm: T,
    constant: bool,
    tau: Vec<T>,
    sigma: Vec<T>,
    theta: Vec<T>,
}

/// Outcome of the parameter constraints, all of which passed if the
/// schedule was built.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ScheduleFlags {
    pub step_curvature: bool,
    pub relaxation: bool,
    pub step_product: bool,
    /// `μτ_1 < γ`, under which `θ_k` is non-decreasing.
    pub strong: bool,
}

const PRODUCT_SLACK: f64 = 1e-12;

impl<T: Scalar> ParamSchedule<T> {
    pub fn init(gamma: T, mu: T, lambda: T, tau1: T, sigma0: T, l_norm: T) -> Result<Self> {
        if !(gamma > T::zero()) || !gamma.is_finite() {
            return Err(Error::violated(Constraint::StrongMonotonicity, format!("γ = {gamma} must be positive")));
        }
        for (name, v) in [("τ_1", tau1), ("σ_0", sigma0), ("λ", lambda)] {
            if !(v > T::zero()) || !v.is_finite() {
                return Err(Error::violated(Constraint::Positive(name), format!("{name} = {v}")));
            }
        }
        if !(mu >= T::zero()) || !(l_norm >= T::zero()) {
            return Err(Error::invalid("μ and ‖L‖ must be non-negative"));
        }
        if !(mu * tau1 < T::two() * gamma) {
            return Err(Error::violated(
                Constraint::StepCurvature,
                format!("μτ_1 = {} ≥ 2γ = {}", mu * tau1, T::two() * gamma),
            ));
        }
        if !(lambda >= mu + T::one()) {
            return Err(Error::violated(Constraint::Relaxation, format!("λ = {lambda} < μ + 1 = {}", mu + T::one())));
        }
        let product = sigma0 * tau1 * l_norm * l_norm;
        if !(product <= T::one() + T::lit(PRODUCT_SLACK)) {
            return Err(Error::violated(Constraint::StepProduct, format!("σ_0τ_1‖L‖² = {product} > 1")));
        }
        Ok(ParamSchedule {
            gamma,
            mu,
            lambda,
            tau1,
            sigma0,
            l_norm,
            constant: false,
            tau: vec![tau1, tau1],
            sigma: vec![sigma0],
            theta: Vec::new(),
        })
    }

    /// `θ_k ≡ 1`, `τ_k ≡ tau`, `σ_k ≡ sigma0`: the degenerate limit `γ = μ = 0`.
    pub fn constant(tau: T, sigma0: T, lambda: T, l_norm: T) -> Result<Self> {
        for (name, v) in [("τ", tau), ("σ_0", sigma0), ("λ", lambda)] {
            if !(v > T::zero()) || !v.is_finite() {
                return Err(Error::violated(Constraint::Positive(name), format!("{name} = {v}")));
            }
        }
        Ok(ParamSchedule {
            gamma: T::zero(),
            mu: T::zero(),
            lambda,
            tau1: tau,
            sigma0,
            l_norm,
            constant: true,
            tau: vec![tau, tau],
            sigma: vec![sigma0],
            theta: Vec::new(),
        })
    }

    pub fn gamma(&self) -> T {
        self.gamma
    }

    pub fn mu(&self) -> T {
        self.mu
    }

    pub fn lambda(&self) -> T {
        self.lambda
    }

    pub fn tau1(&self) -> T {
        self.tau1
    }

    pub fn sigma0(&self) -> T {
        self.sigma0
    }

    pub fn l_norm(&self) -> T {
        self.l_norm
    }

    pub fn is_constant(&self) -> bool {
        self.constant
    }

    pub fn flags(&self) -> ScheduleFlags {
        let product = self.sigma0 * self.tau1 * self.l_norm * self.l_norm;
        ScheduleFlags {
            step_curvature: self.constant || self.mu * self.tau1 < T::two() * self.gamma,
            relaxation: self.lambda >= self.mu + T::one(),
            step_product: product <= T::one() + T::lit(PRODUCT_SLACK),
            strong: !self.constant && self.mu * self.tau1 < self.gamma,
        }
    }

    fn next_theta(&self, tau_next: T) -> T {
        if self.constant {
            return T::one();
        }
        T::one() / (T::one() + tau_next * (T::two() * self.gamma - self.mu * tau_next) / self.lambda).sqrt()
    }

    /// Extends the sequences so that `θ_k`, `τ_{k+2}` and `σ_{k+1}` exist.
    pub fn ensure(&mut self, k: usize) {
        while self.theta.len() <= k {
            let j = self.theta.len();
            let tau_next = self.tau[j + 1];
            let theta = self.next_theta(tau_next);
            self.theta.push(theta);
            self.tau.push(theta * tau_next);
            self.sigma.push(self.sigma[j] / theta);
        }
    }

    /// `(θ_k, τ_{k+2}, σ_{k+1})`
    pub fn step(&mut self, k: usize) -> (T, T, T) {
        self.ensure(k);
        (self.theta[k], self.tau[k + 2], self.sigma[k + 1])
    }

    /// Number of `θ` values computed so far.
    pub fn len(&self) -> usize {
        self.theta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.theta.is_empty()
    }

    /// `τ_k`; requires `ensure(k - 2)` (always available for `k <= 1`).
    pub fn tau(&self, k: usize) -> T {
        self.tau[k]
    }

    /// `σ_k`; requires `ensure(k - 1)`.
    pub fn sigma(&self, k: usize) -> T {
        self.sigma[k]
    }

    /// `θ_k`; requires `ensure(k)`.
    pub fn theta(&self, k: usize) -> T {
        self.theta[k]
    }

    /// `n τ_n` from the scalar recursion, without storing the sequence.
    /// Tends to `λ/γ`.
    pub fn tau_asymptote(&self, n_max: usize) -> T {
        T::lit(n_max as f64) * tau_at(self.gamma, self.mu, self.lambda, self.tau1, n_max, self.constant)
    }
}

/// `τ_n` by direct recursion from `τ_1`, carried as `s = τ^{-2}` so that each
/// step is `s ← s + (2γ√s − μ)/λ`.
pub fn tau_at<T: Scalar>(gamma: T, mu: T, lambda: T, tau1: T, n: usize, constant: bool) -> T {
    if constant {
        return tau1;
    }
    let (a, b) = (T::two() * gamma / lambda, mu / lambda);
    let mut s = T::one() / (tau1 * tau1);
    for _ in 1..n.max(1) {
        s = s + a * s.sqrt() - b;
    }
    T::one() / s.sqrt()
}

pub fn schedule_init<T: Scalar>(gamma: T, mu: T, lambda: T, tau1: T, sigma0: T, l_norm: T) -> Result<ParamSchedule<T>> {
    ParamSchedule::init(gamma, mu, lambda, tau1, sigma0, l_norm)
}

pub fn schedule_step<T: Scalar>(sched: &mut ParamSchedule<T>, k: usize) -> (T, T, T) {
    sched.step(k)
}

pub fn tau_asymptote<T: Scalar>(sched: &ParamSchedule<T>, n_max: usize) -> T {
    sched.tau_asymptote(n_max)
}

/// Family of self-adjoint operators `M2^k` on `G`.
#[derive(Clone)]
pub enum MetricFamily<T> {
    /// `τ_k LL* + M2^k = σ_k^{-1} Id`
    ChoicePD,
    /// `M2^k = σ_k^{-1} Id`
    InvSigmaId,
    /// `M2^k = 0`
    Zero,
    /// `M2^k = τ_k Id`
    TauId,
    Custom(CustomFamily<T>),
}

/// `k ↦ M2^k` given the step schedule.
pub type CustomFamily<T> = Arc<dyn Fn(usize, &ParamSchedule<T>) -> MetricOperator<T> + Send + Sync>;

impl<T> fmt::Debug for MetricFamily<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl<T> MetricFamily<T> {
    pub fn name(&self) -> &'static str {
        match self {
            MetricFamily::ChoicePD => "ChoicePD",
            MetricFamily::InvSigmaId => "InvSigmaId",
            MetricFamily::Zero => "Zero",
            MetricFamily::TauId => "TauId",
            MetricFamily::Custom(_) => "Custom",
        }
    }
}

impl<T: Scalar> std::str::FromStr for MetricFamily<T> {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ChoicePD" => Ok(MetricFamily::ChoicePD),
            "InvSigmaId" => Ok(MetricFamily::InvSigmaId),
            "Zero" => Ok(MetricFamily::Zero),
            "TauId" => Ok(MetricFamily::TauId),
            other => Err(Error::invalid(format!("unknown metric family {other:?}"))),
        }
    }
}

impl<T: Scalar> MetricFamily<T> {
    pub fn custom(f: impl Fn(usize, &ParamSchedule<T>) -> MetricOperator<T> + Send + Sync + 'static) -> Self {
        MetricFamily::Custom(Arc::new(f))
    }

    /// `(a, b)` with `τ_k LL* + M2^k = a LL* + b Id`, for the presets.
    fn coefficients(&self, k: usize, sched: &ParamSchedule<T>) -> Option<(T, T)> {
        let (tau, sigma) = (sched.tau(k), sched.sigma(k));
        match self {
            MetricFamily::ChoicePD => Some((T::zero(), T::one() / sigma)),
            MetricFamily::InvSigmaId => Some((tau, T::one() / sigma)),
            MetricFamily::Zero => Some((tau, T::zero())),
            MetricFamily::TauId => Some((tau, tau)),
            MetricFamily::Custom(_) => None,
        }
    }

    /// `M2^k`; `cogram` is `LL*`.
    pub fn m2(&self, k: usize, sched: &ParamSchedule<T>, cogram: &MetricOperator<T>) -> MetricOperator<T> {
        let tau = sched.tau(k);
        match self {
            MetricFamily::Custom(f) => f(k, sched),
            preset => {
                let (a, b) = preset.coefficients(k, sched).expect("preset");
                cogram.affine(a - tau, b)
            }
        }
    }

    /// `τ_k LL* + M2^k`
    pub fn combined(
        &self,
        k: usize,
        sched: &ParamSchedule<T>,
        cogram: &MetricOperator<T>,
    ) -> Result<MetricOperator<T>> {
        match self {
            MetricFamily::Custom(f) => {
                let m = f(k, sched);
                check_dim(cogram.dim(), m.dim())?;
                cogram.scale(sched.tau(k)).add(&m)
            }
            preset => {
                let (a, b) = preset.coefficients(k, sched).expect("preset");
                if a == T::zero() {
                    Ok(MetricOperator::scaled_identity(cogram.dim(), b))
                } else {
                    Ok(cogram.affine(a, b))
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FamilyReport {
    pub family: &'static str,
    pub horizon: usize,
    /// `τ_k LL* + M2^k ≽ σ_k^{-1} Id`; witness is the smallest eigenvalue of the difference.
    pub mon1: Verdict,
    /// `(τ_k LL* + M2^k)/τ_{k+1} ≽ (τ_{k+1} LL* + M2^{k+1})/τ_{k+2}`.
    pub mon2: Verdict,
    /// Sufficient condition specific to the preset, when it has one.
    pub preset: Option<Verdict>,
}

impl FamilyReport {
    pub fn holds(&self) -> bool {
        self.mon1.holds && self.mon2.holds && self.preset.as_ref().is_none_or(|v| v.holds)
    }
}

fn loewner_tol<T: Scalar>(scale: T) -> T {
    T::lit(T::LOEWNER_TOL) * (T::one() + scale.abs())
}

/// Per-k eigenvalue witnesses for the two metric conditions over `k <= horizon`,
/// plus the preset's sufficient condition.
pub fn check_metric_family<T: Scalar>(
    family: &MetricFamily<T>,
    sched: &mut ParamSchedule<T>,
    l: &DenseLinearMap<T>,
    horizon: usize,
) -> Result<FamilyReport> {
    sched.ensure(horizon + 1);
    let cg = cogram(l);
    let (e_min, e_max) = (cg.min_eigenvalue(), cg.max_eigenvalue());
    let mut mon1 = (f64::INFINITY, 0usize, true);
    let mut mon2 = (f64::INFINITY, 1usize, true);
    for k in 0..=horizon {
        let inv_sigma = T::one() / sched.sigma(k);
        let (g1, s1, g2, s2) = match family.coefficients(k, sched) {
            Some((a, b)) => {
                let (a1, b1) = family.coefficients(k + 1, sched).expect("preset");
                let lo = (a * e_min).min(a * e_max) + b;
                let (t1, t2) = (sched.tau(k + 1), sched.tau(k + 2));
                let (da, db) = (a / t1 - a1 / t2, b / t1 - b1 / t2);
                let gap2 = (da * e_min).min(da * e_max) + db;
                let scale1 = a.abs() * e_max + b.abs();
                let scale2 = scale1 / t1 + (a1.abs() * e_max + b1.abs()) / t2;
                (lo - inv_sigma, scale1, gap2, scale2)
            }
            None => {
                let m = family.combined(k, sched, &cg)?;
                let m1 = family.combined(k + 1, sched, &cg)?;
                let g1 = m.min_eigenvalue() - inv_sigma;
                let lhs = m.scale(T::one() / sched.tau(k + 1));
                let rhs = m1.scale(T::one() / sched.tau(k + 2));
                let g2 = loewner_gap(&lhs, &rhs)?;
                (g1, m.spectral_radius(), g2, lhs.spectral_radius() + rhs.spectral_radius())
            }
        };
        let (g1f, g2f) = (g1.to_f64_lossy(), g2.to_f64_lossy());
        if g1f < mon1.0 {
            mon1 = (g1f, k, mon1.2);
        }
        // τ_0 only exists by convention, so (mon2) starts at k = 1
        if k == 0 {
            if g1 < -loewner_tol(s1) {
                mon1.2 = false;
            }
            continue;
        }
        if g2f < mon2.0 {
            mon2 = (g2f, k, mon2.2);
        }
        if g1 < -loewner_tol(s1) {
            mon1.2 = false;
        }
        if g2 < -loewner_tol(s2) {
            mon2.2 = false;
        }
    }
    let st = sched.sigma0() * sched.tau1();
    let preset = match family {
        MetricFamily::Zero => {
            let witness = e_min - T::one() / st;
            let product = st * sched.l_norm() * sched.l_norm();
            let holds = witness >= -loewner_tol(T::one() / st) && (product - T::one()).abs() <= T::lit(1e-9);
            Some(Verdict {
                name: "LL* ∈ P_{1/(σ_0τ_1)}, σ_0τ_1‖L‖² = 1".into(),
                holds,
                witness: witness.to_f64_lossy(),
                at_k: 0,
            })
        }
        MetricFamily::TauId => {
            let alpha = (T::one() - st) / st;
            let witness = e_min - alpha;
            let holds = st >= T::one() || witness >= -loewner_tol(alpha);
            Some(Verdict {
                name: "σ_0τ_1 ≥ 1 or LL* ∈ P_{(1-σ_0τ_1)/(σ_0τ_1)}".into(),
                holds,
                witness: witness.to_f64_lossy(),
                at_k: 0,
            })
        }
        MetricFamily::InvSigmaId => Some(Verdict {
            name: "μτ_1 < γ".into(),
            holds: sched.flags().strong,
            witness: (sched.gamma() - sched.mu() * sched.tau1()).to_f64_lossy(),
            at_k: 0,
        }),
        _ => None,
    };
    Ok(FamilyReport {
        family: family.name(),
        horizon,
        mon1: Verdict { name: "mon1".into(), holds: mon1.2, witness: mon1.0, at_k: mon1.1 },
        mon2: Verdict { name: "mon2".into(), holds: mon2.2, witness: mon2.0, at_k: mon2.1 },
        preset,
    })
}

#[derive(Debug, Clone)]
pub struct AccConfig<T> {
    pub family: MetricFamily<T>,
    pub stop: StopRule<T>,
    pub inner_tol: T,
    pub inner_max_iters: usize,
}

impl<T: Scalar> AccConfig<T> {
    pub fn new(family: MetricFamily<T>) -> Self {
        AccConfig {
            family,
            stop: StopRule::default(),
            inner_tol: T::lit(T::INNER_TOL),
            inner_max_iters: DEFAULT_MAX_INNER_ITERATIONS,
        }
    }

    pub fn with_stop(mut self, stop: StopRule<T>) -> Self {
        self.stop = stop;
        self
    }
}

/// Accelerated engine bound to one problem and one schedule.
pub struct AccEngine<'p, T: Scalar> {
    problem: &'p InclusionProblem<T>,
    sched: ParamSchedule<T>,
    config: AccConfig<T>,
    cogram: MetricOperator<T>,
    b_inv: Operator<T>,
    y_kernel: Option<(usize, ResolventKernel<T>)>,
}

impl<'p, T: Scalar> AccEngine<'p, T> {
    pub fn new(problem: &'p AccProblem<T>, sched: ParamSchedule<T>, config: AccConfig<T>) -> Result<Self> {
        Self::build(problem.inclusion(), sched, config)
    }

    /// Runs the iteration without the strong-monotonicity requirement, as
    /// used with a constant schedule.
    pub fn unchecked(problem: &'p InclusionProblem<T>, sched: ParamSchedule<T>, config: AccConfig<T>) -> Result<Self> {
        Self::build(problem, sched, config)
    }

    fn build(problem: &'p InclusionProblem<T>, sched: ParamSchedule<T>, config: AccConfig<T>) -> Result<Self> {
        let cg = cogram(problem.l());
        let mut sched = sched;
        let st = sched.sigma0() * sched.tau1();
        match config.family {
            MetricFamily::Zero => {
                let witness = cg.min_eigenvalue() - T::one() / st;
                if witness < -loewner_tol(T::one() / st) {
                    return Err(Error::violated(
                        Constraint::MetricLowerBound,
                        format!("LL* ∉ P_{{1/(σ_0τ_1)}}: smallest eigenvalue of LL* is {}", cg.min_eigenvalue()),
                    ));
                }
            }
            MetricFamily::TauId if st < T::one() => {
                let alpha = (T::one() - st) / st;
                if cg.min_eigenvalue() - alpha < -loewner_tol(alpha) {
                    return Err(Error::violated(
                        Constraint::MetricLowerBound,
                        format!(
                            "LL* ∉ P_{{(1-σ_0τ_1)/(σ_0τ_1)}}: smallest eigenvalue of LL* is {}",
                            cg.min_eigenvalue()
                        ),
                    ));
                }
            }
            _ => {}
        }
        sched.ensure(0);
        Ok(AccEngine { problem, sched, config, cogram: cg, b_inv: problem.b().clone().inverse(), y_kernel: None })
    }

    pub fn schedule(&self) -> &ParamSchedule<T> {
        &self.sched
    }

    pub fn cogram(&self) -> &MetricOperator<T> {
        &self.cogram
    }

    pub fn family(&self) -> &MetricFamily<T> {
        &self.config.family
    }

    fn kernel_y(&mut self, k: usize, combined: &MetricOperator<T>) -> Result<&ResolventKernel<T>> {
        let reuse = self.sched.is_constant() && self.y_kernel.is_some();
        if !reuse && self.y_kernel.as_ref().is_none_or(|(c, _)| *c != k) {
            let kernel = ResolventKernel::new(combined, &self.b_inv)?
                .with_tolerance(self.config.inner_tol, self.config.inner_max_iters);
            self.y_kernel = Some((k, kernel));
        }
        Ok(&self.y_kernel.as_ref().expect("just built").1)
    }

    pub fn step(&mut self, s: &AccState<T>) -> Result<AccState<T>> {
        let p = self.problem;
        check_dim(p.dim_h(), s.x.dim())?;
        check_dim(p.dim_h(), s.z.dim())?;
        check_dim(p.dim_g(), s.y.dim())?;
        let k = s.k;
        self.sched.ensure(k);
        let (tau_k, tau_next, theta) = (self.sched.tau(k), self.sched.tau(k + 1), self.sched.theta(k));
        let lambda = self.sched.lambda();

        let combined = self.config.family.combined(k, &self.sched, &self.cogram)?;
        let floor = T::one() / self.sched.sigma(k);
        let lmin = combined.min_eigenvalue();
        if !(lmin > combined.default_tol()) {
            return Err(Error::MetricNotPositive { min_eigenvalue: lmin.to_f64_lossy() });
        }
        let gap = lmin - floor;
        if gap < -loewner_tol(combined.spectral_radius()) {
            return Err(Error::violated(
                Constraint::MetricLowerBound,
                format!("τ_k LL* + M2^k ⋡ σ_k^{{-1}} Id at k = {k} (gap {gap})"),
            ));
        }

        // y^{k+1} = (τ_k LL* + M2^k + B^{-1})^{-1}[L(x - τ_k z - τ_k L*y) + (τ_k LL* + M2^k) y]
        let lsy = p.l().adjoint_apply(&s.y)?;
        let inner = s.x.add_scaled(-tau_k, &(&s.z + &lsy));
        let ry = &p.l().apply(&inner)? + &combined.apply(&s.y)?;
        let y = self.kernel_y(k, &combined)?.apply_from(&ry, &s.y)?;

        let lsy = p.l().adjoint_apply(&y)?;
        let cx = p.c().apply(&s.x)?;
        let rho = lambda / tau_next;
        let w = &s.x.scale(rho) - &(&lsy + &cx);
        let j = inverse_resolvent(p.a(), rho, &w)?;
        let r = theta / lambda;
        let z = &(&lsy.scale(r - T::one()) + &cx.scale(r)) + &j.scale(r);
        let x = s.x.add_scaled(-tau_next / theta, &(&lsy + &z));
        let next = AccState { k: k + 1, x, z, y };
        if !next.is_finite() {
            return Err(Error::NoConvergence { iterations: k + 1, residual: f64::INFINITY });
        }
        Ok(next)
    }

    pub fn iterate(&mut self, start: &AccState<T>, n: usize) -> Result<Vec<AccState<T>>> {
        let mut out = Vec::with_capacity(n + 1);
        out.push(start.clone());
        for _ in 0..n {
            let next = self.step(out.last().expect("non-empty"))?;
            out.push(next);
        }
        Ok(out)
    }

    pub fn run(&mut self, start: AccState<T>) -> std::result::Result<Trace<AccState<T>>, RunError<AccState<T>>> {
        self.run_with(start, &mut |_, _| {})
    }

    pub fn run_with(
        &mut self,
        start: AccState<T>,
        monitor: &mut dyn FnMut(&AccState<T>, &AccState<T>),
    ) -> std::result::Result<Trace<AccState<T>>, RunError<AccState<T>>> {
        let stop = self.config.stop;
        let mut trace = Trace { states: vec![start.clone()], converged: false, iterations: 0 };
        if !start.is_finite() {
            return Err(RunError { error: Error::invalid("starting point is not finite"), trace });
        }
        if let Some(tol) = stop.kkt_tol {
            // a start that is already a fixed point needs no iterations
            let at_rest = crate::unified::at_rest(
                self.problem,
                &start,
                self.problem.l().adjoint_apply(&start.y).map(|v| -v),
                tol,
            );
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
            if !stop.record {
                trace.states.truncate(1);
            }
            trace.states.push(next.clone());
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

pub fn acc_step<T: Scalar>(
    problem: &AccProblem<T>,
    sched: &ParamSchedule<T>,
    family: &MetricFamily<T>,
    state: &AccState<T>,
) -> Result<AccState<T>> {
    AccEngine::new(problem, sched.clone(), AccConfig::new(family.clone()))?.step(state)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateRow<T> {
    pub n: usize,
    pub lhs: T,
    /// `||x^n - x||`
    pub error: T,
    /// `sqrt(rhs / λ) τ_{n+1}`
    pub envelope: T,
    /// `(rhs - lhs) / (1 + rhs)`
    pub relative_slack: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateReport<T> {
    pub rhs: T,
    pub rows: Vec<RateRow<T>>,
}

impl<T: Scalar> RateReport<T> {
    pub fn min_slack(&self) -> T {
        self.rows.iter().map(|r| r.relative_slack).fold(T::infinity(), T::min)
    }

    /// Every row satisfies `lhs <= rhs + tol (1 + rhs)` and the decay envelope.
    pub fn holds(&self, tol: T) -> bool {
        self.rows.iter().all(|r| r.relative_slack >= -tol && r.error <= r.envelope * (T::one() + tol) + tol)
    }
}

/// Right-hand side of the rate inequality, built from `x^0`, `x^1`, `y^1`.
pub fn rate_rhs<T: Scalar>(
    problem: &InclusionProblem<T>,
    sched: &mut ParamSchedule<T>,
    family: &MetricFamily<T>,
    s0: &AccState<T>,
    s1: &AccState<T>,
    sol: &ReferenceSolution<T>,
) -> Result<T> {
    sched.ensure(1);
    let lambda = sched.lambda();
    let (tau1, tau2) = (sched.tau(1), sched.tau(2));
    let cg = cogram(problem.l());
    let m1 = family.combined(1, sched, &cg)?;
    let dy1 = &s1.y - &sol.y;
    let dx10 = &s1.x - &s0.x;
    Ok(lambda * s1.x.dist(&sol.x).powi(2) / (tau2 * tau2)
        + m1.seminorm_sq(&dy1)? / tau2
        + dx10.norm_sq() / (tau1 * tau1)
        + T::two() / tau1 * problem.l().apply(&dx10)?.dot(&dy1))
}

/// Evaluates the rate inequality at every `n >= 2` of `states`, where
/// `states[n]` is the `n`-th iterate.
pub fn rate_certificate<T: Scalar>(
    problem: &InclusionProblem<T>,
    sched: &ParamSchedule<T>,
    family: &MetricFamily<T>,
    states: &[AccState<T>],
    sol: &ReferenceSolution<T>,
) -> Result<RateReport<T>> {
    if states.len() < 3 {
        return Err(Error::invalid("rate certificate needs at least x^0, x^1, x^2"));
    }
    let mut sched = sched.clone();
    let rhs = rate_rhs(problem, &mut sched, family, &states[0], &states[1], sol)?;
    let last = states.len() - 1;
    sched.ensure(last);
    let lambda = sched.lambda();
    let st = sched.sigma0() * sched.tau1();
    let ln = sched.l_norm();
    let dual_weight = (T::one() - st * ln * ln) / st;
    let rows = states
        .iter()
        .enumerate()
        .skip(2)
        .map(|(n, s)| {
            let tau = sched.tau(n + 1);
            let error = s.x.dist(&sol.x);
            let lhs = lambda * error * error / (tau * tau) + dual_weight * s.y.dist(&sol.y).powi(2);
            RateRow {
                n,
                lhs,
                error,
                envelope: (rhs.max(T::zero()) / lambda).sqrt() * tau,
                relative_slack: (rhs - lhs) / (T::one() + rhs.abs()),
            }
        })
        .collect();
    Ok(RateReport { rhs, rows })
}
