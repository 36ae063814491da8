//! Seeded composite optimization problems `min f(x) + g(Lx) + h(x)` with
//! certified primal-dual solutions.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::accelerated::AccProblem;
use crate::error::{check_dim, Constraint, Error, Result};
use crate::hilbert::{gram, DenseLinearMap, MetricOperator};
use crate::linalg::{solve, Matrix, Vector};
use crate::operators::{ForwardMap, Operator, ProxFunction};
use crate::scalar::Scalar;
use crate::trace::StopRule;
use crate::unified::{AdmmConfig, AdmmState, InclusionProblem, MetricSchedule, ReferenceSolution, UnifiedAdmm};

pub const MAX_QUADRATIC_DIM: usize = 500;
pub const MAX_TV_DIM: usize = 300;

/// Smooth term `h`.
#[derive(Debug, Clone, PartialEq)]
pub enum Smooth<T> {
    Zero {
        dim: usize,
    },
    /// `h(x) = ½ x'Hx + b'x + constant`
    Quadratic {
        hessian: Matrix<T>,
        linear: Vector<T>,
        constant: T,
    },
}

impl<T: Scalar> Smooth<T> {
    pub fn dim(&self) -> usize {
        match self {
            Smooth::Zero { dim } => *dim,
            Smooth::Quadratic { linear, .. } => linear.dim(),
        }
    }

    /// `h(x) = ½‖Dx - b‖²`
    pub fn least_squares(d: &Matrix<T>, b: &Vector<T>) -> Result<Self> {
        let dt = d.transpose();
        Ok(Smooth::Quadratic { hessian: dt.matmul(d)?, linear: -dt.mul_vec(b)?, constant: T::half() * b.norm_sq() })
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Smooth::Zero { .. })
    }

    pub fn value(&self, x: &Vector<T>) -> Result<T> {
        match self {
            Smooth::Zero { dim } => {
                check_dim(*dim, x.dim())?;
                Ok(T::zero())
            }
            Smooth::Quadratic { hessian, linear, constant } => {
                Ok(T::half() * x.dot(&hessian.mul_vec(x)?) + linear.dot(x) + *constant)
            }
        }
    }

    pub fn gradient_map(&self) -> Result<ForwardMap<T>> {
        match self {
            Smooth::Zero { dim } => Ok(ForwardMap::zero(*dim)),
            Smooth::Quadratic { hessian, linear, .. } => ForwardMap::gradient(hessian.clone(), linear.clone()),
        }
    }

    pub fn hessian(&self) -> Matrix<T> {
        match self {
            Smooth::Zero { dim } => Matrix::zeros(*dim, *dim),
            Smooth::Quadratic { hessian, .. } => hessian.clone(),
        }
    }

    fn linear(&self) -> Vector<T> {
        match self {
            Smooth::Zero { dim } => Vector::zeros(*dim),
            Smooth::Quadratic { linear, .. } => linear.clone(),
        }
    }

    fn constant(&self) -> T {
        match self {
            Smooth::Zero { .. } => T::zero(),
            Smooth::Quadratic { constant, .. } => *constant,
        }
    }
}

/// Which engines a problem satisfies the standing assumptions of.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Admissibility {
    pub unified: bool,
    pub accelerated: bool,
}

#[derive(Debug, Clone)]
pub struct CompositeProblem<T> {
    pub f: ProxFunction<T>,
    pub g: ProxFunction<T>,
    pub h: Smooth<T>,
    pub l: DenseLinearMap<T>,
    pub seed: Option<u64>,
}

impl<T: Scalar> CompositeProblem<T> {
    pub fn new(f: ProxFunction<T>, g: ProxFunction<T>, h: Smooth<T>, l: DenseLinearMap<T>) -> Result<Self> {
        check_dim(l.cols(), f.dim())?;
        check_dim(l.cols(), h.dim())?;
        check_dim(l.rows(), g.dim())?;
        if let Smooth::Quadratic { hessian, .. } = &h {
            let m = MetricOperator::new(hessian.clone())?;
            if !m.is_psd(m.default_tol()) {
                return Err(Error::invalid("smooth term must be convex"));
            }
        }
        Ok(CompositeProblem { f, g, h, l, seed: None })
    }

    pub fn dim_h(&self) -> usize {
        self.l.cols()
    }

    pub fn dim_g(&self) -> usize {
        self.l.rows()
    }

    /// `A = ∂f`, `B = ∂g`, `C = ∇h`.
    pub fn to_inclusion(&self) -> Result<InclusionProblem<T>> {
        InclusionProblem::new(
            Operator::subdifferential(self.f.clone()),
            Operator::subdifferential(self.g.clone()),
            self.h.gradient_map()?,
            self.l.clone(),
        )
    }

    /// Strong monotonicity modulus of `∂f + ∇h`.
    pub fn gamma(&self) -> T {
        let hmin = MetricOperator::new(self.h.hessian()).map_or(T::zero(), |m| m.min_eigenvalue().max(T::zero()));
        self.f.strong_convexity() + hmin
    }

    /// Lipschitz modulus of `∇h`.
    pub fn mu(&self) -> T {
        MetricOperator::new(self.h.hessian()).map_or(T::zero(), |m| m.max_eigenvalue().max(T::zero()))
    }

    pub fn admissibility(&self) -> Admissibility {
        Admissibility { unified: true, accelerated: self.gamma() > T::zero() }
    }

    pub fn to_acc_problem(&self) -> Result<AccProblem<T>> {
        let gamma = self.gamma();
        if !(gamma > T::zero()) {
            return Err(Error::violated(
                Constraint::StrongMonotonicity,
                "f + h is not strongly convex, the accelerated engine does not apply",
            ));
        }
        AccProblem::from_inclusion(self.to_inclusion()?, gamma)
    }

    /// `f(x) + g(Lx) + h(x)`; `None` outside the domain.
    pub fn primal_objective(&self, x: &Vector<T>) -> Result<Option<T>> {
        let lx = self.l.apply(x)?;
        let h = self.h.value(x)?;
        Ok(match (self.f.value(x), self.g.value(&lx)) {
            (Some(f), Some(g)) => Some(f + g + h),
            _ => None,
        })
    }

    /// `-(f + h)*(-L*v) - g*(v)`, available when `f + h` is quadratic or `h = 0`.
    pub fn dual_objective(&self, v: &Vector<T>) -> Result<Option<T>> {
        let u = -self.l.adjoint_apply(v)?;
        let gstar = match self.g.conjugate_value(v) {
            Some(value) => value,
            None => return Ok(None),
        };
        let fh_star = if self.h.is_zero() {
            self.f.conjugate_value(&u)
        } else {
            match self.f.affine_subgradient() {
                Some((q, qlin)) => {
                    // (½x'Px + p'x + c0)* (u) = ½(u - p)'P^{-1}(u - p) - c0
                    let p = q.add(&self.h.hessian())?;
                    let shift = &u - &(&qlin + &self.h.linear());
                    match solve(&p, &shift) {
                        Ok(w) => Some(T::half() * shift.dot(&w) - self.h.constant()),
                        Err(_) => None,
                    }
                }
                None => None,
            }
        };
        Ok(fh_star.map(|s| -s - gstar))
    }

    /// Primal minus dual objective, when both are available.
    pub fn duality_gap(&self, x: &Vector<T>, v: &Vector<T>) -> Result<Option<T>> {
        Ok(match (self.primal_objective(x)?, self.dual_objective(v)?) {
            (Some(p), Some(d)) => Some(p - d),
            _ => None,
        })
    }

    /// Largest sampled ratio `‖∇h(x) - ∇h(y)‖ / ‖x - y‖`.
    pub fn sampled_gradient_lipschitz(&self, samples: usize, seed: u64) -> Result<T> {
        let grad = self.h.gradient_map()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut worst = T::zero();
        for _ in 0..samples {
            let x = gaussian_vector(&mut rng, self.dim_h());
            let y = gaussian_vector(&mut rng, self.dim_h());
            let d = x.dist(&y);
            if d > T::zero() {
                worst = worst.max(grad.apply(&x)?.dist(&grad.apply(&y)?) / d);
            }
        }
        Ok(worst)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    DenseKkt,
    LongRun,
}

impl Provenance {
    pub fn name(self) -> &'static str {
        match self {
            Provenance::DenseKkt => "dense-KKT-solve",
            Provenance::LongRun => "long-run-solver",
        }
    }

    /// Residual bound the certificate is validated against.
    pub fn tolerance(self) -> f64 {
        match self {
            Provenance::DenseKkt => 1e-10,
            Provenance::LongRun => 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolutionCertificate<T> {
    pub x: Vector<T>,
    pub v: Vector<T>,
    pub kkt_primal: T,
    pub kkt_dual: T,
    pub provenance: Provenance,
}

impl<T: Scalar> SolutionCertificate<T> {
    /// Validates `(x, v)` against the problem at the provenance tolerance.
    pub fn validate(problem: &CompositeProblem<T>, x: Vector<T>, v: Vector<T>, provenance: Provenance) -> Result<Self> {
        let (rp, rd) = kkt_residual(problem, &x, &v)?;
        let tol = T::lit(provenance.tolerance());
        if !(rp <= tol && rd <= tol) {
            return Err(Error::SolutionInvalid { primal: rp.to_f64_lossy(), dual: rd.to_f64_lossy() });
        }
        Ok(SolutionCertificate { x, v, kkt_primal: rp, kkt_dual: rd, provenance })
    }

    pub fn reference(&self, problem: &InclusionProblem<T>) -> Result<ReferenceSolution<T>> {
        ReferenceSolution::new(problem, self.x.clone(), self.v.clone())
    }
}

/// `(‖x - prox_f(x - L*v - ∇h(x))‖, ‖v - prox_{g*}(v + Lx)‖)`
pub fn kkt_residual<T: Scalar>(problem: &CompositeProblem<T>, x: &Vector<T>, v: &Vector<T>) -> Result<(T, T)> {
    check_dim(problem.dim_h(), x.dim())?;
    check_dim(problem.dim_g(), v.dim())?;
    let grad = problem.h.gradient_map()?.apply(x)?;
    let arg = &(x - &problem.l.adjoint_apply(v)?) - &grad;
    let rp = x.dist(&problem.f.prox(T::one(), &arg)?);
    let rd = v.dist(&problem.g.conjugate_prox(T::one(), &(v + &problem.l.apply(x)?))?);
    Ok((rp, rd))
}

/// Exact solution by one linear solve when `f` and `g` are quadratic:
/// `(Q + H + L'RL) x = -q - b - L'r`, `v = RLx + r`.
pub fn dense_certificate<T: Scalar>(problem: &CompositeProblem<T>) -> Result<SolutionCertificate<T>> {
    let (q, qlin) = problem.f.affine_subgradient().ok_or_else(|| Error::invalid("f is not quadratic"))?;
    let (r, rlin) = problem.g.affine_subgradient().ok_or_else(|| Error::invalid("g is not quadratic"))?;
    let l = problem.l.matrix();
    let lt = l.transpose();
    let system = q.add(&problem.h.hessian())?.add(&lt.matmul(&r.matmul(l)?)?)?;
    let rhs = -(&(&qlin + &problem.h.linear()) + &lt.mul_vec(&rlin)?);
    let x = solve(&system, &rhs)?;
    let v = &r.mul_vec(&l.mul_vec(&x)?)? + &rlin;
    SolutionCertificate::validate(problem, x, v, Provenance::DenseKkt)
}

fn gaussian<T: Scalar>(rng: &mut ChaCha8Rng) -> T {
    let z: f64 = StandardNormal.sample(rng);
    T::lit(z)
}

fn gaussian_vector<T: Scalar>(rng: &mut ChaCha8Rng, n: usize) -> Vector<T> {
    Vector::new((0..n).map(|_| gaussian(rng)).collect())
}

fn gaussian_matrix<T: Scalar>(rng: &mut ChaCha8Rng, rows: usize, cols: usize, scale: T) -> Matrix<T> {
    let data = (0..rows * cols).map(|_| gaussian::<T>(rng) * scale).collect();
    Matrix::from_row_major(rows, cols, data).expect("shape")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QuadraticOptions {
    /// Include `h = ½‖Dx - b‖²`; otherwise `h = 0`.
    pub with_h: bool,
}

impl Default for QuadraticOptions {
    fn default() -> Self {
        QuadraticOptions { with_h: true }
    }
}

/// Random all-quadratic problem. `L` is `dim_g × dim_h` with i.i.d.
/// Gaussian entries scaled by `1/sqrt(dim_g)`; `f` has Hessian
/// `gamma_f Id + WW'` with a rank-deficient `W`.
pub fn gen_quadratic<T: Scalar>(
    dim_h: usize,
    dim_g: usize,
    seed: u64,
    gamma_f: T,
) -> Result<(CompositeProblem<T>, SolutionCertificate<T>)> {
    gen_quadratic_with(dim_h, dim_g, seed, gamma_f, QuadraticOptions::default())
}

pub fn gen_quadratic_with<T: Scalar>(
    dim_h: usize,
    dim_g: usize,
    seed: u64,
    gamma_f: T,
    options: QuadraticOptions,
) -> Result<(CompositeProblem<T>, SolutionCertificate<T>)> {
    if dim_h == 0 || dim_g == 0 || dim_h > MAX_QUADRATIC_DIM || dim_g > MAX_QUADRATIC_DIM {
        return Err(Error::invalid(format!("dimensions must lie in 1..={MAX_QUADRATIC_DIM}")));
    }
    if !(gamma_f >= T::zero()) {
        return Err(Error::invalid("gamma_f must be non-negative"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rank = (dim_h / 2).max(1);
    let w = gaussian_matrix(&mut rng, dim_h, rank, T::one() / T::lit(dim_h as f64).sqrt());
    let q = w.matmul(&w.transpose())?.symmetrized().shift_diagonal(gamma_f);
    let qlin = gaussian_vector(&mut rng, dim_h);
    let vmat = gaussian_matrix(&mut rng, dim_g, dim_g, T::one() / T::lit(dim_g as f64).sqrt());
    let r = vmat.matmul(&vmat.transpose())?.symmetrized().shift_diagonal(T::half());
    let rlin = gaussian_vector(&mut rng, dim_g);
    let l = DenseLinearMap::new(gaussian_matrix(&mut rng, dim_g, dim_h, T::one() / T::lit(dim_g as f64).sqrt()))?;
    let h = if options.with_h {
        let d = gaussian_matrix(&mut rng, dim_h, dim_h, T::one() / T::lit(dim_h as f64).sqrt());
        let b = gaussian_vector(&mut rng, dim_h);
        Smooth::least_squares(&d, &b)?
    } else {
        Smooth::Zero { dim: dim_h }
    };
    let f = ProxFunction::quadratic(q, qlin)?;
    let g = ProxFunction::quadratic(r, rlin)?;
    let mut problem = CompositeProblem::new(f, g, h, l)?;
    problem.seed = Some(seed);
    let cert = dense_certificate(&problem)?;
    Ok((problem, cert))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElasticNetOptions {
    /// Weight of the identity rows stacked under the difference map is `sqrt(epsilon)`.
    pub epsilon: f64,
    pub l1_weight: f64,
    pub tv_weight: f64,
    /// Use `b = 0`, for which the solution is the origin.
    pub zero_data: bool,
}

impl Default for ElasticNetOptions {
    fn default() -> Self {
        ElasticNetOptions { epsilon: 0.25, l1_weight: 0.1, tv_weight: 0.1, zero_data: false }
    }
}

/// `f = 0.1‖·‖₁ + (gamma_f/2)‖·‖²`, `g = 0.1‖·‖₁`, `L = [first differences; sqrt(ε) Id]`,
/// `h = ½‖Dx - b‖²` with a piecewise-constant ground truth behind `b`.
/// Certified by a long unified-engine run, then KKT-validated.
pub fn gen_elastic_net_tv<T: Scalar>(
    n: usize,
    seed: u64,
    gamma_f: T,
) -> Result<(CompositeProblem<T>, SolutionCertificate<T>)> {
    gen_elastic_net_tv_with(n, seed, gamma_f, ElasticNetOptions::default())
}

pub fn gen_elastic_net_tv_with<T: Scalar>(
    n: usize,
    seed: u64,
    gamma_f: T,
    options: ElasticNetOptions,
) -> Result<(CompositeProblem<T>, SolutionCertificate<T>)> {
    if !(2..=MAX_TV_DIM).contains(&n) {
        return Err(Error::invalid(format!("n must lie in 2..={MAX_TV_DIM}")));
    }
    if !(gamma_f >= T::zero()) {
        return Err(Error::invalid("gamma_f must be non-negative"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let root_eps = T::lit(options.epsilon.sqrt());
    let l = Matrix::from_fn(2 * n - 1, n, |i, j| {
        if i < n - 1 {
            if j == i {
                -T::one()
            } else if j == i + 1 {
                T::one()
            } else {
                T::zero()
            }
        } else if j == i - (n - 1) {
            root_eps
        } else {
            T::zero()
        }
    });
    let d = gaussian_matrix(&mut rng, n, n, T::one() / T::lit(n as f64).sqrt());
    let b = if options.zero_data {
        Vector::zeros(n)
    } else {
        let truth = Vector::new(
            (0..n)
                .map(|i| {
                    T::lit(match (4 * i) / n {
                        0 => 0.0,
                        1 => 1.5,
                        2 => 0.0,
                        _ => -1.0,
                    })
                })
                .collect(),
        );
        let noise = gaussian_vector::<T>(&mut rng, n).scale(T::lit(0.05));
        &d.mul_vec(&truth)? + &noise
    };
    let f = ProxFunction::elastic_net(n, T::lit(options.l1_weight), gamma_f)?;
    let g = ProxFunction::l1(2 * n - 1, T::lit(options.tv_weight))?;
    let mut problem = CompositeProblem::new(f, g, Smooth::least_squares(&d, &b)?, DenseLinearMap::new(l)?)?;
    problem.seed = Some(seed);
    let cert = long_run_certificate(&problem)?;
    Ok((problem, cert))
}

/// Runs the unified engine with `M1 = τ^{-1} Id - L*L`, `M2 = 0`,
/// `1/τ = ‖L‖² + λ_max(∇²h)` until both KKT residuals drop below `1e-12`.
pub fn long_run_certificate<T: Scalar>(problem: &CompositeProblem<T>) -> Result<SolutionCertificate<T>> {
    let inclusion = problem.to_inclusion()?;
    let c = T::one();
    let inv_tau = c * problem.l.norm().powi(2) + problem.mu();
    let m1 = gram(&problem.l).affine(-c, inv_tau);
    let stop = StopRule::iterations(1_000_000).with_stop_tol(T::zero()).with_kkt_tol(T::lit(1e-12)).without_history();
    let config =
        AdmmConfig::new(c, MetricSchedule::constant(m1), MetricSchedule::zeros(problem.dim_g()))?.with_stop(stop);
    let trace = UnifiedAdmm::new(&inclusion, config)?.run(AdmmState::zeros(&inclusion)).map_err(|e| e.error)?;
    let last = trace.last();
    SolutionCertificate::validate(problem, last.x.clone(), last.y.clone(), Provenance::LongRun)
}

/// Dense KKT certificate when `f` and `g` are quadratic, long-run otherwise.
pub fn certify<T: Scalar>(problem: &CompositeProblem<T>) -> Result<SolutionCertificate<T>> {
    if problem.f.affine_subgradient().is_some() && problem.g.affine_subgradient().is_some() {
        dense_certificate(problem)
    } else {
        long_run_certificate(problem)
    }
}
