//! Run configuration: JSON schema and its resolution into an engine plan.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use splitmono::hilbert::gram;
use splitmono::io::{parse_json, ProblemData, ProblemSpec};
use splitmono::problems::{certify, Provenance};
use splitmono::reductions::{self, ReductionParams, Scheme};
use splitmono::unified::{FejerMode, ReferenceSolution};
use splitmono::*;

use crate::Failure;

pub const SEED_VAR: &str = "SPLITMONO_SEED";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(try_from = "String")]
pub enum EngineSpec {
    Unified,
    Accelerated,
    Reduction(ReductionKind),
}

impl TryFrom<String> for EngineSpec {
    type Error = String;

    fn try_from(s: String) -> Result<Self, String> {
        match s.as_str() {
            "unified" => Ok(EngineSpec::Unified),
            "accelerated" => Ok(EngineSpec::Accelerated),
            _ => match s.strip_prefix("reduction:") {
                Some(kind) => kind.parse().map(EngineSpec::Reduction).map_err(|e| format!("{e}")),
                None => Err(format!("unknown engine \"{s}\"; expected unified, accelerated or reduction:<kind>")),
            },
        }
    }
}

impl fmt::Display for EngineSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EngineSpec::Unified => f.write_str("unified"),
            EngineSpec::Accelerated => f.write_str("accelerated"),
            EngineSpec::Reduction(kind) => write!(f, "reduction:{kind}"),
        }
    }
}

/// Metric operator (or schedule) on `H` or `G`.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MetricSpec {
    Zero,
    ScaledIdentity {
        value: f64,
    },
    /// `τ^{-1} Id − c L*L`
    VuCondat {
        tau: f64,
    },
    Dense {
        rows: Vec<Vec<f64>>,
    },
    /// `(base + amplitude · ratio^k) Id`
    Geometric {
        base: f64,
        amplitude: f64,
        ratio: f64,
    },
}

impl MetricSpec {
    fn constant(&self, dim: usize, c: f64, l: &DenseLinearMap<f64>) -> Result<MetricOperator<f64>, Error> {
        match self {
            MetricSpec::Zero => Ok(MetricOperator::zeros(dim)),
            MetricSpec::ScaledIdentity { value } => Ok(MetricOperator::scaled_identity(dim, *value)),
            MetricSpec::VuCondat { tau } => {
                if tau.is_nan() || *tau <= 0.0 {
                    return Err(Error::InvalidInput("vu_condat metric needs tau > 0".into()));
                }
                if l.cols() != dim {
                    return Err(Error::InvalidInput("vu_condat metric is only defined on the primal space".into()));
                }
                Ok(gram(l).affine(-c, 1.0 / tau))
            }
            MetricSpec::Dense { rows } => {
                let m = MetricOperator::new(Matrix::from_rows(rows)?)?;
                if m.dim() != dim {
                    return Err(Error::DimError { expected: dim, found: m.dim() });
                }
                Ok(m)
            }
            MetricSpec::Geometric { .. } => {
                Err(Error::InvalidInput("a geometric metric is a schedule, not a constant operator".into()))
            }
        }
    }

    fn schedule(&self, dim: usize, c: f64, l: &DenseLinearMap<f64>) -> Result<MetricSchedule<f64>, Error> {
        match self {
            MetricSpec::Geometric { base, amplitude, ratio } => {
                let (base, amplitude, ratio) = (*base, *amplitude, *ratio);
                if !(0.0..=1.0).contains(&ratio) {
                    return Err(Error::InvalidInput("geometric metric needs 0 ≤ ratio ≤ 1".into()));
                }
                Ok(MetricSchedule::scalar_sequence(dim, move |k| {
                    base + amplitude * ratio.powi(k.min(i32::MAX as usize) as i32)
                }))
            }
            other => Ok(MetricSchedule::constant(other.constant(dim, c, l)?)),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilySpec {
    #[default]
    ChoicePd,
    InvSigmaId,
    Zero,
    TauId,
}

impl FamilySpec {
    pub fn build(self) -> MetricFamily<f64> {
        match self {
            FamilySpec::ChoicePd => MetricFamily::ChoicePD,
            FamilySpec::InvSigmaId => MetricFamily::InvSigmaId,
            FamilySpec::Zero => MetricFamily::Zero,
            FamilySpec::TauId => MetricFamily::TauId,
        }
    }
}

/// Dynamic step-size parameters; unset values get defaults from the problem.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AccelSpec {
    pub lambda: Option<f64>,
    pub tau1: Option<f64>,
    pub sigma0: Option<f64>,
    #[serde(default)]
    pub family: FamilySpec,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    #[default]
    Engine,
    Direct,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StartSpec {
    #[default]
    Zeros,
    /// `sin(a (i + 1))` in each component, with a different `a` per block.
    Wave,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Outputs {
    pub trace: Option<PathBuf>,
    pub report: Option<PathBuf>,
    pub deviations: Option<PathBuf>,
}

fn default_max_iters() -> usize {
    10_000
}

fn default_stop_tol() -> f64 {
    1e-12
}

fn default_kkt_tol() -> Option<f64> {
    Some(1e-6)
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub problem: ProblemSpec,
    #[serde(default)]
    pub seed: u64,
    pub engine: EngineSpec,
    /// Which side of a reduction to run.
    #[serde(default)]
    pub scheme: Side,
    pub c: Option<f64>,
    pub tau: Option<f64>,
    pub m1: Option<MetricSpec>,
    pub m2: Option<MetricSpec>,
    #[serde(default)]
    pub accelerated: AccelSpec,
    #[serde(default)]
    pub start: StartSpec,
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
    #[serde(default = "default_stop_tol")]
    pub stop_tol: f64,
    #[serde(default = "default_kkt_tol")]
    pub kkt_tol: Option<f64>,
    #[serde(default)]
    pub output: Outputs,
}

/// A parsed configuration together with where it came from.
#[derive(Debug, Clone)]
pub struct Loaded {
    pub path: PathBuf,
    pub base: PathBuf,
    pub config: RunConfig,
}

impl Loaded {
    pub fn read(path: &Path) -> Result<Self, Failure> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::malformed(format!("cannot read {}: {e}", path.display())))?;
        let mut config: RunConfig =
            parse_json(&text).map_err(|e| Failure::malformed(format!("{}: {e}", path.display())))?;
        if let Ok(seed) = std::env::var(SEED_VAR) {
            config.seed = seed
                .trim()
                .parse()
                .map_err(|_| Failure::malformed(format!("{SEED_VAR}={seed} is not an unsigned integer")))?;
        }
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(Loaded { path: path.to_path_buf(), base, config })
    }

    /// Output path from the config, relative to the config file.
    pub fn output(&self, p: &Option<PathBuf>) -> Option<PathBuf> {
        p.as_ref().map(|p| if p.is_absolute() { p.clone() } else { self.base.join(p) })
    }
}

pub enum Plan {
    Unified(AdmmConfig<f64>),
    Accelerated {
        acc: AccProblem<f64>,
        schedule: ParamSchedule<f64>,
        family: MetricFamily<f64>,
    },
    /// Direct side of a reduction, with the engine configuration it reduces to.
    Direct {
        direct: Scheme<f64>,
        engine: Box<Plan>,
    },
}

impl Plan {
    pub fn is_accelerated(&self) -> bool {
        match self {
            Plan::Unified(_) => false,
            Plan::Accelerated { .. } => true,
            Plan::Direct { engine, .. } => engine.is_accelerated(),
        }
    }

    pub fn scheme(&self) -> Scheme<f64> {
        match self {
            Plan::Unified(config) => Scheme::Unified(config.clone()),
            Plan::Accelerated { schedule, family, .. } => {
                Scheme::Accelerated { schedule: schedule.clone(), family: family.clone() }
            }
            Plan::Direct { direct, .. } => direct.clone(),
        }
    }

    /// The engine configuration, looking through the direct side of a reduction.
    pub fn engine(&self) -> &Plan {
        match self {
            Plan::Direct { engine, .. } => engine,
            other => other,
        }
    }
}

/// Everything a command needs: the problem, its reference solution when one
/// is known, and the engine plan.
pub struct Resolved {
    pub composite: CompositeProblem<f64>,
    pub inclusion: InclusionProblem<f64>,
    pub certificate: Option<SolutionCertificate<f64>>,
    pub plan: Plan,
    pub stop: StopRule<f64>,
}

impl Resolved {
    pub fn new(loaded: &Loaded) -> Result<Self, Failure> {
        let cfg = &loaded.config;
        let m = cfg.problem.materialize(cfg.seed, &loaded.base)?;
        let composite = m.problem;
        let inclusion = composite.to_inclusion()?;
        let plan = plan(cfg, &composite, &inclusion)?;
        let mut stop = StopRule::iterations(cfg.max_iters).with_stop_tol(cfg.stop_tol);
        if let Some(tol) = cfg.kkt_tol {
            stop = stop.with_kkt_tol(tol);
        }
        Ok(Resolved { composite, inclusion, certificate: m.certificate, plan, stop })
    }

    pub fn problem_data(&self) -> ProblemData {
        ProblemData::from(&self.composite)
    }

    /// The generator's certificate, one read from `solution`, or a freshly computed one.
    pub fn solution(&mut self, solution: Option<&Path>) -> Result<SolutionCertificate<f64>, Failure> {
        if let Some(path) = solution {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Failure::malformed(format!("cannot read {}: {e}", path.display())))?;
            let file: SolutionFile =
                parse_json(&text).map_err(|e| Failure::malformed(format!("{}: {e}", path.display())))?;
            let cert = SolutionCertificate::validate(
                &self.composite,
                Vector::new(file.x),
                Vector::new(file.v),
                Provenance::LongRun,
            )?;
            self.certificate = Some(cert);
        }
        if self.certificate.is_none() {
            self.certificate = Some(certify(&self.composite)?);
        }
        Ok(self.certificate.clone().expect("set above"))
    }

    pub fn reference(&self) -> Result<Option<ReferenceSolution<f64>>, Failure> {
        match &self.certificate {
            Some(c) => Ok(Some(c.reference(&self.inclusion)?)),
            None => Ok(None),
        }
    }

    pub fn fejer_mode(&self) -> FejerMode {
        match (&self.plan, FejerMode::for_problem(&self.inclusion)) {
            (Plan::Unified(config), FejerMode::ZeroForward) if !config.m2.is_constant() => FejerMode::ZeroForwardIII,
            (_, mode) => mode,
        }
    }

    pub fn start(&self, spec: StartSpec) -> AdmmState<f64> {
        let (n, m) = (self.inclusion.dim_h(), self.inclusion.dim_g());
        let zdim = if self.plan.is_accelerated() { n } else { m };
        match spec {
            StartSpec::Zeros => AdmmState::new(Vector::zeros(n), Vector::zeros(zdim), Vector::zeros(m)),
            StartSpec::Wave => AdmmState::new(wave(n, 1.3), wave(zdim, 0.7), wave(m, 2.1)),
        }
    }
}

fn wave(len: usize, a: f64) -> Vector<f64> {
    Vector::new((0..len).map(|i| (a * (i as f64 + 1.0)).sin()).collect())
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolutionFile {
    pub x: Vec<f64>,
    pub v: Vec<f64>,
}

fn schedule_for(cfg: &RunConfig, cp: &CompositeProblem<f64>) -> Result<ParamSchedule<f64>, Error> {
    let (gamma, mu) = (cp.gamma(), cp.mu());
    let ln = cp.l.norm();
    let a = &cfg.accelerated;
    let lambda = a.lambda.unwrap_or(mu + 1.0);
    let tau1 = a.tau1.unwrap_or_else(|| if mu > 0.0 { (gamma / mu).min(1.0) } else { 1.0 });
    let sigma0 = a.sigma0.unwrap_or_else(|| if ln > 0.0 { 1.0 / (tau1 * ln * ln) } else { 1.0 / tau1 });
    ParamSchedule::init(gamma, mu, lambda, tau1, sigma0, ln)
}

fn plan(cfg: &RunConfig, cp: &CompositeProblem<f64>, p: &InclusionProblem<f64>) -> Result<Plan, Failure> {
    let c = cfg.c.unwrap_or(1.0);
    let l = p.l();
    match cfg.engine {
        EngineSpec::Unified => {
            let m1 = match &cfg.m1 {
                Some(spec) => spec.schedule(p.dim_h(), c, l)?,
                // τ^{-1} = c‖L‖² + λ_max(∇²h) satisfies assumption (I) for any L
                None => MetricSchedule::constant(gram(l).affine(-c, c * l.norm().powi(2) + cp.mu())),
            };
            let m2 = match &cfg.m2 {
                Some(spec) => spec.schedule(p.dim_g(), c, l)?,
                None => MetricSchedule::zeros(p.dim_g()),
            };
            Ok(Plan::Unified(AdmmConfig::new(c, m1, m2)?))
        }
        EngineSpec::Accelerated => {
            let acc = cp.to_acc_problem()?;
            let schedule = schedule_for(cfg, cp)?;
            let family = cfg.accelerated.family.build();
            // rejects a family whose metric conditions fail before any iteration
            AccEngine::new(&acc, schedule.clone(), AccConfig::new(family.clone()))?;
            Ok(Plan::Accelerated { acc, schedule, family })
        }
        EngineSpec::Reduction(kind) => {
            let mut params = ReductionParams { tau: cfg.tau, c: Some(c), ..Default::default() };
            if kind == ReductionKind::VariableMetricAdmm {
                params.m1 = cfg.m1.as_ref().map(|s| s.constant(p.dim_h(), c, l)).transpose()?;
                params.m2 = cfg.m2.as_ref().map(|s| s.constant(p.dim_g(), c, l)).transpose()?;
            }
            if kind.is_accelerated() {
                params.schedule = Some(schedule_for(cfg, cp)?);
                params.family = Some(cfg.accelerated.family.build());
            }
            let red = reductions::build(kind, p, &params)?;
            let engine = match red.engine {
                Scheme::Unified(config) => Plan::Unified(config),
                Scheme::Accelerated { schedule, family } => {
                    Plan::Accelerated { acc: cp.to_acc_problem()?, schedule, family }
                }
                Scheme::Direct(_) => unreachable!("reductions configure an engine"),
            };
            Ok(match cfg.scheme {
                Side::Engine => engine,
                Side::Direct => Plan::Direct { direct: red.direct, engine: Box::new(engine) },
            })
        }
    }
}
