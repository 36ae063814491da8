//! JSON mirrors of the problem catalog and CSV exports of traces, schedules
//! and reduction batteries. File formats are `f64`.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::accelerated::{rate_certificate, AccState, MetricFamily, ParamSchedule};
use crate::error::{Error, Result};
use crate::hilbert::DenseLinearMap;
use crate::linalg::{Matrix, Vector};
use crate::operators::{ProxFunction, ProxKind};
use crate::problems::{
    gen_elastic_net_tv_with, gen_quadratic_with, CompositeProblem, ElasticNetOptions, Provenance, QuadraticOptions,
    Smooth, SolutionCertificate,
};
use crate::reductions::ReductionKind;
use crate::scalar::Scalar;
use crate::unified::{
    fejer_certificate, lyapunov, AdmmConfig, AdmmState, FejerMode, InclusionProblem, ReferenceSolution,
};

/// Parses JSON, reporting the line and column of the first error.
pub fn parse_json<D: DeserializeOwned>(text: &str) -> Result<D> {
    serde_json::from_str(text).map_err(|e| Error::invalid(format!("line {}, column {}: {e}", e.line(), e.column())))
}

pub fn to_json<S: Serialize>(value: &S) -> String {
    serde_json::to_string_pretty(value).expect("serializable")
}

fn rows_of(m: &Matrix<f64>) -> Vec<Vec<f64>> {
    (0..m.rows()).map(|i| m.row(i).to_vec()).collect()
}

fn matrix_of(rows: &[Vec<f64>]) -> Result<Matrix<f64>> {
    if rows.is_empty() {
        return Err(Error::invalid("matrix must have at least one row"));
    }
    Matrix::from_rows(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FunctionSpec {
    Zero { dim: usize },
    L1 { dim: usize, weight: f64 },
    SquaredL2 { dim: usize, weight: f64 },
    Box { dim: usize, lo: f64, hi: f64 },
    Quadratic { hessian: Vec<Vec<f64>>, linear: Vec<f64> },
    ElasticNet { dim: usize, l1: f64, l2: f64 },
    Conjugate { inner: std::boxed::Box<FunctionSpec> },
    Translated { inner: std::boxed::Box<FunctionSpec>, shift: Vec<f64> },
    Scaled { inner: std::boxed::Box<FunctionSpec>, factor: f64 },
}

impl FunctionSpec {
    pub fn build(&self) -> Result<ProxFunction<f64>> {
        Ok(match self {
            FunctionSpec::Zero { dim } => ProxFunction::zero(*dim),
            FunctionSpec::L1 { dim, weight } => ProxFunction::l1(*dim, *weight)?,
            FunctionSpec::SquaredL2 { dim, weight } => ProxFunction::squared_l2(*dim, *weight)?,
            FunctionSpec::Box { dim, lo, hi } => ProxFunction::box_indicator(*dim, *lo, *hi)?,
            FunctionSpec::Quadratic { hessian, linear } => {
                ProxFunction::quadratic(matrix_of(hessian)?, Vector::from_f64(linear))?
            }
            FunctionSpec::ElasticNet { dim, l1, l2 } => ProxFunction::elastic_net(*dim, *l1, *l2)?,
            FunctionSpec::Conjugate { inner } => inner.build()?.conjugate(),
            FunctionSpec::Translated { inner, shift } => inner.build()?.translated(Vector::from_f64(shift))?,
            FunctionSpec::Scaled { inner, factor } => inner.build()?.scaled(*factor)?,
        })
    }
}

impl From<&ProxFunction<f64>> for FunctionSpec {
    fn from(f: &ProxFunction<f64>) -> Self {
        let dim = f.dim();
        match f.kind() {
            ProxKind::Zero => FunctionSpec::Zero { dim },
            ProxKind::L1 { weight } => FunctionSpec::L1 { dim, weight: *weight },
            ProxKind::SquaredL2 { weight } => FunctionSpec::SquaredL2 { dim, weight: *weight },
            ProxKind::Box { lo, hi } => FunctionSpec::Box { dim, lo: *lo, hi: *hi },
            ProxKind::Quadratic { hessian, linear } => {
                FunctionSpec::Quadratic { hessian: rows_of(hessian), linear: linear.to_f64_vec() }
            }
            ProxKind::ElasticNet { l1, l2 } => FunctionSpec::ElasticNet { dim, l1: *l1, l2: *l2 },
            ProxKind::Conjugate(inner) => {
                FunctionSpec::Conjugate { inner: std::boxed::Box::new(inner.as_ref().into()) }
            }
            ProxKind::Translated { inner, shift } => FunctionSpec::Translated {
                inner: std::boxed::Box::new(inner.as_ref().into()),
                shift: shift.to_f64_vec(),
            },
            ProxKind::Scaled { inner, factor } => {
                FunctionSpec::Scaled { inner: std::boxed::Box::new(inner.as_ref().into()), factor: *factor }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SmoothSpec {
    Zero {
        dim: usize,
    },
    Quadratic {
        hessian: Vec<Vec<f64>>,
        linear: Vec<f64>,
        #[serde(default)]
        constant: f64,
    },
    /// `½‖Dx - b‖²`
    LeastSquares {
        d: Vec<Vec<f64>>,
        b: Vec<f64>,
    },
}

impl SmoothSpec {
    pub fn build(&self) -> Result<Smooth<f64>> {
        Ok(match self {
            SmoothSpec::Zero { dim } => Smooth::Zero { dim: *dim },
            SmoothSpec::Quadratic { hessian, linear, constant } => {
                let hessian = matrix_of(hessian)?;
                crate::error::check_dim(hessian.rows(), linear.len())?;
                Smooth::Quadratic { hessian, linear: Vector::from_f64(linear), constant: *constant }
            }
            SmoothSpec::LeastSquares { d, b } => Smooth::least_squares(&matrix_of(d)?, &Vector::from_f64(b))?,
        })
    }
}

impl From<&Smooth<f64>> for SmoothSpec {
    fn from(h: &Smooth<f64>) -> Self {
        match h {
            Smooth::Zero { dim } => SmoothSpec::Zero { dim: *dim },
            Smooth::Quadratic { hessian, linear, constant } => {
                SmoothSpec::Quadratic { hessian: rows_of(hessian), linear: linear.to_f64_vec(), constant: *constant }
            }
        }
    }
}

/// Serialized form of a [`CompositeProblem`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemData {
    pub f: FunctionSpec,
    pub g: FunctionSpec,
    pub h: SmoothSpec,
    pub l: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl ProblemData {
    pub fn build(&self) -> Result<CompositeProblem<f64>> {
        let mut p = CompositeProblem::new(
            self.f.build()?,
            self.g.build()?,
            self.h.build()?,
            DenseLinearMap::new(matrix_of(&self.l)?)?,
        )?;
        p.seed = self.seed;
        Ok(p)
    }
}

impl From<&CompositeProblem<f64>> for ProblemData {
    fn from(p: &CompositeProblem<f64>) -> Self {
        ProblemData { f: (&p.f).into(), g: (&p.g).into(), h: (&p.h).into(), l: rows_of(p.l.matrix()), seed: p.seed }
    }
}

fn default_true() -> bool {
    true
}

/// Problem section of a run configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProblemSpec {
    /// Seeded all-quadratic instance; `L` is `dim_g × dim_h`.
    Quadratic {
        dim_h: usize,
        dim_g: usize,
        gamma_f: f64,
        #[serde(default = "default_true")]
        with_h: bool,
    },
    ElasticNetTv {
        n: usize,
        gamma_f: f64,
        #[serde(default)]
        epsilon: Option<f64>,
        #[serde(default)]
        zero_data: bool,
    },
    /// `f = g = h = 0`, `L = Id`.
    Zero {
        dim: usize,
    },
    Inline(ProblemData),
    /// Path to a JSON [`ProblemData`] document, relative to the config file.
    File {
        path: PathBuf,
    },
}

/// A problem together with the certificate its generator produced, if any.
#[derive(Debug, Clone)]
pub struct Materialized {
    pub problem: CompositeProblem<f64>,
    pub certificate: Option<SolutionCertificate<f64>>,
}

impl ProblemSpec {
    pub fn materialize(&self, seed: u64, base: &Path) -> Result<Materialized> {
        match self {
            ProblemSpec::Quadratic { dim_h, dim_g, gamma_f, with_h } => {
                let (problem, cert) =
                    gen_quadratic_with(*dim_h, *dim_g, seed, *gamma_f, QuadraticOptions { with_h: *with_h })?;
                Ok(Materialized { problem, certificate: Some(cert) })
            }
            ProblemSpec::ElasticNetTv { n, gamma_f, epsilon, zero_data } => {
                let mut options = ElasticNetOptions { zero_data: *zero_data, ..Default::default() };
                if let Some(eps) = epsilon {
                    options.epsilon = *eps;
                }
                let (problem, cert) = gen_elastic_net_tv_with(*n, seed, *gamma_f, options)?;
                Ok(Materialized { problem, certificate: Some(cert) })
            }
            ProblemSpec::Zero { dim } => {
                let problem = CompositeProblem::new(
                    ProxFunction::zero(*dim),
                    ProxFunction::zero(*dim),
                    Smooth::Zero { dim: *dim },
                    DenseLinearMap::identity(*dim),
                )?;
                let cert = SolutionCertificate::validate(
                    &problem,
                    Vector::zeros(*dim),
                    Vector::zeros(*dim),
                    Provenance::DenseKkt,
                )?;
                Ok(Materialized { problem, certificate: Some(cert) })
            }
            ProblemSpec::Inline(data) => Ok(Materialized { problem: data.build()?, certificate: None }),
            ProblemSpec::File { path } => {
                let full = if path.is_absolute() { path.clone() } else { base.join(path) };
                let text = std::fs::read_to_string(&full)
                    .map_err(|e| Error::invalid(format!("cannot read {}: {e}", full.display())))?;
                let data: ProblemData = parse_json(&text)?;
                Ok(Materialized { problem: data.build()?, certificate: None })
            }
        }
    }
}

/// One row of the trace CSV. Quantities that need a reference solution are
/// `NaN` without one; `fejer_slack` is `NaN` where the inequality is undefined.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub k: usize,
    pub err_x: f64,
    pub err_z: f64,
    pub err_y: f64,
    pub lyapunov: f64,
    pub fejer_slack: f64,
    pub kkt_primal: f64,
    pub kkt_dual: f64,
    pub wall_ns: u64,
    /// `(lhs, rhs)` of the accelerated rate inequality.
    pub rate: Option<(f64, f64)>,
}

pub const TRACE_HEADER: [&str; 9] =
    ["k", "err_x", "err_z", "err_y", "lyapunov", "fejer_slack", "kkt_primal", "kkt_dual", "wall_ns"];
pub const RATE_HEADER: [&str; 2] = ["lhs_rate", "rhs_rate"];
pub const SCHEDULE_HEADER: [&str; 5] = ["k", "tau_k", "sigma_k", "theta_k", "n_tau_n"];

/// Fixed 17-significant-digit scientific format.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

fn wall(wall_ns: Option<&[u64]>, i: usize) -> u64 {
    wall_ns.and_then(|w| w.get(i).copied()).unwrap_or(0)
}

/// Trace rows for a unified-engine run. The slack in row `k` belongs to
/// the step that produced `states[k]`.
pub fn unified_rows<T: Scalar>(
    problem: &InclusionProblem<T>,
    config: &AdmmConfig<T>,
    mode: FejerMode,
    states: &[AdmmState<T>],
    sol: Option<&ReferenceSolution<T>>,
    wall_ns: Option<&[u64]>,
) -> Result<Vec<TraceRow>> {
    let mut rows = Vec::with_capacity(states.len());
    for (i, s) in states.iter().enumerate() {
        let (rp, rd) = problem.kkt_residual(&s.x, &s.y)?;
        let mut row = TraceRow {
            k: s.k,
            err_x: f64::NAN,
            err_z: f64::NAN,
            err_y: f64::NAN,
            lyapunov: f64::NAN,
            fejer_slack: f64::NAN,
            kkt_primal: rp.to_f64_lossy(),
            kkt_dual: rd.to_f64_lossy(),
            wall_ns: wall(wall_ns, i),
            rate: None,
        };
        if let Some(sol) = sol {
            row.err_x = s.x.dist(&sol.x).to_f64_lossy();
            row.err_z = s.z.dist(&sol.lx).to_f64_lossy();
            row.err_y = s.y.dist(&sol.y).to_f64_lossy();
            row.lyapunov = lyapunov(config, s, sol)?.to_f64_lossy();
            let consecutive = i >= 1 && states[i - 1].k + 1 == s.k;
            let needs_prev = mode == FejerMode::ZeroForwardIII;
            if consecutive && (!needs_prev || (i >= 2 && states[i - 2].k + 2 == s.k)) {
                let prev = if needs_prev { Some(&states[i - 2]) } else { None };
                let cert = fejer_certificate(problem, config, mode, prev, &states[i - 1], s, sol)?;
                row.fejer_slack = (cert.slack / (T::one() + cert.rhs.abs())).to_f64_lossy();
            }
        }
        rows.push(row);
    }
    Ok(rows)
}

/// Trace rows for an accelerated run; `err_z` is measured against `-L*y*`,
/// `lyapunov` is the rate left-hand side and `fejer_slack` its relative slack.
pub fn accelerated_rows<T: Scalar>(
    problem: &InclusionProblem<T>,
    sched: &ParamSchedule<T>,
    family: &MetricFamily<T>,
    states: &[AccState<T>],
    sol: Option<&ReferenceSolution<T>>,
    wall_ns: Option<&[u64]>,
) -> Result<Vec<TraceRow>> {
    let report = match sol {
        Some(sol) if states.len() >= 3 && states.iter().enumerate().all(|(i, s)| s.k == i) => {
            Some(rate_certificate(problem, sched, family, states, sol)?)
        }
        _ => None,
    };
    let z_star = match sol {
        Some(sol) => Some(-problem.l().adjoint_apply(&sol.y)?),
        None => None,
    };
    let mut rows = Vec::with_capacity(states.len());
    for (i, s) in states.iter().enumerate() {
        let (rp, rd) = problem.kkt_residual(&s.x, &s.y)?;
        let mut row = TraceRow {
            k: s.k,
            err_x: f64::NAN,
            err_z: f64::NAN,
            err_y: f64::NAN,
            lyapunov: f64::NAN,
            fejer_slack: f64::NAN,
            kkt_primal: rp.to_f64_lossy(),
            kkt_dual: rd.to_f64_lossy(),
            wall_ns: wall(wall_ns, i),
            rate: Some((f64::NAN, f64::NAN)),
        };
        if let (Some(sol), Some(z_star)) = (sol, &z_star) {
            row.err_x = s.x.dist(&sol.x).to_f64_lossy();
            row.err_z = s.z.dist(z_star).to_f64_lossy();
            row.err_y = s.y.dist(&sol.y).to_f64_lossy();
        }
        if let Some(r) = report.as_ref().and_then(|rep| rep.rows.iter().find(|r| r.n == s.k).map(|r| (rep.rhs, r))) {
            let (rhs, r) = r;
            row.lyapunov = r.lhs.to_f64_lossy();
            row.fejer_slack = r.relative_slack.to_f64_lossy();
            row.rate = Some((r.lhs.to_f64_lossy(), rhs.to_f64_lossy()));
        }
        rows.push(row);
    }
    Ok(rows)
}

fn csv_error(e: impl std::fmt::Display) -> Error {
    Error::invalid(format!("csv output failed: {e}"))
}

pub fn write_trace_csv<W: Write>(out: W, rows: &[TraceRow], accelerated: bool) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<&str> = TRACE_HEADER.to_vec();
    if accelerated {
        header.extend(RATE_HEADER);
    }
    w.write_record(&header).map_err(csv_error)?;
    for r in rows {
        let mut rec = vec![
            r.k.to_string(),
            fmt_float(r.err_x),
            fmt_float(r.err_z),
            fmt_float(r.err_y),
            fmt_float(r.lyapunov),
            fmt_float(r.fejer_slack),
            fmt_float(r.kkt_primal),
            fmt_float(r.kkt_dual),
            r.wall_ns.to_string(),
        ];
        if accelerated {
            let (lhs, rhs) = r.rate.unwrap_or((f64::NAN, f64::NAN));
            rec.push(fmt_float(lhs));
            rec.push(fmt_float(rhs));
        }
        w.write_record(&rec).map_err(csv_error)?;
    }
    w.flush().map_err(csv_error)
}

/// Rows `k = 1..=n` of the step-size schedule, with `n_tau_n = k τ_k`.
pub fn write_schedule_csv<T: Scalar, W: Write>(out: W, sched: &mut ParamSchedule<T>, n: usize) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SCHEDULE_HEADER).map_err(csv_error)?;
    sched.ensure(n + 1);
    for k in 1..=n {
        let tau = sched.tau(k).to_f64_lossy();
        w.write_record([
            k.to_string(),
            fmt_float(tau),
            fmt_float(sched.sigma(k).to_f64_lossy()),
            fmt_float(sched.theta(k).to_f64_lossy()),
            fmt_float(k as f64 * tau),
        ])
        .map_err(csv_error)?;
    }
    w.flush().map_err(csv_error)
}

/// Per-iteration deviations between two trajectories.
pub fn write_deviation_csv<W: Write>(out: W, deviations: &[f64]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["k", "deviation"]).map_err(csv_error)?;
    for (k, d) in deviations.iter().enumerate() {
        w.write_record([k.to_string(), fmt_float(*d)]).map_err(csv_error)?;
    }
    w.flush().map_err(csv_error)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatteryEntry {
    pub reduction: ReductionKind,
    pub problem: String,
    pub start: usize,
    pub max_deviation: f64,
    pub passed: bool,
}

pub fn write_battery_csv<W: Write>(out: W, entries: &[BatteryEntry]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["reduction", "problem", "start", "max_deviation", "passed"]).map_err(csv_error)?;
    for e in entries {
        w.write_record([
            e.reduction.name().to_string(),
            e.problem.clone(),
            e.start.to_string(),
            fmt_float(e.max_deviation),
            e.passed.to_string(),
        ])
        .map_err(csv_error)?;
    }
    w.flush().map_err(csv_error)
}
