use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use serde::Serialize;
use splitmono::accelerated::{check_metric_family, rate_certificate, FamilyReport};
use splitmono::io::{
    accelerated_rows, unified_rows, write_deviation_csv, write_schedule_csv, write_trace_csv, TraceRow,
};
use splitmono::reductions::equivalence_check;
use splitmono::unified::{
    check_hypotheses_thm_c0, check_hypotheses_thm_cocoercive, fejer_certificate, FejerMode, HypothesisReport, Verdict,
};
use splitmono::*;

use crate::config::{Loaded, Plan, Resolved};
use crate::Failure;

const FEJER_TOL: f64 = 1e-9;
const RATE_TOL: f64 = 1e-8;

fn sink(path: Option<&Path>) -> Result<Box<dyn Write>, Failure> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).map_err(|e| Failure::malformed(format!("cannot write {}: {e}", p.display())))?,
        )),
        None => Box::new(io::stdout().lock()),
    })
}

fn write_json<S: Serialize>(path: Option<&Path>, value: &S) -> Result<(), Failure> {
    let mut out = sink(path)?;
    serde_json::to_writer_pretty(&mut out, value).map_err(|e| Failure::malformed(e.to_string()))?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}

/// States of one run, how it ended and per-iteration wall time.
struct Outcome {
    states: Vec<AdmmState<f64>>,
    converged: bool,
    iterations: usize,
    error: Option<Error>,
    wall_ns: Option<Vec<u64>>,
}

fn execute(r: &Resolved, start: AdmmState<f64>, timing: bool) -> Result<Outcome, Failure> {
    let t0 = Instant::now();
    let mut wall = vec![0u64];
    let mut monitor = |_: &AdmmState<f64>, _: &AdmmState<f64>| {
        if timing {
            wall.push(t0.elapsed().as_nanos() as u64);
        }
    };
    let result = match &r.plan {
        Plan::Unified(config) => {
            UnifiedAdmm::new(&r.inclusion, config.clone().with_stop(r.stop))?.run_with(start, &mut monitor)
        }
        Plan::Accelerated { acc, schedule, family } => {
            AccEngine::new(acc, schedule.clone(), AccConfig::new(family.clone()).with_stop(r.stop))?
                .run_with(start, &mut monitor)
        }
        Plan::Direct { direct, .. } => {
            let states = direct.trajectory(&r.inclusion, &start, r.stop.max_iters)?;
            let last = states.last().expect("trajectory holds the start");
            let (rp, rd) = r.inclusion.kkt_residual(&last.x, &last.y)?;
            let converged = r.stop.kkt_tol.is_none_or(|tol| rp <= tol && rd <= tol);
            let error =
                (!converged).then_some(Error::NoConvergence { iterations: r.stop.max_iters, residual: rp.max(rd) });
            let n = states.len();
            return Ok(Outcome {
                states,
                converged,
                iterations: r.stop.max_iters,
                error,
                wall_ns: timing.then(|| vec![0; n]),
            });
        }
    };
    let (trace, error) = match result {
        Ok(trace) => (trace, None),
        Err(e) => match e.error {
            Error::NoConvergence { .. } => (e.trace, Some(e.error)),
            other => return Err(other.into()),
        },
    };
    wall.truncate(trace.states.len());
    Ok(Outcome {
        converged: trace.converged,
        iterations: trace.iterations,
        states: trace.states,
        error,
        wall_ns: timing.then_some(wall),
    })
}

fn trace_rows(r: &Resolved, outcome: &Outcome) -> Result<Vec<TraceRow>, Failure> {
    let sol = r.reference()?;
    let wall = outcome.wall_ns.as_deref();
    Ok(match r.plan.engine() {
        Plan::Unified(config) => {
            unified_rows(&r.inclusion, config, r.fejer_mode(), &outcome.states, sol.as_ref(), wall)?
        }
        Plan::Accelerated { schedule, family, .. } => {
            accelerated_rows(&r.inclusion, schedule, family, &outcome.states, sol.as_ref(), wall)?
        }
        Plan::Direct { .. } => unreachable!("engine() looks through the direct side"),
    })
}

/// Runs one config; the returned line summarizes it for the batch log.
fn run_one(loaded: &Loaded, trace: Option<PathBuf>, to_stdout: bool, timing: bool) -> Result<String, Failure> {
    let r = Resolved::new(loaded)?;
    let outcome = execute(&r, r.start(loaded.config.start), timing)?;
    let rows = trace_rows(&r, &outcome)?;
    let path = trace.or_else(|| loaded.output(&loaded.config.output.trace));
    if path.is_some() || to_stdout {
        let mut out = sink(path.as_deref())?;
        write_trace_csv(&mut out, &rows, r.plan.is_accelerated())?;
        out.flush()?;
    }
    let last = rows.last().expect("at least the start row");
    let summary = format!(
        "{}: engine {}, {} iterations, converged {}, kkt ({:e}, {:e})",
        loaded.path.display(),
        loaded.config.engine,
        outcome.iterations,
        outcome.converged,
        last.kkt_primal,
        last.kkt_dual
    );
    match outcome.error {
        Some(e) => Err(Failure { code: Failure::NO_CONVERGENCE, message: format!("{summary}: {e}") }),
        None => Ok(summary),
    }
}

pub fn run(configs: &[PathBuf], trace: Option<PathBuf>, jobs: usize, timing: bool) -> Result<(), Failure> {
    if configs.len() == 1 {
        let loaded = Loaded::read(&configs[0])?;
        let summary = run_one(&loaded, trace, true, timing)?;
        eprintln!("{summary}");
        return Ok(());
    }
    if trace.is_some() {
        return Err(Failure::malformed(
            "--trace applies to a single config; use output.trace in each config of a batch",
        ));
    }
    let results: Vec<Mutex<Option<Result<String, Failure>>>> = configs.iter().map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    std::thread::scope(|scope| {
        for _ in 0..jobs.clamp(1, configs.len()) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(path) = configs.get(i) else { break };
                let result = Loaded::read(path).and_then(|loaded| run_one(&loaded, None, false, timing));
                *results[i].lock().expect("no poisoned slot") = Some(result);
            });
        }
    });
    let mut worst: Option<Failure> = None;
    for (path, slot) in configs.iter().zip(results) {
        match slot.into_inner().expect("no poisoned slot").expect("every config ran") {
            Ok(summary) => eprintln!("{summary}"),
            Err(f) => {
                eprintln!("error: {}: {f}", path.display());
                if worst.as_ref().is_none_or(|w| f.code > w.code) {
                    worst = Some(f);
                }
            }
        }
    }
    match worst {
        None => Ok(()),
        Some(f) => Err(Failure { code: f.code, message: format!("{} of the batch failed", configs.len()) }),
    }
}

#[derive(Serialize)]
struct VerdictOut {
    name: String,
    holds: bool,
    witness: f64,
    at_k: usize,
}

impl From<&Verdict> for VerdictOut {
    fn from(v: &Verdict) -> Self {
        VerdictOut { name: v.name.clone(), holds: v.holds, witness: v.witness, at_k: v.at_k }
    }
}

#[derive(Serialize)]
struct HypothesesOut {
    theorem: &'static str,
    horizon: usize,
    satisfied: bool,
    standing: Vec<VerdictOut>,
    assumptions: Vec<VerdictOut>,
}

impl From<&HypothesisReport> for HypothesesOut {
    fn from(r: &HypothesisReport) -> Self {
        HypothesesOut {
            theorem: r.theorem,
            horizon: r.horizon,
            satisfied: r.satisfied(),
            standing: r.standing.iter().map(VerdictOut::from).collect(),
            assumptions: r.assumptions.iter().map(VerdictOut::from).collect(),
        }
    }
}

#[derive(Serialize)]
struct FamilyOut {
    family: &'static str,
    horizon: usize,
    holds: bool,
    mon1: VerdictOut,
    mon2: VerdictOut,
    preset: Option<VerdictOut>,
}

impl From<&FamilyReport> for FamilyOut {
    fn from(r: &FamilyReport) -> Self {
        FamilyOut {
            family: r.family,
            horizon: r.horizon,
            holds: r.holds(),
            mon1: (&r.mon1).into(),
            mon2: (&r.mon2).into(),
            preset: r.preset.as_ref().map(VerdictOut::from),
        }
    }
}

#[derive(Serialize)]
struct ScheduleOut {
    gamma: f64,
    mu: f64,
    lambda: f64,
    tau1: f64,
    sigma0: f64,
    step_curvature: bool,
    relaxation: bool,
    step_product: bool,
    strong: bool,
    n: usize,
    n_tau_n: f64,
    limit: f64,
}

fn schedule_out(schedule: &ParamSchedule<f64>, n: usize) -> ScheduleOut {
    let mut s = schedule.clone();
    let n = n.max(1);
    s.ensure(n);
    let flags = s.flags();
    ScheduleOut {
        gamma: s.gamma(),
        mu: s.mu(),
        lambda: s.lambda(),
        tau1: s.tau1(),
        sigma0: s.sigma0(),
        step_curvature: flags.step_curvature,
        relaxation: flags.relaxation,
        step_product: flags.step_product,
        strong: flags.strong,
        n,
        n_tau_n: n as f64 * s.tau(n),
        limit: s.lambda() / s.gamma(),
    }
}

#[derive(Serialize)]
struct SlackOut {
    mode: String,
    tol: f64,
    holds: bool,
    min_relative_slack: f64,
    at_k: usize,
    checked: usize,
}

#[derive(Serialize)]
struct RateOut {
    tol: f64,
    holds: bool,
    rhs: f64,
    min_relative_slack: f64,
    rows: usize,
}

#[derive(Serialize)]
struct SolutionOut {
    provenance: &'static str,
    kkt_primal: f64,
    kkt_dual: f64,
}

#[derive(Serialize)]
struct CertifyReport {
    config: String,
    engine: String,
    seed: u64,
    iterations: usize,
    converged: bool,
    kkt_primal: f64,
    kkt_dual: f64,
    solution: SolutionOut,
    #[serde(skip_serializing_if = "Option::is_none")]
    hypotheses: Option<HypothesesOut>,
    #[serde(skip_serializing_if = "Option::is_none")]
    fejer: Option<SlackOut>,
    #[serde(skip_serializing_if = "Option::is_none")]
    schedule: Option<ScheduleOut>,
    #[serde(skip_serializing_if = "Option::is_none")]
    family: Option<FamilyOut>,
    #[serde(skip_serializing_if = "Option::is_none")]
    rate: Option<RateOut>,
}

fn hypotheses(r: &Resolved, config: &AdmmConfig<f64>, horizon: usize) -> Result<HypothesisReport, Failure> {
    Ok(if r.inclusion.c().is_zero() {
        check_hypotheses_thm_c0(&r.inclusion, config, horizon)?
    } else {
        check_hypotheses_thm_cocoercive(&r.inclusion, config, horizon)?
    })
}

fn mode_name(mode: FejerMode) -> &'static str {
    match mode {
        FejerMode::Cocoercive => "cocoercive",
        FejerMode::ZeroForward => "zero_forward",
        FejerMode::ZeroForwardIII => "zero_forward_iii",
    }
}

pub fn certify(path: &Path, solution: Option<&Path>, report: Option<PathBuf>) -> Result<(), Failure> {
    let loaded = Loaded::read(path)?;
    let mut r = Resolved::new(&loaded)?;
    let cert = r.solution(solution)?;
    let sol = cert.reference(&r.inclusion)?;
    // certificates concern the engine configuration, also for the direct side of a reduction
    if let Plan::Direct { engine, .. } = r.plan {
        r.plan = *engine;
    }
    let outcome = execute(&r, r.start(loaded.config.start), false)?;
    let states = &outcome.states;
    let last = states.last().expect("non-empty");
    let (rp, rd) = r.inclusion.kkt_residual(&last.x, &last.y)?;
    let mut out = CertifyReport {
        config: loaded.path.display().to_string(),
        engine: loaded.config.engine.to_string(),
        seed: loaded.config.seed,
        iterations: outcome.iterations,
        converged: outcome.converged,
        kkt_primal: rp,
        kkt_dual: rd,
        solution: SolutionOut {
            provenance: cert.provenance.name(),
            kkt_primal: cert.kkt_primal,
            kkt_dual: cert.kkt_dual,
        },
        hypotheses: None,
        fejer: None,
        schedule: None,
        family: None,
        rate: None,
    };
    let horizon = loaded.config.max_iters;
    match &r.plan {
        Plan::Unified(config) => {
            out.hypotheses = Some((&hypotheses(&r, config, horizon)?).into());
            let mode = r.fejer_mode();
            let first = if mode == FejerMode::ZeroForwardIII { 1 } else { 0 };
            let mut slack = SlackOut {
                mode: mode_name(mode).into(),
                tol: FEJER_TOL,
                holds: true,
                min_relative_slack: f64::INFINITY,
                at_k: 0,
                checked: 0,
            };
            for k in first..states.len().saturating_sub(1) {
                let prev = if k > 0 { Some(&states[k - 1]) } else { None };
                let c = fejer_certificate(&r.inclusion, config, mode, prev, &states[k], &states[k + 1], &sol)?;
                let rel = c.slack / (1.0 + c.rhs.abs());
                if rel < slack.min_relative_slack {
                    slack.min_relative_slack = rel;
                    slack.at_k = k;
                }
                slack.holds &= c.holds(FEJER_TOL);
                slack.checked += 1;
            }
            out.fejer = Some(slack);
        }
        Plan::Accelerated { schedule, family, .. } => {
            out.schedule = Some(schedule_out(schedule, outcome.iterations));
            let mut probe = schedule.clone();
            out.family = Some((&check_metric_family(family, &mut probe, r.inclusion.l(), horizon)?).into());
            if states.len() >= 3 {
                let rate = rate_certificate(&r.inclusion, schedule, family, states, &sol)?;
                out.rate = Some(RateOut {
                    tol: RATE_TOL,
                    holds: rate.holds(RATE_TOL),
                    rhs: rate.rhs,
                    min_relative_slack: rate.min_slack(),
                    rows: rate.rows.len(),
                });
            }
        }
        Plan::Direct { .. } => unreachable!("replaced by its engine above"),
    }
    let path = report.or_else(|| loaded.output(&loaded.config.output.report));
    write_json(path.as_deref(), &out)
}

#[derive(Serialize)]
struct CompareReport {
    a: String,
    b: String,
    iterations: usize,
    tol: f64,
    max_deviation: f64,
    at_k: usize,
    passed: bool,
}

pub fn compare(a: &Path, b: &Path, tol: f64, iters: Option<usize>, deviations: Option<PathBuf>) -> Result<(), Failure> {
    let (la, lb) = (Loaded::read(a)?, Loaded::read(b)?);
    let (ra, rb) = (Resolved::new(&la)?, Resolved::new(&lb)?);
    if ra.problem_data() != rb.problem_data() {
        return Err(Failure::malformed("the two configs describe different problems"));
    }
    if ra.plan.is_accelerated() != rb.plan.is_accelerated() {
        return Err(Failure::malformed("an accelerated scheme cannot be compared with a unified one"));
    }
    let n = iters.unwrap_or(la.config.max_iters.min(lb.config.max_iters));
    let start = ra.start(la.config.start);
    let eq = equivalence_check(&ra.plan.scheme(), &rb.plan.scheme(), &ra.inclusion, &start, n, tol)?;
    if let Some(p) = deviations.or_else(|| la.output(&la.config.output.deviations)) {
        let mut out = sink(Some(&p))?;
        write_deviation_csv(&mut out, &eq.deviations)?;
        out.flush()?;
    }
    let report = CompareReport {
        a: a.display().to_string(),
        b: b.display().to_string(),
        iterations: n,
        tol,
        max_deviation: eq.max_deviation,
        at_k: eq.at_k,
        passed: eq.passed(),
    };
    write_json(None, &report)?;
    if report.passed {
        Ok(())
    } else {
        Err(Failure {
            code: Failure::DEVIATION,
            message: format!("max deviation {:e} at k = {} exceeds {tol:e}", eq.max_deviation, eq.at_k),
        })
    }
}

#[allow(clippy::too_many_arguments)]
pub fn schedule(
    gamma: f64,
    mu: f64,
    lambda: f64,
    tau1: f64,
    sigma0: f64,
    l_norm: f64,
    n: usize,
    out: Option<PathBuf>,
) -> Result<(), Failure> {
    let mut sched = ParamSchedule::init(gamma, mu, lambda, tau1, sigma0, l_norm)?;
    let mut w = sink(out.as_deref())?;
    write_schedule_csv(&mut w, &mut sched, n)?;
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct CheckReport {
    config: String,
    engine: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    hypotheses: Option<HypothesesOut>,
    #[serde(skip_serializing_if = "Option::is_none")]
    schedule: Option<ScheduleOut>,
    #[serde(skip_serializing_if = "Option::is_none")]
    family: Option<FamilyOut>,
}

pub fn check(path: &Path, horizon: Option<usize>) -> Result<(), Failure> {
    let loaded = Loaded::read(path)?;
    let r = Resolved::new(&loaded)?;
    let horizon = horizon.unwrap_or(loaded.config.max_iters);
    let mut report = CheckReport {
        config: path.display().to_string(),
        engine: loaded.config.engine.to_string(),
        hypotheses: None,
        schedule: None,
        family: None,
    };
    match r.plan.engine() {
        Plan::Unified(config) => report.hypotheses = Some((&hypotheses(&r, config, horizon)?).into()),
        Plan::Accelerated { schedule, family, .. } => {
            report.schedule = Some(schedule_out(schedule, horizon));
            let mut probe = schedule.clone();
            report.family = Some((&check_metric_family(family, &mut probe, r.inclusion.l(), horizon)?).into());
        }
        Plan::Direct { .. } => unreachable!("engine() looks through the direct side"),
    }
    write_json(None, &report)
}
