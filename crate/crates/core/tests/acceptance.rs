//! Acceptance runner: one PASS/FAIL line per criterion, non-zero exit on any failure.

#![allow(clippy::type_complexity)]

use std::fmt::Display;
use std::panic::{self, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use splitmono::accelerated::{check_metric_family, rate_certificate, tau_at, zero_state};
use splitmono::hilbert::gram;
use splitmono::operators::{inverse_resolvent, resolvent, ProxKind};
use splitmono::problems::*;
use splitmono::reductions::*;
use splitmono::unified::{
    check_hypotheses_thm_c0, check_hypotheses_thm_cocoercive, fejer_certificate, FejerMode, ReferenceSolution,
};
use splitmono::*;

type Outcome = std::result::Result<String, String>;

fn ok<T, E: Display>(r: std::result::Result<T, E>) -> std::result::Result<T, String> {
    r.map_err(|e| e.to_string())
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> std::result::Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, limit: f64) -> std::result::Result<(), String> {
    ensure(elapsed.as_secs_f64() < limit, || format!("runtime {:.2}s exceeds {limit}s", elapsed.as_secs_f64()))
}

fn v(x: &[f64]) -> Vector<f64> {
    Vector::from_f64(x)
}

fn wave(len: usize, a: f64) -> Vector<f64> {
    Vector::from_f64(&(0..len).map(|i| (a * (i as f64 + 1.0)).sin()).collect::<Vec<_>>())
}

fn random_vector(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> Vector<f64> {
    Vector::new((0..n).map(|_| rng.random_range(-scale..scale)).collect())
}

// ---------------------------------------------------------------- criterion 1

const DIM: usize = 4;

fn random_matrix(rng: &mut ChaCha8Rng) -> Matrix<f64> {
    Matrix::from_row_major(DIM, DIM, (0..DIM * DIM).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap()
}

fn spd(rng: &mut ChaCha8Rng, shift: f64) -> Matrix<f64> {
    let w = random_matrix(rng);
    w.matmul(&w.transpose()).unwrap().shift_diagonal(shift)
}

fn function_catalog(rng: &mut ChaCha8Rng) -> Vec<(&'static str, ProxFunction<f64>)> {
    let q = spd(rng, 0.3);
    let lin = random_vector(rng, DIM, 1.0);
    let shift = random_vector(rng, DIM, 2.0);
    vec![
        ("zero", ProxFunction::zero(DIM)),
        ("l1", ProxFunction::l1(DIM, 0.7).unwrap()),
        ("squared_l2", ProxFunction::squared_l2(DIM, 1.3).unwrap()),
        ("box", ProxFunction::box_indicator(DIM, -1.0, 2.0).unwrap()),
        ("quadratic", ProxFunction::quadratic(q.clone(), lin.clone()).unwrap()),
        ("elastic_net", ProxFunction::elastic_net(DIM, 0.4, 0.8).unwrap()),
        ("conjugate(l1)", ProxFunction::l1(DIM, 0.5).unwrap().conjugate()),
        ("conjugate(quadratic)", ProxFunction::quadratic(q, lin).unwrap().conjugate()),
        (
            "translated(elastic_net)",
            ProxFunction::elastic_net(DIM, 0.3, 2.0).unwrap().translated(shift.clone()).unwrap(),
        ),
        ("scaled(l1)", ProxFunction::l1(DIM, 0.6).unwrap().scaled(2.5).unwrap()),
        (
            "scaled(translated(box))",
            ProxFunction::box_indicator(DIM, 0.0, 1.0).unwrap().translated(shift).unwrap().scaled(0.3).unwrap(),
        ),
        ("conjugate(scaled(squared_l2))", ProxFunction::squared_l2(DIM, 2.0).unwrap().scaled(0.5).unwrap().conjugate()),
    ]
}

fn soft(v: f64, t: f64) -> f64 {
    v.signum() * (v.abs() - t).max(0.0)
}

/// `prox_{s f*}(u)` from the closed form of each conjugate, independent of the
/// library's Moreau-based evaluation.
fn conj_prox_oracle(f: &ProxFunction<f64>, s: f64, u: &Vector<f64>) -> Vector<f64> {
    match f.kind() {
        ProxKind::Zero => Vector::zeros(u.dim()),
        ProxKind::L1 { weight } => u.map(|x| x.clamp(-weight, *weight)),
        ProxKind::SquaredL2 { weight } => u.scale(weight / (weight + s)),
        // support function of the box: slope hi on the right, lo on the left
        ProxKind::Box { lo, hi } => u.map(|x| {
            if x > s * hi {
                x - s * hi
            } else if x < s * lo {
                x - s * lo
            } else {
                0.0
            }
        }),
        // f* = 1/2 (u - q)'Q^{-1}(u - q): solve (Q + sI) p = Qu + sq
        ProxKind::Quadratic { hessian, linear } => {
            let rhs = &hessian.mul_vec(u).unwrap() + &linear.scale(s);
            splitmono::linalg::solve(&hessian.shift_diagonal(s), &rhs).unwrap()
        }
        ProxKind::ElasticNet { l1, l2 } => {
            u.map(|x| if x.abs() <= *l1 { x } else { x.signum() * (l1 + (x.abs() - l1) * l2 / (l2 + s)) })
        }
        ProxKind::Conjugate(inner) => plain_prox_oracle(inner, s, u),
        ProxKind::Translated { inner, shift } => conj_prox_oracle(inner, s, &u.add_scaled(-s, shift)),
        ProxKind::Scaled { inner, factor } => {
            conj_prox_oracle(inner, s / factor, &u.scale(1.0 / factor)).scale(*factor)
        }
    }
}

fn plain_prox_oracle(f: &ProxFunction<f64>, s: f64, u: &Vector<f64>) -> Vector<f64> {
    match f.kind() {
        ProxKind::Zero => u.clone(),
        ProxKind::L1 { weight } => u.map(|x| soft(x, s * weight)),
        ProxKind::SquaredL2 { weight } => u.scale(1.0 / (1.0 + s * weight)),
        ProxKind::Box { lo, hi } => u.map(|x| x.clamp(*lo, *hi)),
        ProxKind::Quadratic { hessian, linear } => {
            splitmono::linalg::solve(&hessian.scale(s).shift_diagonal(1.0), &u.add_scaled(-s, linear)).unwrap()
        }
        ProxKind::ElasticNet { l1, l2 } => u.map(|x| soft(x, s * l1) / (1.0 + s * l2)),
        ProxKind::Conjugate(inner) => conj_prox_oracle(inner, s, u),
        ProxKind::Translated { inner, shift } => &plain_prox_oracle(inner, s, &(u - shift)) + shift,
        ProxKind::Scaled { inner, factor } => plain_prox_oracle(inner, s * factor, u),
    }
}

/// Operators with an independently computed inverse resolvent `J_{s A^{-1}}`.
struct Case {
    name: String,
    op: Operator<f64>,
    inverse_resolvent: Box<dyn Fn(f64, &Vector<f64>) -> Vector<f64>>,
}

fn operator_catalog(rng: &mut ChaCha8Rng) -> Vec<Case> {
    let mut cases = Vec::new();
    for (name, f) in function_catalog(rng) {
        let g = f.clone();
        cases.push(Case {
            name: format!("∂{name}"),
            op: Operator::subdifferential(f),
            inverse_resolvent: Box::new(move |s, u| conj_prox_oracle(&g, s, u)),
        });
    }
    cases.push(Case {
        name: "zero".into(),
        op: Operator::zero(DIM),
        inverse_resolvent: Box::new(|_, u| Vector::zeros(u.dim())),
    });
    let skew = {
        let k = random_matrix(rng);
        k.sub(&k.transpose()).unwrap()
    };
    let affine = [("affine(spd)", spd(rng, 0.2)), ("affine(spd + skew)", spd(rng, 0.1).add(&skew).unwrap())];
    for (name, m) in affine {
        let t = random_vector(rng, DIM, 1.0);
        // A^{-1} u = M^{-1}(u - t)
        let inv = splitmono::linalg::Lu::factor(&m).unwrap().inverse().unwrap();
        let explicit = Operator::affine(inv.clone(), inv.mul_vec(&t).unwrap().scale(-1.0)).unwrap();
        cases.push(Case {
            name: name.into(),
            op: Operator::affine(m.clone(), t.clone()).unwrap(),
            inverse_resolvent: Box::new(move |s, u| explicit.resolvent(s, u).unwrap()),
        });
        let direct = Operator::affine(m, t).unwrap();
        let again = direct.clone();
        cases.push(Case {
            name: format!("inverse({name})"),
            op: direct.inverse(),
            inverse_resolvent: Box::new(move |s, u| again.resolvent(s, u).unwrap()),
        });
    }
    let l1 = ProxFunction::l1(DIM, 0.8).unwrap();
    cases.push(Case {
        name: "inverse(∂l1)".into(),
        op: Operator::subdifferential(l1.clone()).inverse(),
        inverse_resolvent: Box::new(move |s, u| plain_prox_oracle(&l1, s, u)),
    });
    cases
}

fn criterion_identities() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let functions = function_catalog(&mut rng);
    let cases = operator_catalog(&mut rng);
    let tol = 1e-10;
    let (mut moreau_max, mut inverse_max, mut checks) = (0.0f64, 0.0f64, 0usize);
    for gamma in [0.1, 1.0, 10.0] {
        for _ in 0..100 {
            let x = random_vector(&mut rng, DIM, 5.0);
            // prox_{γf}(x) + γ prox_{f*/γ}(x/γ) = x
            for (name, f) in &functions {
                let p = ok(f.prox(gamma, &x))?;
                let q = conj_prox_oracle(f, 1.0 / gamma, &x.scale(1.0 / gamma));
                let err = (&p + &q.scale(gamma)).dist(&x);
                ensure(err <= tol, || format!("Moreau: {name}, γ = {gamma}: {err:e}"))?;
                let lib = ok(f.clone().conjugate().prox(1.0 / gamma, &x.scale(1.0 / gamma)))?;
                let err = lib.dist(&q);
                ensure(err <= tol, || format!("conjugate prox: {name}, γ = {gamma}: {err:e}"))?;
                moreau_max = moreau_max.max(err);
                checks += 2;
            }
            // J_{γA}(x) + γ J_{γ^{-1}A^{-1}}(x/γ) = x
            for case in &cases {
                let p = ok(resolvent(&case.op, gamma, &x))?;
                let w = (case.inverse_resolvent)(1.0 / gamma, &x.scale(1.0 / gamma));
                let err = (&p + &w.scale(gamma)).dist(&x);
                ensure(err <= tol, || format!("resolvent identity: {}, γ = {gamma}: {err:e}", case.name))?;
                let lib = ok(inverse_resolvent(&case.op, 1.0 / gamma, &x.scale(1.0 / gamma)))?;
                ensure(lib.dist(&w) <= tol, || format!("inverse resolvent: {}, γ = {gamma}", case.name))?;
                // (x - p)/γ ∈ A p
                let u = (&x - &p).scale(1.0 / gamma);
                ensure(ok(case.op.contains(&p, &u, tol))?, || format!("membership: {}, γ = {gamma}", case.name))?;
                inverse_max = inverse_max.max(err);
                checks += 3;
            }
        }
    }
    within(start.elapsed(), 5.0)?;
    Ok(format!(
        "{} functions, {} operators, {checks} checks; max Moreau error {moreau_max:.1e}, max resolvent error {inverse_max:.1e}",
        functions.len(),
        cases.len()
    ))
}

// ---------------------------------------------------------------- criterion 2

fn quadratic(dim_h: usize, dim_g: usize, seed: u64, with_h: bool) -> CompositeProblem<f64> {
    gen_quadratic_with(dim_h, dim_g, seed, 0.5, QuadraticOptions { with_h }).unwrap().0
}

fn nonsmooth(with_h: bool) -> CompositeProblem<f64> {
    let l = DenseLinearMap::from_rows(&[
        vec![1.0, -1.0, 0.0],
        vec![0.0, 1.0, -1.0],
        vec![0.5, 0.0, 0.5],
        vec![1.0, 1.0, 1.0],
    ])
    .unwrap();
    let f = ProxFunction::elastic_net(3, 0.3, 1.0).unwrap().translated(v(&[1.0, -2.0, 0.5])).unwrap();
    let g = ProxFunction::l1(4, 0.2).unwrap();
    let h = if with_h {
        let d = Matrix::from_rows(&[vec![1.0, 0.2, 0.0], vec![0.0, 0.7, 0.1], vec![0.3, 0.0, 0.5]]).unwrap();
        Smooth::least_squares(&d, &v(&[0.5, -0.2, 1.0])).unwrap()
    } else {
        Smooth::Zero { dim: 3 }
    };
    CompositeProblem::new(f, g, h, l).unwrap()
}

fn battery(with_h: bool) -> Vec<(&'static str, CompositeProblem<f64>)> {
    vec![
        ("quadratic-5x8", quadratic(5, 8, 11, with_h)),
        ("quadratic-6x9", quadratic(6, 9, 12, with_h)),
        ("nonsmooth-3x4", nonsmooth(with_h)),
    ]
}

fn starts(p: &InclusionProblem<f64>, accelerated: bool) -> Vec<AdmmState<f64>> {
    let (n, m) = (p.dim_h(), p.dim_g());
    let zdim = if accelerated { n } else { m };
    vec![
        AdmmState::new(Vector::zeros(n), Vector::zeros(zdim), Vector::zeros(m)),
        AdmmState::new(wave(n, 1.3), wave(zdim, 0.7), wave(m, 2.1)),
    ]
}

fn criterion_reductions() -> Outcome {
    let start = Instant::now();
    let tol = 1e-9;
    let mut worst = 0.0f64;
    let mut runs = 0;
    for kind in [
        ReductionKind::VuCondat,
        ReductionKind::Bch,
        ReductionKind::ChambollePock,
        ReductionKind::ClassicalAdmm,
        ReductionKind::AccChambollePock,
    ] {
        let with_h = matches!(kind, ReductionKind::VuCondat | ReductionKind::AccChambollePock);
        let n = if kind.is_accelerated() { 200 } else { 120 };
        for (name, cp) in battery(with_h) {
            let p = ok(cp.to_inclusion())?;
            let ln2 = p.l().norm().powi(2);
            let red = ok(match kind {
                ReductionKind::VuCondat => {
                    let c = 0.8;
                    build_vu_condat(&p, 1.0 / (c * ln2 + p.c().half_inverse_cocoercivity() + 0.3), c)
                }
                ReductionKind::Bch => build_bch(&p, 0.9 / (1.2 * ln2), 1.2),
                ReductionKind::ChambollePock => build_chambolle_pock(&p, 0.5 / (0.6 * ln2), 0.6),
                ReductionKind::ClassicalAdmm => build_classical_admm(&p, 1.5),
                _ => {
                    let tau1 = (cp.gamma() / cp.mu()).min(0.5);
                    let sched = ok(ParamSchedule::init(
                        cp.gamma(),
                        cp.mu(),
                        cp.mu() + 1.5,
                        tau1,
                        1.0 / (tau1 * ln2),
                        ln2.sqrt(),
                    ))?;
                    build_acc_chambolle_pock(&p, sched)
                }
            })?;
            for s in starts(&p, kind.is_accelerated()) {
                let eq = ok(red.check(&p, &s, n, tol))?;
                ensure(eq.deviations.len() == n + 1 && eq.passed(), || {
                    format!("{kind} on {name}: deviation {:e} at k = {}", eq.max_deviation, eq.at_k)
                })?;
                worst = worst.max(eq.max_deviation);
                runs += 1;
            }
        }
    }
    within(start.elapsed(), 30.0)?;
    Ok(format!("5 reductions × 3 problems × 2 starts ({runs} runs); max deviation {worst:.1e}"))
}

// ---------------------------------------------------------------- criterion 3

fn certified(
    cp: &CompositeProblem<f64>,
) -> std::result::Result<(InclusionProblem<f64>, ReferenceSolution<f64>), String> {
    let p = ok(cp.to_inclusion())?;
    let cert = ok(certify(cp))?;
    let sol = ok(cert.reference(&p))?;
    Ok((p, sol))
}

fn criterion_fejer() -> Outcome {
    const K: usize = 10_000;
    let tol = 1e-9;
    let smooth = quadratic(5, 8, 21, true);
    let plain = quadratic(5, 8, 22, false);
    let instances: Vec<(
        &str,
        &CompositeProblem<f64>,
        Box<dyn Fn(&InclusionProblem<f64>) -> AdmmConfig<f64>>,
        FejerMode,
        &str,
    )> = vec![
        (
            "cocoercive (I): Vu-Condat metric",
            &smooth,
            Box::new(|p| {
                let c = 0.8;
                let inv_tau = c * p.l().norm().powi(2) + p.c().half_inverse_cocoercivity() + 0.3;
                AdmmConfig::new(
                    c,
                    MetricSchedule::constant(gram(p.l()).affine(-c, inv_tau)),
                    MetricSchedule::zeros(p.dim_g()),
                )
                .unwrap()
            }),
            FejerMode::Cocoercive,
            "I",
        ),
        (
            "cocoercive (II): M1 = Id/(2η), M2 = σ Id",
            &smooth,
            Box::new(|p| {
                let m1 = MetricOperator::scaled_identity(p.dim_h(), p.c().half_inverse_cocoercivity());
                AdmmConfig::new(1.0, MetricSchedule::constant(m1), MetricSchedule::scaled_identity(p.dim_g(), 0.5))
                    .unwrap()
            }),
            FejerMode::Cocoercive,
            "II",
        ),
        (
            "C = 0 (I): M1 = Id",
            &plain,
            Box::new(|p| {
                AdmmConfig::new(1.0, MetricSchedule::scaled_identity(p.dim_h(), 1.0), MetricSchedule::zeros(p.dim_g()))
                    .unwrap()
            }),
            FejerMode::ZeroForward,
            "I",
        ),
        (
            "C = 0 (II): M1 = 0, M2 = σ Id",
            &plain,
            Box::new(|p| {
                AdmmConfig::new(1.0, MetricSchedule::zeros(p.dim_h()), MetricSchedule::scaled_identity(p.dim_g(), 0.5))
                    .unwrap()
            }),
            FejerMode::ZeroForward,
            "II",
        ),
        (
            "C = 0 (III): M2^k = (1 + 2^-k) Id",
            &plain,
            Box::new(|p| {
                let m2 = MetricSchedule::scalar_sequence(p.dim_g(), |k| 1.0 + 0.5f64.powi(k.min(1100) as i32));
                AdmmConfig::new(1.0, MetricSchedule::zeros(p.dim_h()), m2).unwrap()
            }),
            FejerMode::ZeroForwardIII,
            "III",
        ),
    ];
    let mut summary = Vec::new();
    for (name, cp, make, mode, assumption) in instances {
        let (p, sol) = certified(cp)?;
        let config = make(&p);
        let report = ok(if mode == FejerMode::Cocoercive {
            check_hypotheses_thm_cocoercive(&p, &config, K)
        } else {
            check_hypotheses_thm_c0(&p, &config, K)
        })?;
        ensure(report.standing.iter().all(|v| v.holds), || format!("{name}: standing conditions fail: {report:?}"))?;
        ensure(report.verdict(assumption).is_some_and(|v| v.holds), || {
            format!("{name}: assumption ({assumption}) fails: {report:?}")
        })?;
        let mut engine = ok(UnifiedAdmm::new(&p, config.clone()))?;
        let start = AdmmState::new(wave(p.dim_h(), 1.3), wave(p.dim_g(), 0.7), wave(p.dim_g(), 2.1));
        let states = ok(engine.iterate(&start, K + 1))?;
        let mut min_rel = f64::INFINITY;
        let first = if mode == FejerMode::ZeroForwardIII { 1 } else { 0 };
        for k in first..=K {
            let prev = if k > 0 { Some(&states[k - 1]) } else { None };
            let cert = ok(fejer_certificate(&p, &config, mode, prev, &states[k], &states[k + 1], &sol))?;
            ensure(cert.holds(tol), || format!("{name}: slack {:e} at k = {k} (rhs {:e})", cert.slack, cert.rhs))?;
            min_rel = min_rel.min(cert.slack / (1.0 + cert.rhs.abs()));
        }
        summary.push(format!("{name} min {min_rel:.1e}"));
    }
    Ok(format!("k ≤ {K}; {}", summary.join("; ")))
}

// ---------------------------------------------------------------- criterion 4

fn criterion_convergence() -> Outcome {
    let start = Instant::now();
    let problems = vec![
        ("quadratic 8×5", gen_quadratic::<f64>(5, 8, 41, 0.5).map_err(|e| e.to_string())?),
        ("quadratic 50×30", gen_quadratic::<f64>(30, 50, 42, 0.5).map_err(|e| e.to_string())?),
        ("elastic-net n=50", gen_elastic_net_tv::<f64>(50, 43, 0.5).map_err(|e| e.to_string())?),
    ];
    let mut summary = Vec::new();
    for (name, (cp, cert)) in problems {
        let p = ok(cp.to_inclusion())?;
        let c = 1.0;
        let inv_tau = c * p.l().norm().powi(2) + p.c().half_inverse_cocoercivity() + 0.1;
        let stop = StopRule::iterations(50_000).with_stop_tol(0.0).with_kkt_tol(1e-6).without_history();
        let config = ok(AdmmConfig::new(
            c,
            MetricSchedule::constant(gram(p.l()).affine(-c, inv_tau)),
            MetricSchedule::zeros(p.dim_g()),
        ))?
        .with_stop(stop);
        let trace = UnifiedAdmm::new(&p, config)
            .map_err(|e| e.to_string())?
            .run(AdmmState::zeros(&p))
            .map_err(|e| format!("{name}: {e}"))?;
        let last = trace.last();
        let (rp, rd) = ok(p.kkt_residual(&last.x, &last.y))?;
        let dist = last.x.dist(&cert.x);
        ensure(rp.max(rd) <= 1e-6, || format!("{name}: KKT {:e}", rp.max(rd)))?;
        ensure(dist <= 1e-5, || format!("{name}: ‖x - x*‖ = {dist:e} after {} iterations", trace.iterations))?;
        summary.push(format!("{name}: {} iterations, ‖x - x*‖ {dist:.1e}", trace.iterations));
    }
    within(start.elapsed(), 60.0)?;
    Ok(summary.join("; "))
}

// ---------------------------------------------------------------- criterion 5

/// Rows of `scale · Q` with `Q` having orthonormal rows, so every singular value equals `scale`.
fn equal_singular_values(rows: usize, cols: usize, scale: f64, seed: u64) -> DenseLinearMap<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut basis: Vec<Vec<f64>> = Vec::new();
    while basis.len() < rows {
        let mut r: Vec<f64> = (0..cols).map(|_| rng.random_range(-1.0..1.0)).collect();
        for b in &basis {
            let d: f64 = r.iter().zip(b).map(|(x, y)| x * y).sum();
            r.iter_mut().zip(b).for_each(|(x, y)| *x -= d * y);
        }
        let n = r.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-3 {
            basis.push(r.iter().map(|x| x / n).collect());
        }
    }
    let scaled: Vec<Vec<f64>> = basis.iter().map(|r| r.iter().map(|x| x * scale).collect()).collect();
    DenseLinearMap::from_rows(&scaled).unwrap()
}

fn normalized(cp: &CompositeProblem<f64>) -> CompositeProblem<f64> {
    let l = DenseLinearMap::new(cp.l.matrix().scale(1.0 / cp.l.norm())).unwrap();
    CompositeProblem::new(cp.f.clone(), cp.g.clone(), cp.h.clone(), l).unwrap()
}

fn criterion_rate() -> Outcome {
    const N: usize = 10_000;
    let tol = 1e-8;
    let base = quadratic(6, 4, 51, true);
    let equal =
        CompositeProblem::new(base.f.clone(), base.g.clone(), base.h.clone(), equal_singular_values(4, 6, 1.5, 52))
            .unwrap();
    let (en, _) = ok(gen_elastic_net_tv::<f64>(12, 53, 1.0))?;
    let wide = quadratic(5, 8, 54, true);
    let cases: Vec<(MetricFamily<f64>, &str, CompositeProblem<f64>)> = vec![
        (MetricFamily::ChoicePD, "quadratic 8×5", wide.clone()),
        (MetricFamily::ChoicePD, "elastic-net n=12", en.clone()),
        (MetricFamily::InvSigmaId, "quadratic 8×5", wide.clone()),
        (MetricFamily::InvSigmaId, "elastic-net n=12", en),
        (MetricFamily::Zero, "quadratic 4×6, equal singular values", equal),
        (MetricFamily::TauId, "quadratic 8×5, ‖L‖ = 1", normalized(&wide)),
    ];
    let mut summary = Vec::new();
    for (family, name, cp) in cases {
        let acc = ok(cp.to_acc_problem())?;
        let (gamma, mu) = (acc.gamma(), acc.mu());
        let ln = cp.l.norm();
        let tau1 = 0.9 * (gamma / mu.max(1e-12)).min(1.0);
        let sigma0 = 1.0 / (tau1 * ln * ln);
        let sched = ok(ParamSchedule::init(gamma, mu, mu + 1.0, tau1, sigma0, ln))?;
        let mut probe = sched.clone();
        let report = ok(check_metric_family(&family, &mut probe, &cp.l, N))?;
        ensure(report.holds(), || format!("{} on {name}: sufficient condition fails: {report:?}", family.name()))?;
        let (p, sol) = certified(&cp)?;
        let mut engine = ok(AccEngine::new(&acc, sched.clone(), AccConfig::new(family.clone())))?;
        let start = AdmmState::new(wave(p.dim_h(), 1.3), wave(p.dim_h(), 0.7), wave(p.dim_g(), 2.1));
        let states = ok(engine.iterate(&start, N))?;
        let rate = ok(rate_certificate(&p, &sched, &family, &states, &sol))?;
        ensure(rate.rows.len() == N - 1, || "rows do not cover n ∈ [2, N]".into())?;
        ensure(rate.holds(tol), || format!("{} on {name}: min relative slack {:e}", family.name(), rate.min_slack()))?;
        summary.push(format!("{} on {name} min {:.1e}", family.name(), rate.min_slack()));
    }
    Ok(format!("n ∈ [2, {N}]; {}", summary.join("; ")))
}

// ---------------------------------------------------------------- criterion 6

fn criterion_tau_asymptote() -> Outcome {
    let start = Instant::now();
    let n = 1_000_000;
    let mut worst = 0.0f64;
    let mut count = 0;
    for gamma in [0.5, 1.0, 2.0] {
        for mu in [0.0, 0.5, 1.0] {
            for lambda in [2.0, 3.0] {
                for tau1 in [0.1, 0.5] {
                    ok(ParamSchedule::init(gamma, mu, lambda, tau1, 1.0, 1.0))?;
                    let limit = lambda / gamma;
                    let rel = (n as f64 * tau_at(gamma, mu, lambda, tau1, n, false) - limit).abs() / limit;
                    ensure(rel <= 0.02, || format!("γ={gamma} μ={mu} λ={lambda} τ1={tau1}: relative error {rel:e}"))?;
                    worst = worst.max(rel);
                    count += 1;
                }
            }
        }
    }
    within(start.elapsed(), 1.0)?;
    Ok(format!("{count} grid points at n = {n}; max relative error {worst:.2e}"))
}

// ---------------------------------------------------------------- criterion 7

fn slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let (mx, my) = points.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x / n, b + y / n));
    let (sxy, sxx) =
        points.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + (x - mx) * (y - my), b + (x - mx) * (x - mx)));
    sxy / sxx
}

fn criterion_empirical_rate() -> Outcome {
    const N: usize = 10_000;
    let battery = [(5, 8, 71, 0.5), (10, 15, 72, 0.2), (30, 50, 73, 1.0), (8, 6, 74, 0.1)];
    let mut summary = Vec::new();
    for (dim_h, dim_g, seed, gamma_f) in battery {
        let (cp, cert) = ok(gen_quadratic::<f64>(dim_h, dim_g, seed, gamma_f))?;
        let acc = ok(cp.to_acc_problem())?;
        let ln = cp.l.norm();
        let tau1 = (acc.gamma() / acc.mu()).min(1.0);
        let sched = ok(ParamSchedule::init(acc.gamma(), acc.mu(), acc.mu() + 1.0, tau1, 1.0 / (tau1 * ln * ln), ln))?;
        let mut engine = ok(AccEngine::new(&acc, sched, AccConfig::new(MetricFamily::ChoicePD)))?;
        let states = ok(engine.iterate(&zero_state(acc.inclusion()), N))?;
        let points: Vec<(f64, f64)> = (100..=N).map(|n| ((n as f64).ln(), states[n].x.dist(&cert.x).ln())).collect();
        let s = slope(&points);
        let label = format!("{dim_g}×{dim_h}");
        ensure(s <= -0.9, || format!("{label}: slope {s:.3} (error {:e} at n = {N})", states[N].x.dist(&cert.x)))?;
        summary.push(format!("{label} slope {s:.2}"));
    }
    Ok(summary.join("; "))
}

// ---------------------------------------------------------------- criterion 8

fn violated<T: std::fmt::Debug>(r: splitmono::Result<T>, expected: Constraint) -> std::result::Result<String, String> {
    match r {
        Err(Error::ConstraintViolated { constraint, detail }) if constraint == expected => {
            Ok(format!("{constraint} ({detail})"))
        }
        other => Err(format!("expected {expected}, got {other:?}")),
    }
}

fn criterion_negative_controls() -> Outcome {
    let mut names = Vec::new();
    names.push(violated(ParamSchedule::<f64>::init(1.0, 5.0, 6.0, 0.5, 1.0, 1.0), Constraint::StepCurvature)?);
    names.push(violated(ParamSchedule::<f64>::init(1.0, 1.0, 1.5, 0.5, 1.0, 1.0), Constraint::Relaxation)?);
    names.push(violated(ParamSchedule::<f64>::init(1.0, 0.0, 1.0, 0.5, 2.5, 1.0), Constraint::StepProduct)?);

    let p = ok(nonsmooth(true).to_inclusion())?;
    let c = 1.0;
    let boundary = 1.0 / (c * p.l().norm().powi(2) + p.c().half_inverse_cocoercivity());
    names.push(violated(build_vu_condat(&p, boundary * 1.01, c).map(|r| r.kind), Constraint::VuCondatStep)?);
    let p = ok(nonsmooth(false).to_inclusion())?;
    let edge = 1.0 / (2.0 * p.l().norm().powi(2));
    names.push(violated(build_bch(&p, edge, 2.0).map(|r| r.kind), Constraint::BchStep)?);

    // rank-deficient L: LL* is singular, so no τ_k LL* bounds σ_k^{-1} Id from above zero
    let flat = DenseLinearMap::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0]]).unwrap();
    let ln = flat.norm();
    let a = Operator::subdifferential(ProxFunction::squared_l2(2, 1.0).unwrap());
    let b = Operator::subdifferential(ProxFunction::l1(2, 1.0).unwrap());
    let acc = ok(AccProblem::new(a, b, ForwardMap::zero(2), flat.clone(), 1.0))?;
    let sched = ok(ParamSchedule::<f64>::init(1.0, 0.0, 1.0, 1.0, 1.0 / (ln * ln), ln))?;
    names.push(violated(
        AccEngine::new(&acc, sched, AccConfig::new(MetricFamily::Zero)).map(|_| ()),
        Constraint::MetricLowerBound,
    )?);

    let l = DenseLinearMap::from_rows(&[vec![1.0, 1.0]]).unwrap();
    let p = ok(InclusionProblem::new(
        Operator::subdifferential(ProxFunction::l1(2, 1.0).unwrap()),
        Operator::subdifferential(ProxFunction::squared_l2(1, 1.0).unwrap()),
        ForwardMap::zero(2),
        l,
    ))?;
    let mut engine = ok(UnifiedAdmm::new(&p, ok(AdmmConfig::classical(&p, 1.0))?))?;
    match engine.step(&AdmmState::zeros(&p)) {
        Err(e @ Error::MetricNotPositive { .. }) => names.push(format!("classical ADMM: {e}")),
        other => return Err(format!("expected MetricNotPositive at the first step, got {other:?}")),
    }
    Ok(names.join("; "))
}

// ----------------------------------------------------------------------- main

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("identity suite", criterion_identities),
        ("reduction equivalence", criterion_reductions),
        ("Fejér certification", criterion_fejer),
        ("unified convergence", criterion_convergence),
        ("rate bound", criterion_rate),
        ("asymptotic step size", criterion_tau_asymptote),
        ("empirical O(1/n)", criterion_empirical_rate),
        ("negative controls", criterion_negative_controls),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let id = (i + 1).to_string();
        if !filter.is_empty() && !filter.iter().any(|f| *f == id || name.contains(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        let outcome = panic::catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|e| {
            let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {id} {name} [{secs:.2}s]: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL {id} {name} [{secs:.2}s]: {detail}");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
