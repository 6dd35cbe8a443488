//! Acceptance suite: one pass/fail line per criterion, nonzero exit if any
//! criterion fails. Runs as a plain binary so the lines always print.

mod common;

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use quenchlab::certificates::{quench_time_bound, rate_certificate, verify_quench_bound};
use quenchlab::evolution::{simulate, StepperConfig, TerminalStatus, Trajectory};
use quenchlab::model::PairField;
use quenchlab::spectra::{assemble_linearization, principal_eigenpair};
use quenchlab::stationary::{
    mass_bound_check, monotone_iteration_observed, monotone_minimal_solution, trace_critical_curve, CurveOptions, Evidence,
    MembershipVerdict, StationaryConfig, StationarySolution,
};
use quenchlab::{Field, Grid, Model, Nonlinearity, ParamPoint, Problem, Profile};

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

fn mems(n: usize, l: f64, m: f64) -> Problem {
    Problem::new(Grid::unit_interval(n), Model::mems(l, m)).unwrap()
}

fn minimal(p: &Problem) -> Option<StationarySolution> {
    monotone_minimal_solution(p, &StationaryConfig::default()).unwrap().into_solution()
}

fn c1_laplacian_eigenpair() -> Outcome {
    let g = Grid::unit_interval(999);
    let p = Problem::new(g.clone(), Model::mems(1.0, 1.0)).unwrap();
    let e = p.laplacian_eigenpair().unwrap();
    let mass = g.integrate(&e.phi).unwrap();
    let err = (e.lambda1 - PI * PI).abs();
    let positive = e.phi.iter().all(|&v| v > 0.0);
    outcome(
        err < 1e-3 && positive && (mass - 1.0).abs() < 1e-14,
        format!("|λ₁-π²|={err:.3e}, φ>0: {positive}, ∫φ-1={:.1e}", mass - 1.0),
    )
}

/// Random configurations inside Λ, with the minimal solution of each.
fn random_inlambda_configs() -> Vec<(Problem, StationarySolution, bool)> {
    let mut rng = ChaCha8Rng::seed_from_u64(20240531);
    let mut out = Vec::new();
    while out.len() < 20 {
        let pick = |rng: &mut ChaCha8Rng| match rng.gen_range(0..3) {
            0 => Nonlinearity::Log,
            1 => Nonlinearity::Exp,
            _ => Nonlinearity::Power { p: rng.gen_range(0.5..3.0) },
        };
        let prof = |rng: &mut ChaCha8Rng| {
            if rng.gen_bool(0.5) {
                Profile::Constant { c: rng.gen_range(0.5..2.0) }
            } else {
                Profile::Bump { c: rng.gen_range(0.5..2.0), k: rng.gen_range(1.0..10.0), x0: rng.gen_range(0.2..0.8), y0: 0.0 }
            }
        };
        let model = Model {
            f: pick(&mut rng),
            g: pick(&mut rng),
            alpha: prof(&mut rng),
            beta: prof(&mut rng),
            params: ParamPoint { lambda: rng.gen_range(0.05..2.0), mu: rng.gen_range(0.05..2.0) },
        };
        let p = Problem::new(Grid::unit_interval(99), model).unwrap();
        let mut prev: Option<(Field, Field)> = None;
        let mut monotone = true;
        let v = monotone_iteration_observed(&p, &StationaryConfig::default(), |_, w, z| {
            if let Some((pw, pz)) = &prev {
                monotone &= w.iter().zip(pw.iter()).all(|(a, b)| a >= b) && z.iter().zip(pz.iter()).all(|(a, b)| a >= b);
            }
            prev = Some((w.clone(), z.clone()));
        })
        .unwrap();
        if let MembershipVerdict::InLambda(sol) = v {
            out.push((p, sol, monotone));
        }
    }
    out
}

fn c2_monotone_iteration(configs: &[(Problem, StationarySolution, bool)]) -> Outcome {
    let monotone = configs.iter().all(|c| c.2);
    let worst = configs.iter().map(|c| c.1.residual).fold(0.0, f64::max);
    let below = configs.iter().all(|c| c.1.w.max() < 1.0 && c.1.z.max() < 1.0);
    outcome(
        monotone && worst <= 1e-8 && below,
        format!("{} configs, iterates nondecreasing: {monotone}, max residual {worst:.2e}, max<1: {below}", configs.len()),
    )
}

fn c3_nonexistence_bound() -> Outcome {
    let p = mems(199, 1.0, 1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut points: Vec<(f64, f64)> = (0..200).map(|_| (rng.gen_range(PI * PI + 0.1..60.0), rng.gen_range(1e-4..60.0))).collect();
    points.extend([(PI * PI + 0.1, 1e-4), (PI * PI + 0.1, 0.5), (PI * PI + 0.1, 100.0)]);
    let bad: Vec<_> = points
        .iter()
        .filter(|&&(l, m)| {
            !matches!(
                monotone_minimal_solution(&p.with_params(ParamPoint { lambda: l, mu: m }), &StationaryConfig::default()).unwrap(),
                MembershipVerdict::NotInLambda(Evidence::AnalyticBound { .. })
            )
        })
        .collect();
    outcome(bad.is_empty(), format!("{} points with λ > π²+0.1, {} not rejected by the analytic bound", points.len(), bad.len()))
}

fn c4_critical_curve(pull_in: f64) -> Outcome {
    let p = mems(199, 1.0, 1.0);
    let opts = CurveOptions::default();
    let lambda_star = 7.9;
    let samples: Vec<f64> = (1..=16).map(|k| lambda_star * k as f64 / 17.0).collect();
    let curve = trace_critical_curve(&p, &samples, &opts).unwrap();
    let complete = curve.samples.iter().all(|s| s.bracket.is_some());
    let defect = curve.monotonicity_defect();
    let d = curve.diagonal.mid();
    let rel = (d - pull_in).abs() / pull_in;
    outcome(
        complete && defect <= 0.0 && rel < 0.01,
        format!(
            "16 samples bracketed: {complete}, monotonicity defect {defect:.3e}, diagonal {d:.5} vs shooting {pull_in:.5} (rel {rel:.2e}), λ*≈{:.4}, μ*≈{:.4}",
            curve.lambda_star.mid(),
            curve.mu_star.mid()
        ),
    )
}

fn c5_stability() -> Outcome {
    let base = mems(200, 1.0, 1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut checked = 0;
    let mut worst_rel: f64 = 0.0;
    let mut min_nu = f64::INFINITY;
    let mut all_positive = true;
    let mut all_converged = true;
    while checked < 10 {
        let at = ParamPoint { lambda: rng.gen_range(0.05..5.0), mu: rng.gen_range(0.05..3.0) };
        let p = base.with_params(at);
        // interior: a slightly larger point must also lie in Λ
        let Some(sol) = minimal(&p) else { continue };
        if minimal(&base.with_params(ParamPoint { lambda: 1.05 * at.lambda, mu: 1.05 * at.mu })).is_none() {
            continue;
        }
        let op = assemble_linearization(&p, &sol).unwrap();
        match principal_eigenpair(&op, p.grid()) {
            Ok(e) => {
                let dense = common::dense_min_real_eigenvalue(&op);
                worst_rel = worst_rel.max((e.nu1 - dense).abs() / dense.abs());
                min_nu = min_nu.min(e.nu1);
                all_positive &= e.phi1.iter().chain(e.psi1.iter()).all(|&v| v > 0.0);
                all_converged &= e.residual <= 1e-10;
            }
            Err(_) => all_converged = false,
        }
        checked += 1;
    }
    outcome(
        min_nu > 0.0 && all_positive && all_converged && worst_rel <= 1e-8,
        format!("10 interior points at n=200: min ν₁ {min_nu:.6}, eigenvectors positive: {all_positive}, residual ≤ 1e-10: {all_converged}, worst rel. gap to dense oracle {worst_rel:.2e}"),
    )
}

struct ConvergenceRun {
    problem: Problem,
    sol: StationarySolution,
    traj: Trajectory,
}

fn convergence_run() -> ConvergenceRun {
    let problem = mems(199, 0.5, 0.5);
    let sol = minimal(&problem).unwrap();
    let traj = simulate(&problem, &PairField::zeros(199), &StepperConfig::default(), 5.0, Some(&sol.pair())).unwrap();
    ConvergenceRun { problem, sol, traj }
}

fn c6_global_convergence(run: &ConvergenceRun) -> Outcome {
    let d = run.traj.final_distance();
    // a few ulps of slack: at the discrete equilibrium the maxima only jitter in the last bit
    let ulps = |x: f64| 4.0 * f64::EPSILON * x.abs();
    let monotone = run.traj.records.windows(2).all(|w| w[1].max_u >= w[0].max_u - ulps(w[0].max_u) && w[1].max_v >= w[0].max_v - ulps(w[0].max_v));
    let reached = run.traj.status == TerminalStatus::ReachedHorizon && (run.traj.final_time() - 5.0).abs() < 1e-12;
    outcome(
        reached && d < 1e-6 && monotone,
        format!("status {}, t={}, L² distance {d:.3e}, max(u) nondecreasing: {monotone}, {} steps", run.traj.status.label(), run.traj.final_time(), run.traj.records.len() - 1),
    )
}

fn c7_quenching() -> Outcome {
    let tq = |n: usize, tol: f64| {
        let cfg = StepperConfig { tol_step: tol, ..StepperConfig::default() };
        simulate(&mems(n, 12.0, 12.0), &PairField::zeros(n), &cfg, 5.0, None).unwrap().status.quench_time()
    };
    match (tq(99, 1e-6), tq(199, 5e-7)) {
        (Some(a), Some(b)) => {
            let rel = (a - b).abs() / b;
            outcome(rel < 0.02, format!("t_q={a:.6} (n=99, tol 1e-6), {b:.6} (n=199, tol 5e-7), rel. change {rel:.2e}"))
        }
        other => outcome(false, format!("no quench: {other:?}")),
    }
}

fn c8_quench_certificate() -> Outcome {
    let p = mems(199, 20.0, 20.0);
    let s = p.grid().sine_mode().scale(0.9);
    let initial = PairField::new(s.clone(), s);
    let bound = quench_time_bound(&p, &initial).unwrap();
    let traj = simulate(&p, &initial, &StepperConfig::default(), 1.0, None).unwrap();
    let check = verify_quench_bound(&bound, &traj);
    let b = bound.u.bound.unwrap_or(f64::NAN);
    outcome(
        check.passed && check.applicable && (b - 0.0524).abs() < 5e-4,
        format!("bound {b:.5}, t_q {:?}, passed: {}", check.t_q, check.passed),
    )
}

fn max_energy_residual(n: usize, dt: f64) -> f64 {
    let p = mems(n, 0.5, 0.5);
    let traj = simulate(&p, &PairField::zeros(n), &StepperConfig::fixed(dt), 5.0, None).unwrap();
    traj.energy_residuals().iter().fold(0.0, |m, r| m.max(r.abs()))
}

fn c9_lyapunov(run: &ConvergenceRun) -> Outcome {
    let along = run.traj.energy_residuals().iter().fold(0.0, |m: f64, r| m.max(r.abs()));
    let coarse = max_energy_residual(99, 2e-3);
    let fine = max_energy_residual(199, 1e-3);
    outcome(
        along.is_finite() && fine <= coarse,
        format!("max |ΔE/Δt + 2∫u_t v_t|: {along:.3e} on the adaptive run; {coarse:.3e} (n=99, dt=2e-3) -> {fine:.3e} (n=199, dt=1e-3)"),
    )
}

fn c10_rate(run: &ConvergenceRun) -> Outcome {
    let eig = principal_eigenpair(&assemble_linearization(&run.problem, &run.sol).unwrap(), run.problem.grid()).unwrap();
    let lambda1 = run.problem.laplacian_eigenpair().unwrap().lambda1;
    match rate_certificate(&run.traj, lambda1, &eig) {
        Ok(c) => outcome(
            c.passed && c.gamma_theorem >= c.gamma_proof && !c.note.is_empty(),
            format!(
                "slope {:.4} over [{:.3}, {:.3}], γ_proof {:.4}, γ_theorem {:.4}, ν₁ {:.4}",
                c.fitted_slope, c.window[0], c.window[1], c.gamma_proof, c.gamma_theorem, c.nu1
            ),
        ),
        Err(e) => outcome(false, e.to_string()),
    }
}

fn c11_mass_bounds(configs: &[(Problem, StationarySolution, bool)]) -> Outcome {
    let failures = configs.iter().filter(|(p, s, _)| !mass_bound_check(p, &s.w, &s.z).unwrap().passed).count();
    outcome(failures == 0, format!("{} minimal solutions, {failures} violations", configs.len()))
}

fn c12_comparison() -> Outcome {
    let mut worst = f64::NEG_INFINITY;
    let mut shared = 0;
    for (l, m, lo, hi) in [(0.5, 0.5, (0.1, 0.0), (0.3, 0.2)), (12.0, 12.0, (0.0, 0.0), (0.05, 0.1))] {
        let p = mems(99, l, m);
        let s = p.grid().sine_mode();
        let cfg = StepperConfig { snapshot_stride: 1, ..StepperConfig::fixed(1e-4) };
        let a = simulate(&p, &PairField::new(s.scale(lo.0), s.scale(lo.1)), &cfg, 0.5, None).unwrap();
        let b = simulate(&p, &PairField::new(s.scale(hi.0), s.scale(hi.1)), &cfg, 0.5, None).unwrap();
        for (x, y) in a.snapshots.iter().zip(&b.snapshots) {
            assert_eq!(x.t, y.t);
            shared += 1;
            for k in 0..99 {
                worst = worst.max(x.state.u[k] - y.state.u[k]).max(x.state.v[k] - y.state.v[k]);
            }
        }
    }
    outcome(worst <= 1e-10, format!("{shared} shared times, max (lower - upper) {worst:.3e}"))
}

fn main() {
    let (_, pull_in) = common::scalar_pull_in();
    let mut results: Vec<(usize, &str, Outcome, Duration, Option<Duration>)> = Vec::new();
    let mut timed = |id: usize, name: &'static str, limit: Option<f64>, f: &mut dyn FnMut() -> Outcome| {
        let t0 = Instant::now();
        let o = f();
        results.push((id, name, o, t0.elapsed(), limit.map(Duration::from_secs_f64)));
    };

    timed(1, "Laplacian eigenpair", Some(1.0), &mut c1_laplacian_eigenpair);
    let mut configs = Vec::new();
    timed(2, "Monotone iteration", Some(10.0), &mut || {
        configs = random_inlambda_configs();
        c2_monotone_iteration(&configs)
    });
    timed(3, "Nonexistence bound", Some(1.0), &mut c3_nonexistence_bound);
    timed(4, "Critical curve", Some(60.0), &mut || c4_critical_curve(pull_in));
    timed(5, "Stability", Some(30.0), &mut c5_stability);
    let mut conv = None;
    timed(6, "Global convergence", Some(30.0), &mut || {
        let run = convergence_run();
        let o = c6_global_convergence(&run);
        conv = Some(run);
        o
    });
    let conv = conv.expect("criterion 6 ran");
    timed(7, "Quenching outside Λ", Some(60.0), &mut c7_quenching);
    timed(8, "Quench-time certificate", Some(30.0), &mut c8_quench_certificate);
    timed(9, "Lyapunov identity", None, &mut || c9_lyapunov(&conv));
    timed(10, "Convergence rate", Some(30.0), &mut || c10_rate(&conv));
    timed(11, "Mass bounds", None, &mut || c11_mass_bounds(&configs));
    timed(12, "Comparison ordering", None, &mut c12_comparison);

    let mut failed = 0;
    for (id, name, o, took, limit) in &results {
        let in_time = limit.is_none_or(|l| *took <= l);
        let pass = o.passed && in_time;
        if !pass {
            failed += 1;
        }
        let budget = limit.map_or(String::new(), |l| format!(" / {:.0}s", l.as_secs_f64()));
        println!(
            "criterion {id:>2} {name:<26} {} ({:.2}s{budget}) {}",
            if pass { "PASS" } else { "FAIL" },
            took.as_secs_f64(),
            o.detail
        );
    }
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
