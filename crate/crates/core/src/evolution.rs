//! Time integration of the parabolic system with quench detection.
//!
//! The scheme is IMEX Euler, diffusion implicit and reaction explicit:
//!
//! ```text
//! (I + dt A) u' = u + dt λ α f(v),   (I + dt A) v' = v + dt μ β g(u),
//! ```
//!
//! with `A = -Δ_h`. It is evaluated in increment form
//! `u' = u + (A + I/dt)⁻¹ (λ α f(v) - A u)`, which is algebraically the same
//! step but makes stationary states exact fixed points and keeps the sign of
//! the increment equal to the sign of the stationary defect. The map is
//! order preserving for every `dt`, so sub- and supersolution starts give
//! monotone trajectories and ordered starts stay ordered.
//!
//! Step size is chosen by step doubling: a full step is compared with two
//! half steps, the half-step result is kept, and `dt` is further capped by
//! `c (1 - max)²` as the state approaches the blow-up level.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Field, Grid};
use crate::linalg::norm_inf;
use crate::model::PairField;
use crate::problem::Problem;
use crate::stationary::StationarySolution;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StepperConfig {
    pub dt_init: f64,
    pub dt_min: f64,
    pub dt_max: f64,
    pub safety: f64,
    /// Local error tolerance (sup norm) for step doubling.
    pub tol_step: f64,
    /// A state with `max ≥ 1 - delta_q` counts as quenched.
    pub delta_q: f64,
    /// Keep every `snapshot_stride`-th accepted state; `0` keeps only the
    /// initial and final states.
    pub snapshot_stride: usize,
    /// Constant `c` in the cap `dt ≤ c (1 - max)²`.
    pub quench_cap: f64,
}

impl Default for StepperConfig {
    fn default() -> Self {
        Self {
            dt_init: 1e-4,
            dt_min: 1e-14,
            dt_max: 1e-2,
            safety: 0.9,
            tol_step: 1e-6,
            delta_q: 1e-3,
            snapshot_stride: 0,
            quench_cap: 0.25,
        }
    }
}

impl StepperConfig {
    /// Constant step `dt` without error control or quench cap.
    pub fn fixed(dt: f64) -> Self {
        Self { dt_init: dt, dt_min: dt, dt_max: dt, ..Self::default() }
    }

    pub fn is_fixed(&self) -> bool {
        self.dt_min == self.dt_max
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameter(m.to_string()));
        if !(self.dt_min > 0.0 && self.dt_min <= self.dt_init && self.dt_init <= self.dt_max) {
            return bad("stepper requires 0 < dt_min <= dt_init <= dt_max");
        }
        if !(self.delta_q > 0.0 && self.delta_q < 1.0) {
            return bad("delta_q must lie in (0, 1)");
        }
        if !(self.tol_step > 0.0 && self.safety > 0.0 && self.safety <= 1.0 && self.quench_cap > 0.0) {
            return bad("tol_step, safety and quench_cap must be positive, safety at most 1");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum QuenchSide {
    U,
    V,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum TerminalStatus {
    ReachedHorizon,
    /// `t_q` is the first time the maximum reaches `1 - δ_q`;
    /// `t_q_extrapolated` is an estimate of when it would reach 1.
    Quenched { t_q: f64, which: QuenchSide, t_q_extrapolated: f64 },
    StepUnderflow { t: f64, dt: f64 },
}

impl TerminalStatus {
    pub fn label(&self) -> &'static str {
        match self {
            TerminalStatus::ReachedHorizon => "reached_horizon",
            TerminalStatus::Quenched { .. } => "quenched",
            TerminalStatus::StepUnderflow { .. } => "step_underflow",
        }
    }

    pub fn quench_time(&self) -> Option<f64> {
        match self {
            TerminalStatus::Quenched { t_q, .. } => Some(*t_q),
            _ => None,
        }
    }
}

/// Diagnostics after one accepted step. Rates are difference quotients over
/// the step; in the record at `t = 0` they are the right-hand sides
/// `-A u₀ + λ α f(v₀)` and `-A v₀ + μ β g(u₀)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StepRecord {
    pub t: f64,
    pub dt: f64,
    pub max_u: f64,
    pub max_v: f64,
    pub ut_l2: f64,
    pub vt_l2: f64,
    /// `h^d Σ u_t v_t`, the dissipation term of the energy identity.
    pub ut_vt: f64,
    pub energy: f64,
    /// `‖u - w‖₂²`; NaN without a reference pair.
    pub dist2_u: f64,
    pub dist2_v: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Snapshot {
    pub t: f64,
    pub state: PairField,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub records: Vec<StepRecord>,
    pub snapshots: Vec<Snapshot>,
    pub status: TerminalStatus,
    pub final_state: PairField,
    pub rejected_steps: usize,
}

impl Trajectory {
    pub fn final_time(&self) -> f64 {
        self.records.last().map_or(0.0, |r| r.t)
    }

    /// `‖u - w‖₂ + ‖v - z‖₂` at the last record.
    pub fn final_distance(&self) -> f64 {
        self.records.last().map_or(f64::NAN, |r| r.dist2_u.sqrt() + r.dist2_v.sqrt())
    }

    /// `(E_{n+1} - E_n)/dt + 2 ∫ u_t v_t` for every accepted step.
    pub fn energy_residuals(&self) -> Vec<f64> {
        self.records.windows(2).map(|w| (w[1].energy - w[0].energy) / w[1].dt + 2.0 * w[1].ut_vt).collect()
    }
}

fn state_max(state: &PairField) -> (f64, f64) {
    (state.u.max(), state.v.max())
}

fn check_range(state: &PairField) -> Result<()> {
    match state.range_violation() {
        Some((node, max)) => Err(Error::Range { node, max }),
        None => Ok(()),
    }
}

/// Stationary defects `λ α f(v) - A u` and `μ β g(u) - A v`.
pub fn defects(problem: &Problem, state: &PairField) -> (Field, Field) {
    let lap = problem.laplacian();
    (problem.reaction_u(&state.v).sub(&lap.apply(&state.u)), problem.reaction_v(&state.u).sub(&lap.apply(&state.v)))
}

/// One IMEX Euler step. Fails with [`Error::Range`] if the new state reaches
/// the blow-up level anywhere.
pub fn step(problem: &Problem, state: &PairField, dt: f64) -> Result<PairField> {
    if !(dt > 0.0) {
        return Err(Error::InvalidParameter(format!("time step must be positive, got {dt}")));
    }
    let (ru, rv) = defects(problem, state);
    let lap = problem.laplacian();
    let du = lap.solve_shifted(1.0 / dt, &ru)?;
    let dv = lap.solve_shifted(1.0 / dt, &rv)?;
    // Exact solutions stay nonnegative; only round-off can dip below zero.
    let advance = |x: &Field, d: &Field| Field::from(x.iter().zip(d.iter()).map(|(a, b)| (a + b).max(0.0)).collect::<Vec<_>>());
    let next = PairField::new(advance(&state.u, &du), advance(&state.v, &dv));
    check_range(&next)?;
    Ok(next)
}

fn two_half_steps(problem: &Problem, state: &PairField, dt: f64) -> Result<PairField> {
    let mid = step(problem, state, 0.5 * dt)?;
    step(problem, &mid, 0.5 * dt)
}

/// Discrete Lyapunov energy
///
/// ```text
/// E(u, v) = h^d [ uᵀ A v - Σ (λ α F(v) + μ β G(u)) ]
/// ```
///
/// with `F`, `G` the antiderivatives vanishing at 0. With the uniform cell
/// weight the semi-discrete identity `dE/dt = -2 h^d Σ u_t v_t` holds exactly.
pub fn lyapunov_energy(problem: &Problem, state: &PairField) -> f64 {
    let cell = problem.grid().cell_measure();
    let model = problem.model();
    let p = problem.params();
    let au = problem.laplacian().apply(&state.u);
    let mut acc = 0.0;
    for k in 0..state.u.len() {
        acc += au[k] * state.v[k]
            - p.lambda * problem.alpha()[k] * model.f.antideriv(state.v[k])
            - p.mu * problem.beta()[k] * model.g.antideriv(state.u[k]);
    }
    cell * acc
}

struct Recorder<'a> {
    problem: &'a Problem,
    reference: Option<&'a PairField>,
}

impl Recorder<'_> {
    fn record(&self, t: f64, dt: f64, state: &PairField, ut: &[f64], vt: &[f64]) -> Result<StepRecord> {
        let grid = self.problem.grid();
        let (max_u, max_v) = state_max(state);
        let ut_vt = grid.cell_measure() * ut.iter().zip(vt).map(|(a, b)| a * b).sum::<f64>();
        let (dist2_u, dist2_v) = match self.reference {
            Some(r) => (grid.l2_norm_sq(&state.u.sub(&r.u))?, grid.l2_norm_sq(&state.v.sub(&r.v))?),
            None => (f64::NAN, f64::NAN),
        };
        Ok(StepRecord {
            t,
            dt,
            max_u,
            max_v,
            ut_l2: grid.l2_norm_sq(ut)?.sqrt(),
            vt_l2: grid.l2_norm_sq(vt)?.sqrt(),
            ut_vt,
            energy: lyapunov_energy(self.problem, state),
            dist2_u,
            dist2_v,
        })
    }

    fn record_step(&self, t: f64, dt: f64, prev: &PairField, next: &PairField) -> Result<StepRecord> {
        let ut: Vec<f64> = next.u.iter().zip(prev.u.iter()).map(|(a, b)| (a - b) / dt).collect();
        let vt: Vec<f64> = next.v.iter().zip(prev.v.iter()).map(|(a, b)| (a - b) / dt).collect();
        self.record(t, dt, next, &ut, &vt)
    }
}

/// Integrates from `initial` until `horizon`, quench or step underflow.
///
/// With `dt_min == dt_max` the run uses that constant step, single IMEX
/// steps and no error control.
pub fn simulate(
    problem: &Problem,
    initial: &PairField,
    cfg: &StepperConfig,
    horizon: f64,
    reference: Option<&PairField>,
) -> Result<Trajectory> {
    cfg.validate()?;
    let grid = problem.grid();
    grid.check(&initial.u)?;
    grid.check(&initial.v)?;
    check_range(initial)?;
    if initial.u.min() < 0.0 || initial.v.min() < 0.0 {
        return Err(Error::InvalidParameter("initial data must be nonnegative".into()));
    }
    if !(horizon > 0.0) {
        return Err(Error::InvalidParameter(format!("horizon must be positive, got {horizon}")));
    }
    let rec = Recorder { problem, reference };
    let (r0u, r0v) = defects(problem, initial);
    let mut records = vec![rec.record(0.0, 0.0, initial, &r0u, &r0v)?];
    let mut snapshots = vec![Snapshot { t: 0.0, state: initial.clone() }];
    let mut state = initial.clone();
    let mut t = 0.0;
    let mut dt = cfg.dt_init;
    let mut rejected = 0usize;
    let mut accepted = 0usize;
    let threshold = 1.0 - cfg.delta_q;
    let fixed = cfg.is_fixed();

    let status = loop {
        if t >= horizon * (1.0 - 1e-14) {
            break TerminalStatus::ReachedHorizon;
        }
        let (cur_u, cur_v) = state_max(&state);
        let top = cur_u.max(cur_v);
        let mut h = dt.min(horizon - t);
        if !fixed {
            h = h.min(cfg.quench_cap * (1.0 - top).powi(2)).max(cfg.dt_min.min(horizon - t));
        }
        let attempt = if fixed { step(problem, &state, h).map(|s| Some((s, 1.0))) } else { attempt_adaptive(problem, &state, h, cfg) };
        let next = match attempt {
            Ok(Some((next, grow))) => {
                if !fixed {
                    dt = (h * grow).clamp(cfg.dt_min, cfg.dt_max);
                }
                next
            }
            Ok(None) | Err(Error::Range { .. }) => {
                if fixed {
                    let t_q = refine_quench(problem, &state, t, h, threshold, true);
                    break TerminalStatus::Quenched { t_q, which: QuenchSide::Both, t_q_extrapolated: t_q };
                }
                rejected += 1;
                if h <= cfg.dt_min {
                    break TerminalStatus::StepUnderflow { t, dt: h };
                }
                dt = (0.5 * h).max(cfg.dt_min);
                continue;
            }
            Err(e) => return Err(e),
        };
        let prev = std::mem::replace(&mut state, next);
        t += h;
        accepted += 1;
        records.push(rec.record_step(t, h, &prev, &state)?);
        if cfg.snapshot_stride > 0 && accepted % cfg.snapshot_stride == 0 {
            snapshots.push(Snapshot { t, state: state.clone() });
        }
        let (new_u, new_v) = state_max(&state);
        if new_u.max(new_v) >= threshold {
            let which = match (new_u >= threshold, new_v >= threshold) {
                (true, true) => QuenchSide::Both,
                (true, false) => QuenchSide::U,
                _ => QuenchSide::V,
            };
            let t_q = refine_quench(problem, &prev, t - h, h, threshold, fixed);
            let t_q_extrapolated = extrapolate_quench(problem, &prev, &state, t, h);
            break TerminalStatus::Quenched { t_q, which, t_q_extrapolated };
        }
    };
    if snapshots.last().map(|s| s.t) != Some(t) {
        snapshots.push(Snapshot { t, state: state.clone() });
    }
    Ok(Trajectory { records, snapshots, status, final_state: state, rejected_steps: rejected })
}

/// Full step versus two half steps; returns the half-step state and the
/// growth factor for the next step; `None` when the step is rejected.
fn attempt_adaptive(problem: &Problem, state: &PairField, h: f64, cfg: &StepperConfig) -> Result<Option<(PairField, f64)>> {
    let full = step(problem, state, h)?;
    let half = two_half_steps(problem, state, h)?;
    let err = norm_inf(&full.u.sub(&half.u)).max(norm_inf(&full.v.sub(&half.v)));
    if err > cfg.tol_step {
        return Ok(None);
    }
    let grow = if err == 0.0 { 2.0 } else { (cfg.safety * (cfg.tol_step / err).sqrt()).clamp(0.2, 2.0) };
    Ok(Some((half, grow)))
}

/// First time inside `(t0, t0 + h]` at which the maximum reaches
/// `threshold`, by bisection on the length of the last step.
fn refine_quench(problem: &Problem, from: &PairField, t0: f64, h: f64, threshold: f64, fixed: bool) -> f64 {
    let reaches = |tau: f64| {
        let r = if fixed { step(problem, from, tau) } else { two_half_steps(problem, from, tau) };
        match r {
            Ok(s) => {
                let (a, b) = state_max(&s);
                a.max(b) >= threshold
            }
            Err(_) => true,
        }
    };
    let (mut lo, mut hi) = (0.0, h);
    for _ in 0..200 {
        if hi - lo <= 1e-15 * (t0 + hi).max(1e-300) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if reaches(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    t0 + hi
}

/// Estimate of the time the maximum would need to reach 1, assuming
/// `m' = K N(m)` near the peak with `N` the nonlinearity driving the larger
/// component and `K` fitted from the last step.
fn extrapolate_quench(problem: &Problem, prev: &PairField, now: &PairField, t: f64, h: f64) -> f64 {
    let (pu, pv) = state_max(prev);
    let (nu, nv) = state_max(now);
    let model = problem.model();
    // u is driven by f(v) and v by g(u)
    let (m0, m1, n) = if nu >= nv { (pu, nu, &model.f) } else { (pv, nv, &model.g) };
    let rate = (m1 - m0) / h;
    if !(rate > 0.0) {
        return f64::NAN;
    }
    let k = rate / n.value(m1);
    let panels = 64;
    let w = (1.0 - m1) / panels as f64;
    let inv = |s: f64| if s >= 1.0 { 0.0 } else { 1.0 / n.value(s) };
    let mut acc = inv(m1) + inv(1.0);
    for i in 1..panels {
        acc += if i % 2 == 1 { 4.0 } else { 2.0 } * inv(m1 + i as f64 * w);
    }
    t + acc * w / 3.0 / k
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RatioConstants {
    pub c1: f64,
    pub c2: f64,
    /// `√((λ/μ) inf(α/β) f'(0)/g'(‖w‖∞))`.
    pub sqrt_term_1: f64,
    /// `inf (Δu₀ + λ α f(v₀)) / (Δv₀ + μ β g(u₀))`.
    pub ratio_term_1: f64,
    pub sqrt_term_2: f64,
    pub ratio_term_2: f64,
}

/// Constants `c1, c2` with `u_t ≥ c1 v_t` and `v_t ≥ c2 u_t` along runs
/// started from a sub- or supersolution.
pub fn ratio_constants(problem: &Problem, initial: &PairField, sol: &StationarySolution) -> Result<RatioConstants> {
    let model = problem.model();
    let p = problem.params();
    let (alpha, beta) = (problem.alpha(), problem.beta());
    let inf_ratio = |a: &Field, b: &Field| {
        a.iter().zip(b.iter()).map(|(x, y)| if *y > 0.0 { x / y } else { f64::INFINITY }).fold(f64::INFINITY, f64::min)
    };
    let sqrt_term_1 = (p.lambda / p.mu * inf_ratio(alpha, beta) * model.f.d1(0.0) / model.g.d1(sol.w.max())).sqrt();
    let sqrt_term_2 = (p.mu / p.lambda * inf_ratio(beta, alpha) * model.g.d1(0.0) / model.f.d1(sol.z.max())).sqrt();
    let (du, dv) = defects(problem, initial);
    // defects at the stationary residual level count as vanishing
    let scale = norm_inf(&problem.reaction_u(&initial.v)).max(norm_inf(&problem.reaction_v(&initial.u)));
    let degenerate = |d: &Field| d.iter().any(|x| x.abs() <= 1e-8 * scale);
    if degenerate(&du) || degenerate(&dv) {
        return Err(Error::DegenerateRatio("initial stationary defect vanishes at some node".into()));
    }
    let ratio = |a: &Field, b: &Field| a.iter().zip(b.iter()).map(|(x, y)| x / y).fold(f64::INFINITY, f64::min);
    let ratio_term_1 = ratio(&du, &dv);
    let ratio_term_2 = ratio(&dv, &du);
    Ok(RatioConstants {
        c1: sqrt_term_1.min(ratio_term_1),
        c2: sqrt_term_2.min(ratio_term_2),
        sqrt_term_1,
        ratio_term_1,
        sqrt_term_2,
        ratio_term_2,
    })
}

/// Whether `initial` is a subsolution (`Δu₀ + λ α f(v₀) ≥ 0` and the
/// analogue for `v₀`), a supersolution, or neither.
pub fn defect_sign(problem: &Problem, initial: &PairField) -> Option<bool> {
    let (du, dv) = defects(problem, initial);
    let scale = norm_inf(&du).max(norm_inf(&dv)).max(1.0);
    let tol = 1e-9 * scale;
    if du.iter().chain(dv.iter()).all(|&x| x >= -tol) {
        Some(true)
    } else if du.iter().chain(dv.iter()).all(|&x| x <= tol) {
        Some(false)
    } else {
        None
    }
}

/// Rows `(t, x, u, v)` of a snapshot.
pub fn snapshot_rows(grid: &Grid, snap: &Snapshot) -> Vec<[f64; 4]> {
    (0..grid.len()).map(|k| [snap.t, grid.node(k)[0], snap.state.u[k], snap.state.v[k]]).collect()
}
