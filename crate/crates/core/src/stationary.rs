//! Minimal stationary solutions by monotone iteration, membership in the
//! existence region Λ, critical-curve tracing, a best-effort search for a
//! second (upper-branch) solution and the mass bounds satisfied by every
//! stationary solution.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Field, Grid};
use crate::linalg::{norm_inf, max_value};
use crate::model::{PairField, ParamPoint};
use crate::problem::Problem;
use crate::spectra::LinearizedOperator;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StationaryConfig {
    /// Sup-norm change between iterates that counts as converged.
    pub tol_stat: f64,
    pub max_iter: usize,
    /// Iterates reaching `1 - delta_blow` count as escaped.
    pub delta_blow: f64,
    /// Scaled sup-norm residual bound for accepted solutions.
    pub tol_res: f64,
}

impl Default for StationaryConfig {
    fn default() -> Self {
        Self { tol_stat: 1e-10, max_iter: 10_000, delta_blow: 1e-4, tol_res: 1e-8 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StationarySolution {
    pub w: Field,
    pub z: Field,
    pub params: ParamPoint,
    pub iterations: usize,
    pub final_change: f64,
    /// `max` of the two scaled sup-norm residuals.
    pub residual: f64,
}

impl StationarySolution {
    pub fn pair(&self) -> PairField {
        PairField::new(self.w.clone(), self.z.clone())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Evidence {
    /// Parameters lie outside the rectangle `(0, λ̄] × (0, μ̄]`.
    AnalyticBound { lambda_bar: f64, mu_bar: f64 },
    /// An iterate reached the blow-up gap.
    IterateEscape { iteration: usize, max: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub enum MembershipVerdict {
    InLambda(StationarySolution),
    NotInLambda(Evidence),
    /// Iteration cap reached before convergence or escape.
    Undetermined { iterations: usize, last_change: f64, max: f64 },
}

impl MembershipVerdict {
    pub fn solution(&self) -> Option<&StationarySolution> {
        match self {
            MembershipVerdict::InLambda(s) => Some(s),
            _ => None,
        }
    }

    pub fn into_solution(self) -> Option<StationarySolution> {
        match self {
            MembershipVerdict::InLambda(s) => Some(s),
            _ => None,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            MembershipVerdict::InLambda(_) => "in_lambda",
            MembershipVerdict::NotInLambda(_) => "not_in_lambda",
            MembershipVerdict::Undetermined { .. } => "undetermined",
        }
    }
}

/// Scaled sup-norm residuals of `-Δ_h w = λ α f(z)` and `-Δ_h z = μ β g(w)`.
pub fn stationary_residual(problem: &Problem, w: &[f64], z: &[f64]) -> f64 {
    let p = problem.params();
    let model = problem.model();
    let lap = problem.laplacian();
    let rw = lap.apply(w).sub(&problem.reaction_u(z));
    let rz = lap.apply(z).sub(&problem.reaction_v(w));
    let scale_w = p.lambda * norm_inf(problem.alpha()) * model.f.value(max_value(z).max(0.0));
    let scale_z = p.mu * norm_inf(problem.beta()) * model.g.value(max_value(w).max(0.0));
    (norm_inf(&rw) / scale_w).max(norm_inf(&rz) / scale_z)
}

/// Rectangle `(0, λ̄] × (0, μ̄]` containing Λ, from testing the system
/// against the first Laplacian eigenfunction.
pub fn analytic_nonexistence_bound(problem: &Problem) -> Result<(f64, f64)> {
    let eig = problem.laplacian_eigenpair()?;
    let grid = problem.grid();
    let model = problem.model();
    let lambda_bar = eig.lambda1 / (model.f.at_zero() * grid.inner(problem.alpha(), &eig.phi)?);
    let mu_bar = eig.lambda1 / (model.g.at_zero() * grid.inner(problem.beta(), &eig.phi)?);
    Ok((lambda_bar, mu_bar))
}

/// Monotone iteration from `(0, 0)`; see [`monotone_iteration_observed`].
pub fn monotone_minimal_solution(problem: &Problem, cfg: &StationaryConfig) -> Result<MembershipVerdict> {
    monotone_iteration_observed(problem, cfg, |_, _, _| {})
}

/// Monotone iteration
///
/// ```text
/// w₀ = z₀ = 0,   -Δ_h w_{n+1} = λ α f(z_n),   -Δ_h z_{n+1} = μ β g(w_n),
/// ```
///
/// carried out on increments: each step solves for `w_{n+1} - w_n` with the
/// nonnegative right-hand side `λ α (f(z_n) - f(z_{n-1}))`, so the iterates
/// are nondecreasing exactly, not just up to round-off. `observe` sees every
/// iterate `(n, w_n, z_n)`.
pub fn monotone_iteration_observed<F>(problem: &Problem, cfg: &StationaryConfig, mut observe: F) -> Result<MembershipVerdict>
where
    F: FnMut(usize, &Field, &Field),
{
    let (lambda_bar, mu_bar) = analytic_nonexistence_bound(problem)?;
    let p = problem.params();
    if p.lambda > lambda_bar || p.mu > mu_bar {
        return Ok(MembershipVerdict::NotInLambda(Evidence::AnalyticBound { lambda_bar, mu_bar }));
    }
    let n = problem.grid().len();
    let lap = problem.laplacian();
    let mut w = Field::zeros(n);
    let mut z = Field::zeros(n);
    let mut rhs_w = Field::zeros(n);
    let mut rhs_z = Field::zeros(n);
    let mut change = f64::INFINITY;
    let ceiling = 1.0 - cfg.delta_blow;
    observe(0, &w, &z);
    for it in 1..=cfg.max_iter {
        let new_w = problem.reaction_u(&z);
        let new_z = problem.reaction_v(&w);
        let inc_w: Vec<f64> = new_w.iter().zip(rhs_w.iter()).map(|(a, b)| (a - b).max(0.0)).collect();
        let inc_z: Vec<f64> = new_z.iter().zip(rhs_z.iter()).map(|(a, b)| (a - b).max(0.0)).collect();
        rhs_w = new_w;
        rhs_z = new_z;
        // CG round-off may leave tiny negative entries where the exact
        // increment is zero; the Thomas solve in 1D is exactly nonnegative.
        let dw = lap.solve(&inc_w)?.map(|d| d.max(0.0));
        let dz = lap.solve(&inc_z)?.map(|d| d.max(0.0));
        for k in 0..n {
            w[k] += dw[k];
            z[k] += dz[k];
        }
        observe(it, &w, &z);
        change = norm_inf(&dw).max(norm_inf(&dz));
        let top = w.max().max(z.max());
        if !top.is_finite() || top >= ceiling {
            return Ok(MembershipVerdict::NotInLambda(Evidence::IterateEscape { iteration: it, max: top }));
        }
        if change <= cfg.tol_stat {
            let residual = stationary_residual(problem, &w, &z);
            if residual <= cfg.tol_res {
                return Ok(MembershipVerdict::InLambda(StationarySolution {
                    w,
                    z,
                    params: p,
                    iterations: it,
                    final_change: change,
                    residual,
                }));
            }
        }
    }
    Ok(MembershipVerdict::Undetermined { iterations: cfg.max_iter, last_change: change, max: w.max().max(z.max()) })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurveOptions {
    /// Relative bracket width at which bisection stops.
    pub bisect_tol: f64,
    /// Smallest value probed on the opposite axis.
    pub floor: f64,
    pub stationary: StationaryConfig,
    /// Largest iteration cap reached by doubling on undetermined verdicts.
    pub max_iter_cap: usize,
}

impl Default for CurveOptions {
    fn default() -> Self {
        Self { bisect_tol: 1e-3, floor: 1e-6, stationary: StationaryConfig::default(), max_iter_cap: 160_000 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BracketStatus {
    Converged,
    /// Accepted at its current width after the iteration cap was exhausted.
    WidthCapped,
}

/// Bracket `[lo, hi]` with `lo` inside Λ and `hi` outside.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Bracket {
    pub lo: f64,
    pub hi: f64,
    pub status: BracketStatus,
}

impl Bracket {
    pub fn mid(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurveSample {
    pub lambda: f64,
    /// `None` when no InLambda point exists at the floor (`λ ≥ λ*`).
    pub bracket: Option<Bracket>,
}

impl CurveSample {
    pub fn gamma(&self) -> Option<f64> {
        self.bracket.map(|b| b.mid())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriticalCurve {
    pub samples: Vec<CurveSample>,
    /// Intercept with the λ axis, probed at `μ = floor`.
    pub lambda_star: Bracket,
    /// Intercept with the μ axis, probed at `λ = floor`.
    pub mu_star: Bracket,
    /// Crossing with the diagonal `λ = μ`.
    pub diagonal: Bracket,
}

impl CriticalCurve {
    /// Diagonal crossing of the polyline through the samples, if any.
    pub fn diagonal_crossing_from_samples(&self) -> Option<f64> {
        let pts: Vec<(f64, f64)> = self.samples.iter().filter_map(|s| Some((s.lambda, s.gamma()?))).collect();
        pts.windows(2).find_map(|w| {
            let (a, b) = (w[0].1 - w[0].0, w[1].1 - w[1].0);
            if a >= 0.0 && b <= 0.0 && a != b {
                let t = a / (a - b);
                Some(w[0].0 + t * (w[1].0 - w[0].0))
            } else {
                None
            }
        })
    }

    /// Largest increase of Γ between consecutive samples beyond the bracket
    /// widths; zero or less means Γ is non-increasing.
    pub fn monotonicity_defect(&self) -> f64 {
        let br: Vec<Bracket> = self.samples.iter().filter_map(|s| s.bracket).collect();
        br.windows(2).map(|w| w[1].lo - w[0].hi).fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Bisection on a one-parameter family of parameter points between a known
/// InLambda value `lo` and a known NotInLambda value `hi`.
pub fn bisect_family<P>(problem: &Problem, point: P, mut lo: f64, mut hi: f64, opts: &CurveOptions) -> Result<Bracket>
where
    P: Fn(f64) -> ParamPoint,
{
    let mut cfg = opts.stationary;
    let mut status = BracketStatus::Converged;
    while hi - lo > opts.bisect_tol * hi {
        let mid = 0.5 * (lo + hi);
        match monotone_minimal_solution(&problem.with_params(point(mid)), &cfg)? {
            MembershipVerdict::InLambda(_) => lo = mid,
            MembershipVerdict::NotInLambda(_) => hi = mid,
            MembershipVerdict::Undetermined { .. } => {
                if cfg.max_iter >= opts.max_iter_cap {
                    status = BracketStatus::WidthCapped;
                    break;
                }
                cfg.max_iter = (2 * cfg.max_iter).min(opts.max_iter_cap);
            }
        }
    }
    Ok(Bracket { lo, hi, status })
}

fn in_lambda(problem: &Problem, at: ParamPoint, opts: &CurveOptions) -> Result<bool> {
    Ok(matches!(monotone_minimal_solution(&problem.with_params(at), &opts.stationary)?, MembershipVerdict::InLambda(_)))
}

/// Γ at one λ: bisection in μ between the floor and just above μ̄.
pub fn critical_mu(problem: &Problem, lambda: f64, opts: &CurveOptions) -> Result<Bracket> {
    let (_, mu_bar) = analytic_nonexistence_bound(problem)?;
    if !in_lambda(problem, ParamPoint { lambda, mu: opts.floor }, opts)? {
        return Err(Error::BracketInit { lambda, mu_floor: opts.floor });
    }
    bisect_family(problem, |mu| ParamPoint { lambda, mu }, opts.floor, mu_bar * (1.0 + 1e-9), opts)
}

/// Samples of the critical curve `μ = Γ(λ)` plus its axis intercepts and its
/// diagonal crossing; samples are evaluated in parallel.
pub fn trace_critical_curve(problem: &Problem, lambda_samples: &[f64], opts: &CurveOptions) -> Result<CriticalCurve> {
    let (lambda_bar, mu_bar) = analytic_nonexistence_bound(problem)?;
    let samples = lambda_samples
        .par_iter()
        .map(|&lambda| match critical_mu(problem, lambda, opts) {
            Ok(b) => Ok(CurveSample { lambda, bracket: Some(b) }),
            Err(Error::BracketInit { .. }) => Ok(CurveSample { lambda, bracket: None }),
            Err(e) => Err(e),
        })
        .collect::<Result<Vec<_>>>()?;
    let floor = opts.floor;
    let axes: Vec<Result<Bracket>> = (0..3usize)
        .into_par_iter()
        .map(|which| match which {
            0 => bisect_family(problem, |l| ParamPoint { lambda: l, mu: floor }, floor, lambda_bar * (1.0 + 1e-9), opts),
            1 => bisect_family(problem, |m| ParamPoint { lambda: floor, mu: m }, floor, mu_bar * (1.0 + 1e-9), opts),
            _ => bisect_family(problem, ParamPoint::symmetric, floor, lambda_bar.min(mu_bar) * (1.0 + 1e-9), opts),
        })
        .collect();
    let mut axes = axes.into_iter();
    let lambda_star = axes.next().expect("three axes")?;
    let mu_star = axes.next().expect("three axes")?;
    let diagonal = axes.next().expect("three axes")?;
    Ok(CriticalCurve { samples, lambda_star, mu_star, diagonal })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NewtonOptions {
    pub max_iter: usize,
    /// Scaled residual target.
    pub tol: f64,
    /// Scaled residual still accepted when the line search stalls at
    /// roundoff before reaching `tol`.
    pub accept: f64,
    pub delta_blow: f64,
    /// A candidate this close to the minimal solution (sup norm) counts as
    /// the minimal solution itself.
    pub distinct: f64,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self { max_iter: 100, tol: 1e-12, accept: 1e-8, delta_blow: 1e-4, distinct: 1e-6 }
    }
}

/// Damped Newton iteration for the discrete stationary system from `seed`.
/// The Jacobian is the linearized coupled operator. Returns `None` when the
/// iteration stalls or leaves `[0, 1 - δ)`.
pub fn newton_stationary(problem: &Problem, seed: &PairField, opts: &NewtonOptions) -> Result<Option<StationarySolution>> {
    let n = problem.grid().len();
    let lap = problem.laplacian();
    let ceiling = 1.0 - opts.delta_blow;
    let residual_vec = |w: &Field, z: &Field| -> Vec<f64> {
        let rw = lap.apply(w).sub(&problem.reaction_u(z));
        let rz = lap.apply(z).sub(&problem.reaction_v(w));
        rw.iter().chain(rz.iter()).copied().collect()
    };
    let (mut w, mut z) = (seed.u.clone(), seed.v.clone());
    let stalled = |w: Field, z: Field, iterations: usize, final_change: f64| {
        let residual = stationary_residual(problem, &w, &z);
        (iterations > 0 && residual <= opts.accept)
            .then(|| StationarySolution { w, z, params: problem.params(), iterations, final_change, residual })
    };
    let mut r = residual_vec(&w, &z);
    let mut rnorm = norm_inf(&r);
    for it in 1..=opts.max_iter {
        let jac = LinearizedOperator::at_state(problem, &w, &z)?;
        let delta = match jac.solve_shifted(0.0, &r) {
            Ok(d) => d,
            Err(Error::SingularMatrix(_)) => return Ok(None),
            Err(e) => return Err(e),
        };
        let mut theta = 1.0;
        let accepted = loop {
            let tw: Field = Field::from((0..n).map(|k| w[k] - theta * delta[k]).collect::<Vec<_>>());
            let tz: Field = Field::from((0..n).map(|k| z[k] - theta * delta[n + k]).collect::<Vec<_>>());
            let in_range = tw.iter().chain(tz.iter()).all(|&x| (0.0..ceiling).contains(&x));
            if in_range {
                let tr = residual_vec(&tw, &tz);
                let tn = norm_inf(&tr);
                if tn.is_finite() && tn < rnorm * (1.0 - 1e-4 * theta) {
                    break Some((tw, tz, tr, tn));
                }
            }
            theta *= 0.5;
            if theta < 1e-6 {
                break None;
            }
        };
        let Some((tw, tz, tr, tn)) = accepted else {
            return Ok(stalled(w, z, it - 1, 0.0));
        };
        w = tw;
        z = tz;
        r = tr;
        rnorm = tn;
        let scaled = stationary_residual(problem, &w, &z);
        if scaled <= opts.tol {
            return Ok(Some(StationarySolution {
                w,
                z,
                params: problem.params(),
                iterations: it,
                final_change: theta * norm_inf(&delta),
                residual: scaled,
            }));
        }
    }
    Ok(stalled(w, z, opts.max_iter, 0.0))
}

/// Seed for the upper-branch search: the minimal solution raised to
/// `amplitude` times the first sine mode wherever that is larger.
pub fn elevated_seed(grid: &Grid, minimal: &StationarySolution, amplitude: f64) -> PairField {
    let s = grid.sine_mode();
    let lift = |base: &Field| Field::from(base.iter().zip(s.iter()).map(|(b, m)| b.max(amplitude * m)).collect::<Vec<_>>());
    PairField::new(lift(&minimal.w), lift(&minimal.z))
}

/// Best-effort search for a stationary solution above the minimal one.
///
/// Returns `None` if Newton fails or lands back on the minimal solution or on
/// a solution that is not ordered above it.
pub fn second_solution_from(
    problem: &Problem,
    minimal: &StationarySolution,
    seed_amplitude: f64,
    opts: &NewtonOptions,
) -> Result<Option<StationarySolution>> {
    let seed = elevated_seed(problem.grid(), minimal, seed_amplitude);
    let Some(sol) = newton_stationary(problem, &seed, opts)? else {
        return Ok(None);
    };
    let dw = sol.w.sub(&minimal.w);
    let dz = sol.z.sub(&minimal.z);
    let gap = dw.max().max(dz.max());
    let floor = dw.min().min(dz.min());
    if gap <= opts.distinct || floor < -opts.distinct * 1e-3 {
        return Ok(None);
    }
    Ok(Some(sol))
}

/// Runs the monotone iteration first; parameters outside Λ violate the
/// precondition.
pub fn second_solution_search(
    problem: &Problem,
    cfg: &StationaryConfig,
    seed_amplitude: f64,
) -> Result<Option<StationarySolution>> {
    match monotone_minimal_solution(problem, cfg)? {
        MembershipVerdict::InLambda(min) => second_solution_from(problem, &min, seed_amplitude, &NewtonOptions::default()),
        other => Err(Error::Precondition(format!("second solution search needs InLambda parameters, got {}", other.label()))),
    }
}

/// Tries a list of seed amplitudes in order and returns the first success.
pub fn second_solution_scan(
    problem: &Problem,
    minimal: &StationarySolution,
    amplitudes: &[f64],
) -> Result<Option<StationarySolution>> {
    for &a in amplitudes {
        if let Some(s) = second_solution_from(problem, minimal, a, &NewtonOptions::default())? {
            return Ok(Some(s));
        }
    }
    Ok(None)
}

/// Flags a strictly ordered triple `minimal ≪ first ≪ second` (margin
/// `gamma · dist(x, ∂Ω)` at every node), which cannot exist for the
/// continuous problem and therefore marks a numerical artifact.
pub fn ordered_triple_artifact(grid: &Grid, minimal: &PairField, first: &PairField, second: &PairField, gamma: f64) -> bool {
    let strictly_above = |lo: &Field, hi: &Field| (0..grid.len()).all(|k| hi[k] - lo[k] >= gamma * grid.dist_to_boundary(k));
    strictly_above(&minimal.u, &first.u)
        && strictly_above(&minimal.v, &first.v)
        && strictly_above(&first.u, &second.u)
        && strictly_above(&first.v, &second.v)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MassBoundReport {
    pub int_w_phi: f64,
    pub int_z_phi: f64,
    /// `λ₁ ∫(φ/α) / (λ f(0))`; infinite where `α` vanishes.
    pub bound_w: f64,
    /// `λ₁ ∫(φ/β) / (μ g(0))`.
    pub bound_z: f64,
    pub passed: bool,
}

/// `∫ φ / a` over the grid; infinite when `a` vanishes at some node.
pub(crate) fn weighted_inverse_integral(grid: &Grid, phi: &[f64], a: &[f64]) -> Result<f64> {
    grid.check(a)?;
    if a.iter().any(|&x| x <= 0.0) {
        return Ok(f64::INFINITY);
    }
    let ratio: Vec<f64> = phi.iter().zip(a).map(|(p, x)| p / x).collect();
    grid.integrate(&ratio)
}

/// Checks `∫ w φ ≤ λ₁ ∫(φ/α) / (λ f(0))` and the analogous bound for `z`;
/// both must hold for every stationary solution.
pub fn mass_bound_check(problem: &Problem, w: &[f64], z: &[f64]) -> Result<MassBoundReport> {
    let eig = problem.laplacian_eigenpair()?;
    let grid = problem.grid();
    let model = problem.model();
    let p = problem.params();
    let int_w_phi = grid.inner(w, &eig.phi)?;
    let int_z_phi = grid.inner(z, &eig.phi)?;
    let k_alpha = weighted_inverse_integral(grid, &eig.phi, problem.alpha())?;
    let k_beta = weighted_inverse_integral(grid, &eig.phi, problem.beta())?;
    let bound_w = eig.lambda1 * k_alpha / (p.lambda * model.f.at_zero());
    let bound_z = eig.lambda1 * k_beta / (p.mu * model.g.at_zero());
    let passed = bound_w - int_w_phi >= -1e-8 && bound_z - int_z_phi >= -1e-8;
    Ok(MassBoundReport { int_w_phi, int_z_phi, bound_w, bound_z, passed })
}
