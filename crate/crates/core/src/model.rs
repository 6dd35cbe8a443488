//! Nonlinearities `f`, `g`, permittivity profiles `α`, `β`, parameter points
//! and initial-data recipes for the coupled system
//!
//! ```text
//! u_t - Δu = λ α(x) f(v),   v_t - Δv = μ β(x) g(u),   u = v = 0 on ∂Ω.
//! ```
//!
//! Every nonlinearity blows up at level 1. If `g` blows up at `a` and `f` at
//! `b`, pre-scale with `ũ = u / a`, `ṽ = v / b`, `f̃(s) = f(b s)`,
//! `g̃(s) = g(a s)`: the system keeps its form with `λ / a` and `μ / b`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Field, Grid};

/// Euler–Mascheroni constant.
const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Exponential integral `Ei(x)` for `x > 0` by its power series; all terms
/// are positive so the sum is free of cancellation.
pub(crate) fn exp_integral_ei(x: f64) -> f64 {
    debug_assert!(x > 0.0);
    let mut term = 1.0;
    let mut sum = 0.0;
    let mut k = 1.0;
    loop {
        term *= x / k;
        let add = term / k;
        sum += add;
        if !sum.is_finite() {
            return f64::INFINITY;
        }
        if k > x && add < 1e-17 * sum {
            break;
        }
        k += 1.0;
    }
    EULER_GAMMA + x.ln() + sum
}

/// A nonlinearity satisfying positivity, monotonicity and strict convexity on
/// `[0, 1)` with `f(s) → ∞` as `s → 1⁻`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Nonlinearity {
    /// `1 - ln(1 - s)`
    Log,
    /// `exp(1 / (1 - s))`
    Exp,
    /// `(1 - s)^(-p)` with `p > 0`
    Power { p: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Order {
    Value,
    D1,
    D2,
    Antideriv,
}

impl Nonlinearity {
    pub fn power(p: f64) -> Result<Self> {
        if !(p.is_finite() && p > 0.0) {
            return Err(Error::InvalidParameter(format!("power exponent must be positive, got {p}")));
        }
        Ok(Nonlinearity::Power { p })
    }

    /// The MEMS nonlinearity `(1 - s)^(-2)`.
    pub fn mems() -> Self {
        Nonlinearity::Power { p: 2.0 }
    }

    pub fn eval(&self, s: f64, order: Order) -> Result<f64> {
        if !(0.0..1.0).contains(&s) {
            return Err(Error::Domain { value: s });
        }
        Ok(match order {
            Order::Value => self.value(s),
            Order::D1 => self.d1(s),
            Order::D2 => self.d2(s),
            Order::Antideriv => self.antideriv(s),
        })
    }

    // The unchecked evaluators below assume `0 <= s < 1`; callers that hold
    // states validated against the blow-up level use them directly.

    pub fn value(&self, s: f64) -> f64 {
        let r = 1.0 - s;
        match *self {
            Nonlinearity::Log => 1.0 - r.ln(),
            Nonlinearity::Exp => (1.0 / r).exp(),
            Nonlinearity::Power { p } => r.powf(-p),
        }
    }

    pub fn d1(&self, s: f64) -> f64 {
        let r = 1.0 - s;
        match *self {
            Nonlinearity::Log => 1.0 / r,
            Nonlinearity::Exp => (1.0 / r).exp() / (r * r),
            Nonlinearity::Power { p } => p * r.powf(-p - 1.0),
        }
    }

    pub fn d2(&self, s: f64) -> f64 {
        let r = 1.0 - s;
        match *self {
            Nonlinearity::Log => 1.0 / (r * r),
            Nonlinearity::Exp => (1.0 / r).exp() * (1.0 + 2.0 * r) / r.powi(4),
            Nonlinearity::Power { p } => p * (p + 1.0) * r.powf(-p - 2.0),
        }
    }

    /// `∫₀ˢ f(t) dt`.
    pub fn antideriv(&self, s: f64) -> f64 {
        let r = 1.0 - s;
        match *self {
            Nonlinearity::Log => 2.0 * s + r * r.ln(),
            Nonlinearity::Exp => {
                if s < 1e-3 {
                    // Taylor series about 0: f(0) = e, f' = e, f'' = 3e, f''' = 13e
                    let e = std::f64::consts::E;
                    e * s * (1.0 + s * (0.5 + s * (0.5 + s * 13.0 / 24.0)))
                } else {
                    let y = 1.0 / r;
                    let e = std::f64::consts::E;
                    (exp_integral_ei(y) - exp_integral_ei(1.0)) - (y.exp() / y - e)
                }
            }
            Nonlinearity::Power { p } => {
                if p == 1.0 {
                    -r.ln()
                } else {
                    ((1.0 - p) * r.ln()).exp_m1() / (p - 1.0)
                }
            }
        }
    }

    pub fn at_zero(&self) -> f64 {
        self.value(0.0)
    }

    pub fn name(&self) -> String {
        match self {
            Nonlinearity::Log => "log".into(),
            Nonlinearity::Exp => "exp".into(),
            Nonlinearity::Power { p } => format!("power(p={p})"),
        }
    }
}

/// Nonnegative permittivity profile, sampled onto a grid on demand.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Profile {
    Constant { c: f64 },
    /// `c · exp(-k |x - x0|²)`; `y0` is ignored in 1D.
    Bump { c: f64, k: f64, x0: f64, #[serde(default)] y0: f64 },
    /// `c · dist(x, ∂Ω)^kappa`
    PowerDist { c: f64, kappa: f64 },
}

impl Profile {
    pub fn constant(c: f64) -> Self {
        Profile::Constant { c }
    }

    pub fn sample(&self, grid: &Grid) -> Field {
        let dim = grid.dimension();
        match *self {
            Profile::Constant { c } => Field::constant(grid.len(), c),
            Profile::Bump { c, k, x0, y0 } => grid.sample(|[x, y]| {
                let d2 = if dim == 1 { (x - x0).powi(2) } else { (x - x0).powi(2) + (y - y0).powi(2) };
                c * (-k * d2).exp()
            }),
            Profile::PowerDist { c, kappa } => {
                Field::from((0..grid.len()).map(|i| c * grid.dist_to_boundary(i).powf(kappa)).collect::<Vec<_>>())
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamPoint {
    pub lambda: f64,
    pub mu: f64,
}

impl ParamPoint {
    pub fn new(lambda: f64, mu: f64) -> Result<Self> {
        if !(lambda.is_finite() && lambda > 0.0 && mu.is_finite() && mu > 0.0) {
            return Err(Error::InvalidParameter(format!("lambda and mu must be positive, got ({lambda}, {mu})")));
        }
        Ok(Self { lambda, mu })
    }

    pub fn symmetric(t: f64) -> Self {
        Self { lambda: t, mu: t }
    }
}

/// Nonlinearities, profiles and parameters of one configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Model {
    pub f: Nonlinearity,
    pub g: Nonlinearity,
    pub alpha: Profile,
    pub beta: Profile,
    pub params: ParamPoint,
}

impl Model {
    /// `f = g = (1-s)^-2`, `α = β ≡ 1`.
    pub fn mems(lambda: f64, mu: f64) -> Self {
        Self {
            f: Nonlinearity::mems(),
            g: Nonlinearity::mems(),
            alpha: Profile::constant(1.0),
            beta: Profile::constant(1.0),
            params: ParamPoint { lambda, mu },
        }
    }

    pub fn with_params(&self, params: ParamPoint) -> Self {
        Self { params, ..*self }
    }
}

/// A sampled pair `(u, v)` on interior nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairField {
    pub u: Field,
    pub v: Field,
}

impl PairField {
    pub fn new(u: Field, v: Field) -> Self {
        Self { u, v }
    }

    pub fn zeros(n: usize) -> Self {
        Self { u: Field::zeros(n), v: Field::zeros(n) }
    }

    pub fn max(&self) -> f64 {
        self.u.max().max(self.v.max())
    }

    /// First node where either component leaves `[0, 1)`.
    pub fn range_violation(&self) -> Option<(usize, f64)> {
        for (k, (&a, &b)) in self.u.iter().zip(self.v.iter()).enumerate() {
            for x in [a, b] {
                if !(0.0..1.0).contains(&x) {
                    return Some((k, x));
                }
            }
        }
        None
    }

    /// `self <= other` componentwise, with slack `tol`.
    pub fn le(&self, other: &PairField, tol: f64) -> bool {
        let le = |a: &Field, b: &Field| a.iter().zip(b.iter()).all(|(x, y)| *x <= *y + tol);
        le(&self.u, &other.u) && le(&self.v, &other.v)
    }
}

/// Recipes for initial data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "recipe", rename_all = "snake_case")]
pub enum InitialData {
    Zero,
    /// `s · (w, z)` with `(w, z)` the minimal solution.
    ScaledMinimal { s: f64 },
    /// `s · (w, z) + (1 - s) · (w₁, z₁)`, between the minimal solution and a
    /// second solution.
    ConvexCombo { s: f64 },
    /// `(1 + ε)(w₁, z₁) - ε (w, z)`, above the second solution.
    AboveSecond { eps: f64 },
    /// Amplitudes times the first Dirichlet sine mode, one per component.
    Sine { amp_u: f64, amp_v: f64 },
    #[serde(skip)]
    Explicit(PairField),
}

/// Stationary solutions an initial-data recipe may refer to.
#[derive(Debug, Clone, Copy, Default)]
pub struct InitialContext<'a> {
    pub minimal: Option<&'a PairField>,
    pub second: Option<&'a PairField>,
}

pub fn materialize_initial(recipe: &InitialData, grid: &Grid, ctx: InitialContext<'_>) -> Result<PairField> {
    let minimal = || ctx.minimal.ok_or(Error::MissingContext("minimal"));
    let second = || ctx.second.ok_or(Error::MissingContext("second"));
    let pair = match recipe {
        InitialData::Zero => PairField::zeros(grid.len()),
        InitialData::ScaledMinimal { s } => {
            if !(0.0..=1.0).contains(s) {
                return Err(Error::InvalidParameter(format!("scaled_minimal needs s in [0, 1], got {s}")));
            }
            let m = minimal()?;
            if *s == 1.0 {
                m.clone()
            } else {
                PairField::new(m.u.scale(*s), m.v.scale(*s))
            }
        }
        InitialData::ConvexCombo { s } => {
            if !(*s > 0.0 && *s < 1.0) {
                return Err(Error::InvalidParameter(format!("convex_combo needs s in (0, 1), got {s}")));
            }
            let (m, w1) = (minimal()?, second()?);
            PairField::new(m.u.combine(*s, &w1.u, 1.0 - s), m.v.combine(*s, &w1.v, 1.0 - s))
        }
        InitialData::AboveSecond { eps } => {
            if !(*eps > 0.0) {
                return Err(Error::InvalidParameter(format!("above_second needs eps > 0, got {eps}")));
            }
            let (m, w1) = (minimal()?, second()?);
            PairField::new(w1.u.combine(1.0 + eps, &m.u, -eps), w1.v.combine(1.0 + eps, &m.v, -eps))
        }
        InitialData::Sine { amp_u, amp_v } => {
            let s = grid.sine_mode();
            PairField::new(s.scale(*amp_u), s.scale(*amp_v))
        }
        InitialData::Explicit(p) => {
            grid.check(&p.u)?;
            grid.check(&p.v)?;
            p.clone()
        }
    };
    if let Some((node, max)) = pair.range_violation() {
        return Err(Error::Range { node, max });
    }
    Ok(pair)
}

/// Outcome of [`validate_hypotheses`]: `violation` names the first failed
/// predicate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HypothesisReport {
    pub passed: bool,
    pub violation: Option<String>,
}

const LATTICE_TOP: f64 = 1.0 - 1e-6;
const LATTICE_POINTS: usize = 2000;

fn check_nonlinearity(name: &str, nl: &Nonlinearity) -> Option<String> {
    let mut prev: Option<(f64, f64)> = None;
    for k in 0..=LATTICE_POINTS {
        let s = LATTICE_TOP * k as f64 / LATTICE_POINTS as f64;
        let (v, d1, d2) = (nl.value(s), nl.d1(s), nl.d2(s));
        if v.is_nan() || v <= 0.0 {
            return Some(format!("{name} positive"));
        }
        if d1.is_nan() || d1 <= 0.0 {
            return Some(format!("{name} increasing"));
        }
        if d2.is_nan() || d2 <= 0.0 {
            return Some(format!("{name} strictly convex"));
        }
        if let Some((pv, pd)) = prev {
            if v.is_finite() && v <= pv {
                return Some(format!("{name} increasing"));
            }
            if d1.is_finite() && d1 <= pd {
                return Some(format!("{name} strictly convex"));
            }
        }
        prev = Some((v, d1));
    }
    None
}

fn check_profile(name: &str, field: &Field) -> Option<String> {
    if field.iter().any(|&a| !a.is_finite() || a < 0.0) {
        return Some(format!("{name} nonnegative"));
    }
    if field.iter().all(|&a| a == 0.0) {
        return Some(format!("{name} nontrivial"));
    }
    None
}

/// Lattice-based check of the structural hypotheses on `f`, `g`, the
/// profiles, the parameters and (optionally) the initial data.
pub fn validate_hypotheses(model: &Model, grid: &Grid, initial: Option<&PairField>) -> HypothesisReport {
    let violation = (|| {
        if !(model.params.lambda > 0.0) {
            return Some("lambda positive".to_string());
        }
        if !(model.params.mu > 0.0) {
            return Some("mu positive".to_string());
        }
        if let Nonlinearity::Power { p } = model.f {
            if !(p > 0.0) {
                return Some("f exponent positive".into());
            }
        }
        if let Nonlinearity::Power { p } = model.g {
            if !(p > 0.0) {
                return Some("g exponent positive".into());
            }
        }
        check_nonlinearity("f", &model.f)
            .or_else(|| check_nonlinearity("g", &model.g))
            .or_else(|| check_profile("alpha", &model.alpha.sample(grid)))
            .or_else(|| check_profile("beta", &model.beta.sample(grid)))
            .or_else(|| {
                let init = initial?;
                if init.u.len() != grid.len() || init.v.len() != grid.len() {
                    return Some("initial data on grid".into());
                }
                if init.u.iter().chain(init.v.iter()).any(|&x| !(x >= 0.0)) {
                    return Some("initial data nonnegative".into());
                }
                if init.u.iter().chain(init.v.iter()).any(|&x| x >= 1.0) {
                    return Some("initial data below blow-up level".into());
                }
                None
            })
    })();
    HypothesisReport { passed: violation.is_none(), violation }
}
