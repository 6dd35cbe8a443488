//! Structured grids on intervals and rectangles, sampled fields, the
//! Dirichlet Laplacian `-Δ_h`, composite quadrature and the first Laplacian
//! eigenpair.
//!
//! Only interior nodes are stored; boundary values are zero.

use serde::{Deserialize, Serialize};
use std::ops::{Deref, DerefMut};

use crate::error::{Error, Result};
use crate::linalg::{self, dot, norm2};

/// Relative residual target for Poisson-type solves.
pub const TOL_LIN: f64 = 1e-12;
/// Relative eigen-residual target for inverse power iteration.
pub const TOL_EIGEN: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Domain {
    Interval { a: f64, b: f64 },
    Rectangle { ax: f64, bx: f64, ay: f64, by: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    domain: Domain,
    nx: usize,
    ny: usize,
    hx: f64,
    hy: f64,
    weights: Vec<f64>,
}

/// Composite trapezoid weights for one axis with zero boundary values; the
/// two end nodes absorb the half cells next to the boundary so constants
/// integrate exactly.
fn axis_weights(n: usize, h: f64) -> Vec<f64> {
    if n == 1 {
        return vec![2.0 * h];
    }
    let mut w = vec![h; n];
    w[0] = 1.5 * h;
    w[n - 1] = 1.5 * h;
    w
}

impl Grid {
    pub fn interval(a: f64, b: f64, n: usize) -> Result<Self> {
        if !(a.is_finite() && b.is_finite() && b > a) {
            return Err(Error::InvalidGrid(format!("interval ({a}, {b}) is empty")));
        }
        if n == 0 {
            return Err(Error::InvalidGrid("need at least one interior node".into()));
        }
        let h = (b - a) / (n as f64 + 1.0);
        Ok(Self { domain: Domain::Interval { a, b }, nx: n, ny: 1, hx: h, hy: 0.0, weights: axis_weights(n, h) })
    }

    pub fn unit_interval(n: usize) -> Self {
        Self::interval(0.0, 1.0, n).expect("unit interval is valid")
    }

    pub fn rectangle(x: (f64, f64), y: (f64, f64), nx: usize, ny: usize) -> Result<Self> {
        let ok = |lo: f64, hi: f64| lo.is_finite() && hi.is_finite() && hi > lo;
        if !ok(x.0, x.1) || !ok(y.0, y.1) {
            return Err(Error::InvalidGrid(format!("rectangle {x:?} x {y:?} is empty")));
        }
        if nx == 0 || ny == 0 {
            return Err(Error::InvalidGrid("need at least one interior node per axis".into()));
        }
        let hx = (x.1 - x.0) / (nx as f64 + 1.0);
        let hy = (y.1 - y.0) / (ny as f64 + 1.0);
        let wx = axis_weights(nx, hx);
        let wy = axis_weights(ny, hy);
        let weights = wy.iter().flat_map(|wj| wx.iter().map(move |w| w * wj)).collect();
        Ok(Self { domain: Domain::Rectangle { ax: x.0, bx: x.1, ay: y.0, by: y.1 }, nx, ny, hx, hy, weights })
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn dimension(&self) -> usize {
        match self.domain {
            Domain::Interval { .. } => 1,
            Domain::Rectangle { .. } => 2,
        }
    }

    /// Interior nodes per axis (`ny == 1` in 1D).
    pub fn shape(&self) -> (usize, usize) {
        (self.nx, self.ny)
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn hx(&self) -> f64 {
        self.hx
    }

    /// Zero for 1D grids.
    pub fn hy(&self) -> f64 {
        self.hy
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Area (or length) of one grid cell.
    pub fn cell_measure(&self) -> f64 {
        match self.domain {
            Domain::Interval { .. } => self.hx,
            Domain::Rectangle { .. } => self.hx * self.hy,
        }
    }

    pub fn measure(&self) -> f64 {
        match self.domain {
            Domain::Interval { a, b } => b - a,
            Domain::Rectangle { ax, bx, ay, by } => (bx - ax) * (by - ay),
        }
    }

    /// Coordinates of interior node `k`; the second entry is 0 in 1D.
    pub fn node(&self, k: usize) -> [f64; 2] {
        let (i, j) = (k % self.nx, k / self.nx);
        match self.domain {
            Domain::Interval { a, .. } => [a + (i as f64 + 1.0) * self.hx, 0.0],
            Domain::Rectangle { ax, ay, .. } => [ax + (i as f64 + 1.0) * self.hx, ay + (j as f64 + 1.0) * self.hy],
        }
    }

    pub fn dist_to_boundary(&self, k: usize) -> f64 {
        let [x, y] = self.node(k);
        match self.domain {
            Domain::Interval { a, b } => (x - a).min(b - x),
            Domain::Rectangle { ax, bx, ay, by } => (x - ax).min(bx - x).min(y - ay).min(by - y),
        }
    }

    pub fn sample<F: Fn([f64; 2]) -> f64>(&self, f: F) -> Field {
        Field::from((0..self.len()).map(|k| f(self.node(k))).collect::<Vec<_>>())
    }

    /// Product of `sin(π (x - a) / (b - a))` over the axes: the continuous
    /// first Dirichlet mode, with maximum 1.
    pub fn sine_mode(&self) -> Field {
        let domain = self.domain;
        self.sample(|[x, y]| match domain {
            Domain::Interval { a, b } => (std::f64::consts::PI * (x - a) / (b - a)).sin(),
            Domain::Rectangle { ax, bx, ay, by } => {
                (std::f64::consts::PI * (x - ax) / (bx - ax)).sin() * (std::f64::consts::PI * (y - ay) / (by - ay)).sin()
            }
        })
    }

    pub fn check(&self, field: &[f64]) -> Result<()> {
        if field.len() != self.len() {
            return Err(Error::GridMismatch { expected: self.len(), found: field.len() });
        }
        Ok(())
    }

    /// Composite quadrature of a field over the domain.
    pub fn integrate(&self, field: &[f64]) -> Result<f64> {
        self.check(field)?;
        Ok(dot(&self.weights, field))
    }

    /// Quadrature of a pointwise product; both fields must live on this grid.
    pub fn inner(&self, a: &[f64], b: &[f64]) -> Result<f64> {
        self.check(a)?;
        self.check(b)?;
        Ok(self.weights.iter().zip(a).zip(b).map(|((w, x), y)| w * x * y).sum())
    }

    pub fn l2_norm_sq(&self, a: &[f64]) -> Result<f64> {
        self.inner(a, a)
    }
}

/// Free-function form of [`Grid::integrate`].
pub fn integrate(field: &[f64], grid: &Grid) -> Result<f64> {
    grid.integrate(field)
}

/// Values at interior grid nodes.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Field(Vec<f64>);

impl Field {
    pub fn zeros(n: usize) -> Self {
        Self(vec![0.0; n])
    }

    pub fn constant(n: usize, c: f64) -> Self {
        Self(vec![c; n])
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn max(&self) -> f64 {
        linalg::max_value(&self.0)
    }

    pub fn min(&self) -> f64 {
        linalg::min_value(&self.0)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Field {
        Field(self.0.iter().map(|&x| f(x)).collect())
    }

    /// `a * self + b * other`, pointwise.
    pub fn combine(&self, a: f64, other: &Field, b: f64) -> Field {
        Field(self.0.iter().zip(&other.0).map(|(x, y)| a * x + b * y).collect())
    }

    pub fn sub(&self, other: &Field) -> Field {
        self.combine(1.0, other, -1.0)
    }

    pub fn scale(&self, s: f64) -> Field {
        self.map(|x| s * x)
    }
}

impl From<Vec<f64>> for Field {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

impl Deref for Field {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl DerefMut for Field {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

/// `-Δ_h` with homogeneous Dirichlet conditions folded in: the 3-point
/// stencil in 1D and the 5-point stencil in 2D, applied matrix-free.
#[derive(Debug, Clone, PartialEq)]
pub struct Laplacian {
    nx: usize,
    ny: usize,
    cx: f64,
    cy: f64,
}

pub fn assemble_laplacian(grid: &Grid) -> Laplacian {
    Laplacian::new(grid)
}

impl Laplacian {
    pub fn new(grid: &Grid) -> Self {
        let (nx, ny) = grid.shape();
        let cx = 1.0 / (grid.hx() * grid.hx());
        let cy = if grid.dimension() == 2 { 1.0 / (grid.hy() * grid.hy()) } else { 0.0 };
        Self { nx, ny, cx, cy }
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_1d(&self) -> bool {
        self.cy == 0.0
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn diagonal(&self) -> f64 {
        2.0 * self.cx + 2.0 * self.cy
    }

    /// Stencil neighbours of node `k` with their (negative) coefficients.
    pub fn neighbours(&self, k: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let (i, j) = (k % self.nx, k / self.nx);
        let left = (i > 0).then(|| (k - 1, -self.cx));
        let right = (i + 1 < self.nx).then(|| (k + 1, -self.cx));
        let down = (!self.is_1d() && j > 0).then(|| (k - self.nx, -self.cy));
        let up = (!self.is_1d() && j + 1 < self.ny).then(|| (k + self.nx, -self.cy));
        [left, right, down, up].into_iter().flatten()
    }

    pub fn entry(&self, row: usize, col: usize) -> f64 {
        if row == col {
            return self.diagonal();
        }
        self.neighbours(row).find(|&(c, _)| c == col).map_or(0.0, |(_, v)| v)
    }

    pub fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        let d = self.diagonal();
        for (k, yk) in y.iter_mut().enumerate() {
            let mut acc = d * x[k];
            for (c, v) in self.neighbours(k) {
                acc += v * x[c];
            }
            *yk = acc;
        }
    }

    pub fn apply(&self, x: &[f64]) -> Field {
        let mut y = vec![0.0; x.len()];
        self.apply_into(x, &mut y);
        Field::from(y)
    }

    /// Solves `-Δ_h u = rhs`.
    pub fn solve(&self, rhs: &[f64]) -> Result<Field> {
        self.solve_shifted(0.0, rhs)
    }

    /// Solves `(shift·I - Δ_h) u = rhs` for `shift >= 0`: Thomas in 1D,
    /// Jacobi-preconditioned CG in 2D.
    pub fn solve_shifted(&self, shift: f64, rhs: &[f64]) -> Result<Field> {
        if rhs.len() != self.len() {
            return Err(Error::GridMismatch { expected: self.len(), found: rhs.len() });
        }
        if self.is_1d() {
            return linalg::thomas_symmetric(shift + self.diagonal(), -self.cx, rhs).map(Field::from);
        }
        let diag = vec![shift + self.diagonal(); self.len()];
        let apply = |x: &[f64], y: &mut [f64]| {
            self.apply_into(x, y);
            for (yi, xi) in y.iter_mut().zip(x) {
                *yi += shift * xi;
            }
        };
        let max_iter = 20 * self.len() + 100;
        linalg::pcg(apply, &diag, rhs, TOL_LIN, max_iter).map(|(x, _)| Field::from(x))
    }

    /// First eigenpair by inverse power iteration with positivity enforced
    /// each step; `phi` is normalized to unit integral.
    pub fn principal_eigenpair(&self, grid: &Grid) -> Result<LaplacianEigenpair> {
        principal_laplacian_eigenpair(self, grid)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LaplacianEigenpair {
    pub lambda1: f64,
    /// Positive at every node, with `∫ phi = 1`.
    pub phi: Field,
    pub iterations: usize,
    pub residual: f64,
}

const EIGEN_MAX_ITER: usize = 5000;

pub fn principal_laplacian_eigenpair(op: &Laplacian, grid: &Grid) -> Result<LaplacianEigenpair> {
    grid.check(&vec![0.0; op.len()])?;
    let n = op.len();
    let mut x = vec![1.0 / (n as f64).sqrt(); n];
    let mut residual = f64::INFINITY;
    for it in 1..=EIGEN_MAX_ITER {
        let mut y = op.solve(&x)?.into_vec();
        for v in y.iter_mut() {
            *v = v.abs();
        }
        let nrm = norm2(&y);
        y.iter_mut().for_each(|v| *v /= nrm);
        let ay = op.apply(&y);
        let rho = dot(&ay, &y);
        let r: f64 = ay.iter().zip(&y).map(|(a, v)| (a - rho * v).powi(2)).sum::<f64>().sqrt();
        residual = r / rho;
        x = y;
        if residual <= TOL_EIGEN {
            return Ok(finish_laplacian_pair(grid, rho, x, it, residual));
        }
    }
    Err(Error::EigenNonConvergence { iterations: EIGEN_MAX_ITER, residual })
}

fn finish_laplacian_pair(grid: &Grid, lambda1: f64, x: Vec<f64>, iterations: usize, residual: f64) -> LaplacianEigenpair {
    let mass = dot(grid.weights(), &x);
    let phi = Field::from(x.into_iter().map(|v| v / mass).collect::<Vec<_>>());
    LaplacianEigenpair { lambda1, phi, iterations, residual }
}
