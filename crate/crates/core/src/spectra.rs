//! The linearized coupled operator at a stationary state and its principal
//! eigenpair.
//!
//! Unknowns are stacked as `(φ, ψ)`; the operator is
//!
//! ```text
//! [ -Δ_h                 -λ diag(α f'(z)) ]
//! [ -μ diag(β g'(w))     -Δ_h             ]
//! ```
//!
//! It has nonpositive off-diagonal entries, so for every shift `σ` below its
//! spectral abscissa `ν₁` the matrix `L - σI` is a nonsingular M-matrix and
//! inverse iteration keeps positive iterates positive. The principal
//! eigenvalue is found by shifted inverse iteration, with the shift raised
//! towards `ν₁` using the Collatz–Wielandt lower bound `min (Ly)_i / y_i`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{Field, Grid, Laplacian};
use crate::linalg::{dot, norm2, BandLu, BandMatrix};
use crate::model::Order;
use crate::problem::Problem;
use crate::stationary::StationarySolution;

const EIGEN_TOL: f64 = 1e-10;
const EIGEN_MAX_ITER: usize = 5000;

#[derive(Debug, Clone, PartialEq)]
pub struct LinearizedOperator {
    laplacian: Laplacian,
    /// `λ α f'(z)` per node, entering the (φ, ψ) block with a minus sign.
    coupling_u: Vec<f64>,
    /// `μ β g'(w)` per node.
    coupling_v: Vec<f64>,
}

impl LinearizedOperator {
    /// Linearization at an arbitrary state `(w, z)` with values in `[0, 1)`.
    pub fn at_state(problem: &Problem, w: &[f64], z: &[f64]) -> Result<Self> {
        let grid = problem.grid();
        grid.check(w)?;
        grid.check(z)?;
        let model = problem.model();
        let p = problem.params();
        let coupling_u = z
            .iter()
            .zip(problem.alpha().iter())
            .map(|(&s, a)| Ok(p.lambda * a * model.f.eval(s, Order::D1)?))
            .collect::<Result<Vec<_>>>()?;
        let coupling_v = w
            .iter()
            .zip(problem.beta().iter())
            .map(|(&s, b)| Ok(p.mu * b * model.g.eval(s, Order::D1)?))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { laplacian: problem.laplacian().clone(), coupling_u, coupling_v })
    }

    /// Same operator with both coupling blocks removed; each diagonal block
    /// is then `-Δ_h`.
    pub fn decoupled(&self) -> Self {
        Self { coupling_u: vec![0.0; self.coupling_u.len()], coupling_v: vec![0.0; self.coupling_v.len()], ..self.clone() }
    }

    /// Number of grid nodes; the operator acts on vectors of twice this size.
    pub fn nodes(&self) -> usize {
        self.coupling_u.len()
    }

    pub fn size(&self) -> usize {
        2 * self.nodes()
    }

    pub fn coupling_u(&self) -> &[f64] {
        &self.coupling_u
    }

    pub fn coupling_v(&self) -> &[f64] {
        &self.coupling_v
    }

    /// Entry in stacked `(φ, ψ)` ordering.
    pub fn entry(&self, row: usize, col: usize) -> f64 {
        let n = self.nodes();
        let (br, r) = (row / n, row % n);
        let (bc, c) = (col / n, col % n);
        match (br, bc) {
            (0, 0) | (1, 1) => self.laplacian.entry(r, c),
            (0, 1) if r == c => -self.coupling_u[r],
            (1, 0) if r == c => -self.coupling_v[r],
            _ => 0.0,
        }
    }

    /// Row-major dense copy in stacked ordering.
    pub fn to_dense(&self) -> Vec<f64> {
        let m = self.size();
        let mut out = vec![0.0; m * m];
        for row in 0..m {
            for col in 0..m {
                out[row * m + col] = self.entry(row, col);
            }
        }
        out
    }

    /// `L x` for stacked `x = (φ, ψ)`.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let n = self.nodes();
        let (phi, psi) = x.split_at(n);
        let mut out = vec![0.0; 2 * n];
        let (top, bottom) = out.split_at_mut(n);
        self.laplacian.apply_into(phi, top);
        self.laplacian.apply_into(psi, bottom);
        for k in 0..n {
            top[k] -= self.coupling_u[k] * psi[k];
            bottom[k] -= self.coupling_v[k] * phi[k];
        }
        out
    }

    /// Band form of `L + shift·I` with `φ_k, ψ_k` interleaved so the
    /// bandwidth is twice the stencil reach.
    fn banded(&self, shift: f64) -> BandMatrix {
        let n = self.nodes();
        let reach = if self.laplacian.is_1d() { 1 } else { self.laplacian.nx() };
        let mut m = BandMatrix::zeros(2 * n, 2 * reach, 2 * reach);
        let d = self.laplacian.diagonal() + shift;
        for k in 0..n {
            m.set(2 * k, 2 * k, d);
            m.set(2 * k + 1, 2 * k + 1, d);
            m.set(2 * k, 2 * k + 1, -self.coupling_u[k]);
            m.set(2 * k + 1, 2 * k, -self.coupling_v[k]);
            for (c, v) in self.laplacian.neighbours(k) {
                m.set(2 * k, 2 * c, v);
                m.set(2 * k + 1, 2 * c + 1, v);
            }
        }
        m
    }

    /// Factorization of `L + shift·I`.
    pub fn factor_shifted(&self, shift: f64) -> Result<ShiftedFactor> {
        Ok(ShiftedFactor { lu: self.banded(shift).factor()?, n: self.nodes() })
    }

    /// Solves `(L + shift·I) x = rhs` in stacked ordering.
    pub fn solve_shifted(&self, shift: f64, rhs: &[f64]) -> Result<Vec<f64>> {
        if rhs.len() != self.size() {
            return Err(Error::GridMismatch { expected: self.size(), found: rhs.len() });
        }
        Ok(self.factor_shifted(shift)?.solve(rhs))
    }

    /// Largest coupling entry; `L + (c + 1) I` is strictly diagonally dominant.
    fn coupling_bound(&self) -> f64 {
        self.coupling_u.iter().chain(&self.coupling_v).fold(0.0_f64, |m, &c| m.max(c))
    }
}

/// A factored `L + shift·I`, reusable across right-hand sides.
#[derive(Debug, Clone)]
pub struct ShiftedFactor {
    lu: BandLu,
    n: usize,
}

impl ShiftedFactor {
    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut inter = vec![0.0; 2 * n];
        for k in 0..n {
            inter[2 * k] = rhs[k];
            inter[2 * k + 1] = rhs[n + k];
        }
        let x = self.lu.solve(&inter);
        let mut out = vec![0.0; 2 * n];
        for k in 0..n {
            out[k] = x[2 * k];
            out[n + k] = x[2 * k + 1];
        }
        out
    }
}

pub fn assemble_linearization(problem: &Problem, sol: &StationarySolution) -> Result<LinearizedOperator> {
    LinearizedOperator::at_state(problem, &sol.w, &sol.z)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EigenPair {
    pub nu1: f64,
    pub phi1: Field,
    pub psi1: Field,
    /// `‖L x - ν₁ x‖₂ / (max(|ν₁|, 1) ‖x‖₂)`.
    pub residual: f64,
    pub iterations: usize,
}

/// Eigenvalue of smallest real part with its positive eigenvector,
/// normalized so that `∫ (φ₁² + ψ₁²) = 1`.
///
/// Returns [`Error::IndefiniteOperator`] carrying the computed value when
/// `ν₁ ≤ 0`, which is expected at upper-branch solutions.
pub fn principal_eigenpair(op: &LinearizedOperator, grid: &Grid) -> Result<EigenPair> {
    let n = op.nodes();
    grid.check(&op.coupling_u)?;
    let m = 2 * n;
    let mut x = vec![1.0 / (m as f64).sqrt(); m];
    let mut shift = -op.coupling_bound() - 1.0;
    let mut factor = op.factor_shifted(-shift)?;
    let mut residual = f64::INFINITY;
    let mut nu = f64::NAN;
    let mut positive = true;
    for it in 1..=EIGEN_MAX_ITER {
        let y = factor.solve(&x);
        // every entry shares one sign while the shift stays below ν₁
        positive = y.iter().all(|&v| v > 0.0) || y.iter().all(|&v| v < 0.0);
        let mut y: Vec<f64> = y.into_iter().map(f64::abs).collect();
        let nrm = norm2(&y);
        y.iter_mut().for_each(|v| *v /= nrm);
        let ly = op.apply(&y);
        nu = dot(&ly, &y);
        let r = ly.iter().zip(&y).map(|(a, v)| (a - nu * v).powi(2)).sum::<f64>().sqrt();
        residual = r / nu.abs().max(1.0);
        x = y;
        if residual <= EIGEN_TOL && positive {
            let eig = finish(grid, nu, &x, it, residual);
            if nu <= 0.0 {
                return Err(Error::IndefiniteOperator { nu1: nu, positive_eigenvector: true });
            }
            return Ok(eig);
        }
        // Collatz–Wielandt bracket for ν₁ from the current positive iterate.
        let (lo, hi) = ly.iter().zip(&x).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (a, v)| {
            if *v > 0.0 {
                (lo.min(a / v), hi.max(a / v))
            } else {
                (lo, hi)
            }
        });
        let candidate = lo - 0.1 * (hi - lo) - 1e-9 * lo.abs().max(1.0);
        if candidate.is_finite() && candidate - shift > 0.5 * (nu - shift) {
            shift = candidate;
            factor = op.factor_shifted(-shift)?;
        }
    }
    if !positive {
        return Err(Error::IndefiniteOperator { nu1: nu, positive_eigenvector: false });
    }
    Err(Error::EigenNonConvergence { iterations: EIGEN_MAX_ITER, residual })
}

fn finish(grid: &Grid, nu1: f64, x: &[f64], iterations: usize, residual: f64) -> EigenPair {
    let n = x.len() / 2;
    let w = grid.weights();
    let mass: f64 = (0..n).map(|k| w[k] * (x[k] * x[k] + x[n + k] * x[n + k])).sum();
    let s = mass.sqrt();
    let phi1 = Field::from(x[..n].iter().map(|v| v / s).collect::<Vec<_>>());
    let psi1 = Field::from(x[n..].iter().map(|v| v / s).collect::<Vec<_>>());
    EigenPair { nu1, phi1, psi1, residual, iterations }
}

/// Principal eigenpair of the linearization at a stationary solution.
pub fn stationary_eigenpair(problem: &Problem, sol: &StationarySolution) -> Result<EigenPair> {
    principal_eigenpair(&assemble_linearization(problem, sol)?, problem.grid())
}
