//! Independent reference computations shared by the integration tests.
#![allow(dead_code)]

use nalgebra::DMatrix;
use quenchlab::spectra::LinearizedOperator;

/// For the scalar problem `-y'' = λ (1 - y)^-2` on `(0, 1)`, `y(0) = y(1) = 0`,
/// the symmetric solution with peak `m` solves `Y'' = -(1 - Y)^-2`,
/// `Y(0) = m`, `Y'(0) = 0` in the stretched variable `ξ = √λ (x - 1/2)`.
/// Returns `ξ*` where `Y(ξ*) = 0`, so `λ(m) = 4 ξ*²`.
pub fn shooting_half_width(m: f64) -> f64 {
    let rhs = |y: f64| -1.0 / (1.0 - y).powi(2);
    let mut xi = 0.0;
    let (mut y, mut p) = (m, 0.0);
    let h = 1e-5;
    loop {
        // classical RK4 on (y, p)
        let k1y = p;
        let k1p = rhs(y);
        let k2y = p + 0.5 * h * k1p;
        let k2p = rhs(y + 0.5 * h * k1y);
        let k3y = p + 0.5 * h * k2p;
        let k3p = rhs(y + 0.5 * h * k2y);
        let k4y = p + h * k3p;
        let k4p = rhs(y + h * k3y);
        let ny = y + h / 6.0 * (k1y + 2.0 * k2y + 2.0 * k3y + k4y);
        let np = p + h / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p);
        if ny <= 0.0 {
            // Hermite-free linear interpolation is enough at this step size
            return xi + h * y / (y - ny);
        }
        xi += h;
        y = ny;
        p = np;
    }
}

pub fn shooting_lambda(m: f64) -> f64 {
    4.0 * shooting_half_width(m).powi(2)
}

/// Peak value and parameter at the fold of the scalar branch, by golden
/// section on `m ↦ λ(m)`.
pub fn scalar_pull_in() -> (f64, f64) {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (0.1, 0.7);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (shooting_lambda(c), shooting_lambda(d));
    while b - a > 1e-7 {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = shooting_lambda(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = shooting_lambda(d);
        }
    }
    let m = 0.5 * (a + b);
    (m, shooting_lambda(m))
}

/// Peak of the lower-branch scalar solution at `lambda < λ*`, by bisection
/// on `m ∈ (0, m*)` where `λ(m)` is increasing.
pub fn scalar_lower_peak(lambda: f64, m_star: f64) -> f64 {
    let (mut lo, mut hi) = (1e-9, m_star);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if shooting_lambda(mid) < lambda {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Eigenvalue of smallest real part of the assembled operator, from a dense
/// Schur decomposition.
pub fn dense_min_real_eigenvalue(op: &LinearizedOperator) -> f64 {
    let m = op.size();
    let a = DMatrix::from_row_slice(m, m, &op.to_dense());
    a.complex_eigenvalues().iter().map(|z| z.re).fold(f64::INFINITY, f64::min)
}
