//! Small dense-vector kernels and the linear solvers behind the grid
//! operators: a Thomas solve for symmetric tridiagonal systems, Jacobi
//! preconditioned conjugate gradients, and a banded LU with partial pivoting
//! for the non-symmetric coupled systems.

use crate::error::{Error, Result};

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

pub fn max_value(a: &[f64]) -> f64 {
    a.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

pub fn min_value(a: &[f64]) -> f64 {
    a.iter().copied().fold(f64::INFINITY, f64::min)
}

/// Solves `T x = rhs` where `T` has constant `diag` on the main diagonal and
/// constant `off` on both sub-diagonals.
///
/// When `T` is an M-matrix (`diag > 0`, `off <= 0`, diagonally dominant) and
/// `rhs >= 0`, every intermediate quantity stays nonnegative, so the returned
/// solution is nonnegative in floating point as well.
pub fn thomas_symmetric(diag: f64, off: f64, rhs: &[f64]) -> Result<Vec<f64>> {
    let n = rhs.len();
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut pivot = diag;
    if pivot == 0.0 {
        return Err(Error::SingularMatrix(0));
    }
    c[0] = off / pivot;
    d[0] = rhs[0] / pivot;
    for i in 1..n {
        pivot = diag - off * c[i - 1];
        if pivot == 0.0 {
            return Err(Error::SingularMatrix(i));
        }
        c[i] = off / pivot;
        d[i] = (rhs[i] - off * d[i - 1]) / pivot;
    }
    let mut x = d;
    for i in (0..n - 1).rev() {
        x[i] -= c[i] * x[i + 1];
    }
    Ok(x)
}

/// Outcome of a conjugate-gradient solve.
#[derive(Debug, Clone, Copy)]
pub struct CgInfo {
    pub iterations: usize,
    pub relative_residual: f64,
}

/// Jacobi-preconditioned conjugate gradients for an SPD operator given as a
/// matrix-vector product.
pub fn pcg<F>(apply: F, diag: &[f64], rhs: &[f64], tol: f64, max_iter: usize) -> Result<(Vec<f64>, CgInfo)>
where
    F: Fn(&[f64], &mut [f64]),
{
    let n = rhs.len();
    let mut x = vec![0.0; n];
    let b_norm = norm2(rhs);
    if b_norm == 0.0 {
        return Ok((x, CgInfo { iterations: 0, relative_residual: 0.0 }));
    }
    let mut r = rhs.to_vec();
    let mut z: Vec<f64> = r.iter().zip(diag).map(|(r, d)| r / d).collect();
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut rz = dot(&r, &z);
    for it in 1..=max_iter {
        apply(&p, &mut ap);
        let pap = dot(&p, &ap);
        if pap <= 0.0 {
            return Err(Error::SolverBreakdown { iterations: it, residual: norm2(&r) / b_norm });
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rel = norm2(&r) / b_norm;
        if rel <= tol {
            return Ok((x, CgInfo { iterations: it, relative_residual: rel }));
        }
        for i in 0..n {
            z[i] = r[i] / diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::SolverBreakdown { iterations: max_iter, residual: norm2(&r) / b_norm })
}

/// A square band matrix with `kl` sub-diagonals and `ku` super-diagonals.
///
/// Storage reserves `kl` extra super-diagonals for the fill produced by row
/// interchanges during factorization.
#[derive(Debug, Clone)]
pub struct BandMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    data: Vec<f64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let width = 2 * kl + ku + 1;
        Self { n, kl, ku, width, data: vec![0.0; n * width] }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    fn slot(&self, row: usize, col: usize) -> usize {
        row * self.width + (col + self.kl - row)
    }

    fn in_band(&self, row: usize, col: usize) -> bool {
        col + self.kl >= row && col <= row + self.ku
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        if self.in_band(row, col) {
            self.data[self.slot(row, col)]
        } else {
            0.0
        }
    }

    /// Panics when `(row, col)` lies outside the declared band.
    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        assert!(self.in_band(row, col), "entry ({row}, {col}) outside band");
        let s = self.slot(row, col);
        self.data[s] = value;
    }

    pub fn add(&mut self, row: usize, col: usize, value: f64) {
        assert!(self.in_band(row, col), "entry ({row}, {col}) outside band");
        let s = self.slot(row, col);
        self.data[s] += value;
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for (i, yi) in y.iter_mut().enumerate() {
            let lo = i.saturating_sub(self.kl);
            let hi = (i + self.ku).min(self.n - 1);
            let mut acc = 0.0;
            for (j, xj) in x.iter().enumerate().take(hi + 1).skip(lo) {
                acc += self.data[self.slot(i, j)] * xj;
            }
            *yi = acc;
        }
        y
    }

    /// LU factorization with partial pivoting (the band analogue of `gbtrf`).
    pub fn factor(mut self) -> Result<BandLu> {
        let n = self.n;
        let (kl, ku) = (self.kl, self.ku);
        let mut pivots = vec![0usize; n];
        let mut mults = vec![0.0; n * kl.max(1)];
        for k in 0..n {
            let last_row = (k + kl).min(n - 1);
            let last_col = (k + kl + ku).min(n - 1);
            let mut p = k;
            let mut best = self.data[self.slot(k, k)].abs();
            for r in k + 1..=last_row {
                let v = self.data[self.slot(r, k)].abs();
                if v > best {
                    best = v;
                    p = r;
                }
            }
            if best == 0.0 {
                return Err(Error::SingularMatrix(k));
            }
            pivots[k] = p;
            if p != k {
                for c in k..=last_col {
                    let a = self.slot(k, c);
                    let b = self.slot(p, c);
                    self.data.swap(a, b);
                }
            }
            let piv = self.data[self.slot(k, k)];
            for r in k + 1..=last_row {
                let m = self.data[self.slot(r, k)] / piv;
                mults[k * kl + (r - k - 1)] = m;
                let s = self.slot(r, k);
                self.data[s] = 0.0;
                if m != 0.0 {
                    for c in k + 1..=last_col {
                        let src = self.data[self.slot(k, c)];
                        let dst = self.slot(r, c);
                        self.data[dst] -= m * src;
                    }
                }
            }
        }
        Ok(BandLu { band: self, pivots, mults })
    }
}

/// Factored band matrix; reusable for many right-hand sides.
#[derive(Debug, Clone)]
pub struct BandLu {
    band: BandMatrix,
    pivots: Vec<usize>,
    mults: Vec<f64>,
}

impl BandLu {
    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let a = &self.band;
        let (n, kl, ku) = (a.n, a.kl, a.ku);
        let mut b = rhs.to_vec();
        for k in 0..n {
            let p = self.pivots[k];
            if p != k {
                b.swap(k, p);
            }
            let bk = b[k];
            if bk != 0.0 {
                for r in k + 1..=(k + kl).min(n - 1) {
                    b[r] -= self.mults[k * kl + (r - k - 1)] * bk;
                }
            }
        }
        for k in (0..n).rev() {
            let mut acc = b[k];
            for c in k + 1..=(k + kl + ku).min(n - 1) {
                acc -= a.data[a.slot(k, c)] * b[c];
            }
            b[k] = acc / a.data[a.slot(k, k)];
        }
        b
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thomas_matches_closed_form() {
        // 2x - y = 1, -x + 2y - z = 0, -y + 2z = 1  ->  x = y = z = 1
        let x = thomas_symmetric(2.0, -1.0, &[1.0, 0.0, 1.0]).unwrap();
        for v in x {
            assert!((v - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn band_lu_pivots_on_zero_diagonal() {
        // [[0, 1], [1, 0]] needs a row swap.
        let mut m = BandMatrix::zeros(2, 1, 1);
        m.set(0, 1, 1.0);
        m.set(1, 0, 1.0);
        let lu = m.factor().unwrap();
        let x = lu.solve(&[2.0, 3.0]);
        assert_eq!(x, vec![3.0, 2.0]);
    }

    #[test]
    fn band_lu_solves_random_banded_system() {
        let n = 40;
        let (kl, ku) = (3, 2);
        let mut m = BandMatrix::zeros(n, kl, ku);
        let mut seed = 12345u64;
        let mut next = || {
            seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((seed >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        for i in 0..n {
            for j in i.saturating_sub(kl)..=(i + ku).min(n - 1) {
                m.set(i, j, next());
            }
        }
        let x_true: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let b = m.matvec(&x_true);
        let x = m.clone().factor().unwrap().solve(&b);
        for (a, b) in x.iter().zip(&x_true) {
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
    }

    #[test]
    fn singular_band_matrix_is_reported() {
        let m = BandMatrix::zeros(3, 1, 1);
        assert!(matches!(m.factor(), Err(Error::SingularMatrix(0))));
    }
}
