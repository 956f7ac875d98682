//! Linear solves for systems of the form `A = diag(d) - c * lap` on a grid.
//!
//! Every implicit step in the crate reduces to this shape. In 1D the matrix
//! is tridiagonal and is factored directly. In higher dimensions `W A` is
//! symmetric, `W` being the trapezoidal weights, so preconditioned conjugate
//! gradients run on the weighted system; if a direction of nonpositive
//! curvature shows up (the Newton Jacobian of a nonconvex potential can be
//! indefinite) the solve falls back to banded Gaussian elimination with
//! partial pivoting.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::grid::Grid;
use crate::math;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinearSolveFailed {
    pub residual: f64,
}

impl fmt::Display for LinearSolveFailed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "linear solve failed: residual {:e}", self.residual)
    }
}

impl core::error::Error for LinearSolveFailed {}

/// `A = diag(diag) - coeff * lap`.
#[derive(Clone, Copy, Debug)]
pub struct DiagPlusLaplacian<'a> {
    pub grid: &'a Grid,
    pub diag: &'a [f64],
    pub coeff: f64,
}

impl DiagPlusLaplacian<'_> {
    pub fn apply(&self, x: &[f64], out: &mut [f64]) {
        self.grid.apply_laplacian(x, out);
        for ((o, d), xi) in out.iter_mut().zip(self.diag).zip(x) {
            *o = d * xi - self.coeff * *o;
        }
    }

    /// Sup norm of `A x - b`.
    pub fn residual(&self, x: &[f64], b: &[f64]) -> f64 {
        let mut ax = vec![0.0; x.len()];
        self.apply(x, &mut ax);
        ax.iter().zip(b).map(|(a, b)| math::abs(a - b)).fold(0.0, f64::max)
    }

    /// Solve `A x = b` to a sup-norm residual of `tol`, starting from `guess`.
    pub fn solve(&self, b: &[f64], guess: &[f64], tol: f64) -> Result<Vec<f64>, LinearSolveFailed> {
        let x = if self.grid.dim() == 1 {
            self.solve_tridiagonal(b)
        } else {
            match self.solve_pcg(b, guess, tol) {
                Some(x) => Some(x),
                None => self.solve_banded(b),
            }
        };
        let Some(mut x) = x else {
            return Err(LinearSolveFailed { residual: f64::INFINITY });
        };
        let mut res = self.residual(&x, b);
        // One round of iterative refinement absorbs the rounding of the
        // direct paths on badly scaled systems.
        if !(res <= tol) && self.grid.dim() == 1 {
            let mut ax = vec![0.0; x.len()];
            self.apply(&x, &mut ax);
            let r: Vec<f64> = b.iter().zip(&ax).map(|(b, a)| b - a).collect();
            if let Some(dx) = self.solve_tridiagonal(&r) {
                x.iter_mut().zip(&dx).for_each(|(xi, d)| *xi += d);
                res = self.residual(&x, b);
            }
        }
        if res <= tol && x.iter().all(|v| v.is_finite()) {
            Ok(x)
        } else {
            Err(LinearSolveFailed { residual: res })
        }
    }

    fn solve_tridiagonal(&self, b: &[f64]) -> Option<Vec<f64>> {
        let n = b.len();
        let h = self.grid.spacing(0);
        let k = self.coeff / (h * h);
        let mut sub = vec![-k; n];
        let mut sup = vec![-k; n];
        let mut main: Vec<f64> = self.diag.iter().map(|d| d + 2.0 * k).collect();
        sup[0] = -2.0 * k;
        sub[n - 1] = -2.0 * k;
        let mut rhs = b.to_vec();
        for i in 1..n {
            if main[i - 1] == 0.0 {
                return None;
            }
            let m = sub[i] / main[i - 1];
            main[i] -= m * sup[i - 1];
            rhs[i] -= m * rhs[i - 1];
        }
        if main[n - 1] == 0.0 {
            return None;
        }
        let mut x = vec![0.0; n];
        x[n - 1] = rhs[n - 1] / main[n - 1];
        for i in (0..n - 1).rev() {
            x[i] = (rhs[i] - sup[i] * x[i + 1]) / main[i];
        }
        x.iter().all(|v| v.is_finite()).then_some(x)
    }

    /// Jacobi-preconditioned CG on `W A x = W b`. `None` on nonpositive
    /// curvature or stagnation.
    fn solve_pcg(&self, b: &[f64], guess: &[f64], tol: f64) -> Option<Vec<f64>> {
        let n = b.len();
        let w = self.grid.weights();
        let mut lap_diag = 0.0;
        for a in 0..self.grid.dim() {
            let h = self.grid.spacing(a);
            lap_diag += 2.0 / (h * h);
        }
        let precond: Vec<f64> = (0..n)
            .map(|i| {
                let d = w[i] * (self.diag[i] + self.coeff * lap_diag);
                if d > 0.0 {
                    1.0 / d
                } else {
                    1.0
                }
            })
            .collect();

        let mut x = guess.to_vec();
        let mut ax = vec![0.0; n];
        self.apply(&x, &mut ax);
        // weighted residual; the unweighted one is r[i] / w[i]
        let mut r: Vec<f64> = (0..n).map(|i| w[i] * (b[i] - ax[i])).collect();
        let sup = |r: &[f64]| (0..n).map(|i| math::abs(r[i] / w[i])).fold(0.0, f64::max);
        if sup(&r) <= tol {
            return Some(x);
        }
        let mut z: Vec<f64> = r.iter().zip(&precond).map(|(a, b)| a * b).collect();
        let mut p = z.clone();
        let mut rz: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
        let mut ap = vec![0.0; n];
        let max_iter = 20 * n + 100;
        for _ in 0..max_iter {
            self.apply(&p, &mut ap);
            ap.iter_mut().zip(&w).for_each(|(v, wi)| *v *= wi);
            let curvature: f64 = p.iter().zip(&ap).map(|(a, b)| a * b).sum();
            if !(curvature > 0.0) {
                return None;
            }
            let alpha = rz / curvature;
            for i in 0..n {
                x[i] += alpha * p[i];
                r[i] -= alpha * ap[i];
            }
            if sup(&r) <= 0.5 * tol {
                // confirm against the true residual
                if self.residual(&x, b) <= tol {
                    return Some(x);
                }
                self.apply(&x, &mut ax);
                for i in 0..n {
                    r[i] = w[i] * (b[i] - ax[i]);
                }
            }
            for i in 0..n {
                z[i] = r[i] * precond[i];
            }
            let rz_new: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
            let beta = rz_new / rz;
            rz = rz_new;
            for i in 0..n {
                p[i] = z[i] + beta * p[i];
            }
        }
        None
    }

    /// Gaussian elimination with partial pivoting in band storage. The lower
    /// bandwidth is the largest stride; pivoting widens the upper band to
    /// twice that.
    fn solve_banded(&self, b: &[f64]) -> Option<Vec<f64>> {
        let n = b.len();
        let bw = self.grid.stride(0);
        let width = 3 * bw + 1;
        // row i holds columns i - bw ..= i + 2 bw at offset col + bw - i
        let mut band = vec![0.0; n * width];
        let at = |i: usize, j: usize| i * width + (j + bw - i);
        for i in 0..n {
            let mut centre = self.diag[i];
            for a in 0..self.grid.dim() {
                let s = self.grid.stride(a);
                let k = self.coeff / (self.grid.spacing(a) * self.grid.spacing(a));
                let pos = self.grid.axis_index(i, a);
                centre += 2.0 * k;
                if pos == 0 {
                    band[at(i, i + s)] -= 2.0 * k;
                } else if pos == self.grid.cells()[a] {
                    band[at(i, i - s)] -= 2.0 * k;
                } else {
                    band[at(i, i + s)] -= k;
                    band[at(i, i - s)] -= k;
                }
            }
            band[at(i, i)] += centre;
        }
        let mut rhs = b.to_vec();
        for k in 0..n {
            let last_row = (k + bw).min(n - 1);
            let mut piv = k;
            let mut best = math::abs(band[at(k, k)]);
            for i in k + 1..=last_row {
                let v = math::abs(band[at(i, k)]);
                if v > best {
                    best = v;
                    piv = i;
                }
            }
            if best == 0.0 {
                return None;
            }
            let last_col = (k + 2 * bw).min(n - 1);
            if piv != k {
                for j in k..=last_col {
                    band.swap(at(k, j), at(piv, j));
                }
                rhs.swap(k, piv);
            }
            let pivot = band[at(k, k)];
            for i in k + 1..=last_row {
                let m = band[at(i, k)] / pivot;
                if m == 0.0 {
                    continue;
                }
                band[at(i, k)] = 0.0;
                for j in k + 1..=last_col {
                    band[at(i, j)] -= m * band[at(k, j)];
                }
                rhs[i] -= m * rhs[k];
            }
        }
        let mut x = vec![0.0; n];
        for i in (0..n).rev() {
            let last_col = (i + 2 * bw).min(n - 1);
            let mut s = rhs[i];
            for j in i + 1..=last_col {
                s -= band[at(i, j)] * x[j];
            }
            x[i] = s / band[at(i, i)];
        }
        x.iter().all(|v| v.is_finite()).then_some(x)
    }
}
