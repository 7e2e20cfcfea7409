//! `exp(-i tau H) psi` by Lanczos with full reorthogonalisation.
//!
//! The local error of a substep is estimated as the difference between the
//! order-`m` and order-`(m-1)` approximations. Substeps above `tol` are
//! halved and retried (counted as rejections above `reject`); accepted
//! substeps may grow again.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::model::operator::SparseHermitian;
use crate::C64;

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct KrylovOptions {
    /// Maximum Krylov dimension.
    pub dim: usize,
    /// Target error per substep.
    pub tol: f64,
    /// Substeps above this estimate are rejected.
    pub reject: f64,
}

impl Default for KrylovOptions {
    fn default() -> Self {
        Self { dim: 30, tol: 1e-10, reject: 1e-9 }
    }
}

#[derive(Clone, Copy, Debug, Default, Serialize)]
pub struct KrylovStats {
    pub substeps: usize,
    pub rejections: usize,
    pub matvecs: usize,
    pub max_error: f64,
}

/// Reusable workspace.
pub struct Krylov {
    opts: KrylovOptions,
    basis: Vec<Vec<C64>>,
    w: Vec<C64>,
    /// Last accepted substep, used as the first guess for the next call.
    last: f64,
    pub stats: KrylovStats,
}

/// Tridiagonal Lanczos matrix in eigen form: `exp(-i tau T) e1 = Q e^{-i tau L} Q^T e1`.
struct Projected {
    vecs: DMatrix<f64>,
    vals: DVector<f64>,
}

impl Projected {
    fn new(alpha: &[f64], beta: &[f64]) -> Self {
        let n = alpha.len();
        let t = DMatrix::from_fn(n, n, |r, c| {
            if r == c {
                alpha[r]
            } else if r + 1 == c {
                beta[r]
            } else if c + 1 == r {
                beta[c]
            } else {
                0.0
            }
        });
        let e = SymmetricEigen::new(t);
        Self { vecs: e.eigenvectors, vals: e.eigenvalues }
    }

    fn coefficients(&self, tau: f64, out_len: usize) -> Vec<C64> {
        let n = self.vals.len();
        let mut y = vec![C64::new(0.0, 0.0); out_len];
        for j in 0..n {
            let w = C64::from_polar(self.vecs[(0, j)], -tau * self.vals[j]);
            for (i, yi) in y.iter_mut().enumerate().take(n) {
                *yi += w * self.vecs[(i, j)];
            }
        }
        y
    }
}

fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[C64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

impl Krylov {
    pub fn new(dim: usize, opts: KrylovOptions) -> Self {
        let m = opts.dim.max(2);
        Self {
            opts: KrylovOptions { dim: m, ..opts },
            basis: vec![vec![C64::new(0.0, 0.0); dim]; m],
            w: vec![C64::new(0.0, 0.0); dim],
            last: f64::INFINITY,
            stats: KrylovStats::default(),
        }
    }

    pub fn options(&self) -> KrylovOptions {
        self.opts
    }

    /// Builds the Lanczos basis from `psi`; returns `(alpha, beta, beta0)`.
    /// `beta` holds the off-diagonals (one more than `alpha` unless the
    /// subspace became invariant). Stops early once the order estimate for a
    /// step of `tau` is below tolerance.
    fn lanczos(&mut self, h: &SparseHermitian, psi: &[C64], tau: f64) -> (Vec<f64>, Vec<f64>, f64) {
        let beta0 = norm(psi);
        for (v, x) in self.basis[0].iter_mut().zip(psi) {
            *v = x / beta0;
        }
        let (mut alpha, mut beta) = (Vec::new(), Vec::new());
        let scale = 1e-13 * (1.0 + h.norm_bound());
        for j in 0..self.opts.dim {
            h.apply(&self.basis[j], &mut self.w);
            self.stats.matvecs += 1;
            let a = dot(&self.basis[j], &self.w).re;
            alpha.push(a);
            // Two Gram-Schmidt passes against the whole basis.
            for _ in 0..2 {
                for i in 0..=j {
                    let c = dot(&self.basis[i], &self.w);
                    for (x, v) in self.w.iter_mut().zip(&self.basis[i]) {
                        *x -= c * v;
                    }
                }
            }
            let b = norm(&self.w);
            if j + 1 == self.opts.dim || (j >= 6 && j % 3 == 0 && self.converged(&alpha, &beta, beta0, tau)) {
                beta.push(b);
                break;
            }
            if b < scale {
                break;
            }
            beta.push(b);
            for (x, w) in self.basis[j + 1].iter_mut().zip(&self.w) {
                *x = w / b;
            }
        }
        (alpha, beta, beta0)
    }

    fn converged(&self, alpha: &[f64], beta: &[f64], beta0: f64, tau: f64) -> bool {
        let n = alpha.len();
        let y = Projected::new(alpha, &beta[..n - 1]).coefficients(tau, n);
        let z = Projected::new(&alpha[..n - 1], &beta[..n - 2]).coefficients(tau, n);
        beta0 * y.iter().zip(&z).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt() < 0.1 * self.opts.tol
    }

    /// Advances `psi` by `exp(-i tau H) psi`.
    pub fn step(&mut self, h: &SparseHermitian, psi: &mut [C64], tau: f64) {
        let mut done = 0.0;
        while done < tau {
            let remaining = tau - done;
            let mut sub = remaining.min(self.last * 2.0);
            let (alpha, beta, beta0) = self.lanczos(h, psi, sub);
            let n = alpha.len();
            let full = Projected::new(&alpha, &beta[..n - 1]);
            // Breakdown (no trailing off-diagonal) means the subspace is invariant.
            let exact = beta.len() < n;
            let lower = (!exact).then(|| Projected::new(&alpha[..n - 1], &beta[..n - 2]));
            loop {
                let y = full.coefficients(sub, n);
                let err = match &lower {
                    None => 0.0,
                    Some(l) => {
                        let z = l.coefficients(sub, n);
                        beta0 * y.iter().zip(&z).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt()
                    }
                };
                if err > self.opts.tol {
                    if err > self.opts.reject {
                        self.stats.rejections += 1;
                    }
                    sub *= 0.5;
                    continue;
                }
                self.stats.max_error = self.stats.max_error.max(err);
                for x in psi.iter_mut() {
                    *x = C64::new(0.0, 0.0);
                }
                for (c, v) in y.iter().zip(&self.basis) {
                    let c = c * beta0;
                    for (x, vi) in psi.iter_mut().zip(v) {
                        *x += c * vi;
                    }
                }
                break;
            }
            self.stats.substeps += 1;
            if sub < remaining {
                self.last = sub;
            }
            done += sub;
            if remaining - sub <= 1e-14 * tau {
                break;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::build_lab_hamiltonian;
    use crate::{ModelParams, TwoBosonBasis};

    #[test]
    fn matches_dense_exponential() {
        let p = ModelParams::bound_pump().with_sites(8);
        let basis = TwoBosonBasis::new(8).unwrap();
        let h = build_lab_hamiltonian(&p, &basis, 300.0).unwrap();
        let dense = h.to_dense();
        let eig = dense.clone().symmetric_eigen();
        let tau = 0.7;
        let psi0: Vec<C64> = (0..basis.dim()).map(|i| C64::new((i as f64).sin(), (i as f64 * 0.3).cos())).collect();
        let n0 = norm(&psi0);
        let psi0: Vec<C64> = psi0.iter().map(|x| x / n0).collect();
        let phases = DMatrix::from_diagonal(&eig.eigenvalues.map(|e| C64::from_polar(1.0, -tau * e)));
        let u = &eig.eigenvectors * phases * eig.eigenvectors.adjoint();
        let want = u * DVector::from_vec(psi0.clone());
        let mut psi = psi0;
        let mut k = Krylov::new(basis.dim(), KrylovOptions::default());
        k.step(&h, &mut psi, tau);
        let err = (DVector::from_vec(psi) - want).norm();
        assert!(err < 1e-9, "{err:e}");
    }
}
