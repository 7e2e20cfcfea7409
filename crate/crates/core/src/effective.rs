//! Second-order doublon model for `U` large compared to every other scale.
//!
//! A doublon on site `j` hops to `j + 1` with `2 (J + delta0 sin(pi j + phi))^2 / U`
//! and feels `2 Delta0 cos(pi j + phi) + 2 omega_F j`, i.e. twice the tilt. In
//! momentum space it is a two-level system `C + h . sigma` with
//!
//! ```text
//! h = (A cos th, -B sin th, Z),  th = k - 2 omega_F t,
//! A = 4 (J^2 + delta0^2 sin^2 phi) / U,  B = 8 J delta0 sin phi / U,
//! Z = 2 Delta0 cos phi.
//! ```
//!
//! `h(k + pi) = sigma_z h(k) sigma_z`, which closes the zone `[0, pi)`.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::momentum::{MomentumSectors, WrapPolicy};
use crate::model::{bonds, hopping_amplitude};
use crate::params::{ModelParams, CELL};
use crate::quad::{integrate, QuadOptions, Quadrature};
use crate::spectrum::solve_matrix;
use crate::topology::OVERLAP_FLOOR;
use crate::C64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    Upper,
    Lower,
}

impl Branch {
    fn sign(self) -> f64 {
        match self {
            Branch::Upper => 1.0,
            Branch::Lower => -1.0,
        }
    }
}

/// Which curvature expression to evaluate.
///
/// `Closed` is the compact formula in which the amplitude `A` is treated as
/// constant in time; it is what the quoted reduced Chern numbers at finite
/// tilt come from. `Exact` is the full two-level curvature of `h(k, t)` and
/// carries an extra `-64 J delta0^3 Delta0 omega sin^2 phi cos^2 phi cos^2 th
/// / (U^2 |h|^3)` for the lower branch. Only `Exact` integrates to an integer
/// over the torus.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BerryForm {
    Closed,
    Exact,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct TwoLevelField {
    pub hx: f64,
    pub hy: f64,
    pub hz: f64,
    pub offset: f64,
}

impl TwoLevelField {
    pub fn norm(&self) -> f64 {
        (self.hx * self.hx + self.hy * self.hy + self.hz * self.hz).sqrt()
    }

    /// Normalised eigenvector of `h . sigma` on `branch`.
    pub fn eigenvector(&self, branch: Branch) -> [C64; 2] {
        let s = branch.sign() * self.norm();
        let a = [C64::new(self.hz + s, 0.0), C64::new(self.hx, self.hy)];
        let b = [C64::new(self.hx, -self.hy), C64::new(s - self.hz, 0.0)];
        let na = a[0].norm_sqr() + a[1].norm_sqr();
        let nb = b[0].norm_sqr() + b[1].norm_sqr();
        let (v, n) = if na >= nb { (a, na) } else { (b, nb) };
        let n = n.sqrt();
        [v[0] / n, v[1] / n]
    }
}

/// `h0 = U P`, `h1 = P V_diag P`, `h2 = P V Q V P / U` on the doublon chain.
#[derive(Clone, Debug)]
pub struct SecondOrderTerms {
    pub h0: DMatrix<f64>,
    pub h1: DMatrix<f64>,
    pub h2: DMatrix<f64>,
}

impl SecondOrderTerms {
    pub fn total(&self) -> DMatrix<f64> {
        &self.h0 + &self.h1 + &self.h2
    }
}

#[derive(Clone, Debug)]
pub struct EffectiveModel {
    p: ModelParams,
    constant: f64,
}

impl EffectiveModel {
    pub fn new(p: &ModelParams) -> Result<Self> {
        p.validate()?;
        let u = p.interaction;
        if u == 0.0 {
            return Err(Error::ZeroInteraction);
        }
        let (j, d) = (p.hopping, p.delta0);
        let constant = u + 2.0 * (j - d).powi(2) / u + 2.0 * (j + d).powi(2) / u;
        Ok(Self { p: p.clone(), constant })
    }

    pub fn params(&self) -> &ModelParams {
        &self.p
    }

    /// Energy offset `C`.
    pub fn constant(&self) -> f64 {
        self.constant
    }

    /// Advisory: the expansion needs `U >= 5 max(|J|, |delta0|, |Delta0|, omega_F)`.
    pub fn regime_warning(&self) -> Option<String> {
        let p = &self.p;
        let scale =
            [p.hopping.abs(), p.delta0.abs(), p.stagger.abs(), p.omega_f().abs()].into_iter().fold(0.0, f64::max);
        (p.interaction < 5.0 * scale).then(|| {
            format!(
                "U = {} is below 5x the largest other scale ({scale}); second order may be inaccurate",
                p.interaction
            )
        })
    }

    /// Doublon hopping across bond `j`.
    pub fn hopping(&self, j: usize, t: f64) -> f64 {
        2.0 * hopping_amplitude(&self.p, j, t).powi(2) / self.p.interaction
    }

    /// Doublon on-site energy without the constant, including the `2 omega_F j` tilt.
    pub fn onsite(&self, j: usize, t: f64) -> f64 {
        let p = &self.p;
        2.0 * p.stagger * (PI * j as f64 + p.phase(t)).cos() + 2.0 * p.omega_f() * j as f64
    }

    /// Lab-frame pieces on the doublon chain (`sites x sites`, site `j` at
    /// row `j - 1`), honouring the boundary of the parameters.
    pub fn second_order_terms(&self, t: f64) -> SecondOrderTerms {
        let n = self.p.sites;
        let u = self.p.interaction;
        let h0 = DMatrix::from_diagonal_element(n, n, u);
        let h1 = DMatrix::from_fn(n, n, |r, c| if r == c { self.onsite(r + 1, t) } else { 0.0 });
        let mut h2 = DMatrix::zeros(n, n);
        for (j, jn) in bonds(n, self.p.boundary) {
            let w = self.hopping(j, t);
            h2[(j - 1, j - 1)] += w;
            h2[(jn - 1, jn - 1)] += w;
            h2[(j - 1, jn - 1)] += w;
            h2[(jn - 1, j - 1)] += w;
        }
        SecondOrderTerms { h0, h1, h2 }
    }

    fn parts(&self, t: f64) -> (f64, f64, f64, f64, f64, f64) {
        let p = &self.p;
        let (u, j, d, w) = (p.interaction, p.hopping, p.delta0, p.omega);
        let (s, c) = p.phase(t).sin_cos();
        let a = 4.0 * (j * j + d * d * s * s) / u;
        let b = 8.0 * j * d * s / u;
        let z = 2.0 * p.stagger * c;
        let da = 8.0 * d * d * s * c * w / u;
        let db = 8.0 * j * d * c * w / u;
        let dz = -2.0 * p.stagger * s * w;
        (a, b, z, da, db, dz)
    }

    fn theta(&self, k: f64, t: f64) -> f64 {
        k - 2.0 * self.p.omega_f() * t
    }

    pub fn field(&self, k: f64, t: f64) -> TwoLevelField {
        let (a, b, z, ..) = self.parts(t);
        let (sn, cs) = self.theta(k, t).sin_cos();
        TwoLevelField { hx: a * cs, hy: -b * sn, hz: z, offset: self.constant }
    }

    /// Exact second-order diagonal `U + 4 (J^2 + delta0^2 sin^2 phi) / U`;
    /// [`Self::constant`] is its value at `sin^2 phi = 1`.
    pub fn offset(&self, t: f64) -> f64 {
        let p = &self.p;
        let s = p.phase(t).sin();
        p.interaction + 4.0 * (p.hopping.powi(2) + (p.delta0 * s).powi(2)) / p.interaction
    }

    /// `(eps_+, eps_-) = C +- |h|`.
    pub fn bands(&self, k: f64, t: f64) -> (f64, f64) {
        let f = self.field(k, t);
        let n = f.norm();
        (self.constant + n, self.constant - n)
    }

    pub fn berry(&self, k: f64, t: f64, branch: Branch, form: BerryForm) -> Result<f64> {
        let p = &self.p;
        let (u, j, d) = (p.interaction, p.hopping, p.delta0);
        let (s, c) = p.phase(t).sin_cos();
        let ct = self.theta(k, t).cos();
        let norm = self.field(k, t).norm();
        if norm < 1e-12 {
            return Err(Error::Degenerate { k, t, gap: 2.0 * norm, margin: 2e-12 });
        }
        let e = branch.sign() * norm;
        let closed = 32.0 * (j * d * p.omega * p.stagger / u) * ((j * j + d * d * s * s) / u) * (1.0 - c * c * ct * ct)
            / (e * e * e);
        Ok(match form {
            BerryForm::Closed => closed,
            BerryForm::Exact => {
                closed
                    + branch.sign() * 64.0 * j * d.powi(3) * p.stagger * p.omega * s * s * c * c * ct * ct
                        / (u * u * norm.powi(3))
            }
        })
    }

    /// `dh/dk` and `dh/dt` in closed form.
    pub fn field_derivatives(&self, k: f64, t: f64) -> ([f64; 3], [f64; 3]) {
        let (a, b, _, da, db, dz) = self.parts(t);
        let (sn, cs) = self.theta(k, t).sin_cos();
        let wf2 = 2.0 * self.p.omega_f();
        ([-a * sn, -b * cs, 0.0], [da * cs + wf2 * a * sn, -db * sn + wf2 * b * cs, dz])
    }

    /// `(1/d) int_0^t_tot F(k0, t) dt`, sampling densely enough to resolve
    /// the `th` oscillation at large tilt.
    pub fn reduced_chern(&self, k0: f64, t_tot: f64, branch: Branch, form: BerryForm) -> Result<Quadrature> {
        let windings = (2.0 * self.p.omega_f() * t_tot / (2.0 * PI)).abs() + t_tot / self.p.drive_period();
        let n0 = (64.0 * windings).ceil().max(512.0) as usize;
        let opts = QuadOptions { initial_intervals: n0, tol: 1e-6, max_intervals: 64 * n0 };
        let q = integrate(|t| self.berry(k0, t, branch, form), 0.0, t_tot, opts)?;
        Ok(Quadrature { value: q.value / CELL as f64, ..q })
    }

    /// Lattice Chern number of one branch over `[0, pi) x [0, t_tot)`.
    pub fn fhs_chern(&self, branch: Branch, nk: usize, nt: usize, t_tot: f64) -> Result<f64> {
        let dk = PI / nk as f64;
        let dt = t_tot / nt as f64;
        let sz = |v: [C64; 2]| [v[0], -v[1]];
        let vec_at = |i: usize, j: usize| {
            let v = self.field(dk * (i % nk) as f64, dt * (j % nt) as f64).eigenvector(branch);
            if i >= nk {
                sz(v)
            } else {
                v
            }
        };
        let link = |a: [C64; 2], b: [C64; 2]| a[0].conj() * b[0] + a[1].conj() * b[1];
        let sums: Vec<f64> = (0..nk)
            .into_par_iter()
            .map(|i| {
                let mut total = 0.0;
                for j in 0..nt {
                    let (v00, v10, v01, v11) = (vec_at(i, j), vec_at(i + 1, j), vec_at(i, j + 1), vec_at(i + 1, j + 1));
                    let ls = [link(v00, v10), link(v10, v11), link(v01, v11), link(v00, v01)];
                    if let Some(l) = ls.iter().find(|l| l.norm() < OVERLAP_FLOOR) {
                        return Err(Error::GapClosure { k: dk * i as f64, t: dt * j as f64, overlap: l.norm() });
                    }
                    total += (ls[0] * ls[1] * ls[2].conj() * ls[3].conj()).arg();
                }
                Ok(total)
            })
            .collect::<Result<_>>()?;
        Ok(sums.iter().sum::<f64>() / (2.0 * PI))
    }

    /// Max over an `nk x nt` grid of `|F(k + dk, t + dk / (2 omega_F)) - F(k, t)|`
    /// and the peak `|F|` on the same grid.
    pub fn shift_invariance_residual(
        &self,
        shift: f64,
        nk: usize,
        nt: usize,
        t_tot: f64,
        form: BerryForm,
    ) -> Result<(f64, f64)> {
        let wf = self.p.omega_f();
        if wf <= 0.0 {
            return Err(Error::InvalidParams("the shift relation needs omega_F > 0".into()));
        }
        let pts: Vec<(f64, f64)> = (0..nk * nt)
            .into_par_iter()
            .map(|idx| {
                let k = PI * (idx / nt) as f64 / nk as f64;
                let t = t_tot * (idx % nt) as f64 / nt as f64;
                let f = self.berry(k, t, Branch::Lower, form)?;
                let g = self.berry(k + shift, t + shift / (2.0 * wf), Branch::Lower, form)?;
                Ok(((g - f).abs(), f.abs()))
            })
            .collect::<Result<_>>()?;
        Ok(pts.iter().fold((0.0f64, 0.0f64), |(r, m), &(a, b)| (r.max(a), m.max(b))))
    }
}

/// The branch whose energy at `(k, t) = (0, 0)` lies closest to band (ii) of
/// the full model.
pub fn band_ii_branch(p: &ModelParams, sectors: &MomentumSectors) -> Result<Branch> {
    let m = EffectiveModel::new(p)?;
    let e = solve_matrix(sectors.hamiltonian(p, 0.0, 0.0, WrapPolicy::Cut)?, 0.0, 0.0)?;
    let (up, lo) = m.bands(0.0, 0.0);
    Ok(if (lo - e.values[1]).abs() <= (up - e.values[1]).abs() { Branch::Lower } else { Branch::Upper })
}

/// Max over a grid of `|eps_+ - E_i|` and `|eps_- - E_ii|`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct BandDeviation {
    /// With the constant offset `C`.
    pub constant_offset: f64,
    /// With the time-dependent second-order diagonal.
    pub exact_offset: f64,
}

pub fn band_deviation(p: &ModelParams, sectors: &MomentumSectors, nk: usize, nt: usize) -> Result<BandDeviation> {
    let m = EffectiveModel::new(p)?;
    let t_tot = p.pump_period();
    let devs: Vec<(f64, f64)> = (0..nk * nt)
        .into_par_iter()
        .map(|idx| {
            let k = PI * (idx / nt) as f64 / nk as f64;
            let t = t_tot * (idx % nt) as f64 / nt as f64;
            let e = solve_matrix(sectors.hamiltonian(p, k, t, WrapPolicy::Cut)?, k, t)?;
            let (up, lo) = m.bands(k, t);
            let shift = m.offset(t) - m.constant();
            let dev = |s: f64| (up + s - e.values[0]).abs().max((lo + s - e.values[1]).abs());
            Ok((dev(0.0), dev(shift)))
        })
        .collect::<Result<_>>()?;
    Ok(devs.into_iter().fold(BandDeviation { constant_offset: 0.0, exact_offset: 0.0 }, |a, (c, e)| BandDeviation {
        constant_offset: a.constant_offset.max(c),
        exact_offset: a.exact_offset.max(e),
    }))
}

/// Per-momentum reduced Chern numbers, their zone average and the lattice
/// Chern number of the same branch.
#[derive(Clone, Debug, Serialize)]
pub struct ReducedChernReport {
    pub tilt: (u32, u32),
    pub t_tot: f64,
    pub form: BerryForm,
    pub k0s: Vec<f64>,
    pub per_k0: Vec<f64>,
    pub mean: f64,
    pub fhs: f64,
    /// Largest pairwise difference among all per-`k0` values, the mean and `fhs`.
    pub max_deviation: f64,
}

pub fn reduced_equals_chern_check(
    p: &ModelParams,
    t_tot: f64,
    nk0: usize,
    form: BerryForm,
) -> Result<ReducedChernReport> {
    let m = EffectiveModel::new(p)?;
    let k0s: Vec<f64> = (0..nk0).map(|i| PI * i as f64 / nk0 as f64).collect();
    let per_k0 =
        k0s.iter().map(|&k| Ok(m.reduced_chern(k, t_tot, Branch::Lower, form)?.value)).collect::<Result<Vec<f64>>>()?;
    let mean = per_k0.iter().sum::<f64>() / nk0 as f64;
    let windings = (2.0 * p.omega_f() * t_tot / (2.0 * PI)).abs() + t_tot / p.drive_period();
    let nt = ((24.0 * windings).ceil() as usize).max(144);
    let fhs = m.fhs_chern(Branch::Lower, 48, nt, t_tot)?;
    let mut all = per_k0.clone();
    all.push(mean);
    all.push(fhs);
    let lo = all.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = all.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(ReducedChernReport { tilt: (p.tilt_p, p.tilt_q), t_tot, form, k0s, per_k0, mean, fhs, max_deviation: hi - lo })
}
