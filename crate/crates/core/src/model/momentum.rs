//! Bloch sectors of the cell-translation symmetry.
//!
//! The sector basis for rep `r` with orbit size `s_r` is
//! `|k, r> = s_r^{-1/2} sum_n exp(i k (X_r + d n)) T^n |rep_r>`, where `T`
//! shifts both bosons by one cell and `X_r` is the centre of mass of the rep
//! taken at its minimal-image separation. Anchoring every rep at that position
//! makes the block a smooth function of `k` with `dH/dk` given by the centre
//! of mass jump of each hop.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

use super::basis::TwoBosonBasis;
use super::{bonds, hopping_amplitude, hopping_rate, move_particle, onsite_energy, onsite_rate};
use crate::error::{Error, Result};
use crate::params::{Boundary, ModelParams, CELL};
use crate::C64;

/// How hops that wrap the relative coordinate are treated.
///
/// `Keep` is the exact projection of the ring Hamiltonian; only its values at
/// the discrete momenta `2 pi n / L_t` are physical, and in between the
/// scattering continuum of its continuation reshuffles. `Cut` drops hops whose
/// centre-of-mass jump is larger than one site, which opens the relative
/// coordinate at separation `L_t / 2`; its bands stay isolated for every real
/// `k`, so it is the family used on continuous `(k, t)` grids.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WrapPolicy {
    Keep,
    Cut,
}

#[derive(Clone, Debug)]
struct SectorHop {
    row: usize,
    col: usize,
    bond: usize,
    forward: bool,
    factor: f64,
    shift: f64,
}

/// Orbit decomposition of the two-boson ring under cell translations.
#[derive(Clone, Debug)]
pub struct MomentumSectors {
    basis: TwoBosonBasis,
    reps: Vec<(usize, usize)>,
    orbits: Vec<Vec<usize>>,
    anchor: Vec<f64>,
    hops: Vec<SectorHop>,
}

/// Dense block at fixed `(k, t)` with analytic parameter derivatives.
#[derive(Clone, Debug)]
pub struct MomentumBlock {
    pub k: f64,
    pub t: f64,
    pub h: DMatrix<C64>,
    pub dh_dk: DMatrix<C64>,
    pub dh_dt: DMatrix<C64>,
    /// Sector indices of the block rows, in order.
    pub reps: Vec<usize>,
}

fn translate((a, b): (usize, usize), sites: usize, cells: usize) -> (usize, usize) {
    let s = |x: usize| (x - 1 + CELL * cells) % sites + 1;
    let (x, y) = (s(a), s(b));
    if x <= y {
        (x, y)
    } else {
        (y, x)
    }
}

fn anchor_of((a, b): (usize, usize), sites: usize) -> f64 {
    if 2 * (b - a) <= sites {
        0.5 * (a + b) as f64
    } else {
        0.5 * (a + b + sites) as f64
    }
}

impl MomentumSectors {
    pub fn new(sites: usize) -> Result<Self> {
        let basis = TwoBosonBasis::new(sites)?;
        let cells = sites / CELL;
        let mut owner = vec![usize::MAX; basis.dim()];
        let mut offset = vec![0usize; basis.dim()];
        let mut reps = Vec::new();
        let mut orbits = Vec::new();
        for (i, &pair) in basis.pairs().iter().enumerate() {
            if owner[i] != usize::MAX {
                continue;
            }
            let r = reps.len();
            let mut orbit = Vec::new();
            let mut c = pair;
            loop {
                let ci = basis.index_of(c.0, c.1).unwrap();
                if owner[ci] == r {
                    break;
                }
                owner[ci] = r;
                offset[ci] = orbit.len();
                orbit.push(ci);
                c = translate(c, sites, 1);
            }
            reps.push(pair);
            orbits.push(orbit);
        }
        let anchor: Vec<f64> = reps.iter().map(|&p| anchor_of(p, sites)).collect();

        let span = (CELL * cells) as f64;
        let mut hops = Vec::new();
        for (r, &rep) in reps.iter().enumerate() {
            for (j, jn) in bonds(sites, Boundary::Periodic) {
                for (src, dst, forward, delta) in [(jn, j, true, -0.5), (j, jn, false, 0.5)] {
                    let Some((to, f)) = move_particle(rep, src, dst) else {
                        continue;
                    };
                    let ti = basis.index_of(to.0, to.1).unwrap();
                    let (r2, m) = (owner[ti], offset[ti] as f64);
                    // Pick the winding whose jump is closest to the physical
                    // shift; a tie happens only across the relative wrap and is
                    // broken towards the sign of the physical shift so the
                    // block stays Hermitian at every k.
                    let x = (anchor[r] + delta - anchor[r2] - CELL as f64 * m) / span;
                    let jump = |w: f64| anchor[r2] + CELL as f64 * m + span * w - anchor[r];
                    let (lo, hi) = (jump(x.floor()), jump(x.ceil()));
                    let key = |d: f64| ((d - delta).abs(), (d.signum() != delta.signum()) as u8);
                    let (ka, kb) = (key(lo), key(hi));
                    let shift = if (ka.0 - kb.0).abs() < 1e-9 {
                        if ka.1 <= kb.1 {
                            lo
                        } else {
                            hi
                        }
                    } else if ka.0 < kb.0 {
                        lo
                    } else {
                        hi
                    };
                    let size_ratio = orbits[r].len() as f64 / orbits[r2].len() as f64;
                    hops.push(SectorHop { row: r2, col: r, bond: j, forward, factor: f * size_ratio.sqrt(), shift });
                }
            }
        }
        Ok(Self { basis, reps, orbits, anchor, hops })
    }

    pub fn sites(&self) -> usize {
        self.basis.sites()
    }

    pub fn basis(&self) -> &TwoBosonBasis {
        &self.basis
    }

    pub fn cells(&self) -> usize {
        self.sites() / CELL
    }

    /// Number of translation orbits (`D_k` when all orbits are full).
    pub fn sector_count(&self) -> usize {
        self.reps.len()
    }

    pub fn reps(&self) -> &[(usize, usize)] {
        &self.reps
    }

    pub fn orbit(&self, r: usize) -> &[usize] {
        &self.orbits[r]
    }

    pub fn anchors(&self) -> &[f64] {
        &self.anchor
    }

    pub fn has_short_orbits(&self) -> bool {
        let l = self.cells();
        self.orbits.iter().any(|o| o.len() != l)
    }

    /// The discrete momenta `2 pi n / L_t`, `n = 0..L`.
    pub fn ring_momenta(&self) -> Vec<f64> {
        (0..self.cells()).map(|n| 2.0 * PI * n as f64 / self.sites() as f64).collect()
    }

    /// Diagonal gauge with `H(k + pi) = G H(k) G^dagger` (restricted to the
    /// rows of a block).
    pub fn gauge(&self, reps: &[usize]) -> DVector<C64> {
        DVector::from_iterator(reps.len(), reps.iter().map(|&r| C64::from_polar(1.0, -PI * self.anchor[r])))
    }

    fn block_rows(&self, k: f64) -> Result<Vec<usize>> {
        if !self.has_short_orbits() {
            return Ok((0..self.reps.len()).collect());
        }
        let n = k * self.sites() as f64 / (2.0 * PI);
        if (n - n.round()).abs() > 1e-9 {
            return Err(Error::Incommensurate { k });
        }
        let cells = self.cells() as f64;
        Ok((0..self.reps.len())
            .filter(|&r| {
                let s = self.orbits[r].len() as f64;
                let w = k * CELL as f64 * s / (2.0 * PI);
                s == cells || (w - w.round()).abs() < 1e-9
            })
            .collect())
    }

    fn check(&self, p: &ModelParams, k: f64) -> Result<()> {
        p.validate()?;
        if p.boundary != Boundary::Periodic {
            return Err(Error::NotPeriodic);
        }
        if p.sites != self.sites() {
            return Err(Error::BasisMismatch { basis: self.sites(), params: p.sites });
        }
        if !(0.0..PI).contains(&k) {
            return Err(Error::MomentumOutOfRange { k });
        }
        Ok(())
    }

    /// Block Hamiltonian with analytic `dH/dk` and `dH/dt`; `k` in `[0, pi)`.
    pub fn block(&self, p: &ModelParams, k: f64, t: f64, wrap: WrapPolicy) -> Result<MomentumBlock> {
        self.check(p, k)?;
        self.block_any_k(p, k, t, wrap)
    }

    /// As [`Self::block`] but without derivative matrices.
    pub fn hamiltonian(&self, p: &ModelParams, k: f64, t: f64, wrap: WrapPolicy) -> Result<DMatrix<C64>> {
        self.check(p, k)?;
        let (h, _) = self.fill(p, k, t, wrap, false)?;
        Ok(h.0)
    }

    /// Same as [`Self::block`] for any real `k` (the block is analytic in `k`).
    pub(crate) fn block_any_k(&self, p: &ModelParams, k: f64, t: f64, wrap: WrapPolicy) -> Result<MomentumBlock> {
        let ((h, dk, dt), reps) = self.fill(p, k, t, wrap, true)?;
        Ok(MomentumBlock { k, t, h, dh_dk: dk, dh_dt: dt, reps })
    }

    #[allow(clippy::type_complexity)]
    fn fill(
        &self,
        p: &ModelParams,
        k: f64,
        t: f64,
        wrap: WrapPolicy,
        derivatives: bool,
    ) -> Result<((DMatrix<C64>, DMatrix<C64>, DMatrix<C64>), Vec<usize>)> {
        let reps = self.block_rows(k)?;
        let dim = reps.len();
        let mut pos = vec![usize::MAX; self.reps.len()];
        for (i, &r) in reps.iter().enumerate() {
            pos[r] = i;
        }
        let zeros = || DMatrix::<C64>::zeros(dim, dim);
        let mut h = zeros();
        let (mut dk, mut dt) =
            if derivatives { (zeros(), zeros()) } else { (DMatrix::zeros(0, 0), DMatrix::zeros(0, 0)) };

        for (i, &r) in reps.iter().enumerate() {
            let (a, b) = self.reps[r];
            let u = if a == b { p.interaction } else { 0.0 };
            h[(i, i)] = C64::new(u + onsite_energy(p, a, t, false) + onsite_energy(p, b, t, false), 0.0);
            if derivatives {
                dt[(i, i)] = C64::new(onsite_rate(p, a, t) + onsite_rate(p, b, t), 0.0);
            }
        }

        let wf = p.omega_f();
        let fwd = C64::from_polar(1.0, -wf * t);
        for hop in &self.hops {
            if wrap == WrapPolicy::Cut && hop.shift.abs() > 1.0 {
                continue;
            }
            let (row, col) = (pos[hop.row], pos[hop.col]);
            if row == usize::MAX || col == usize::MAX {
                continue;
            }
            let (phase, dphase) = if hop.forward { (fwd, C64::new(0.0, -wf)) } else { (fwd.conj(), C64::new(0.0, wf)) };
            let bloch = C64::from_polar(hop.factor, -k * hop.shift);
            let amp = hopping_amplitude(p, hop.bond, t);
            let v = phase * bloch * amp;
            h[(row, col)] += v;
            if derivatives {
                dk[(row, col)] += v * C64::new(0.0, -hop.shift);
                let rate = hopping_rate(p, hop.bond, t);
                dt[(row, col)] += phase * bloch * (rate + amp * dphase);
            }
        }
        Ok(((h, dk, dt), reps))
    }

    /// Real-space amplitudes of a sector vector at momentum `k`.
    ///
    /// `reps` lists the sector index of each component of `v`.
    pub fn to_real_space(&self, k: f64, reps: &[usize], v: &[C64]) -> Vec<C64> {
        let mut psi = vec![C64::new(0.0, 0.0); self.basis.dim()];
        for (&r, &c) in reps.iter().zip(v) {
            let orbit = &self.orbits[r];
            let norm = 1.0 / (orbit.len() as f64).sqrt();
            for (n, &idx) in orbit.iter().enumerate() {
                let x = self.anchor[r] + (CELL * n) as f64;
                psi[idx] += c * C64::from_polar(norm, k * x);
            }
        }
        psi
    }

    /// Sector components `<k, r|psi>` for the rows `reps`.
    pub fn project(&self, k: f64, reps: &[usize], psi: &[C64]) -> DVector<C64> {
        DVector::from_iterator(
            reps.len(),
            reps.iter().map(|&r| {
                let orbit = &self.orbits[r];
                let norm = 1.0 / (orbit.len() as f64).sqrt();
                orbit
                    .iter()
                    .enumerate()
                    .map(|(n, &idx)| {
                        let x = self.anchor[r] + (CELL * n) as f64;
                        C64::from_polar(norm, -k * x) * psi[idx]
                    })
                    .sum()
            }),
        )
    }

    /// Applies the cell translation `(T psi)(c) = psi(T c)`; Bloch states
    /// built by [`Self::to_real_space`] are eigenvectors with eigenvalue
    /// `exp(i k d)`.
    pub fn translate_state(&self, psi: &[C64]) -> Vec<C64> {
        let sites = self.sites();
        self.basis
            .pairs()
            .iter()
            .map(|&pair| {
                let (a, b) = translate(pair, sites, 1);
                psi[self.basis.index_of(a, b).unwrap()]
            })
            .collect()
    }
}

/// Convenience wrapper for one-off blocks.
pub fn build_momentum_block(p: &ModelParams, k: f64, t: f64, wrap: WrapPolicy) -> Result<MomentumBlock> {
    MomentumSectors::new(p.sites)?.block(p, k, t, wrap)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn orbit_sizes() {
        let s = MomentumSectors::new(26).unwrap();
        assert_eq!(s.sector_count(), 27);
        assert!(s.orbits.iter().all(|o| o.len() == 13));
        assert!(!s.has_short_orbits());
        let s = MomentumSectors::new(12).unwrap();
        assert!(s.has_short_orbits());
        let total: usize = s.orbits.iter().map(Vec::len).sum();
        assert_eq!(total, 78);
    }

    #[test]
    fn rejects_bad_inputs() {
        let p = ModelParams::bound_pump();
        let s = MomentumSectors::new(26).unwrap();
        assert!(matches!(s.block(&p, 3.5, 0.0, WrapPolicy::Keep), Err(Error::MomentumOutOfRange { .. })));
        assert!(matches!(s.block(&p, -0.1, 0.0, WrapPolicy::Keep), Err(Error::MomentumOutOfRange { .. })));
        let open = p.clone().with_boundary(Boundary::Open);
        assert!(matches!(s.block(&open, 0.0, 0.0, WrapPolicy::Keep), Err(Error::NotPeriodic)));
        let p12 = p.with_sites(12);
        let s12 = MomentumSectors::new(12).unwrap();
        assert!(matches!(s12.block(&p12, 0.1, 0.0, WrapPolicy::Keep), Err(Error::Incommensurate { .. })));
    }

    #[test]
    fn blocks_are_hermitian_off_grid() {
        let p = ModelParams::bound_pump();
        let s = MomentumSectors::new(26).unwrap();
        for wrap in [WrapPolicy::Keep, WrapPolicy::Cut] {
            for &(k, t) in &[(0.3, 17.0), (1.234, 900.0), (3.0, 2500.0)] {
                let b = s.block(&p, k, t, wrap).unwrap();
                assert_eq!((&b.h - b.h.adjoint()).camax(), 0.0);
                assert!((&b.dh_dk - b.dh_dk.adjoint()).camax() < 1e-14);
                assert!((&b.dh_dt - b.dh_dt.adjoint()).camax() < 1e-14);
            }
        }
    }

    #[test]
    fn gauge_relates_k_and_k_plus_pi() {
        let p = ModelParams::bound_pump();
        let s = MomentumSectors::new(26).unwrap();
        let reps: Vec<usize> = (0..s.sector_count()).collect();
        let g = s.gauge(&reps);
        let g = DMatrix::from_diagonal(&g);
        for wrap in [WrapPolicy::Keep, WrapPolicy::Cut] {
            let a = s.block_any_k(&p, 0.4, 55.0, wrap).unwrap().h;
            let b = s.block_any_k(&p, 0.4 + PI, 55.0, wrap).unwrap().h;
            let rotated = &g * a * g.adjoint();
            assert!((b - rotated).camax() < 1e-12);
        }
    }
}
