//! Two-boson Hilbert space and Hamiltonian representations.

pub mod basis;
pub mod momentum;
pub mod operator;

use std::ops::AddAssign;

use crate::error::{Error, Result};
use crate::params::{parity, Boundary, ModelParams};
use crate::C64;
use basis::TwoBosonBasis;
use operator::SparseHermitian;

/// `J + delta0 sin(pi j + phi(t))` on the bond `j -> j+1`.
pub fn hopping_amplitude(p: &ModelParams, j: usize, t: f64) -> f64 {
    p.hopping + p.delta0 * parity(j) * p.phase(t).sin()
}

/// `d/dt` of [`hopping_amplitude`].
pub fn hopping_rate(p: &ModelParams, j: usize, t: f64) -> f64 {
    p.delta0 * p.omega * parity(j) * p.phase(t).cos()
}

/// `Delta0 cos(pi j + phi(t))`, plus `omega_F j` when `include_tilt`.
pub fn onsite_energy(p: &ModelParams, j: usize, t: f64, include_tilt: bool) -> f64 {
    let e = p.stagger * parity(j) * p.phase(t).cos();
    if include_tilt {
        e + p.omega_f() * j as f64
    } else {
        e
    }
}

pub fn onsite_rate(p: &ModelParams, j: usize, t: f64) -> f64 {
    -p.stagger * p.omega * parity(j) * p.phase(t).sin()
}

/// Bonds `(j, j')` with `j' = j + 1`, plus the wrap bond `(L_t, 1)` on a ring.
pub(crate) fn bonds(sites: usize, boundary: Boundary) -> impl Iterator<Item = (usize, usize)> {
    let last = match boundary {
        Boundary::Periodic => sites,
        Boundary::Open => sites - 1,
    };
    (1..=last).map(move |j| (j, j % sites + 1))
}

/// Applies `a^dagger_dst a_src` to the pair state; returns the new pair and
/// the bosonic factor `sqrt(n_src) sqrt(n_dst + 1)`.
pub(crate) fn move_particle((a, b): (usize, usize), src: usize, dst: usize) -> Option<((usize, usize), f64)> {
    let n_src = (a == src) as u32 + (b == src) as u32;
    if n_src == 0 {
        return None;
    }
    let n_dst = (a == dst) as u32 + (b == dst) as u32;
    let factor = ((n_src * (n_dst + 1)) as f64).sqrt();
    let (x, y) = if a == src { (dst, b) } else { (a, dst) };
    Some((if x <= y { (x, y) } else { (y, x) }, factor))
}

/// Calls `f(row, col, bond j, factor)` for every matrix element
/// `<row| a^dagger_j a_{j'} |col>` of the forward hopping terms.
pub(crate) fn for_each_hop(basis: &TwoBosonBasis, boundary: Boundary, mut f: impl FnMut(usize, usize, usize, f64)) {
    for (col, &pair) in basis.pairs().iter().enumerate() {
        for (j, jn) in bonds(basis.sites(), boundary) {
            if let Some((to, factor)) = move_particle(pair, jn, j) {
                let row = basis.index_of(to.0, to.1).expect("pair in range");
                f(row, col, j, factor);
            }
        }
    }
}

fn check_basis(p: &ModelParams, basis: &TwoBosonBasis) -> Result<()> {
    p.validate()?;
    if basis.sites() != p.sites {
        return Err(Error::BasisMismatch { basis: basis.sites(), params: p.sites });
    }
    Ok(())
}

/// Generic CSR assembly, summing duplicates.
pub(crate) fn assemble<T: Copy + AddAssign>(
    dim: usize,
    mut triplets: Vec<(usize, usize, T)>,
) -> (Vec<usize>, Vec<usize>, Vec<T>) {
    triplets.sort_unstable_by_key(|&(r, c, _)| (r, c));
    let mut row_ptr = vec![0usize; dim + 1];
    let mut cols = Vec::with_capacity(triplets.len());
    let mut vals: Vec<T> = Vec::with_capacity(triplets.len());
    let mut last = None;
    for (r, c, v) in triplets {
        if last == Some((r, c)) {
            *vals.last_mut().unwrap() += v;
            continue;
        }
        last = Some((r, c));
        row_ptr[r + 1] += 1;
        cols.push(c);
        vals.push(v);
    }
    for r in 0..dim {
        row_ptr[r + 1] += row_ptr[r];
    }
    (row_ptr, cols, vals)
}

#[derive(Clone, Copy, Debug)]
struct Coef([f64; 3]);

impl AddAssign for Coef {
    fn add_assign(&mut self, o: Self) {
        for (a, b) in self.0.iter_mut().zip(o.0) {
            *a += b;
        }
    }
}

/// Lab-frame Hamiltonian as `H0 + sin(phi) H_s + cos(phi) H_c`, with a fixed
/// sparsity pattern so each time step only rescales stored values.
///
/// All three parts are real symmetric.
#[derive(Clone, Debug)]
pub struct DrivenOperator {
    template: SparseHermitian,
    coeffs: Vec<Coef>,
    params: ModelParams,
}

impl DrivenOperator {
    pub fn lab(p: &ModelParams, basis: &TwoBosonBasis) -> Result<Self> {
        check_basis(p, basis)?;
        let mut trip: Vec<(usize, usize, Coef)> = Vec::new();
        for_each_hop(basis, p.boundary, |row, col, j, f| {
            let c = Coef([p.hopping * f, p.delta0 * parity(j) * f, 0.0]);
            trip.push((row, col, c));
            trip.push((col, row, c));
        });
        let wf = p.omega_f();
        for (i, &(a, b)) in basis.pairs().iter().enumerate() {
            let u = if a == b { p.interaction } else { 0.0 };
            let tilt = wf * (a + b) as f64;
            let cosc = p.stagger * (parity(a) + parity(b));
            trip.push((i, i, Coef([u + tilt, 0.0, cosc])));
        }
        let (row_ptr, cols, coeffs) = assemble(basis.dim(), trip);
        let template = SparseHermitian::from_csr(basis.dim(), row_ptr, cols);
        Ok(Self { template, coeffs, params: p.clone() })
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn dim(&self) -> usize {
        self.template.dim()
    }

    pub fn at(&self, t: f64) -> SparseHermitian {
        let mut h = self.template.clone();
        self.write_into(t, &mut h);
        h
    }

    /// Overwrites the values of an operator that came from [`Self::at`].
    pub fn write_into(&self, t: f64, h: &mut SparseHermitian) {
        let (s, c) = self.params.phase(t).sin_cos();
        for (v, k) in h.values_mut().iter_mut().zip(&self.coeffs) {
            *v = C64::new(k.0[0] + s * k.0[1] + c * k.0[2], 0.0);
        }
    }

    /// Row-sum bound on `||H(t)||` valid for every `t`.
    pub fn norm_bound(&self) -> f64 {
        let (row_ptr, _) = self.template.pattern();
        (0..self.dim())
            .map(|r| {
                self.coeffs[row_ptr[r]..row_ptr[r + 1]].iter().map(|k| k.0[0].abs() + k.0[1].hypot(k.0[2])).sum::<f64>()
            })
            .fold(0.0, f64::max)
    }
}

/// Lab-frame Hamiltonian at time `t`, tilt included.
pub fn build_lab_hamiltonian(p: &ModelParams, basis: &TwoBosonBasis, t: f64) -> Result<SparseHermitian> {
    Ok(DrivenOperator::lab(p, basis)?.at(t))
}

/// Rotating-frame Hamiltonian: forward hops carry `exp(-i omega_F t)`, there
/// is no tilt on the diagonal.
pub fn build_rotating_hamiltonian(p: &ModelParams, basis: &TwoBosonBasis, t: f64) -> Result<SparseHermitian> {
    check_basis(p, basis)?;
    let phase = C64::from_polar(1.0, -p.omega_f() * t);
    let mut trip = Vec::new();
    for_each_hop(basis, p.boundary, |row, col, j, f| {
        let v = phase * (hopping_amplitude(p, j, t) * f);
        trip.push((row, col, v));
        trip.push((col, row, v.conj()));
    });
    for (i, &(a, b)) in basis.pairs().iter().enumerate() {
        let u = if a == b { p.interaction } else { 0.0 };
        let e = u + onsite_energy(p, a, t, false) + onsite_energy(p, b, t, false);
        trip.push((i, i, C64::new(e, 0.0)));
    }
    Ok(SparseHermitian::from_triplets(basis.dim(), trip))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, SQRT_2};

    fn params() -> ModelParams {
        ModelParams::bound_pump()
    }

    #[test]
    fn hopping_examples() {
        let mut p = params();
        assert!((hopping_amplitude(&p, 2, 0.0) + 1.0).abs() < 1e-15);
        p.phi0 = FRAC_PI_2;
        assert!((hopping_amplitude(&p, 2, 0.0) + 0.2).abs() < 1e-15);
        assert!((hopping_amplitude(&p, 1, 0.0) + 1.8).abs() < 1e-15);
    }

    #[test]
    fn onsite_examples() {
        let p = params();
        assert!((onsite_energy(&p, 1, 0.0, false) + 2.0).abs() < 1e-15);
        assert!((onsite_energy(&p, 2, 0.0, false) - 2.0).abs() < 1e-15);
        let want = 2.0 + 2.0 * p.omega_f();
        assert!((onsite_energy(&p, 2, 0.0, true) - want).abs() < 1e-15);
    }

    #[test]
    fn time_rates_match_finite_differences() {
        let p = params();
        let h = 1e-3;
        for j in 1..=4 {
            let t = 321.0;
            let fd = (hopping_amplitude(&p, j, t + h) - hopping_amplitude(&p, j, t - h)) / (2.0 * h);
            assert!((fd - hopping_rate(&p, j, t)).abs() < 1e-9);
            let fd = (onsite_energy(&p, j, t + h, false) - onsite_energy(&p, j, t - h, false)) / (2.0 * h);
            assert!((fd - onsite_rate(&p, j, t)).abs() < 1e-9);
        }
    }

    #[test]
    fn doublon_matrix_elements() {
        let p = params();
        let basis = TwoBosonBasis::new(p.sites).unwrap();
        let t = 0.0;
        let h = build_lab_hamiltonian(&p, &basis, t).unwrap();
        let j = 5;
        let dd = basis.index_of(j, j).unwrap();
        let want = p.interaction + 2.0 * onsite_energy(&p, j, t, true);
        assert!((h.get(dd, dd).re - want).abs() < 1e-12);
        let pair = basis.index_of(j, j + 1).unwrap();
        let want = SQRT_2 * hopping_amplitude(&p, j, t);
        assert!((h.get(pair, dd).re - want).abs() < 1e-12);
        assert_eq!(h.hermiticity_residual(), 0.0);
    }

    #[test]
    fn open_chain_has_no_wrap_bond() {
        let p = params().with_boundary(Boundary::Open);
        let basis = TwoBosonBasis::new(p.sites).unwrap();
        let h = build_lab_hamiltonian(&p, &basis, 0.0).unwrap();
        let a = basis.index_of(1, 1).unwrap();
        let b = basis.index_of(1, p.sites).unwrap();
        assert_eq!(h.get(a, b), C64::new(0.0, 0.0));
        let pp = params();
        let h = build_rotating_hamiltonian(&pp, &basis, 0.0).unwrap();
        assert!(h.get(b, a).norm() > 0.5);
    }

    #[test]
    fn rotating_equals_lab_without_tilt() {
        let p = params().with_tilt(0, 1);
        let basis = TwoBosonBasis::new(p.sites).unwrap();
        for t in [0.0, 77.0, 913.5] {
            let a = build_lab_hamiltonian(&p, &basis, t).unwrap().to_dense();
            let b = build_rotating_hamiltonian(&p, &basis, t).unwrap().to_dense();
            assert!((a - b).camax() < 1e-14);
        }
    }

    #[test]
    fn rotating_is_periodic_in_pump_period() {
        let p = params().with_sites(10);
        let basis = TwoBosonBasis::new(p.sites).unwrap();
        let t = 123.4;
        let a = build_rotating_hamiltonian(&p, &basis, t).unwrap().to_dense();
        let b = build_rotating_hamiltonian(&p, &basis, t + p.pump_period()).unwrap().to_dense();
        assert!((a - b).camax() < 1e-10);
    }

    #[test]
    fn mismatched_basis_rejected() {
        let p = params();
        let basis = TwoBosonBasis::new(10).unwrap();
        assert!(matches!(build_lab_hamiltonian(&p, &basis, 0.0), Err(Error::BasisMismatch { .. })));
    }
}
