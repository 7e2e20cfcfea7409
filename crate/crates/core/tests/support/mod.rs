//! Oracles shared by the integration tests and the acceptance harness.
#![allow(dead_code)]

use nalgebra::DMatrix;
use tiltpump::linalg::eigvalsh_desc;
use tiltpump::model::build_lab_hamiltonian;
use tiltpump::model::momentum::{MomentumSectors, WrapPolicy};
use tiltpump::{Boundary, ModelParams, TwoBosonBasis, C64};

/// `h(k, t)` written out again in complex arithmetic so that derivatives can
/// be taken by complex step.
pub fn field_c(p: &ModelParams, k: C64, t: C64) -> [C64; 3] {
    let u = p.interaction;
    let phi = t * p.omega + p.phi0;
    let th = k - t * (2.0 * p.omega_f());
    let s = phi.sin();
    [
        (s * s * p.delta0 * p.delta0 + p.hopping * p.hopping) * (4.0 / u) * th.cos(),
        -(s * (8.0 * p.hopping * p.delta0 / u)) * th.sin(),
        phi.cos() * (2.0 * p.stagger),
    ]
}

/// Lower-branch curvature `-h . (d_k h x d_t h) / (2 |h|^3)`.
pub fn two_level_oracle(p: &ModelParams, k: f64, t: f64) -> f64 {
    let eps = 1e-30;
    let re = |v: [C64; 3]| [v[0].re, v[1].re, v[2].re];
    let h = re(field_c(p, C64::new(k, 0.0), C64::new(t, 0.0)));
    let dk = field_c(p, C64::new(k, eps), C64::new(t, 0.0)).map(|x| x.im / eps);
    let dt = field_c(p, C64::new(k, 0.0), C64::new(t, eps)).map(|x| x.im / eps);
    let cross = [dk[1] * dt[2] - dk[2] * dt[1], dk[2] * dt[0] - dk[0] * dt[2], dk[0] * dt[1] - dk[1] * dt[0]];
    let n = (h[0] * h[0] + h[1] * h[1] + h[2] * h[2]).sqrt();
    -(h[0] * cross[0] + h[1] * cross[1] + h[2] * cross[2]) / (2.0 * n.powi(3))
}

/// `P V Q V P / U` with dense projectors in the full two-boson space.
pub fn brute_force_terms(p: &ModelParams, t: f64) -> (DMatrix<f64>, DMatrix<f64>) {
    let basis = TwoBosonBasis::new(p.sites).unwrap();
    let h = build_lab_hamiltonian(p, &basis, t).unwrap().to_dense().map(|z| {
        assert_eq!(z.im, 0.0);
        z.re
    });
    let dim = basis.dim();
    let doublon: Vec<usize> = (1..=p.sites).map(|j| basis.index_of(j, j).unwrap()).collect();
    let h0 = DMatrix::from_fn(dim, dim, |r, c| if r == c && doublon.contains(&r) { p.interaction } else { 0.0 });
    let v = &h - &h0;
    let proj = DMatrix::from_fn(dim, dim, |r, c| if r == c && doublon.contains(&r) { 1.0 } else { 0.0 });
    let q = DMatrix::identity(dim, dim) - &proj;
    let h1 = &proj * &v * &proj;
    let h2 = &proj * &v * &q * &v * &proj / p.interaction;
    let pick = |m: &DMatrix<f64>| DMatrix::from_fn(p.sites, p.sites, |a, b| m[(doublon[a], doublon[b])]);
    (pick(&h1), pick(&h2))
}

pub fn free_params(sites: usize) -> ModelParams {
    ModelParams {
        hopping: -1.0,
        delta0: 0.0,
        stagger: 0.0,
        interaction: 0.0,
        omega: 0.0,
        tilt_p: 0,
        tilt_q: 1,
        phi0: 0.0,
        sites,
        boundary: Boundary::Open,
    }
}

/// `exp(-i t h1)` for the open single-particle chain with uniform hopping `j`.
pub fn single_particle_propagator(sites: usize, j: f64, t: f64) -> DMatrix<C64> {
    let h = DMatrix::from_fn(sites, sites, |a, b| if a.abs_diff(b) == 1 { j } else { 0.0 });
    let e = h.symmetric_eigen();
    let q = e.eigenvectors.map(|x| C64::new(x, 0.0));
    let d = DMatrix::from_diagonal(&e.eigenvalues.map(|x| C64::from_polar(1.0, -t * x)));
    &q * d * q.transpose()
}

pub fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn sorted(v: impl IntoIterator<Item = f64>) -> Vec<f64> {
    let mut v: Vec<f64> = v.into_iter().collect();
    v.sort_by(|a, b| a.total_cmp(b));
    v
}

pub fn union_of_blocks(p: &ModelParams, t: f64) -> Vec<f64> {
    let s = MomentumSectors::new(p.sites).unwrap();
    let mut all = Vec::new();
    for k in s.ring_momenta() {
        let h = s.hamiltonian(p, k, t, WrapPolicy::Keep).unwrap();
        all.extend(eigvalsh_desc(h).iter().copied());
    }
    sorted(all)
}
