use std::f64::consts::PI;

use proptest::prelude::*;
use tiltpump::dynamics::observables::MomentumDensity;
use tiltpump::dynamics::*;
use tiltpump::model::build_rotating_hamiltonian;
use tiltpump::spectrum::{doublon_pair_resonances, solve_block, torus_clusters};
use tiltpump::topology::BAND_II;
use tiltpump::*;

mod support;
use support::*;

#[test]
fn free_bosons_follow_single_particle_propagator() {
    let sites = 12;
    let p = free_params(sites);
    let basis = TwoBosonBasis::new(sites).unwrap();
    let controls = EvolveControls { step: Some(0.05), sample_every: 10, ..Default::default() };
    for (a, b) in [(3, 8), (6, 6)] {
        let s = prepare_fock(&basis, a, b).unwrap();
        let tr = evolve(&s, &p, &basis, 0.0, 6.0, &controls).unwrap();
        let mut worst = 0.0f64;
        for (t, n) in tr.times.iter().zip(&tr.densities) {
            let g = single_particle_propagator(sites, p.hopping, *t);
            for j in 0..sites {
                // Density of non-interacting particles is the sum of one-body densities.
                let want = g[(j, a - 1)].norm_sqr() + g[(j, b - 1)].norm_sqr();
                worst = worst.max((n[j] - want).abs());
            }
        }
        assert!(worst < 1e-8, "({a}, {b}): {worst:e}");
    }
}

#[test]
fn lab_and_rotating_frames_agree() {
    let p = ModelParams::bound_pump().with_sites(12).with_boundary(Boundary::Open).with_tilt(31, 3);
    let basis = TwoBosonBasis::new(12).unwrap();
    let s = prepare_fock(&basis, 6, 7).unwrap();
    let t1 = 0.05 * p.drive_period();
    let run = |frame, steps_per_period| {
        let c = EvolveControls { frame, steps_per_period, sample_every: 5, ..Default::default() };
        evolve(&s, &p, &basis, 0.0, t1, &c).unwrap()
    };
    let gap = |n: usize| {
        let (lab, rot) = (run(Frame::Lab, n), run(Frame::Rotating, n));
        let mut worst = 0.0f64;
        for (a, b) in lab.densities.iter().zip(&rot.densities) {
            for (x, y) in a.iter().zip(b) {
                worst = worst.max((x - y).abs());
            }
        }
        (worst, lab)
    };
    // Each frame has its own O(h^2) midpoint error; the gap must close at that rate.
    let (coarse, _) = gap(16_000);
    let (fine, lab) = gap(2_048_000);
    assert!(fine < 1e-8, "{fine:e}");
    assert!(fine < coarse / 1000.0, "{coarse:e} -> {fine:e}");
    // The tilt does move the pair.
    assert!(lab.displacement().last().unwrap().abs() > 1e-3);
}

#[test]
fn sum_rules_and_norm_along_a_driven_run() {
    let p = ModelParams::bound_pump().with_boundary(Boundary::Open);
    let basis = TwoBosonBasis::new(p.sites).unwrap();
    let s = prepare_fock(&basis, 12, 15).unwrap();
    let c = EvolveControls { correlation_at: vec![0.0, 100.0, 200.0], ..Default::default() };
    let tr = evolve(&s, &p, &basis, 0.0, 0.2 * p.drive_period(), &c).unwrap();
    assert!(tr.max_norm_drift() < 1e-8);
    for n in &tr.densities {
        assert!((n.iter().sum::<f64>() - 2.0).abs() < 1e-8);
    }
    assert_eq!(tr.correlations.len(), 3);
    for snap in &tr.correlations {
        assert!((snap.r.iter().sum::<f64>() - 2.0).abs() < 1e-8);
        let l = p.sites;
        for i in 0..l {
            for j in 0..l {
                assert_eq!(snap.r[i * l + j], snap.r[j * l + i]);
            }
        }
    }
}

#[test]
fn bloch_state_properties() {
    let p = ModelParams::bound_pump();
    let s = MomentumSectors::new(p.sites).unwrap();
    let k0 = s.ring_momenta()[3];
    let t0 = 200.0;
    let psi = bloch_state_realspace(&p, &s, 1, k0, t0).unwrap();
    assert!((psi.norm() - 1.0).abs() < 1e-12);

    let shifted = s.translate_state(psi.amps());
    let phase = C64::from_polar(1.0, k0 * CELL as f64);
    let res = shifted.iter().zip(psi.amps()).map(|(a, b)| (a - phase * b).norm_sqr()).sum::<f64>().sqrt();
    assert!(res < 1e-10, "{res:e}");

    let h = build_rotating_hamiltonian(&p, s.basis(), t0).unwrap();
    let mut hp = vec![C64::new(0.0, 0.0); psi.amps().len()];
    h.apply(psi.amps(), &mut hp);
    let energy: f64 = psi.amps().iter().zip(&hp).map(|(a, b)| (a.conj() * b).re).sum();
    let e = solve_block(&s.block(&p, k0, t0, WrapPolicy::Keep).unwrap()).unwrap().values[1];
    assert!((energy - e).abs() < 1e-10);

    let big = psi.amps().iter().copied().reduce(|a, b| if b.norm() > a.norm() + 1e-12 { b } else { a }).unwrap();
    assert!(big.im.abs() < 1e-14 && big.re > 0.0);

    let bands = [0..1, BAND_II, 2..8, 8..21, 21..27];
    let f = band_fidelities(&psi, &p, &s, &bands, t0).unwrap();
    assert!((f[1] - 1.0).abs() < 1e-10);
    assert!((f.iter().sum::<f64>() - 1.0).abs() < 1e-10);
}

#[test]
fn fock_state_fidelities() {
    let p = ModelParams::bound_pump().with_interaction(10.0);
    let s = MomentumSectors::new(p.sites).unwrap();
    let fock = prepare_fock(s.basis(), 13, 13).unwrap();
    assert_eq!(fock.norm(), 1.0);
    let f = band_fidelity(&fock, &p, &s, BAND_II, 0.0).unwrap();
    assert!((f - 0.858).abs() < 0.005, "{f}");

    let p = ModelParams::scattering();
    let s = MomentumSectors::new(p.sites).unwrap();
    let c = torus_clusters(&p, &s, 5, 12, 36, p.pump_period()).unwrap();
    assert_eq!(c.sizes(), vec![1, 1, 14, 29, 14]);
    let v = band_fidelities(&prepare_fock(s.basis(), 21, 35).unwrap(), &p, &s, &c.ranges, 0.0).unwrap();
    let iv = band_fidelities(&prepare_fock(s.basis(), 23, 36).unwrap(), &p, &s, &c.ranges, 0.0).unwrap();
    assert!((v[4] - 0.9805).abs() < 0.003, "{v:?}");
    assert!((iv[3] - 0.9806).abs() < 0.003, "{iv:?}");
    for f in [&v, &iv] {
        assert!((f.iter().sum::<f64>() - 1.0).abs() < 1e-10);
    }
}

#[test]
fn fock_preparation_rejects_bad_sites() {
    let b = TwoBosonBasis::new(10).unwrap();
    assert!(prepare_fock(&b, 0, 3).is_err());
    assert!(prepare_fock(&b, 4, 11).is_err());
}

#[test]
fn gaussian_packets() {
    let p = ModelParams::bound_pump().with_sites(74);
    let s = MomentumSectors::new(74).unwrap();
    let bloch = bloch_state_realspace(&p, &s, 1, 0.0, 0.0).unwrap();

    let flat = prepare_gaussian(&bloch, s.basis(), 1e6, 37.0).unwrap();
    let diff = flat.state.amps().iter().zip(bloch.amps()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
    assert!(diff < 1e-9, "{diff:e}");
    assert!(!flat.warnings.is_empty());

    let g = prepare_gaussian(&bloch, s.basis(), 5.0, 37.0).unwrap();
    assert!((g.state.norm() - 1.0).abs() < 1e-12);
    assert!(g.warnings.is_empty());
    assert!(g.edge_weight < 1e-12);
    let c = torus_clusters(&p, &s, 5, 12, 36, 3.0 * p.drive_period()).unwrap();
    assert!(band_fidelity(&g.state, &p, &s, c.ranges[1].clone(), 0.0).unwrap() > 0.99);

    // The isolated band of the resonant regime.
    let q = ModelParams::resonant().with_sites(74);
    let c = torus_clusters(&q, &s, 5, 12, 36, 3.0 * q.drive_period()).unwrap();
    assert_eq!(c.ranges[3].len(), 1);
    let b = bloch_state_realspace(&q, &s, c.ranges[3].start, 0.0, 0.0).unwrap();
    let g = prepare_gaussian(&b, s.basis(), 5.0, 37.0).unwrap();
    assert!(band_fidelity(&g.state, &q, &s, c.ranges[3].clone(), 0.0).unwrap() > 0.99);

    assert!(prepare_gaussian(&bloch, s.basis(), 0.0, 37.0).is_err());
    assert!(!prepare_gaussian(&bloch, s.basis(), 5.0, 8.0).unwrap().warnings.is_empty());
}

fn spread(m: &MomentumDensity) -> f64 {
    let z: C64 = m.ks.iter().zip(&m.rho).map(|(&k, &r)| C64::from_polar(r, 2.0 * k)).sum();
    (-2.0 * z.norm().ln()).sqrt() / 2.0
}

#[test]
fn momentum_density_of_a_packet_peaks_at_its_momentum() {
    let p = ModelParams::bound_pump().with_sites(74);
    let s = MomentumSectors::new(74).unwrap();
    let k0 = s.ring_momenta()[9];
    let bloch = bloch_state_realspace(&p, &s, 1, k0, 0.0).unwrap();
    let narrow = momentum_density(prepare_gaussian(&bloch, s.basis(), 4.0, 37.0).unwrap().state.amps(), s.basis());
    let wide = momentum_density(prepare_gaussian(&bloch, s.basis(), 8.0, 37.0).unwrap().state.amps(), s.basis());
    for m in [&narrow, &wide] {
        assert!((m.rho.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let peak = m.rho.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap().0;
        assert!((m.ks[peak] - k0).abs() < 1e-12);
        assert!((m.mean() - k0).abs() < 0.02);
    }
    // Width scales as 1 / sigma.
    let ratio = spread(&narrow) / spread(&wide);
    assert!((ratio - 2.0).abs() < 0.2, "{ratio}");
}

#[test]
fn semiclassical_displacement_is_quantized_with_tilt() {
    let p = ModelParams::bound_pump();
    let s = MomentumSectors::new(p.sites).unwrap();
    let tau = 3.0 * p.drive_period();
    for i in 0..13 {
        let k0 = PI * i as f64 / 13.0;
        let r = semiclassical_displacement(&p, &s, BAND_II, k0, tau, 6000).unwrap();
        assert!((r.total_cells() - 3.0).abs() < 0.05, "k0 = {k0}: {r:?}");
        assert!(r.dispersion.abs() < 0.05 * CELL as f64, "{r:?}");
    }
}

#[test]
fn semiclassical_displacement_without_tilt_depends_on_momentum() {
    let amplitude = |u: f64| {
        let p = ModelParams::bound_pump().with_interaction(u).with_tilt(0, 1);
        let s = MomentumSectors::new(p.sites).unwrap();
        let vals: Vec<f64> = (0..7)
            .map(|i| {
                semiclassical_displacement(&p, &s, BAND_II, PI * i as f64 / 7.0, 3.0 * p.drive_period(), 3000)
                    .unwrap()
                    .total_cells()
            })
            .collect();
        let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (hi - lo, vals)
    };
    let (a10, v10) = amplitude(10.0);
    let (a30, v30) = amplitude(30.0);
    assert!(a30 > 0.05, "{v30:?}");
    assert!(a30 < a10, "{v10:?} vs {v30:?}");
}

#[test]
fn four_resonances_per_modulation_period() {
    let p = ModelParams::resonant();
    let s = MomentumSectors::new(p.sites).unwrap();
    let c = torus_clusters(&p, &s, 5, 12, 36, 3.0 * p.drive_period()).unwrap();
    assert_eq!(c.sizes(), vec![1, 7, 12, 1, 6]);
    let level = c.ranges[3].start;
    let tm = p.drive_period();
    let r = doublon_pair_resonances(&p, &s, level, 0.0, tm, 4000, WrapPolicy::Keep, 0.05 * p.interaction).unwrap();
    assert_eq!(r.len(), 4, "{r:?}");
    // Doublon energy U - 2 Delta0 |cos phi| meets the pair energy.
    let phi = (p.interaction / (2.0 * p.stagger)).acos();
    let want = [phi, PI - phi, PI + phi, 2.0 * PI - phi].map(|x| x / p.omega);
    for (res, w) in r.iter().zip(want) {
        assert!((res.t - w).abs() < 0.01 * tm, "{res:?} vs {w}");
        assert!((res.doublon_weight - 0.5).abs() < 0.05);
    }
}

fn arb_state(dim: usize) -> impl Strategy<Value = Vec<C64>> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), dim).prop_filter_map("zero vector", |v| {
        let n: f64 = v.iter().map(|(a, b)| a * a + b * b).sum::<f64>().sqrt();
        (n > 1e-3).then(|| v.iter().map(|&(a, b)| C64::new(a, b) / n).collect())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn observable_sum_rules(psi in arb_state(55)) {
        let b = TwoBosonBasis::new(10).unwrap();
        prop_assert!((density(&psi, &b).iter().sum::<f64>() - 2.0).abs() < 1e-12);
        let r = correlation(&psi, &b);
        prop_assert!((r.iter().sum::<f64>() - 2.0).abs() < 1e-12);
        prop_assert!((cell_correlation(&r, 10).iter().sum::<f64>() - 2.0).abs() < 1e-12);
        let m = momentum_density(&psi, &b);
        prop_assert!((m.rho.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!((0.0..PI).contains(&m.mean()));
        let x = centroid(&psi, &b);
        prop_assert!((1.0..=10.0).contains(&x));
    }

    #[test]
    fn krylov_step_is_unitary(psi in arb_state(55), t in 0.0f64..1500.0, tau in 0.01f64..3.0) {
        let p = ModelParams::bound_pump().with_sites(10).with_boundary(Boundary::Open);
        let b = TwoBosonBasis::new(10).unwrap();
        let h = model::build_lab_hamiltonian(&p, &b, t).unwrap();
        let mut k = Krylov::new(b.dim(), KrylovOptions::default());
        let mut out = psi.clone();
        k.step(&h, &mut out, tau);
        let n: f64 = out.iter().map(|x| x.norm_sqr()).sum();
        prop_assert!((n - 1.0).abs() < 1e-12);
        // Energy of a time-independent step is conserved.
        let energy = |v: &[C64]| {
            let mut hv = vec![C64::new(0.0, 0.0); v.len()];
            h.apply(v, &mut hv);
            v.iter().zip(&hv).map(|(a, b)| (a.conj() * b).re).sum::<f64>()
        };
        prop_assert!((energy(&psi) - energy(&out)).abs() < 1e-8);
    }
}
