use std::f64::consts::PI;

use tiltpump::model::momentum::{MomentumSectors, WrapPolicy};
use tiltpump::quad::QuadOptions;
use tiltpump::spectrum::{band_surface, find_clusters, TorusGrid};
use tiltpump::topology::*;
use tiltpump::ModelParams;

fn fig2() -> (ModelParams, MomentumSectors, f64) {
    let p = ModelParams::bound_pump();
    let s = MomentumSectors::new(p.sites).unwrap();
    let t = 3.0 * p.drive_period();
    (p, s, t)
}

#[test]
fn five_bands_with_quantized_chern_numbers_and_zero_sum() {
    let (p, s, t_tot) = fig2();
    let b = band_surface(&p, &s, TorusGrid::new(24, 72, t_tot), WrapPolicy::Cut, false).unwrap();
    let c = find_clusters(&b.energies, 5);
    assert_eq!(c.sizes(), vec![1, 1, 6, 13, 6]);
    let r = chern_numbers_fhs(&p, &s, &c.ranges, FhsOptions::for_params(&p, t_tot)).unwrap();
    let ints: Vec<i64> = r.iter().map(|x| x.rounded).collect();
    assert_eq!(ints, vec![-3, 3, -3, 0, 3]);
    for x in &r {
        assert!(x.converged && (x.raw - x.rounded as f64).abs() < 0.02);
        assert_eq!((x.nk, x.nt), (48, 144));
    }
    let total: f64 = r.iter().map(|x| x.trace).sum();
    assert!(total.abs() < 1e-6);
}

#[test]
fn sign_flips_with_stagger() {
    let (p, s, t_tot) = fig2();
    let mut o = FhsOptions::for_params(&p, t_tot);
    o.verify = false;
    let plus = chern_number_fhs(&p, &s, BAND_II, o).unwrap();
    let minus = chern_number_fhs(&ModelParams { stagger: -2.0, ..p.clone() }, &s, BAND_II, o).unwrap();
    assert_eq!((plus.rounded, minus.rounded), (3, -3));
}

#[test]
fn bound_band_curvature_vanishes_without_dimerization() {
    let (p, s, t_tot) = fig2();
    let p = ModelParams { delta0: 0.0, ..p };
    for i in 0..8 {
        for j in 0..24 {
            let f = berry_curvature_point(&p, &s, BAND_II, 0.39 * i as f64, t_tot * j as f64 / 24.0, WrapPolicy::Cut)
                .unwrap();
            assert!(f.abs() < 1e-3);
        }
    }
}

/// Sum-over-states curvature against the FHS flux density of the same grid,
/// on plaquettes where the curvature is smooth (corner values within 20% of
/// the centre value). Near the sharp peaks a plaquette average and a point
/// value legitimately differ.
#[test]
fn curvature_matches_plaquette_flux_density() {
    let (p, s, _) = fig2();
    let p = p.with_tilt(0, 1);
    let tm = p.drive_period();
    let n = 48;
    let f = fhs_flux(&p, &s, &[BAND_II], n, n, tm, WrapPolicy::Cut, true).unwrap();
    let field = &f.field.unwrap()[0];
    let (dk, dt) = (PI / n as f64, tm / n as f64);
    let point = |x: f64, y: f64| {
        berry_curvature_point(&p, &s, BAND_II, (x * dk).rem_euclid(PI), (y * dt).rem_euclid(tm), WrapPolicy::Cut)
            .unwrap()
    };
    let centres: Vec<f64> = (0..n * n).map(|idx| point((idx / n) as f64 + 0.5, (idx % n) as f64 + 0.5)).collect();
    let nodes: Vec<f64> = (0..n * n).map(|idx| point((idx / n) as f64, (idx % n) as f64)).collect();
    let node = |i: usize, j: usize| nodes[(i % n) * n + j % n];
    let peak = centres.iter().fold(0.0f64, |a, b| a.max(b.abs()));
    let mut checked = 0;
    for i in 0..n {
        for j in 0..n {
            let fc = centres[i * n + j];
            if fc.abs() < 1e-3 * peak {
                continue;
            }
            let corners = [node(i, j), node(i + 1, j), node(i, j + 1), node(i + 1, j + 1)];
            if corners.iter().any(|c| (c - fc).abs() > 0.2 * fc.abs()) {
                continue;
            }
            checked += 1;
            let density = field[i * n + j] / (dk * dt);
            assert!((density - fc).abs() < 0.05 * fc.abs(), "({i}, {j}): {density} vs {fc}");
        }
    }
    assert!(checked > n * n / 3);
    assert!((f.trace[0] - 1.0).abs() < 1e-6);
}

#[test]
fn reduced_chern_is_momentum_independent_and_averages_to_fhs() {
    let (p, s, t_tot) = fig2();
    let vals: Vec<f64> = (0..8)
        .map(|i| {
            reduced_chern(&p, &s, BAND_II, PI * i as f64 / 8.0, t_tot, WrapPolicy::Cut, reduced_options())
                .unwrap()
                .value
        })
        .collect();
    let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    assert!(hi - lo < 5e-3);
    let mut o = FhsOptions::for_params(&p, t_tot);
    o.verify = false;
    let c = chern_number_fhs(&p, &s, BAND_II, o).unwrap();
    let mean = vals.iter().sum::<f64>() / 8.0;
    assert!((mean - c.raw).abs() < 0.01);
}

#[test]
fn phase_diagram_quadrants_and_critical_points() {
    let (p, _, _) = fig2();
    let d = phase_diagram(&p, &[0.8, 0.0], &[2.0, -2.0, 0.0], 24, 72).unwrap();
    assert_eq!(d.get(0, 0).chern.as_ref().unwrap().rounded, 3);
    assert_eq!(d.get(0, 1).chern.as_ref().unwrap().rounded, -3);
    for (a, b) in [(0, 2), (1, 0), (1, 1), (1, 2)] {
        let cell = d.get(a, b);
        assert!(cell.chern.is_none());
        assert!(cell.error.as_ref().unwrap().contains("critical"));
    }
}

#[test]
fn phase_diagram_is_antisymmetric_in_stagger() {
    let p = ModelParams::bound_pump().with_sites(10);
    let delta0s = [-1.6, -0.8, 0.3, 0.8, 1.6];
    let staggers = [-2.0, -1.0, 0.0, 1.0, 2.0];
    let d = phase_diagram(&p, &delta0s, &staggers, 24, 72).unwrap();
    for (a, d0) in delta0s.iter().enumerate() {
        for (b, st) in staggers.iter().enumerate() {
            let c = d.get(a, b).chern.as_ref().map(|c| c.rounded);
            let m = d.get(a, 4 - b).chern.as_ref().map(|c| c.rounded);
            assert_eq!(c.map(|x| -x), m, "delta0 = {d0}, Delta0 = {st}");
            if b != 2 {
                assert_eq!(c.unwrap().abs(), 3);
            }
        }
    }
}

#[test]
fn transition_sharpens_with_tilt() {
    let p = ModelParams::bound_pump();
    let ratios = [(0, 1), (1, 3), (2, 3), (10, 3)];
    let tight = QuadOptions { tol: 1e-8, ..reduced_options() };
    let scan = transition_scan(&p, 0.8, &[-2.0, -0.1, 0.0, 0.1, 2.0], &ratios, 24, 72, tight).unwrap();
    let row = |v: f64| scan.rows.iter().find(|r| r.stagger == v).unwrap();
    assert!((row(2.0).reduced[3].unwrap() - 3.0).abs() < 0.05);
    assert!((row(-2.0).reduced[3].unwrap() + 3.0).abs() < 0.05);
    assert!(row(0.0).reduced.iter().all(Option::is_none));
    for v in [0.1, -0.1] {
        let mags: Vec<f64> = row(v).reduced.iter().map(|x| x.unwrap().abs()).collect();
        assert!(mags.windows(2).all(|w| w[0] < w[1]), "{mags:?}");
    }
    assert!((row(0.1).untilted.unwrap() - 3.0).abs() < 0.02);
}
