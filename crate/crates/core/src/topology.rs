//! Berry curvature, lattice Chern numbers and reduced Chern numbers on the
//! `(k, t)` torus of the full two-boson model.
//!
//! All quantities are computed for a *cluster* of consecutive levels (a range
//! of indices into the descending spectrum of a block). The curvature of a
//! cluster is the trace over its levels divided by the cluster size, so a
//! cluster holding `n` levels per momentum reports the Chern number per level.

use std::f64::consts::PI;
use std::ops::Range;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::Eigen;
use crate::model::momentum::{MomentumBlock, MomentumSectors, WrapPolicy};
use crate::params::{ModelParams, CELL};
use crate::quad::{integrate, QuadOptions, Quadrature};
use crate::spectrum::{band_label, solve_block, solve_matrix, TorusGrid};
use crate::C64;

/// Minimum separation between a cluster and its neighbours.
pub const DEGENERACY_MARGIN: f64 = 1e-8;
/// Smallest admissible `|det|` of a link overlap.
pub const OVERLAP_FLOOR: f64 = 0.1;
/// Plaquette fluxes above this trigger automatic grid refinement.
pub const FLUX_LIMIT: f64 = 0.9 * PI;
/// Distance from the lines `delta0 = 0` and `Delta0 = 0`.
pub const CRITICAL_MARGIN: f64 = 0.05;
/// Level index of band (ii).
pub const BAND_II: Range<usize> = 1..2;

fn gap_to_neighbours(values: &DVector<f64>, cluster: &Range<usize>) -> f64 {
    let mut gap = f64::INFINITY;
    if cluster.start > 0 {
        gap = gap.min(values[cluster.start - 1] - values[cluster.start]);
    }
    if cluster.end < values.len() {
        gap = gap.min(values[cluster.end - 1] - values[cluster.end]);
    }
    gap
}

/// Cluster-averaged curvature from a solved block.
///
/// `F = 2 Im sum_{m in S, n not in S} <m|dH/dk|n><n|dH/dt|m> / (E_m - E_n)^2 / |S|`,
/// summing over every other eigenstate of the block.
pub fn cluster_curvature(block: &MomentumBlock, eig: &Eigen, cluster: Range<usize>) -> Result<f64> {
    let dim = eig.values.len();
    if cluster.is_empty() || cluster.end > dim {
        return Err(Error::NoSuchBand { band: cluster.start, count: dim });
    }
    let gap = gap_to_neighbours(&eig.values, &cluster);
    if gap < DEGENERACY_MARGIN {
        return Err(Error::Degenerate { k: block.k, t: block.t, gap, margin: DEGENERACY_MARGIN });
    }
    let vs = eig.vectors.columns(cluster.start, cluster.len());
    let a = vs.adjoint() * &block.dh_dk * &eig.vectors;
    let b = eig.vectors.adjoint() * &block.dh_dt * vs;
    let mut f = 0.0;
    for (i, m) in cluster.clone().enumerate() {
        for n in (0..dim).filter(|n| !cluster.contains(n)) {
            let de = eig.values[m] - eig.values[n];
            f += (a[(i, n)] * b[(n, i)]).im / (de * de);
        }
    }
    Ok(2.0 * f / cluster.len() as f64)
}

/// Curvature of `cluster` at one point.
pub fn berry_curvature_point(
    p: &ModelParams,
    sectors: &MomentumSectors,
    cluster: Range<usize>,
    k: f64,
    t: f64,
    wrap: WrapPolicy,
) -> Result<f64> {
    let block = sectors.block(p, k, t, wrap)?;
    let eig = solve_block(&block)?;
    cluster_curvature(&block, &eig, cluster)
}

/// Curvature sampled on a torus grid.
#[derive(Clone, Debug, Serialize)]
pub struct BerryGrid {
    pub band: String,
    pub ks: Vec<f64>,
    pub ts: Vec<f64>,
    pub dk: f64,
    pub dt: f64,
    pub t_tot: f64,
    /// Row-major, `k` outer.
    pub values: Vec<f64>,
}

impl BerryGrid {
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.ts.len() + j]
    }

    /// Riemann-sum estimate of `(1/2 pi) sum F dk dt`.
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.dk * self.dt / (2.0 * PI)
    }
}

pub fn berry_grid(
    p: &ModelParams,
    sectors: &MomentumSectors,
    cluster: Range<usize>,
    grid: &TorusGrid,
    t_tot: f64,
    wrap: WrapPolicy,
) -> Result<BerryGrid> {
    let nt = grid.ts.len();
    let values = (0..grid.len())
        .into_par_iter()
        .map(|idx| berry_curvature_point(p, sectors, cluster.clone(), grid.ks[idx / nt], grid.ts[idx % nt], wrap))
        .collect::<Result<Vec<f64>>>()?;
    Ok(BerryGrid {
        band: label_of(&cluster),
        dk: PI / grid.ks.len() as f64,
        dt: t_tot / nt as f64,
        ks: grid.ks.clone(),
        ts: grid.ts.clone(),
        t_tot,
        values,
    })
}

fn label_of(cluster: &Range<usize>) -> String {
    if cluster.len() == 1 {
        band_label(cluster.start)
    } else {
        format!("levels {}..{}", cluster.start, cluster.end)
    }
}

/// Lattice Chern number of one cluster.
#[derive(Clone, Debug, Serialize)]
pub struct ChernResult {
    pub band: String,
    pub levels: Range<usize>,
    /// Sum of plaquette fluxes over `2 pi`, for the whole cluster.
    pub trace: f64,
    /// `trace / |S|`.
    pub raw: f64,
    pub rounded: i64,
    pub nk: usize,
    pub nt: usize,
    pub t_tot: f64,
    pub max_flux: f64,
    pub min_overlap: f64,
    pub converged: bool,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct FhsOptions {
    pub nk: usize,
    pub nt: usize,
    pub t_tot: f64,
    pub wrap: WrapPolicy,
    /// Repeat on a doubled grid and require the same integer.
    pub verify: bool,
    pub max_refinements: usize,
}

impl FhsOptions {
    /// 48 momenta by `48 q` times over `t_tot`.
    pub fn for_params(p: &ModelParams, t_tot: f64) -> Self {
        Self { nk: 48, nt: 48 * p.tilt_q as usize, t_tot, wrap: WrapPolicy::Cut, verify: true, max_refinements: 2 }
    }
}

/// Raw plaquette sums of one grid.
#[derive(Clone, Debug)]
pub struct FhsFlux {
    pub nk: usize,
    pub nt: usize,
    /// Per cluster: sum of fluxes / 2 pi.
    pub trace: Vec<f64>,
    pub max_flux: Vec<f64>,
    pub min_overlap: Vec<f64>,
    /// Per cluster, `nk x nt` plaquette fluxes (k outer) when requested.
    pub field: Option<Vec<Vec<f64>>>,
}

fn link(a: &DMatrix<C64>, b: &DMatrix<C64>, r: &Range<usize>) -> C64 {
    let m = a.columns(r.start, r.len()).adjoint() * b.columns(r.start, r.len());
    m.determinant()
}

struct Column {
    vectors: Vec<DMatrix<C64>>,
}

fn solve_column(p: &ModelParams, sectors: &MomentumSectors, k: f64, ts: &[f64], wrap: WrapPolicy) -> Result<Column> {
    let vectors = ts
        .par_iter()
        .map(|&t| {
            let h = sectors.hamiltonian(p, k, t, wrap)?;
            Ok(solve_matrix(h, k, t)?.vectors)
        })
        .collect::<Result<_>>()?;
    Ok(Column { vectors })
}

/// Plaquette fluxes of every cluster on an `nk x nt` grid.
///
/// Eigenvectors are produced one momentum column at a time, so memory stays
/// at three columns regardless of `nk`. The seam at `k = pi` is closed with
/// the diagonal gauge that maps `H(k)` to `H(k + pi)`.
#[allow(clippy::too_many_arguments)]
pub fn fhs_flux(
    p: &ModelParams,
    sectors: &MomentumSectors,
    clusters: &[Range<usize>],
    nk: usize,
    nt: usize,
    t_tot: f64,
    wrap: WrapPolicy,
    keep_field: bool,
) -> Result<FhsFlux> {
    if nk < 2 || nt < 2 {
        return Err(Error::InvalidParams("FHS grids need at least 2 points per axis".into()));
    }
    let grid = TorusGrid::new(nk, nt, t_tot);
    let nc = clusters.len();
    let mut trace = vec![0.0; nc];
    let mut max_flux = vec![0.0f64; nc];
    let mut min_overlap = vec![f64::INFINITY; nc];
    let mut field = keep_field.then(|| vec![vec![0.0; nk * nt]; nc]);

    let first = solve_column(p, sectors, grid.ks[0], &grid.ts, wrap)?;
    let reps: Vec<usize> = sectors.block(p, grid.ks[0], 0.0, wrap)?.reps;
    let g = sectors.gauge(&reps);
    let seam = Column { vectors: first.vectors.iter().map(|v| DMatrix::from_diagonal(&g) * v).collect() };
    let mut left = first;
    for i in 0..nk {
        let right = if i + 1 < nk {
            solve_column(p, sectors, grid.ks[i + 1], &grid.ts, wrap)?
        } else {
            Column { vectors: seam.vectors.clone() }
        };
        // (flux, |link| min) for each plaquette and cluster
        let plaq: Vec<Vec<(f64, f64, usize)>> = (0..nt)
            .into_par_iter()
            .map(|j| {
                let jn = (j + 1) % nt;
                clusters
                    .iter()
                    .map(|r| {
                        let links = [
                            link(&left.vectors[j], &right.vectors[j], r),
                            link(&right.vectors[j], &right.vectors[jn], r),
                            link(&left.vectors[jn], &right.vectors[jn], r),
                            link(&left.vectors[j], &left.vectors[jn], r),
                        ];
                        let (o, which) = links
                            .iter()
                            .enumerate()
                            .map(|(n, l)| (l.norm(), n))
                            .fold((f64::INFINITY, 0), |a, b| if b.0 < a.0 { b } else { a });
                        let u = links[0] * links[1] * links[2].conj() * links[3].conj();
                        (u.arg(), o, which)
                    })
                    .collect()
            })
            .collect();
        for (j, row) in plaq.iter().enumerate() {
            for (c, &(flux, o, which)) in row.iter().enumerate() {
                if o < OVERLAP_FLOOR {
                    let dk = PI / nk as f64;
                    let (kk, tt) = match which {
                        0 | 2 => (grid.ks[i] + 0.5 * dk, grid.ts[(j + which / 2) % nt]),
                        1 => (grid.ks[i] + dk, grid.ts[j]),
                        _ => (grid.ks[i], grid.ts[j]),
                    };
                    return Err(Error::GapClosure { k: kk, t: tt, overlap: o });
                }
                trace[c] += flux;
                max_flux[c] = max_flux[c].max(flux.abs());
                min_overlap[c] = min_overlap[c].min(o);
                if let Some(f) = field.as_mut() {
                    f[c][i * nt + j] = flux;
                }
            }
        }
        left = right;
    }
    Ok(FhsFlux { nk, nt, trace: trace.into_iter().map(|x| x / (2.0 * PI)).collect(), max_flux, min_overlap, field })
}

/// Chern numbers of several clusters from one sweep.
///
/// Grids whose largest plaquette flux exceeds [`FLUX_LIMIT`] are doubled up
/// to `max_refinements` times. With `verify`, a second sweep on the doubled
/// grid must give the same integers for `converged` to be set.
pub fn chern_numbers_fhs(
    p: &ModelParams,
    sectors: &MomentumSectors,
    clusters: &[Range<usize>],
    opts: FhsOptions,
) -> Result<Vec<ChernResult>> {
    let (mut nk, mut nt) = (opts.nk, opts.nt);
    let mut refinements = 0;
    let base = loop {
        let f = fhs_flux(p, sectors, clusters, nk, nt, opts.t_tot, opts.wrap, false)?;
        let worst = f.max_flux.iter().copied().fold(0.0, f64::max);
        if worst > FLUX_LIMIT && refinements < opts.max_refinements {
            nk *= 2;
            nt *= 2;
            refinements += 1;
            continue;
        }
        break f;
    };
    let check = if opts.verify {
        Some(fhs_flux(p, sectors, clusters, 2 * nk, 2 * nt, opts.t_tot, opts.wrap, false)?)
    } else {
        None
    };
    Ok(clusters
        .iter()
        .enumerate()
        .map(|(c, r)| {
            let raw = base.trace[c] / r.len() as f64;
            let rounded = raw.round() as i64;
            let stable = check.as_ref().map_or(true, |f| (f.trace[c] / r.len() as f64).round() as i64 == rounded);
            ChernResult {
                band: label_of(r),
                levels: r.clone(),
                trace: base.trace[c],
                raw,
                rounded,
                nk,
                nt,
                t_tot: opts.t_tot,
                max_flux: base.max_flux[c],
                min_overlap: base.min_overlap[c],
                converged: stable && (raw - rounded as f64).abs() < 0.02 && base.max_flux[c] <= FLUX_LIMIT,
            }
        })
        .collect())
}

pub fn chern_number_fhs(
    p: &ModelParams,
    sectors: &MomentumSectors,
    cluster: Range<usize>,
    opts: FhsOptions,
) -> Result<ChernResult> {
    Ok(chern_numbers_fhs(p, sectors, &[cluster], opts)?.remove(0))
}

/// `(1/d) int_0^t_tot F(k0, t) dt`.
pub fn reduced_chern(
    p: &ModelParams,
    sectors: &MomentumSectors,
    cluster: Range<usize>,
    k0: f64,
    t_tot: f64,
    wrap: WrapPolicy,
    opts: QuadOptions,
) -> Result<Quadrature> {
    let q = integrate(|t| berry_curvature_point(p, sectors, cluster.clone(), k0, t, wrap), 0.0, t_tot, opts)?;
    Ok(Quadrature { value: q.value / CELL as f64, ..q })
}

/// Quadrature defaults for reduced Chern numbers.
pub fn reduced_options() -> QuadOptions {
    QuadOptions { initial_intervals: 256, tol: 1e-3, max_intervals: 1 << 16 }
}

/// Rejects points within [`CRITICAL_MARGIN`] of `delta0 = 0` or `Delta0 = 0`.
pub fn check_off_critical(delta0: f64, stagger: f64) -> Result<()> {
    if delta0.abs() < CRITICAL_MARGIN || stagger.abs() < CRITICAL_MARGIN {
        return Err(Error::Critical(format!(
            "delta0 = {delta0}, Delta0 = {stagger} within {CRITICAL_MARGIN} of a gap-closing line"
        )));
    }
    Ok(())
}

#[derive(Clone, Debug, Serialize)]
pub struct PhaseCell {
    pub delta0: f64,
    pub stagger: f64,
    pub chern: Option<ChernResult>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct PhaseDiagram {
    pub delta0s: Vec<f64>,
    pub staggers: Vec<f64>,
    /// `delta0` outer.
    pub cells: Vec<PhaseCell>,
}

impl PhaseDiagram {
    pub fn get(&self, a: usize, b: usize) -> &PhaseCell {
        &self.cells[a * self.staggers.len() + b]
    }
}

/// Untilted band-(ii) Chern number over `3 T_m` for every `(delta0, Delta0)`.
/// Per-point failures are stored in the cell.
pub fn phase_diagram(
    template: &ModelParams,
    delta0s: &[f64],
    staggers: &[f64],
    nk: usize,
    nt: usize,
) -> Result<PhaseDiagram> {
    let sectors = MomentumSectors::new(template.sites)?;
    let pairs: Vec<(f64, f64)> = delta0s.iter().flat_map(|&a| staggers.iter().map(move |&b| (a, b))).collect();
    let cells = pairs
        .par_iter()
        .map(|&(delta0, stagger)| {
            let run = || -> Result<ChernResult> {
                check_off_critical(delta0, stagger)?;
                let p = ModelParams { delta0, stagger, ..template.clone() }.with_tilt(0, 1);
                let opts = FhsOptions {
                    nk,
                    nt,
                    t_tot: 3.0 * p.drive_period(),
                    wrap: WrapPolicy::Cut,
                    verify: false,
                    max_refinements: 1,
                };
                chern_number_fhs(&p, &sectors, BAND_II, opts)
            };
            match run() {
                Ok(c) => PhaseCell { delta0, stagger, chern: Some(c), error: None },
                Err(e) => PhaseCell { delta0, stagger, chern: None, error: Some(e.to_string()) },
            }
        })
        .collect();
    Ok(PhaseDiagram { delta0s: delta0s.to_vec(), staggers: staggers.to_vec(), cells })
}

#[derive(Clone, Debug, Serialize)]
pub struct ScanRow {
    pub stagger: f64,
    /// Band-(ii) FHS Chern number without tilt (raw).
    pub untilted: Option<f64>,
    /// Reduced Chern number at `k0 = 0` for each tilt ratio.
    pub reduced: Vec<Option<f64>>,
    pub errors: Vec<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct TransitionScan {
    pub delta0: f64,
    pub ratios: Vec<(u32, u32)>,
    pub rows: Vec<ScanRow>,
}

/// Sweeps `Delta0` at fixed `delta0`: untilted FHS Chern number and the
/// reduced Chern number over `3 T_m` for each tilt ratio.
pub fn transition_scan(
    template: &ModelParams,
    delta0: f64,
    staggers: &[f64],
    ratios: &[(u32, u32)],
    nk: usize,
    nt: usize,
    quad: QuadOptions,
) -> Result<TransitionScan> {
    let sectors = MomentumSectors::new(template.sites)?;
    let rows = staggers
        .par_iter()
        .map(|&stagger| {
            let mut errors = Vec::new();
            let base = ModelParams { delta0, stagger, ..template.clone() };
            if stagger == 0.0 {
                errors.push(Error::Critical("Delta0 = 0".into()).to_string());
                return ScanRow { stagger, untilted: None, reduced: vec![None; ratios.len()], errors };
            }
            let t_tot = 3.0 * base.drive_period();
            let flat = base.clone().with_tilt(0, 1);
            let opts = FhsOptions { nk, nt, t_tot, wrap: WrapPolicy::Cut, verify: false, max_refinements: 1 };
            let untilted = match chern_number_fhs(&flat, &sectors, BAND_II, opts) {
                Ok(c) => Some(c.raw),
                Err(e) => {
                    errors.push(e.to_string());
                    None
                }
            };
            let reduced = ratios
                .iter()
                .map(|&(a, b)| {
                    let p = base.clone().with_tilt(a, b);
                    match reduced_chern(&p, &sectors, BAND_II, 0.0, t_tot, WrapPolicy::Cut, quad) {
                        Ok(q) => Some(q.value),
                        Err(e) => {
                            errors.push(e.to_string());
                            None
                        }
                    }
                })
                .collect();
            ScanRow { stagger, untilted, reduced, errors }
        })
        .collect();
    Ok(TransitionScan { delta0, ratios: ratios.to_vec(), rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn critical_lines_rejected() {
        assert!(matches!(check_off_critical(0.0, 2.0), Err(Error::Critical(_))));
        assert!(matches!(check_off_critical(0.8, 0.04), Err(Error::Critical(_))));
        assert!(check_off_critical(0.8, -2.0).is_ok());
    }

    #[test]
    fn curvature_rejects_degenerate_cluster() {
        let p = ModelParams { hopping: 0.0, delta0: 0.0, stagger: 0.0, ..ModelParams::bound_pump() }.with_sites(10);
        let s = MomentumSectors::new(10).unwrap();
        let r = berry_curvature_point(&p, &s, 2..3, 0.3, 0.0, WrapPolicy::Cut);
        assert!(matches!(r, Err(Error::Degenerate { .. })));
    }

    #[test]
    fn curvature_is_periodic_on_the_torus() {
        let p = ModelParams::bound_pump().with_sites(10);
        let s = MomentumSectors::new(10).unwrap();
        let f = |k: f64, t: f64| {
            let b = s.block_any_k(&p, k, t, WrapPolicy::Cut).unwrap();
            cluster_curvature(&b, &solve_block(&b).unwrap(), 1..2).unwrap()
        };
        for &(k, t) in &[(0.2, 100.0), (1.3, 2500.0), (2.9, 3700.0)] {
            let a = f(k, t);
            assert!((f(k + PI, t) - a).abs() < 1e-6 * a.abs().max(1e-3));
            assert!((f(k, t + p.pump_period()) - a).abs() < 1e-6 * a.abs().max(1e-3));
        }
    }

    #[test]
    fn gauge_invariance() {
        let p = ModelParams::bound_pump().with_sites(10);
        let s = MomentumSectors::new(10).unwrap();
        let b = s.block(&p, 0.9, 321.0, WrapPolicy::Cut).unwrap();
        let e = solve_block(&b).unwrap();
        let f0 = cluster_curvature(&b, &e, 1..2).unwrap();
        let g0 = cluster_curvature(&b, &e, 2..5).unwrap();
        let mut e2 = e.clone();
        for (c, mut col) in e2.vectors.column_iter_mut().enumerate() {
            col *= C64::from_polar(1.0, 0.7 * c as f64 + 0.3);
        }
        assert!((cluster_curvature(&b, &e2, 1..2).unwrap() - f0).abs() < 1e-12 * f0.abs().max(1.0));
        assert!((cluster_curvature(&b, &e2, 2..5).unwrap() - g0).abs() < 1e-12 * g0.abs().max(1.0));
    }
}
