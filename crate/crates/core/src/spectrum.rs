//! Diagonalisation of momentum blocks and open chains, band clustering and
//! edge-state diagnostics.

use std::ops::Range;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use crate::dynamics::observables::density;
use crate::error::{Error, Result};
use crate::linalg::{eigh_desc, Eigen};
use crate::model::basis::TwoBosonBasis;
use crate::model::build_rotating_hamiltonian;
use crate::model::momentum::{MomentumBlock, MomentumSectors, WrapPolicy};
use crate::params::{Boundary, ModelParams, CELL};
use crate::C64;

/// Roman label of band cluster `m` (0-based, highest energy first).
pub fn band_label(m: usize) -> String {
    const R: [&str; 10] = ["i", "ii", "iii", "iv", "v", "vi", "vii", "viii", "ix", "x"];
    R.get(m).map_or_else(|| format!("{}", m + 1), |s| s.to_string())
}

/// Eigenpairs of one block, descending energy.
pub fn solve_block(block: &MomentumBlock) -> Result<Eigen> {
    eigh_desc(block.h.clone()).ok_or(Error::NoConvergence { k: block.k, t: block.t })
}

pub(crate) fn solve_matrix(h: DMatrix<C64>, k: f64, t: f64) -> Result<Eigen> {
    eigh_desc(h).ok_or(Error::NoConvergence { k, t })
}

/// Uniform `(k, t)` grid on `[0, pi) x [0, t_tot)`.
#[derive(Clone, Debug, Serialize)]
pub struct TorusGrid {
    pub ks: Vec<f64>,
    pub ts: Vec<f64>,
}

impl TorusGrid {
    pub fn new(nk: usize, nt: usize, t_tot: f64) -> Self {
        let bz = std::f64::consts::PI;
        Self {
            ks: (0..nk).map(|i| bz * i as f64 / nk as f64).collect(),
            ts: (0..nt).map(|j| t_tot * j as f64 / nt as f64).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.ks.len() * self.ts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Row-major index, `k` outer.
    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.ts.len() + j
    }
}

/// Energies (and optionally eigenvectors) on a torus grid.
#[derive(Clone, Debug)]
pub struct BandSet {
    pub grid: TorusGrid,
    pub energies: Vec<DVector<f64>>,
    pub vectors: Option<Vec<DMatrix<C64>>>,
}

impl BandSet {
    pub fn dim(&self) -> usize {
        self.energies.first().map_or(0, |e| e.len())
    }

    pub fn energy(&self, i: usize, j: usize) -> &DVector<f64> {
        &self.energies[self.grid.index(i, j)]
    }
}

/// Diagonalises every block of a uniform grid in parallel.
pub fn band_surface(
    p: &ModelParams,
    sectors: &MomentumSectors,
    grid: TorusGrid,
    wrap: WrapPolicy,
    keep_vectors: bool,
) -> Result<BandSet> {
    if grid.ks.len() < 3 || grid.ts.len() < 3 {
        return Err(Error::InvalidParams("band grids need at least 3 points per axis".into()));
    }
    let nt = grid.ts.len();
    let solved: Vec<Eigen> = (0..grid.len())
        .into_par_iter()
        .map(|idx| {
            let (k, t) = (grid.ks[idx / nt], grid.ts[idx % nt]);
            let h = sectors.hamiltonian(p, k, t, wrap)?;
            solve_matrix(h, k, t)
        })
        .collect::<Result<_>>()?;
    let energies = solved.iter().map(|e| e.values.clone()).collect();
    let vectors = keep_vectors.then(|| solved.into_iter().map(|e| e.vectors).collect());
    Ok(BandSet { grid, energies, vectors })
}

/// Contiguous groups of sorted levels separated by the largest gaps.
#[derive(Clone, Debug, Serialize)]
pub struct Clusters {
    pub ranges: Vec<Range<usize>>,
    /// Minimum over the grid of `E_n - E_{n+1}` for each adjacent pair.
    pub min_gaps: Vec<f64>,
}

impl Clusters {
    pub fn count(&self) -> usize {
        self.ranges.len()
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.ranges.iter().map(|r| r.len()).collect()
    }

    pub fn get(&self, m: usize) -> Result<Range<usize>> {
        self.ranges.get(m).cloned().ok_or(Error::NoSuchBand { band: m, count: self.ranges.len() })
    }

    /// Smallest gap that separates two clusters.
    pub fn separating_gap(&self) -> f64 {
        self.ranges.iter().skip(1).map(|r| self.min_gaps[r.start - 1]).fold(f64::INFINITY, f64::min)
    }

    /// Adjacent levels closer than `tol` somewhere on the grid; inside a
    /// cluster these may be mislabelled near avoided crossings.
    pub fn near_degenerate(&self, tol: f64) -> Vec<usize> {
        (0..self.min_gaps.len()).filter(|&n| self.min_gaps[n] < tol).collect()
    }
}

/// Splits the spectrum into `count` clusters by cutting at the `count - 1`
/// largest minimum gaps.
pub fn find_clusters<'a>(spectra: impl IntoIterator<Item = &'a DVector<f64>>, count: usize) -> Clusters {
    let mut min_gaps: Vec<f64> = Vec::new();
    for e in spectra {
        if min_gaps.is_empty() {
            min_gaps = vec![f64::INFINITY; e.len().saturating_sub(1)];
        }
        for n in 0..min_gaps.len() {
            min_gaps[n] = min_gaps[n].min(e[n] - e[n + 1]);
        }
    }
    let dim = min_gaps.len() + 1;
    let count = count.clamp(1, dim);
    let mut order: Vec<usize> = (0..min_gaps.len()).collect();
    order.sort_by(|&a, &b| min_gaps[b].total_cmp(&min_gaps[a]));
    let mut cuts: Vec<usize> = order[..count - 1].to_vec();
    cuts.sort_unstable();
    let mut bounds = vec![0];
    bounds.extend(cuts.iter().map(|c| c + 1));
    bounds.push(dim);
    Clusters { ranges: bounds.windows(2).map(|w| w[0]..w[1]).collect(), min_gaps }
}

/// [`find_clusters`] on a `nk x nt` grid over `[0, pi) x [0, t_tot)` with the
/// `Cut` policy.
pub fn torus_clusters(
    p: &ModelParams,
    sectors: &MomentumSectors,
    count: usize,
    nk: usize,
    nt: usize,
    t_tot: f64,
) -> Result<Clusters> {
    let b = band_surface(p, sectors, TorusGrid::new(nk, nt, t_tot), WrapPolicy::Cut, false)?;
    Ok(find_clusters(&b.energies, count))
}

/// A doublon / nearest-neighbour-pair resonance seen by one level.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct Resonance {
    pub t: f64,
    /// `|E_D - E_P|`: energy of the level's doublon component minus that of
    /// its `|1>_j |1>_{j+1}` component.
    pub detuning: f64,
    pub doublon_weight: f64,
}

/// Local minima in `t` of the doublon/pair detuning of level `level` at
/// momentum `k`, sampled on `nt` points over `[0, t_tot]`; minima above
/// `threshold` are dropped.
///
/// Away from a resonance one of the two components carries almost no weight
/// and its energy is ill-conditioned, which produces shallow spurious minima;
/// the threshold removes them.
#[allow(clippy::too_many_arguments)]
pub fn doublon_pair_resonances(
    p: &ModelParams,
    sectors: &MomentumSectors,
    level: usize,
    k: f64,
    t_tot: f64,
    nt: usize,
    wrap: WrapPolicy,
    threshold: f64,
) -> Result<Vec<Resonance>> {
    let sites = sectors.sites() as i64;
    let samples: Vec<Resonance> = (0..=nt)
        .into_par_iter()
        .map(|i| {
            let t = t_tot * i as f64 / nt as f64;
            let block = sectors.block(p, k, t, wrap)?;
            let eig = solve_block(&block)?;
            if level >= eig.values.len() {
                return Err(Error::NoSuchBand { band: level, count: eig.values.len() });
            }
            let v = eig.vectors.column(level);
            let part = |keep: &dyn Fn(usize, usize) -> bool| {
                let pv = DVector::from_iterator(
                    v.len(),
                    block.reps.iter().zip(v.iter()).map(|(&r, &c)| {
                        let (a, b) = sectors.reps()[r];
                        if keep(a, b) {
                            c
                        } else {
                            C64::new(0.0, 0.0)
                        }
                    }),
                );
                let w = pv.norm_squared();
                ((pv.adjoint() * &block.h * &pv)[(0, 0)].re / w, w)
            };
            let (ed, wd) = part(&|a, b| a == b);
            let (ep, _) = part(&|a, b| {
                let d = (b as i64 - a as i64).rem_euclid(sites);
                d == 1 || d == sites - 1
            });
            Ok(Resonance { t, detuning: (ed - ep).abs(), doublon_weight: wd })
        })
        .collect::<Result<_>>()?;
    Ok((1..nt)
        .filter(|&i| {
            let d = samples[i].detuning;
            d < samples[i - 1].detuning && d < samples[i + 1].detuning && d < threshold
        })
        .map(|i| samples[i])
        .collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BandKind {
    Bound,
    Scattering,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct BandCharacter {
    pub kind: BandKind,
    /// Mean of `<sum_j n_j (n_j - 1) / 2>` over the band states.
    pub double_occupancy: f64,
}

/// Double occupancy of a sector vector: weight on doublon orbits.
pub fn double_occupancy(sectors: &MomentumSectors, reps: &[usize], v: &[C64]) -> f64 {
    reps.iter()
        .zip(v)
        .filter(|(&r, _)| {
            let (a, b) = sectors.reps()[r];
            a == b
        })
        .map(|(_, c)| c.norm_sqr())
        .sum()
}

/// Bound iff the band-averaged double occupancy exceeds one half.
pub fn classify_band(sectors: &MomentumSectors, bands: &BandSet, cluster: Range<usize>) -> Result<BandCharacter> {
    let vecs = bands.vectors.as_ref().ok_or_else(|| Error::InvalidParams("band set has no eigenvectors".into()))?;
    let reps: Vec<usize> = (0..sectors.sector_count()).collect();
    let mut total = 0.0;
    let mut n = 0usize;
    for v in vecs {
        for c in cluster.clone() {
            let col: Vec<C64> = v.column(c).iter().copied().collect();
            total += double_occupancy(sectors, &reps, &col);
            n += 1;
        }
    }
    let double_occupancy = total / n as f64;
    Ok(BandCharacter {
        kind: if double_occupancy > 0.5 { BandKind::Bound } else { BandKind::Scattering },
        double_occupancy,
    })
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct EdgeMetric {
    pub left: f64,
    pub right: f64,
}

impl EdgeMetric {
    pub fn is_edge(&self) -> bool {
        self.left > 0.5 || self.right > 0.5
    }
}

/// Particle weight on the outermost two cells at each end.
pub fn edge_metric(state: &[C64], basis: &TwoBosonBasis) -> EdgeMetric {
    let n = density(state, basis);
    let w = 2 * CELL;
    let total: f64 = n.iter().sum();
    let left: f64 = n[..w].iter().sum();
    let right: f64 = n[n.len() - w..].iter().sum();
    EdgeMetric { left: left / total, right: right / total }
}

/// Instantaneous open-chain spectra.
#[derive(Clone, Debug, Serialize)]
pub struct ObcSpectrum {
    pub ts: Vec<f64>,
    pub energies: Vec<Vec<f64>>,
    pub edges: Vec<Vec<EdgeMetric>>,
}

/// Tilt-free open-chain Hamiltonian at time `t`.
///
/// On an open chain the rotating-frame hopping phases are a pure gauge, so
/// this has the same spectrum as the rotating-frame operator.
pub fn obc_hamiltonian(p: &ModelParams, basis: &TwoBosonBasis, t: f64) -> Result<DMatrix<C64>> {
    let q = p.clone().with_boundary(Boundary::Open).with_tilt(0, 1);
    Ok(build_rotating_hamiltonian(&q, basis, t)?.to_dense())
}

pub fn obc_eigen(p: &ModelParams, basis: &TwoBosonBasis, t: f64) -> Result<Eigen> {
    solve_matrix(obc_hamiltonian(p, basis, t)?, f64::NAN, t)
}

pub fn obc_spectrum(p: &ModelParams, nt: usize, t_tot: f64) -> Result<ObcSpectrum> {
    let basis = TwoBosonBasis::new(p.sites)?;
    let ts: Vec<f64> = (0..nt).map(|j| t_tot * j as f64 / nt as f64).collect();
    let solved: Vec<(Vec<f64>, Vec<EdgeMetric>)> = ts
        .par_iter()
        .map(|&t| {
            let e = obc_eigen(p, &basis, t)?;
            let edges = (0..e.values.len())
                .map(|c| {
                    let v: Vec<C64> = e.vectors.column(c).iter().copied().collect();
                    edge_metric(&v, &basis)
                })
                .collect();
            Ok((e.values.iter().copied().collect(), edges))
        })
        .collect::<Result<_>>()?;
    let (energies, edges) = solved.into_iter().unzip();
    Ok(ObcSpectrum { ts, energies, edges })
}

/// An open-chain eigenstate inside a bulk gap.
#[derive(Clone, Debug, Serialize)]
pub struct InGapState {
    pub t: f64,
    pub index: usize,
    pub energy: f64,
    pub edge: EdgeMetric,
}

/// For each time of `obc`, the state inside `(lower, upper)` closest to the
/// middle of that window, where the window comes from `gap(t)`.
///
/// This is the selection rule used for the edge-state density panels.
pub fn in_gap_states(obc: &ObcSpectrum, gap: impl Fn(f64) -> (f64, f64)) -> Vec<InGapState> {
    let mut out = Vec::new();
    for (j, &t) in obc.ts.iter().enumerate() {
        let (lo, hi) = gap(t);
        if hi <= lo {
            continue;
        }
        let mid = 0.5 * (lo + hi);
        let best = obc.energies[j]
            .iter()
            .enumerate()
            .filter(|(_, &e)| e > lo && e < hi)
            .min_by(|a, b| (a.1 - mid).abs().total_cmp(&(b.1 - mid).abs()));
        if let Some((index, &energy)) = best {
            out.push(InGapState { t, index, energy, edge: obc.edges[j][index] });
        }
    }
    out
}

/// Min/max of each cluster over all `k` of a ring at fixed `t`.
pub fn band_supports(
    p: &ModelParams,
    sectors: &MomentumSectors,
    t: f64,
    nk: usize,
    clusters: &Clusters,
) -> Result<Vec<(f64, f64)>> {
    let mut out = vec![(f64::INFINITY, f64::NEG_INFINITY); clusters.count()];
    for i in 0..nk {
        let k = std::f64::consts::PI * i as f64 / nk as f64;
        let e = solve_matrix(sectors.hamiltonian(p, k, t, WrapPolicy::Cut)?, k, t)?;
        for (m, r) in clusters.ranges.iter().enumerate() {
            out[m].0 = out[m].0.min(e.values[r.end - 1]);
            out[m].1 = out[m].1.max(e.values[r.start]);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::max_residual;

    #[test]
    fn labels() {
        assert_eq!(band_label(0), "i");
        assert_eq!(band_label(4), "v");
        assert_eq!(band_label(11), "12");
    }

    #[test]
    fn clusters_cut_at_largest_gaps() {
        let a = DVector::from_vec(vec![10.0, 9.9, 5.0, 4.95, 4.9, 0.0]);
        let b = DVector::from_vec(vec![10.1, 9.8, 5.1, 4.9, 4.8, 0.2]);
        let c = find_clusters([&a, &b], 3);
        assert_eq!(c.ranges, vec![0..2, 2..5, 5..6]);
        assert_eq!(c.sizes(), vec![2, 3, 1]);
        assert!((c.separating_gap() - 4.6).abs() < 1e-12);
        assert_eq!(c.near_degenerate(0.06), vec![2, 3]);
    }

    #[test]
    fn interaction_only_spectrum() {
        let p = ModelParams { hopping: 0.0, delta0: 0.0, stagger: 0.0, ..ModelParams::bound_pump() };
        let s = MomentumSectors::new(p.sites).unwrap();
        let b = s.block(&p, 0.7, 10.0, WrapPolicy::Keep).unwrap();
        let e = solve_block(&b).unwrap();
        let doublons = e.values.iter().filter(|&&x| (x - 30.0).abs() < 1e-12).count();
        let free = e.values.iter().filter(|&&x| x.abs() < 1e-12).count();
        // One doublon per sublattice in each sector.
        assert_eq!(doublons, 2);
        assert_eq!(free, 25);
    }

    #[test]
    fn block_residuals_and_orthonormality() {
        let p = ModelParams::bound_pump();
        let s = MomentumSectors::new(p.sites).unwrap();
        let b = s.block(&p, 1.1, 432.0, WrapPolicy::Cut).unwrap();
        let e = solve_block(&b).unwrap();
        assert!(max_residual(&b.h, &e) < 1e-10);
        let gram = e.vectors.adjoint() * &e.vectors;
        let id = DMatrix::<C64>::identity(gram.nrows(), gram.ncols());
        assert!((gram - id).camax() < 1e-10);
        assert!(e.values.as_slice().windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn minimal_grid_shape() {
        let p = ModelParams::bound_pump().with_sites(10);
        let s = MomentumSectors::new(10).unwrap();
        let b = band_surface(&p, &s, TorusGrid::new(3, 3, p.pump_period()), WrapPolicy::Cut, true).unwrap();
        assert_eq!(b.energies.len(), 9);
        assert_eq!(b.vectors.as_ref().unwrap().len(), 9);
        assert_eq!(b.dim(), 11);
        assert!(band_surface(&p, &s, TorusGrid::new(2, 3, 1.0), WrapPolicy::Cut, false).is_err());
    }

    #[test]
    fn edge_weights_of_corner_doublons() {
        let basis = TwoBosonBasis::new(12).unwrap();
        let mut psi = vec![C64::new(0.0, 0.0); basis.dim()];
        psi[basis.index_of(1, 1).unwrap()] = C64::new(1.0, 0.0);
        let m = edge_metric(&psi, &basis);
        assert!((m.left - 1.0).abs() < 1e-15 && m.right == 0.0 && m.is_edge());
        psi.iter_mut().for_each(|c| *c = C64::new(0.0, 0.0));
        psi[basis.index_of(12, 12).unwrap()] = C64::new(1.0, 0.0);
        let m = edge_metric(&psi, &basis);
        assert!((m.right - 1.0).abs() < 1e-15);
    }

    #[test]
    fn obc_shape_and_period() {
        let p = ModelParams::bound_pump().with_sites(10);
        let o = obc_spectrum(&p, 4, p.drive_period()).unwrap();
        assert_eq!(o.energies.len(), 4);
        assert!(o.energies.iter().all(|e| e.len() == 55));
        let basis = TwoBosonBasis::new(10).unwrap();
        let a = obc_eigen(&p, &basis, 100.0).unwrap();
        let b = obc_eigen(&p, &basis, 100.0 + p.drive_period()).unwrap();
        assert!((a.values - b.values).amax() < 1e-10);
    }
}
