use std::ops::Range;

use crate::error::{Error, Result};
use crate::model::basis::TwoBosonBasis;
use crate::model::momentum::{MomentumSectors, WrapPolicy};
use crate::params::{Boundary, ModelParams};
use crate::spectrum::{edge_metric, solve_block};
use crate::topology::DEGENERACY_MARGIN;
use crate::C64;
use nalgebra::DVector;

/// Two-boson amplitudes `psi_{l1 l2}` over a [`TwoBosonBasis`].
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    sites: usize,
    amps: Vec<C64>,
}

impl StateVector {
    pub fn new(basis: &TwoBosonBasis, amps: Vec<C64>) -> Result<Self> {
        if amps.len() != basis.dim() {
            return Err(Error::InvalidParams(format!(
                "{} amplitudes for a basis of dimension {}",
                amps.len(),
                basis.dim()
            )));
        }
        Ok(Self { sites: basis.sites(), amps })
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn amps(&self) -> &[C64] {
        &self.amps
    }

    pub fn amps_mut(&mut self) -> &mut [C64] {
        &mut self.amps
    }

    pub fn into_amps(self) -> Vec<C64> {
        self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn normalize(&mut self) {
        let n = self.norm();
        self.amps.iter_mut().for_each(|x| *x /= n);
    }

    /// `|<self|other>|^2`.
    pub fn fidelity(&self, other: &StateVector) -> f64 {
        self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum::<C64>().norm_sqr()
    }

    /// Fraction of the density on the outer two cells of either edge.
    pub fn edge_weight(&self, basis: &TwoBosonBasis) -> f64 {
        let e = edge_metric(&self.amps, basis);
        e.left + e.right
    }
}

/// The Fock state `|l1 l2>`.
pub fn prepare_fock(basis: &TwoBosonBasis, l1: usize, l2: usize) -> Result<StateVector> {
    let mut amps = vec![C64::new(0.0, 0.0); basis.dim()];
    amps[basis.checked_index(l1, l2)?] = C64::new(1.0, 0.0);
    StateVector::new(basis, amps)
}

fn periodic(p: &ModelParams) -> ModelParams {
    p.clone().with_boundary(Boundary::Periodic)
}

/// Level `level` (descending energy) of the ring at `(k0, t0)`, expanded in
/// real space. The largest amplitude is made real and positive.
pub fn bloch_state_realspace(
    p: &ModelParams,
    sectors: &MomentumSectors,
    level: usize,
    k0: f64,
    t0: f64,
) -> Result<StateVector> {
    let block = sectors.block(&periodic(p), k0, t0, WrapPolicy::Keep)?;
    let eig = solve_block(&block)?;
    let n = eig.values.len();
    if level >= n {
        return Err(Error::NoSuchBand { band: level, count: n });
    }
    let mut gap = f64::INFINITY;
    if level > 0 {
        gap = gap.min(eig.values[level - 1] - eig.values[level]);
    }
    if level + 1 < n {
        gap = gap.min(eig.values[level] - eig.values[level + 1]);
    }
    if gap < DEGENERACY_MARGIN {
        return Err(Error::Degenerate { k: k0, t: t0, gap, margin: DEGENERACY_MARGIN });
    }
    let v: Vec<C64> = eig.vectors.column(level).iter().copied().collect();
    let mut amps = sectors.to_real_space(k0, &block.reps, &v);
    let big = amps.iter().copied().reduce(|a, b| if b.norm() > a.norm() + 1e-12 { b } else { a }).unwrap();
    let phase = big.conj() / big.norm();
    amps.iter_mut().for_each(|x| *x *= phase);
    let mut s = StateVector::new(sectors.basis(), amps)?;
    s.normalize();
    Ok(s)
}

/// Gaussian envelope over a prepared state.
#[derive(Clone, Debug)]
pub struct Packet {
    pub state: StateVector,
    pub edge_weight: f64,
    pub warnings: Vec<String>,
}

/// Density weight on the outer cells above which a packet is flagged.
pub const PACKET_EDGE_LIMIT: f64 = 1e-6;

/// `psi_{l1 l2} exp(-[(l1 - l0)^2 + (l2 - l0)^2] / (4 sigma^2))`, renormalised.
pub fn prepare_gaussian(bloch: &StateVector, basis: &TwoBosonBasis, sigma: f64, l0: f64) -> Result<Packet> {
    if !sigma.is_finite() || sigma <= 0.0 {
        return Err(Error::InvalidParams(format!("sigma = {sigma} must be positive")));
    }
    if !(1.0..=basis.sites() as f64).contains(&l0) {
        return Err(Error::InvalidParams(format!("centre {l0} outside the chain")));
    }
    let amps = bloch
        .amps()
        .iter()
        .zip(basis.pairs())
        .map(|(c, &(a, b))| {
            let (x, y) = (a as f64 - l0, b as f64 - l0);
            c * (-(x * x + y * y) / (4.0 * sigma * sigma)).exp()
        })
        .collect();
    let mut state = StateVector::new(basis, amps)?;
    state.normalize();
    let edge_weight = state.edge_weight(basis);
    let mut warnings = Vec::new();
    if edge_weight > PACKET_EDGE_LIMIT {
        warnings.push(format!("packet weight {edge_weight:.2e} on the outer two cells"));
    }
    let margin = (l0 - 1.0).min(basis.sites() as f64 - l0);
    if margin < 4.0 * sigma {
        warnings.push(format!("envelope margin {margin} sites is below 4 sigma = {}", 4.0 * sigma));
    }
    Ok(Packet { state, edge_weight, warnings })
}

/// Weight of `state` in each band (given as level ranges), using the ring
/// Bloch states at every allowed momentum at `t0`.
pub fn band_fidelities(
    state: &StateVector,
    p: &ModelParams,
    sectors: &MomentumSectors,
    bands: &[Range<usize>],
    t0: f64,
) -> Result<Vec<f64>> {
    let q = periodic(p);
    let mut out = vec![0.0; bands.len()];
    for k in sectors.ring_momenta() {
        let block = sectors.block(&q, k, t0, WrapPolicy::Keep)?;
        let eig = solve_block(&block)?;
        let c = sectors.project(k, &block.reps, state.amps());
        let overlaps: DVector<C64> = eig.vectors.adjoint() * c;
        for (o, band) in out.iter_mut().zip(bands) {
            if band.end > overlaps.len() {
                return Err(Error::NoSuchBand { band: band.end - 1, count: overlaps.len() });
            }
            *o += band.clone().map(|i| overlaps[i].norm_sqr()).sum::<f64>();
        }
    }
    Ok(out)
}

pub fn band_fidelity(
    state: &StateVector,
    p: &ModelParams,
    sectors: &MomentumSectors,
    band: Range<usize>,
    t0: f64,
) -> Result<f64> {
    Ok(band_fidelities(state, p, sectors, &[band], t0)?[0])
}
