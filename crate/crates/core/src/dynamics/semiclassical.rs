use std::ops::Range;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::Result;
use crate::model::momentum::{MomentumSectors, WrapPolicy};
use crate::params::{ModelParams, CELL};
use crate::spectrum::solve_block;
use crate::topology::cluster_curvature;

/// `Delta X(tau) = int_0^tau [d eps/dk + F] dt`, all in sites.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct Semiclassical {
    pub k0: f64,
    pub tau: f64,
    pub dispersion: f64,
    pub geometric: f64,
}

impl Semiclassical {
    pub fn total(&self) -> f64 {
        self.dispersion + self.geometric
    }

    pub fn total_cells(&self) -> f64 {
        self.total() / CELL as f64
    }
}

/// Finite-difference step in `k`.
pub const DK: f64 = 1e-4 * std::f64::consts::PI;

fn cluster_energy(values: &nalgebra::DVector<f64>, cluster: &Range<usize>) -> f64 {
    cluster.clone().map(|i| values[i]).sum::<f64>() / cluster.len() as f64
}

/// Group velocity and curvature of a band (cluster mean) at `(k, t)`.
pub fn velocity_and_curvature(
    p: &ModelParams,
    sectors: &MomentumSectors,
    cluster: Range<usize>,
    k: f64,
    t: f64,
) -> Result<(f64, f64)> {
    let wrap = WrapPolicy::Cut;
    let block = sectors.block_any_k(p, k, t, wrap)?;
    let eig = solve_block(&block)?;
    let f = cluster_curvature(&block, &eig, cluster.clone())?;
    let plus = solve_block(&sectors.block_any_k(p, k + DK, t, wrap)?)?;
    let minus = solve_block(&sectors.block_any_k(p, k - DK, t, wrap)?)?;
    let v = (cluster_energy(&plus.values, &cluster) - cluster_energy(&minus.values, &cluster)) / (2.0 * DK);
    Ok((v, f))
}

/// Trapezoid rule over `nt` uniform intervals on `[0, tau]`.
pub fn semiclassical_displacement(
    p: &ModelParams,
    sectors: &MomentumSectors,
    cluster: Range<usize>,
    k0: f64,
    tau: f64,
    nt: usize,
) -> Result<Semiclassical> {
    let nt = nt.max(1);
    let dt = tau / nt as f64;
    let samples: Vec<(f64, f64)> = (0..=nt)
        .into_par_iter()
        .map(|i| velocity_and_curvature(p, sectors, cluster.clone(), k0, i as f64 * dt))
        .collect::<Result<_>>()?;
    let weight = |i: usize| if i == 0 || i == nt { 0.5 * dt } else { dt };
    let (mut dispersion, mut geometric) = (0.0, 0.0);
    for (i, (v, f)) in samples.iter().enumerate() {
        dispersion += weight(i) * v;
        geometric += weight(i) * f;
    }
    Ok(Semiclassical { k0, tau, dispersion, geometric })
}
