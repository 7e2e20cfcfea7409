use serde::{Deserialize, Serialize};

use super::krylov::{Krylov, KrylovOptions, KrylovStats};
use super::observables::{centroid, correlation, density, MomentumDensity, MomentumTransform};
use super::state::StateVector;
use crate::error::{Error, Result};
use crate::model::basis::TwoBosonBasis;
use crate::model::{build_rotating_hamiltonian, DrivenOperator};
use crate::params::{ModelParams, CELL};
use crate::C64;

/// Frame in which the state is propagated. Densities, centroids and
/// correlations are identical in both (the frame change is diagonal).
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Frame {
    #[default]
    Lab,
    Rotating,
}

/// Density on the outer two cells above which a run is flagged.
pub const BOUNDARY_LIMIT: f64 = 1e-4;

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct EvolveControls {
    /// Outer step; `None` means `T_m / steps_per_period`.
    pub step: Option<f64>,
    pub steps_per_period: usize,
    pub krylov: KrylovOptions,
    /// Record observables every this many steps (and at the last step).
    pub sample_every: usize,
    pub momentum: bool,
    /// Times at which to store the full correlation matrix.
    pub correlation_at: Vec<f64>,
    pub frame: Frame,
}

impl Default for EvolveControls {
    fn default() -> Self {
        Self {
            step: None,
            steps_per_period: 2000,
            krylov: KrylovOptions::default(),
            sample_every: 20,
            momentum: false,
            correlation_at: Vec::new(),
            frame: Frame::Lab,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CorrelationSnapshot {
    pub time: f64,
    /// Row-major `L_t x L_t`.
    pub r: Vec<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct EvolutionTrace {
    pub sites: usize,
    pub times: Vec<f64>,
    pub densities: Vec<Vec<f64>>,
    /// `X(t)` in sites.
    pub centroid: Vec<f64>,
    pub norm: Vec<f64>,
    pub momentum: Option<Vec<MomentumDensity>>,
    pub correlations: Vec<CorrelationSnapshot>,
    /// Largest density fraction seen on the outer two cells.
    pub max_edge_weight: f64,
    pub warnings: Vec<String>,
    pub steps: usize,
    pub step: f64,
    pub krylov: KrylovStats,
}

impl EvolutionTrace {
    /// `Delta X(t) = X(t) - X(t0)` in sites.
    pub fn displacement(&self) -> Vec<f64> {
        self.centroid.iter().map(|x| x - self.centroid[0]).collect()
    }

    pub fn displacement_cells(&self) -> Vec<f64> {
        self.displacement().iter().map(|x| x / CELL as f64).collect()
    }

    /// Final `Delta X / d`.
    pub fn final_displacement_cells(&self) -> f64 {
        (self.centroid.last().unwrap() - self.centroid[0]) / CELL as f64
    }

    pub fn max_norm_drift(&self) -> f64 {
        self.norm.iter().map(|n| (n - 1.0).abs()).fold(0.0, f64::max)
    }

    pub fn mean_momenta(&self) -> Option<Vec<f64>> {
        self.momentum.as_ref().map(|m| m.iter().map(MomentumDensity::mean).collect())
    }
}

fn edge_fraction(n: &[f64]) -> f64 {
    let w = 2 * CELL;
    let total: f64 = n.iter().sum();
    (n[..w].iter().sum::<f64>() + n[n.len() - w..].iter().sum::<f64>()) / total
}

struct Recorder<'a> {
    basis: &'a TwoBosonBasis,
    momentum: Option<MomentumTransform>,
    trace: EvolutionTrace,
}

impl Recorder<'_> {
    fn sample(&mut self, t: f64, psi: &[C64]) {
        let n = density(psi, self.basis);
        let tr = &mut self.trace;
        tr.max_edge_weight = tr.max_edge_weight.max(edge_fraction(&n));
        tr.times.push(t);
        tr.norm.push(psi.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt());
        tr.centroid.push(centroid(psi, self.basis));
        tr.densities.push(n);
        if let (Some(m), Some(out)) = (&self.momentum, tr.momentum.as_mut()) {
            out.push(m.apply(psi, self.basis));
        }
    }
}

/// Propagates `state` from `t0` to `t1` with midpoint steps
/// `psi <- exp(-i h H(t + h/2)) psi`.
pub fn evolve(
    state: &StateVector,
    p: &ModelParams,
    basis: &TwoBosonBasis,
    t0: f64,
    t1: f64,
    controls: &EvolveControls,
) -> Result<EvolutionTrace> {
    p.validate()?;
    if state.sites() != basis.sites() || p.sites != basis.sites() {
        return Err(Error::BasisMismatch { basis: basis.sites(), params: p.sites });
    }
    if !(t0.is_finite() && t1.is_finite()) || t1 <= t0 {
        return Err(Error::InvalidParams(format!("t1 = {t1} must exceed t0 = {t0}")));
    }
    let nominal = match controls.step {
        Some(h) if h > 0.0 => h,
        Some(h) => return Err(Error::InvalidParams(format!("step {h} must be positive"))),
        None if p.omega > 0.0 && controls.steps_per_period > 0 => p.drive_period() / controls.steps_per_period as f64,
        None => return Err(Error::InvalidParams("an undriven run needs an explicit step".into())),
    };
    let steps = ((t1 - t0) / nominal).ceil().max(1.0) as usize;
    let h = (t1 - t0) / steps as f64;
    let stride = controls.sample_every.max(1);

    let lab = DrivenOperator::lab(p, basis)?;
    let mut ham = lab.at(t0);
    let mut krylov = Krylov::new(basis.dim(), controls.krylov);
    let mut psi = state.amps().to_vec();

    let mut rec = Recorder {
        basis,
        momentum: controls.momentum.then(|| MomentumTransform::new(basis.sites())),
        trace: EvolutionTrace {
            sites: basis.sites(),
            times: Vec::new(),
            densities: Vec::new(),
            centroid: Vec::new(),
            norm: Vec::new(),
            momentum: controls.momentum.then(Vec::new),
            correlations: Vec::new(),
            max_edge_weight: 0.0,
            warnings: Vec::new(),
            steps,
            step: h,
            krylov: KrylovStats::default(),
        },
    };
    let mut pending: Vec<f64> = controls.correlation_at.clone();
    pending.sort_by(f64::total_cmp);
    let mut pending = pending.into_iter().peekable();
    let mut snapshot = |t: f64, psi: &[C64], out: &mut Vec<CorrelationSnapshot>| {
        while let Some(&want) = pending.peek() {
            if want > t + 0.5 * h {
                break;
            }
            pending.next();
            out.push(CorrelationSnapshot { time: t, r: correlation(psi, basis) });
        }
    };

    rec.sample(t0, &psi);
    snapshot(t0, &psi, &mut rec.trace.correlations);
    for s in 0..steps {
        let tm = t0 + (s as f64 + 0.5) * h;
        match controls.frame {
            Frame::Lab => lab.write_into(tm, &mut ham),
            Frame::Rotating => ham = build_rotating_hamiltonian(p, basis, tm)?,
        }
        krylov.step(&ham, &mut psi, h);
        let t = t0 + (s + 1) as f64 * h;
        if (s + 1) % stride == 0 || s + 1 == steps {
            rec.sample(t, &psi);
        }
        snapshot(t, &psi, &mut rec.trace.correlations);
    }
    let mut trace = rec.trace;
    trace.krylov = krylov.stats;
    if trace.max_edge_weight > BOUNDARY_LIMIT {
        trace.warnings.push(format!("density {:.2e} reached the outer two cells", trace.max_edge_weight));
    }
    Ok(trace)
}
