use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use tiltpump::dynamics::{
    band_fidelity, bloch_state_realspace, evolve, prepare_fock, prepare_gaussian, EvolutionTrace,
};
use tiltpump::export::Table;
use tiltpump::topology::BAND_II;
use tiltpump::{Boundary, ModelParams, MomentumSectors};

use super::common::{displacement_plot, export_trace, tilt_label, Propagation};
use crate::report::{Expect, Run, Source};
use crate::CliError;

#[derive(Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Controls {
    pub interactions: Vec<f64>,
    pub tilts: Vec<(u32, u32)>,
    pub periods: f64,
    /// Doublon site of the Fock state; centre of the chain if absent.
    pub fock_site: Option<usize>,
    pub sigma: f64,
    /// Packet centre in sites; centre of the chain if absent.
    pub center: Option<f64>,
    pub k0: f64,
    pub propagation: Propagation,
}

impl Default for Controls {
    fn default() -> Self {
        Self {
            interactions: vec![10.0, 30.0],
            tilts: vec![(0, 1), (10, 3)],
            periods: 3.0,
            fock_site: None,
            sigma: 5.0,
            center: None,
            k0: 0.0,
            propagation: Propagation::default(),
        }
    }
}

pub fn defaults() -> Value {
    serde_json::to_value(Controls::default()).unwrap()
}

#[derive(Clone, Copy, PartialEq)]
enum Kind {
    Fock,
    Gaussian,
}

struct Panel {
    kind: Kind,
    u: f64,
    tilt: (u32, u32),
    name: String,
    fidelity: f64,
    trace: EvolutionTrace,
}

pub fn run(p: &ModelParams, v: &Value, run: &mut Run) -> Result<(), CliError> {
    let c: Controls = run.controls(v)?;
    let p = p.clone().with_boundary(Boundary::Open);
    let sites = p.sites;
    let s = MomentumSectors::new(sites)?;
    let site = c.fock_site.unwrap_or(sites / 2);
    let center = c.center.unwrap_or((sites / 2) as f64);
    let mut jobs = Vec::new();
    for kind in [Kind::Fock, Kind::Gaussian] {
        for &u in &c.interactions {
            for &tilt in &c.tilts {
                jobs.push((kind, u, tilt));
            }
        }
    }
    let panels: Vec<Panel> = jobs
        .par_iter()
        .map(|&(kind, u, tilt)| -> Result<Panel, tiltpump::Error> {
            let q = p.clone().with_interaction(u).with_tilt(tilt.0, tilt.1);
            q.validate()?;
            let (state, mut warnings) = match kind {
                Kind::Fock => (prepare_fock(s.basis(), site, site)?, vec![]),
                Kind::Gaussian => {
                    let bloch = bloch_state_realspace(&q, &s, BAND_II.start, c.k0, 0.0)?;
                    let g = prepare_gaussian(&bloch, s.basis(), c.sigma, center)?;
                    (g.state, g.warnings)
                }
            };
            let fidelity = band_fidelity(&state, &q, &s, BAND_II, 0.0)?;
            let ctl = c.propagation.evolve_controls();
            let mut trace = evolve(&state, &q, s.basis(), 0.0, c.periods * q.drive_period(), &ctl)?;
            trace.warnings.append(&mut warnings);
            let name = format!(
                "{}_U{}_tilt{}",
                if kind == Kind::Fock { "fock" } else { "gaussian" },
                u,
                tilt_label(tilt).replace('/', "-")
            );
            Ok(Panel { kind, u, tilt, name, fidelity, trace })
        })
        .collect::<Result<_, _>>()?;

    let mut summary =
        Table::new(&["gaussian", "U", "tilt", "dX_cells", "band_ii_fidelity", "max_edge_weight", "norm_drift"]);
    for pn in &panels {
        export_trace(run, &pn.name, &pn.name, &pn.trace)?;
        summary.push(vec![
            (pn.kind == Kind::Gaussian) as u8 as f64,
            pn.u,
            pn.tilt.0 as f64 / pn.tilt.1 as f64,
            pn.trace.final_displacement_cells(),
            pn.fidelity,
            pn.trace.max_edge_weight,
            pn.trace.max_norm_drift(),
        ]);
    }
    run.csv("summary.csv", &summary)?;
    let labelled: Vec<(String, &EvolutionTrace)> = panels.iter().map(|pn| (pn.name.clone(), &pn.trace)).collect();
    run.plot("displacement.svg", &displacement_plot("wave-packet centroids", p.drive_period(), &labelled))?;

    let get = |kind: Kind, u: f64, tilted: bool| {
        panels.iter().find(|pn| pn.kind == kind && pn.u == u && (pn.tilt.0 != 0) == tilted)
    };
    if let Some(pn) = get(Kind::Fock, 10.0, false) {
        run.check_with(
            "Fock U=10 untilted: Delta X / d",
            pn.trace.final_displacement_cells(),
            Expect::near(2.644, 0.02),
            Source::Published,
            Some(format!("max edge weight {:.3}", pn.trace.max_edge_weight)),
        );
        run.check("Fock U=10: band (ii) fidelity", pn.fidelity, Expect::near(0.858, 0.005), Source::Published);
    }
    if let Some(pn) = get(Kind::Fock, 10.0, true) {
        run.check(
            "Fock U=10 tilted: Delta X / d",
            pn.trace.final_displacement_cells(),
            Expect::near(2.607, 0.02),
            Source::Published,
        );
    }
    if let Some(pn) = get(Kind::Gaussian, 30.0, true) {
        run.check(
            "Gaussian U=30 tilted: Delta X / d",
            pn.trace.final_displacement_cells(),
            Expect::near(3.0, 0.03),
            Source::Published,
        );
    }
    let drift = panels.iter().map(|pn| pn.trace.max_norm_drift()).fold(0.0, f64::max);
    run.check("max norm drift", drift, Expect::Below { limit: 1e-8 }, Source::Derived);
    Ok(())
}
