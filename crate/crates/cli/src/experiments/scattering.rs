use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use tiltpump::dynamics::{
    band_fidelities, cell_correlation, correlation_overlap, evolve, prepare_fock, EvolutionTrace,
};
use tiltpump::export::Table;
use tiltpump::spectrum::{band_label, torus_clusters};
use tiltpump::{Boundary, ModelParams, MomentumSectors};

use super::common::{displacement_plot, export_trace, Propagation};
use crate::report::{Expect, Run, Source};
use crate::CliError;

#[derive(Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Start {
    pub l1: usize,
    pub l2: usize,
    pub periods: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Controls {
    pub runs: Vec<Start>,
    /// Intermediate correlation snapshots per run (start and end are always kept).
    pub snapshots: usize,
    pub cluster_grid: (usize, usize),
    pub propagation: Propagation,
}

impl Default for Controls {
    fn default() -> Self {
        Self {
            runs: vec![Start { l1: 21, l2: 35, periods: 3.0 }, Start { l1: 23, l2: 36, periods: 6.0 }],
            snapshots: 2,
            cluster_grid: (12, 36),
            propagation: Propagation::default(),
        }
    }
}

pub fn defaults() -> Value {
    serde_json::to_value(Controls::default()).unwrap()
}

/// Index of the largest entry of a row-major `L x L` matrix as 1-based sites.
fn peak(r: &[f64], l: usize) -> (usize, usize) {
    let i = r.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).map_or(0, |x| x.0);
    (i / l + 1, i % l + 1)
}

pub fn run(p: &ModelParams, v: &Value, run: &mut Run) -> Result<(), CliError> {
    let c: Controls = run.controls(v)?;
    let ring = p.clone().with_boundary(Boundary::Periodic);
    let open = p.clone().with_boundary(Boundary::Open);
    let s = MomentumSectors::new(p.sites)?;
    let clusters = torus_clusters(&ring, &s, 5, c.cluster_grid.0, c.cluster_grid.1, ring.pump_period())?;
    run.json("clusters.json", &clusters)?;

    let traces: Vec<(Vec<f64>, EvolutionTrace)> = c
        .runs
        .par_iter()
        .map(|st| -> Result<_, tiltpump::Error> {
            let psi = prepare_fock(s.basis(), st.l1, st.l2)?;
            let fid = band_fidelities(&psi, &ring, &s, &clusters.ranges, 0.0)?;
            let t1 = st.periods * open.drive_period();
            let mut ctl = c.propagation.evolve_controls();
            ctl.correlation_at = (0..=c.snapshots + 1).map(|i| t1 * i as f64 / (c.snapshots + 1) as f64).collect();
            Ok((fid, evolve(&psi, &open, s.basis(), 0.0, t1, &ctl)?))
        })
        .collect::<Result<_, _>>()?;

    let l = p.sites;
    let mut summary = Table::new(&["l1", "l2", "periods", "dX_cells", "site_overlap", "cell_overlap"]);
    let mut fids = Table::new(&["l1", "l2", "band", "fidelity"]);
    let mut labelled = Vec::new();
    for (st, (fid, tr)) in c.runs.iter().zip(&traces) {
        let name = format!("fock_{}_{}", st.l1, st.l2);
        export_trace(run, &name, &format!("|{},{}>", st.l1, st.l2), tr)?;
        for (b, f) in fid.iter().enumerate() {
            fids.push(vec![st.l1 as f64, st.l2 as f64, b as f64, *f]);
        }
        let (first, last) = (&tr.correlations[0].r, &tr.correlations.last().unwrap().r);
        let site = correlation_overlap(first, last);
        let cell = correlation_overlap(&cell_correlation(first, l), &cell_correlation(last, l));
        let dx = tr.final_displacement_cells();
        summary.push(vec![st.l1 as f64, st.l2 as f64, st.periods, dx, site, cell]);
        labelled.push((name, tr));

        let best = fid.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).map_or(0, |x| x.0);
        let (pi, pj) = peak(last, l);
        let note = Some(format!(
            "largest weight in band ({}); final correlation peak at ({pi}, {pj}); site-resolved overlap {site:.3}",
            band_label(best)
        ));
        match (st.l1, st.l2) {
            (21, 35) => {
                run.check_with(
                    "|21,35>: fidelity with band (v)",
                    fid.get(4).copied().unwrap_or(f64::NAN),
                    Expect::near(0.9805, 0.003),
                    Source::Published,
                    note,
                );
                run.check("|21,35>: Delta X / d", dx, Expect::near(2.9414, 0.02), Source::Published);
            }
            (23, 36) => {
                run.check_with(
                    "|23,36>: fidelity with band (iv)",
                    fid.get(3).copied().unwrap_or(f64::NAN),
                    Expect::near(0.9806, 0.003),
                    Source::Published,
                    note,
                );
                run.check("|23,36>: |Delta X| / d", dx.abs(), Expect::Below { limit: 0.1 }, Source::Published);
                run.check(
                    "|23,36>: final/initial cell correlation overlap",
                    cell,
                    Expect::Above { limit: 0.9 },
                    Source::Published,
                );
            }
            _ => {}
        }
    }
    run.csv("summary.csv", &summary)?;
    run.csv("fidelities.csv", &fids)?;
    run.plot("displacement.svg", &displacement_plot("scattering states", p.drive_period(), &labelled))?;
    let drift = traces.iter().map(|(_, tr)| tr.max_norm_drift()).fold(0.0, f64::max);
    run.check("max norm drift", drift, Expect::Below { limit: 1e-8 }, Source::Derived);
    Ok(())
}
