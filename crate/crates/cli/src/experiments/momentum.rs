use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use tiltpump::dynamics::{bloch_state_realspace, evolve, fit_momentum_scan, prepare_gaussian, EvolutionTrace};
use tiltpump::export::{LinePlot, Series, Table};
use tiltpump::topology::BAND_II;
use tiltpump::{Boundary, ModelParams, MomentumSectors, CELL};

use super::common::{export_trace, tilt_label, Propagation};
use crate::report::{Expect, Run, Source};
use crate::CliError;

#[derive(Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Controls {
    /// The untilted run is always added.
    pub tilt: (u32, u32),
    pub periods: f64,
    pub sigma: f64,
    pub center: Option<f64>,
    pub k0: f64,
    pub propagation: Propagation,
}

impl Default for Controls {
    fn default() -> Self {
        Self {
            tilt: (10, 3),
            periods: 3.0,
            sigma: 5.0,
            center: None,
            k0: 0.0,
            propagation: Propagation { sample_every: 5, ..Propagation::default() },
        }
    }
}

pub fn defaults() -> Value {
    serde_json::to_value(Controls::default()).unwrap()
}

/// Largest circular distance of `xs` from `xs[0]` on a zone of width `zone`.
fn circular_spread(xs: &[f64], zone: f64) -> f64 {
    xs.iter()
        .map(|x| {
            let d = (x - xs[0]).rem_euclid(zone);
            d.min(zone - d)
        })
        .fold(0.0, f64::max)
}

pub fn run(p: &ModelParams, v: &Value, run: &mut Run) -> Result<(), CliError> {
    let c: Controls = run.controls(v)?;
    if c.tilt.0 == 0 {
        return Err(CliError::Config("momentum needs a nonzero tilt".into()));
    }
    let p = p.clone().with_boundary(Boundary::Open);
    let s = MomentumSectors::new(p.sites)?;
    let center = c.center.unwrap_or((p.sites / 2) as f64);
    let tilts = [(0, 1), c.tilt];
    let traces: Vec<EvolutionTrace> = tilts
        .par_iter()
        .map(|&(a, b)| -> Result<_, tiltpump::Error> {
            let q = p.clone().with_tilt(a, b);
            q.validate()?;
            let bloch = bloch_state_realspace(&q, &s, BAND_II.start, c.k0, 0.0)?;
            let g = prepare_gaussian(&bloch, s.basis(), c.sigma, center)?;
            let mut ctl = c.propagation.evolve_controls();
            ctl.momentum = true;
            let mut tr = evolve(&g.state, &q, s.basis(), 0.0, c.periods * q.drive_period(), &ctl)?;
            tr.warnings.extend(g.warnings);
            Ok(tr)
        })
        .collect::<Result<_, _>>()?;

    let zone = 2.0 * PI / CELL as f64;
    let tm = p.drive_period();
    let mut tab = Table::new(&["tilt", "t", "K_mean"]);
    let mut series = Vec::new();
    let mut means = Vec::new();
    for (&t, tr) in tilts.iter().zip(&traces) {
        let label = tilt_label(t);
        export_trace(run, &format!("tilt{}", label.replace('/', "-")), &format!("wF/w = {label}"), tr)?;
        let m = tr.mean_momenta().unwrap_or_default();
        for (time, k) in tr.times.iter().zip(&m) {
            tab.push(vec![t.0 as f64 / t.1 as f64, *time, *k]);
        }
        series.push(Series {
            name: format!("wF/w = {label}"),
            xs: tr.times.iter().map(|x| x / tm).collect(),
            ys: m.clone(),
            markers: false,
        });
        means.push(m);
    }
    run.csv("mean_momentum.csv", &tab)?;
    run.plot(
        "mean_momentum.svg",
        &LinePlot {
            title: "centre-of-mass mean momentum".into(),
            x_label: "t / T_m".into(),
            y_label: "K".into(),
            series,
        },
    )?;

    let tilted = p.clone().with_tilt(c.tilt.0, c.tilt.1);
    let half_bloch = tilted.bloch_period() / 2.0;
    let fit = fit_momentum_scan(&traces[1].times, &means[1]);
    run.json("scan_fit.json", &fit)?;
    run.check_with(
        format!("scan period / (T_B / 2) at wF/w = {}", tilt_label(c.tilt)),
        fit.period / half_bloch,
        Expect::near(1.0, 0.02),
        Source::Published,
        Some(format!("{:.2} scans over the run, max residual {:.3}", c.periods * tm / fit.period, fit.max_residual)),
    );
    run.check(
        "untilted mean momentum spread / zone",
        circular_spread(&means[0], zone) / zone,
        Expect::Below { limit: 0.02 },
        Source::Published,
    );
    let drift = traces.iter().map(|tr| tr.max_norm_drift()).fold(0.0, f64::max);
    run.check("max norm drift", drift, Expect::Below { limit: 1e-8 }, Source::Derived);
    Ok(())
}
