use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use tiltpump::dynamics::semiclassical_displacement;
use tiltpump::export::{LinePlot, Series, Table};
use tiltpump::topology::BAND_II;
use tiltpump::{Boundary, ModelParams, MomentumSectors, CELL};

use super::common::tilt_label;
use crate::report::{Expect, Run, Source};
use crate::CliError;

#[derive(Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Controls {
    pub interactions: Vec<f64>,
    /// Tilt ratios `omega_F / omega` as `[p, q]`.
    pub tilts: Vec<(u32, u32)>,
    pub k0_points: usize,
    /// Trapezoid intervals over the run.
    pub nt: usize,
    pub periods: f64,
}

impl Default for Controls {
    fn default() -> Self {
        Self { interactions: vec![10.0, 30.0], tilts: vec![(0, 1), (10, 3)], k0_points: 13, nt: 6000, periods: 3.0 }
    }
}

pub fn defaults() -> Value {
    serde_json::to_value(Controls::default()).unwrap()
}

struct Curve {
    u: f64,
    tilt: (u32, u32),
    totals: Vec<f64>,
    dispersion: Vec<f64>,
}

impl Curve {
    fn spread(&self) -> f64 {
        let lo = self.totals.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = self.totals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        hi - lo
    }
}

pub fn run(p: &ModelParams, v: &Value, run: &mut Run) -> Result<(), CliError> {
    let c: Controls = run.controls(v)?;
    let base = p.clone().with_boundary(Boundary::Periodic);
    let s = MomentumSectors::new(base.sites)?;
    let k0s: Vec<f64> = (0..c.k0_points).map(|i| PI * i as f64 / c.k0_points as f64).collect();
    let mut tab = Table::new(&["U", "tilt", "k0", "dispersion", "geometric", "total"]);
    let mut curves = Vec::new();
    for &u in &c.interactions {
        for &(a, b) in &c.tilts {
            let q = base.clone().with_interaction(u).with_tilt(a, b);
            q.validate()?;
            let tau = c.periods * q.drive_period();
            let mut curve = Curve { u, tilt: (a, b), totals: Vec::new(), dispersion: Vec::new() };
            for &k0 in &k0s {
                let r = semiclassical_displacement(&q, &s, BAND_II, k0, tau, c.nt)?;
                let d = CELL as f64;
                tab.push(vec![u, q.tilt_ratio(), k0, r.dispersion / d, r.geometric / d, r.total_cells()]);
                curve.totals.push(r.total_cells());
                curve.dispersion.push(r.dispersion / d);
            }
            curves.push(curve);
        }
    }
    run.csv("semiclassical.csv", &tab)?;
    run.plot(
        "semiclassical.svg",
        &LinePlot {
            title: format!("semiclassical Delta X({} T_m) / d", c.periods),
            x_label: "k0".into(),
            y_label: "Delta X / d".into(),
            series: curves
                .iter()
                .map(|cv| Series {
                    name: format!("U={} wF/w={}", cv.u, tilt_label(cv.tilt)),
                    xs: k0s.clone(),
                    ys: cv.totals.clone(),
                    markers: false,
                })
                .collect(),
        },
    )?;

    let find = |u: f64, tilted: bool| curves.iter().find(|cv| cv.u == u && (cv.tilt.0 != 0) == tilted);
    if let Some(cv) = find(30.0, true) {
        let worst = cv.totals.iter().map(|x| (x - 3.0).abs()).fold(0.0, f64::max);
        run.check("U=30 tilted: max_k0 |Delta X / d - 3|", worst, Expect::Below { limit: 0.05 }, Source::Published);
    }
    let tilted_disp = curves
        .iter()
        .filter(|cv| cv.tilt.0 != 0)
        .flat_map(|cv| cv.dispersion.iter().map(|x| x.abs()))
        .fold(f64::NAN, f64::max);
    if tilted_disp.is_finite() {
        run.check(
            "tilted: max |dispersion integral| / d",
            tilted_disp,
            Expect::Below { limit: 0.05 },
            Source::Published,
        );
    }
    if let (Some(a), Some(b)) = (find(10.0, false), find(30.0, false)) {
        run.check(
            "U=30 untilted: spread over k0 (non-quantized)",
            b.spread(),
            Expect::Above { limit: 0.05 },
            Source::Published,
        );
        run.check(
            "untilted spread ratio U=30 / U=10 (reduced by interaction)",
            b.spread() / a.spread(),
            Expect::Below { limit: 1.0 },
            Source::Published,
        );
    }
    Ok(())
}
