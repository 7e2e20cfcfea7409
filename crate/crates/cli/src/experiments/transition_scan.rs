use serde::{Deserialize, Serialize};
use serde_json::Value;
use tiltpump::export::{LinePlot, Series, Table};
use tiltpump::quad::QuadOptions;
use tiltpump::topology::{reduced_options, transition_scan};
use tiltpump::{Boundary, ModelParams};

use super::common::tilt_label;
use crate::report::{Expect, Run, Source};
use crate::CliError;

#[derive(Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Controls {
    pub delta0: f64,
    pub staggers: Vec<f64>,
    pub tilts: Vec<(u32, u32)>,
    /// Grid of the untilted lattice Chern number.
    pub nk: usize,
    pub nt: usize,
    pub quad_tol: f64,
}

impl Default for Controls {
    fn default() -> Self {
        Self {
            delta0: 0.8,
            staggers: vec![-2.0, -1.5, -1.0, -0.5, -0.2, -0.1, 0.0, 0.1, 0.2, 0.5, 1.0, 1.5, 2.0],
            tilts: vec![(0, 1), (1, 3), (2, 3), (10, 3)],
            nk: 24,
            nt: 72,
            quad_tol: 1e-8,
        }
    }
}

pub fn defaults() -> Value {
    serde_json::to_value(Controls::default()).unwrap()
}

pub fn run(p: &ModelParams, v: &Value, run: &mut Run) -> Result<(), CliError> {
    let c: Controls = run.controls(v)?;
    if c.tilts.is_empty() {
        return Err(CliError::Config("transition-scan needs at least one tilt".into()));
    }
    let p = p.clone().with_boundary(Boundary::Periodic);
    let quad = QuadOptions { tol: c.quad_tol, ..reduced_options() };
    let scan = transition_scan(&p, c.delta0, &c.staggers, &c.tilts, c.nk, c.nt, quad)?;
    let mut tab = Table::new(&["Delta0", "tilt", "C_red", "C_untilted"]);
    for row in &scan.rows {
        for (&(a, b), r) in scan.ratios.iter().zip(&row.reduced) {
            tab.push(vec![row.stagger, a as f64 / b as f64, r.unwrap_or(f64::NAN), row.untilted.unwrap_or(f64::NAN)]);
        }
        for e in &row.errors {
            run.errors.push(format!("Delta0 = {}: {e}", row.stagger));
        }
    }
    run.csv("transition_scan.csv", &tab)?;
    run.json("transition_scan.json", &scan)?;
    let mut series: Vec<Series> = scan
        .ratios
        .iter()
        .enumerate()
        .map(|(i, &t)| Series {
            name: format!("C_red wF/w={}", tilt_label(t)),
            xs: scan.rows.iter().map(|r| r.stagger).collect(),
            ys: scan.rows.iter().map(|r| r.reduced[i].unwrap_or(f64::NAN)).collect(),
            markers: false,
        })
        .collect();
    series.push(Series {
        name: "C (no tilt)".into(),
        xs: scan.rows.iter().map(|r| r.stagger).collect(),
        ys: scan.rows.iter().map(|r| r.untilted.unwrap_or(f64::NAN)).collect(),
        markers: true,
    });
    run.plot(
        "transition_scan.svg",
        &LinePlot {
            title: format!("band (ii) across Delta0 = 0 at delta0 = {}", c.delta0),
            x_label: "Delta0".into(),
            y_label: "C".into(),
            series,
        },
    )?;

    let last = scan.ratios.len() - 1;
    let row = |v: f64| scan.rows.iter().find(|r| (r.stagger - v).abs() < 1e-12);
    for (y, want) in [(2.0, 3.0), (-2.0, -3.0)] {
        if let Some(r) = row(y) {
            run.check(
                format!("C_red at Delta0 = {y}, wF/w = {}", tilt_label(scan.ratios[last])),
                r.reduced[last].unwrap_or(f64::NAN),
                Expect::near(want, 0.05),
                Source::Published,
            );
        }
    }
    // Sharpening: closest to the transition, |C_red| must grow with the tilt.
    let nearest = scan.rows.iter().filter(|r| r.stagger != 0.0).map(|r| r.stagger.abs()).fold(f64::INFINITY, f64::min);
    for r in scan.rows.iter().filter(|r| r.stagger.abs() == nearest) {
        let mags: Vec<f64> = r.reduced.iter().map(|x| x.map_or(f64::NAN, f64::abs)).collect();
        let rising = mags.windows(2).filter(|w| w[1] > w[0]).count();
        run.check_with(
            format!("|C_red| increases with tilt at Delta0 = {}", r.stagger),
            rising as f64,
            Expect::Equal { value: (mags.len() - 1) as f64 },
            Source::Published,
            Some(format!("{mags:?}")),
        );
    }
    Ok(())
}
