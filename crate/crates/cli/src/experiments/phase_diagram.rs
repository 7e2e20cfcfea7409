use serde::{Deserialize, Serialize};
use serde_json::Value;
use tiltpump::export::{ColorScale, Heatmap, Table};
use tiltpump::topology::{phase_diagram, CRITICAL_MARGIN};
use tiltpump::{Boundary, ModelParams};

use super::common::linspace;
use crate::report::{Expect, Run, Source};
use crate::CliError;

#[derive(Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Controls {
    pub delta0s: Vec<f64>,
    pub staggers: Vec<f64>,
    pub nk: usize,
    pub nt: usize,
}

impl Default for Controls {
    fn default() -> Self {
        Self { delta0s: linspace(-2.0, 2.0, 11), staggers: linspace(-3.0, 3.0, 13), nk: 24, nt: 72 }
    }
}

pub fn defaults() -> Value {
    serde_json::to_value(Controls::default()).unwrap()
}

pub fn run(p: &ModelParams, v: &Value, run: &mut Run) -> Result<(), CliError> {
    let c: Controls = run.controls(v)?;
    let p = p.clone().with_boundary(Boundary::Periodic);
    let d = phase_diagram(&p, &c.delta0s, &c.staggers, c.nk, c.nt)?;
    let mut tab = Table::new(&["delta0", "Delta0", "C_raw", "C"]);
    let mut values = Vec::new();
    for b in 0..d.staggers.len() {
        for a in 0..d.delta0s.len() {
            let cell = d.get(a, b);
            let (raw, int) = cell.chern.as_ref().map_or((f64::NAN, f64::NAN), |c| (c.raw, c.rounded as f64));
            values.push(int);
            tab.push(vec![cell.delta0, cell.stagger, raw, int]);
            if let Some(e) = &cell.error {
                run.errors.push(format!("delta0 = {}, Delta0 = {}: {e}", cell.delta0, cell.stagger));
            }
        }
    }
    run.csv("phase_diagram.csv", &tab)?;
    run.json("phase_diagram.json", &d)?;
    run.heatmap(
        "phase_diagram.svg",
        &Heatmap {
            title: "band (ii) Chern number without tilt".into(),
            x_label: "delta0".into(),
            y_label: "Delta0".into(),
            xs: d.delta0s.clone(),
            ys: d.staggers.clone(),
            values,
            scale: ColorScale::Diverging,
        },
    )?;

    let at = |x: f64, y: f64| {
        let a = d.delta0s.iter().position(|&v| (v - x).abs() < 1e-9)?;
        let b = d.staggers.iter().position(|&v| (v - y).abs() < 1e-9)?;
        Some(d.get(a, b).chern.as_ref().map_or(f64::NAN, |c| c.rounded as f64))
    };
    for (y, want) in [(2.0, 3.0), (-2.0, -3.0)] {
        if let Some(cv) = at(0.8, y) {
            run.check(format!("C_ii at (0.8, {y})"), cv, Expect::Equal { value: want }, Source::Published);
        }
    }
    // Every pair (Delta0, -Delta0) on the grid must have opposite Chern numbers.
    let mut violations = 0;
    for a in 0..d.delta0s.len() {
        for b in 0..d.staggers.len() {
            let Some(mirror) = d.staggers.iter().position(|&y| (y + d.staggers[b]).abs() < 1e-9) else {
                continue;
            };
            let x = d.get(a, b).chern.as_ref().map(|c| c.rounded);
            let y = d.get(a, mirror).chern.as_ref().map(|c| c.rounded);
            if x.map(|v| -v) != y {
                violations += 1;
            }
        }
    }
    run.check(
        "antisymmetry violations under Delta0 -> -Delta0",
        violations as f64,
        Expect::Equal { value: 0.0 },
        Source::Derived,
    );
    let critical_computed = d
        .cells
        .iter()
        .filter(|c| (c.delta0.abs() < CRITICAL_MARGIN || c.stagger.abs() < CRITICAL_MARGIN) && c.chern.is_some())
        .count();
    run.check(
        "critical-line cells with a Chern number",
        critical_computed as f64,
        Expect::Equal { value: 0.0 },
        Source::Definition,
    );
    Ok(())
}
