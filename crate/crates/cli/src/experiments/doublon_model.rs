use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use tiltpump::effective::{reduced_equals_chern_check, BerryForm, Branch, EffectiveModel};
use tiltpump::export::{LinePlot, Series, Table};
use tiltpump::topology::{reduced_chern, reduced_options, BAND_II};
use tiltpump::{Boundary, ModelParams, MomentumSectors, WrapPolicy};

use super::common::tilt_label;
use crate::report::{Expect, Run, Source};
use crate::CliError;

#[derive(Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Controls {
    pub periods: f64,
    /// Interactions at which the closed-form reduced Chern number is reported.
    pub interactions: Vec<f64>,
    /// Momenta `k0 = pi i / n` for the full-model comparison.
    pub k0_points: usize,
    /// Tilt ratio of the strict reduced-equals-Chern check.
    pub strict_tilt: (u32, u32),
    /// Tilts of the shift-invariance sweep, increasing.
    pub shift_tilts: Vec<(u32, u32)>,
    pub shift: f64,
    pub shift_grid: (usize, usize),
}

impl Default for Controls {
    fn default() -> Self {
        Self {
            periods: 3.0,
            interactions: vec![10.0, 30.0],
            k0_points: 8,
            strict_tilt: (1000, 1),
            shift_tilts: vec![(10, 3), (100, 1), (1000, 1), (4000, 1)],
            shift: PI / 4.0,
            shift_grid: (16, 960),
        }
    }
}

pub fn defaults() -> Value {
    serde_json::to_value(Controls::default()).unwrap()
}

fn spread(v: &[f64]) -> f64 {
    let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    hi - lo
}

pub fn run(p: &ModelParams, v: &Value, run: &mut Run) -> Result<(), CliError> {
    let c: Controls = run.controls(v)?;
    let p = p.clone().with_boundary(Boundary::Periodic);
    let t_tot = c.periods * p.drive_period();
    let k0s: Vec<f64> = (0..c.k0_points).map(|i| PI * i as f64 / c.k0_points as f64).collect();

    // Closed-form effective values.
    let mut quoted = Vec::new();
    for &u in &c.interactions {
        let m = EffectiveModel::new(&p.clone().with_interaction(u))?;
        if let Some(w) = m.regime_warning() {
            run.warn(format!("U = {u}: {w}"));
        }
        let q = m.reduced_chern(0.0, t_tot, Branch::Lower, BerryForm::Closed)?;
        quoted.push(json!({ "U": u, "C_red": q.value, "intervals": q.intervals }));
        let want = [(10.0, 2.9604), (30.0, 2.9921)].iter().find(|x| x.0 == u).map(|x| x.1);
        if let Some(w) = want {
            run.check(format!("effective C_red at U = {u}, k0 = 0"), q.value, Expect::near(w, 1e-3), Source::Published);
        }
    }
    run.json("effective_reduced_chern.json", &quoted)?;

    // Full model against the effective one at the parameters' U.
    let s = MomentumSectors::new(p.sites)?;
    let eff = EffectiveModel::new(&p)?;
    let mut tab = Table::new(&["k0", "full", "effective_closed", "effective_exact"]);
    let mut full = Vec::new();
    for &k in &k0s {
        let f = reduced_chern(&p, &s, BAND_II, k, t_tot, WrapPolicy::Cut, reduced_options());
        let f = match f {
            Ok(q) => q.value,
            Err(e) => {
                run.errors.push(format!("k0 = {k}: {e}"));
                f64::NAN
            }
        };
        let a = eff.reduced_chern(k, t_tot, Branch::Lower, BerryForm::Closed)?.value;
        let b = eff.reduced_chern(k, t_tot, Branch::Lower, BerryForm::Exact)?.value;
        tab.push(vec![k, f, a, b]);
        full.push((f, a));
    }
    run.csv("reduced_chern_k0.csv", &tab)?;
    let (f0, a0) = full[0];
    run.check_with(
        "full-model C_red(k0 = 0) - effective",
        (f0 - a0).abs(),
        Expect::Below { limit: 0.02 },
        Source::Published,
        Some(format!("full {f0:.5}, effective {a0:.5}")),
    );
    let fv: Vec<f64> = full.iter().map(|x| x.0).collect();
    run.check(
        format!("full-model C_red spread over {} momenta", c.k0_points),
        spread(&fv),
        Expect::Below { limit: 5e-3 },
        Source::Published,
    );

    // Strict check at a large tilt.
    let strict = p.clone().with_tilt(c.strict_tilt.0, c.strict_tilt.1);
    let rep = reduced_equals_chern_check(&strict, t_tot, c.k0_points, BerryForm::Exact)?;
    run.json("strict_check.json", &rep)?;
    run.check_with(
        format!("wF/w = {}: per-k0, mean and lattice Chern agreement", tilt_label(c.strict_tilt)),
        rep.max_deviation,
        Expect::Below { limit: 5e-3 },
        Source::Published,
        Some(format!("mean {:.5}, lattice {:.5}", rep.mean, rep.fhs)),
    );

    // Shift invariance of the curvature.
    let (nk, nt) = c.shift_grid;
    let mut tab = Table::new(&["tilt", "residual", "peak", "relative"]);
    let mut rel = Vec::new();
    for &(a, b) in &c.shift_tilts {
        let m = EffectiveModel::new(&p.clone().with_tilt(a, b))?;
        let (r, peak) = m.shift_invariance_residual(c.shift, nk, nt, t_tot, BerryForm::Exact)?;
        tab.push(vec![a as f64 / b as f64, r, peak, r / peak]);
        rel.push((a as f64 / b as f64, r / peak));
    }
    run.csv("shift_invariance.csv", &tab)?;
    run.plot(
        "shift_invariance.svg",
        &LinePlot {
            title: format!("curvature shift residual, dk = {:.4}", c.shift),
            x_label: "log10(wF / w)".into(),
            y_label: "log10(residual / max|F|)".into(),
            series: vec![Series {
                name: "residual".into(),
                xs: rel.iter().map(|x| x.0.log10()).collect(),
                ys: rel.iter().map(|x| x.1.log10()).collect(),
                markers: true,
            }],
        },
    )?;
    let falling = rel.windows(2).filter(|w| w[1].1 < w[0].1).count();
    run.check(
        "shift residual decreases with tilt",
        falling as f64,
        Expect::Equal { value: rel.len().saturating_sub(1) as f64 },
        Source::Derived,
    );
    if let Some(&(r, x)) = rel.iter().find(|x| x.0 == 1000.0) {
        run.check(
            format!("relative shift residual at wF/w = {r}"),
            x,
            Expect::Below { limit: 1e-3 },
            Source::Published,
        );
    }
    Ok(())
}
