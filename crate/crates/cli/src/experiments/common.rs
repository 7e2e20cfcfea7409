use serde::{Deserialize, Serialize};
use tiltpump::dynamics::{EvolutionTrace, EvolveControls, Frame, KrylovOptions};
use tiltpump::export::{ColorScale, Heatmap, LinePlot, Series, Table};
use tiltpump::CELL;

use crate::report::Run;
use crate::CliError;

/// Time-stepping controls shared by the dynamics experiments.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Propagation {
    pub steps_per_period: usize,
    pub sample_every: usize,
    pub krylov: KrylovOptions,
    pub frame: Frame,
}

impl Default for Propagation {
    fn default() -> Self {
        let d = EvolveControls::default();
        Self { steps_per_period: d.steps_per_period, sample_every: d.sample_every, krylov: d.krylov, frame: d.frame }
    }
}

impl Propagation {
    pub fn evolve_controls(&self) -> EvolveControls {
        EvolveControls {
            steps_per_period: self.steps_per_period,
            sample_every: self.sample_every,
            krylov: self.krylov,
            frame: self.frame,
            ..Default::default()
        }
    }
}

pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![a],
        _ => (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect(),
    }
}

pub fn tilt_label((p, q): (u32, u32)) -> String {
    if p == 0 {
        "0".into()
    } else if q == 1 {
        format!("{p}")
    } else {
        format!("{p}/{q}")
    }
}

/// Writes the density, centroid, momentum and correlation data of a trace.
pub fn export_trace(run: &mut Run, prefix: &str, title: &str, tr: &EvolutionTrace) -> Result<(), CliError> {
    let l = tr.sites;
    let mut dens = Table::new(&["t", "j", "n"]);
    for (t, n) in tr.times.iter().zip(&tr.densities) {
        for (j, v) in n.iter().enumerate() {
            dens.push(vec![*t, (j + 1) as f64, *v]);
        }
    }
    run.csv(&format!("{prefix}_density.csv"), &dens)?;
    let mut cen = Table::new(&["t", "X", "dX", "norm"]);
    let dx = tr.displacement();
    for (i, d) in dx.iter().enumerate() {
        cen.push(vec![tr.times[i], tr.centroid[i], *d, tr.norm[i]]);
    }
    run.csv(&format!("{prefix}_centroid.csv"), &cen)?;
    run.heatmap(
        &format!("{prefix}_density.svg"),
        &Heatmap {
            title: format!("{title}: n_j(t)"),
            x_label: "site j".into(),
            y_label: "t".into(),
            xs: (1..=l).map(|j| j as f64).collect(),
            ys: tr.times.clone(),
            values: tr.densities.concat(),
            scale: ColorScale::Sequential,
        },
    )?;
    if let Some(m) = &tr.momentum {
        let mut tab = Table::new(&["t", "K", "rho"]);
        for (t, md) in tr.times.iter().zip(m) {
            for (k, r) in md.ks.iter().zip(&md.rho) {
                tab.push(vec![*t, *k, *r]);
            }
        }
        run.csv(&format!("{prefix}_momentum.csv"), &tab)?;
        run.heatmap(
            &format!("{prefix}_momentum.svg"),
            &Heatmap {
                title: format!("{title}: rho(K, t)"),
                x_label: "K".into(),
                y_label: "t".into(),
                xs: m[0].ks.clone(),
                ys: tr.times.clone(),
                values: m.iter().flat_map(|md| md.rho.iter().copied()).collect(),
                scale: ColorScale::Sequential,
            },
        )?;
    }
    for (i, snap) in tr.correlations.iter().enumerate() {
        let mut tab = Table::new(&["i", "j", "R"]);
        for a in 0..l {
            for b in 0..l {
                tab.push(vec![(a + 1) as f64, (b + 1) as f64, snap.r[a * l + b]]);
            }
        }
        run.csv(&format!("{prefix}_correlation_{i}.csv"), &tab)?;
        run.heatmap(
            &format!("{prefix}_correlation_{i}.svg"),
            &Heatmap {
                title: format!("{title}: R_ij at t = {:.1}", snap.time),
                x_label: "i".into(),
                y_label: "j".into(),
                xs: (1..=l).map(|j| j as f64).collect(),
                ys: (1..=l).map(|j| j as f64).collect(),
                values: snap.r.clone(),
                scale: ColorScale::Sequential,
            },
        )?;
    }
    run.warn_all(prefix, &tr.warnings);
    Ok(())
}

/// `Delta X(t) / d` of several traces in one plot.
pub fn displacement_plot(title: &str, period: f64, traces: &[(String, &EvolutionTrace)]) -> LinePlot {
    LinePlot {
        title: title.into(),
        x_label: "t / T_m".into(),
        y_label: "Delta X / d".into(),
        series: traces
            .iter()
            .map(|(name, tr)| Series {
                name: name.clone(),
                xs: tr.times.iter().map(|t| t / period).collect(),
                ys: tr.displacement().iter().map(|x| x / CELL as f64).collect(),
                markers: false,
            })
            .collect(),
    }
}
