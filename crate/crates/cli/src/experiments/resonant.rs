use serde::{Deserialize, Serialize};
use serde_json::Value;
use tiltpump::dynamics::{band_fidelity, bloch_state_realspace, evolve, prepare_gaussian};
use tiltpump::export::{ColorScale, Heatmap, LinePlot, Series, Table};
use tiltpump::spectrum::{band_surface, doublon_pair_resonances, torus_clusters, Clusters, TorusGrid};
use tiltpump::topology::{reduced_chern, reduced_options};
use tiltpump::{Boundary, ModelParams, MomentumSectors, WrapPolicy};

use super::common::{displacement_plot, export_trace, Propagation};
use crate::report::{Expect, Run, Source};
use crate::CliError;

#[derive(Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Controls {
    /// Ring used for the band surfaces, the reduced Chern number and the
    /// resonance search. Dynamics run on the open chain of the parameters.
    pub spectrum_sites: usize,
    pub wrap: WrapPolicy,
    pub cluster_grid: (usize, usize),
    pub surface_grid: (usize, usize),
    pub resonance_points: usize,
    /// Resonance threshold as a fraction of `U`.
    pub resonance_threshold: f64,
    pub periods: f64,
    pub sigma: f64,
    pub center: Option<f64>,
    pub k0: f64,
    pub propagation: Propagation,
}

impl Default for Controls {
    fn default() -> Self {
        Self {
            spectrum_sites: 26,
            wrap: WrapPolicy::Cut,
            cluster_grid: (12, 36),
            surface_grid: (24, 72),
            resonance_points: 4000,
            resonance_threshold: 0.05,
            periods: 3.0,
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

/// The last single-level cluster below the top one: the band separated from
/// its neighbours by the resonances.
fn isolated(c: &Clusters) -> Option<usize> {
    (1..c.count()).rev().find(|&m| c.ranges[m].len() == 1)
}

pub fn run(p: &ModelParams, v: &Value, run: &mut Run) -> Result<(), CliError> {
    let c: Controls = run.controls(v)?;
    let ring = p.clone().with_boundary(Boundary::Periodic).with_sites(c.spectrum_sites);
    ring.validate().map_err(|e| CliError::Config(e.to_string()))?;
    let s = MomentumSectors::new(ring.sites)?;
    let tm = ring.drive_period();
    let t_tot = c.periods * tm;
    let (gk, gt) = c.cluster_grid;
    let clusters = torus_clusters(&ring, &s, 5, gk, gt, t_tot)?;
    run.json("clusters.json", &clusters)?;
    let Some(band) = isolated(&clusters) else {
        run.fail(
            "isolated middle band",
            Source::Published,
            format!("no single-level cluster among {:?}", clusters.sizes()),
        );
        return Ok(());
    };
    let level = clusters.ranges[band].start;

    // Lowest three bands on the torus.
    let (sk, st) = c.surface_grid;
    let surf = band_surface(&ring, &s, TorusGrid::new(sk, st, tm), c.wrap, false)?;
    let low: Vec<usize> =
        clusters.ranges[clusters.count().saturating_sub(3)..].iter().flat_map(|r| r.clone()).collect();
    let mut tab = Table::new(&["k", "t", "m", "E"]);
    for (i, &k) in surf.grid.ks.iter().enumerate() {
        for (j, &t) in surf.grid.ts.iter().enumerate() {
            for &m in &low {
                tab.push(vec![k, t, m as f64, surf.energy(i, j)[m]]);
            }
        }
    }
    run.csv("lowest_bands.csv", &tab)?;
    let mut values = Vec::new();
    for j in 0..surf.grid.ts.len() {
        for i in 0..surf.grid.ks.len() {
            values.push(surf.energy(i, j)[level]);
        }
    }
    run.heatmap(
        "isolated_band.svg",
        &Heatmap {
            title: format!("isolated band (level {level})"),
            x_label: "k".into(),
            y_label: "t".into(),
            xs: surf.grid.ks.clone(),
            ys: surf.grid.ts.clone(),
            values,
            scale: ColorScale::Sequential,
        },
    )?;

    // Avoided crossings of the isolated band with the pair continuum.
    let res = doublon_pair_resonances(
        &ring,
        &s,
        level,
        c.k0,
        tm,
        c.resonance_points,
        WrapPolicy::Keep,
        c.resonance_threshold * ring.interaction,
    )?;
    let mut tab = Table::new(&["t", "t_over_Tm", "detuning", "doublon_weight"]);
    for r in &res {
        tab.push(vec![r.t, r.t / tm, r.detuning, r.doublon_weight]);
    }
    run.csv("resonances.csv", &tab)?;
    run.check_with(
        "avoided crossings per T_m",
        res.len() as f64,
        Expect::Equal { value: 4.0 },
        Source::Published,
        Some(format!("at t/T_m = {:?}", res.iter().map(|r| (r.t / tm * 1000.0).round() / 1000.0).collect::<Vec<_>>())),
    );

    match reduced_chern(&ring, &s, level..level + 1, c.k0, t_tot, c.wrap, reduced_options()) {
        Ok(q) => {
            run.check_with(
                format!("reduced Chern number of the isolated band at k0 = {}", c.k0),
                q.value,
                Expect::near(3.0, 0.02),
                Source::Published,
                Some(format!("{} sites, {} intervals, converged: {}", ring.sites, q.intervals, q.converged)),
            );
            run.json("reduced_chern.json", &q)?;
        }
        Err(e) => run.fail("reduced Chern number of the isolated band", Source::Published, e.to_string()),
    }

    // Gaussian packet in the isolated band on the open chain.
    let open = p.clone().with_boundary(Boundary::Open);
    let so = MomentumSectors::new(open.sites)?;
    let oc = torus_clusters(&open.clone().with_boundary(Boundary::Periodic), &so, 5, gk, gt, t_tot)?;
    let Some(ob) = isolated(&oc) else {
        run.fail("isolated band on the dynamics chain", Source::Published, format!("cluster sizes {:?}", oc.sizes()));
        return Ok(());
    };
    let olevel = oc.ranges[ob].start;
    let bloch = bloch_state_realspace(&open, &so, olevel, c.k0, 0.0)?;
    let center = c.center.unwrap_or((open.sites / 2) as f64);
    let packet = prepare_gaussian(&bloch, so.basis(), c.sigma, center)?;
    run.warn_all("packet", &packet.warnings);
    let fid = band_fidelity(&packet.state, &open, &so, olevel..olevel + 1, 0.0)?;
    let tr = evolve(
        &packet.state,
        &open,
        so.basis(),
        0.0,
        c.periods * open.drive_period(),
        &c.propagation.evolve_controls(),
    )?;
    export_trace(run, "gaussian", "isolated-band packet", &tr)?;
    run.plot(
        "displacement.svg",
        &displacement_plot("resonant tunnelling", open.drive_period(), &[("gaussian".into(), &tr)]),
    )?;
    run.plot(
        "resonances.svg",
        &LinePlot {
            title: "doublon weight at the resonances".into(),
            x_label: "t / T_m".into(),
            y_label: "doublon weight".into(),
            series: vec![Series {
                name: "resonance".into(),
                xs: res.iter().map(|r| r.t / tm).collect(),
                ys: res.iter().map(|r| r.doublon_weight).collect(),
                markers: true,
            }],
        },
    )?;
    run.check_with(
        "packet fidelity with the isolated band",
        fid,
        Expect::Above { limit: 0.99 },
        Source::Derived,
        Some(format!("level {olevel} of {} sites", open.sites)),
    );
    run.check(
        "isolated-band packet: Delta X / d",
        tr.final_displacement_cells(),
        Expect::near(2.99, 0.02),
        Source::Published,
    );
    run.check("max norm drift", tr.max_norm_drift(), Expect::Below { limit: 1e-8 }, Source::Derived);
    Ok(())
}
