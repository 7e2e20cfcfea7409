use serde::{Deserialize, Serialize};
use serde_json::Value;
use tiltpump::dynamics::density;
use tiltpump::export::{LinePlot, Series, Table};
use tiltpump::spectrum::{band_supports, in_gap_states, obc_eigen, obc_spectrum, torus_clusters};
use tiltpump::{Boundary, ModelParams, MomentumSectors, TwoBosonBasis, C64};

use crate::report::{Expect, Run, Source};
use crate::CliError;

#[derive(Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Controls {
    /// Times over one `T_m`.
    pub nt: usize,
    /// Momenta for the ring band supports.
    pub nk: usize,
    pub cluster_grid: (usize, usize),
    /// Distance allowed between a bulk open-chain level and a ring band.
    pub bulk_tolerance: f64,
}

impl Default for Controls {
    fn default() -> Self {
        Self { nt: 120, nk: 24, cluster_grid: (12, 36), bulk_tolerance: 0.05 }
    }
}

pub fn defaults() -> Value {
    serde_json::to_value(Controls::default()).unwrap()
}

pub fn run(p: &ModelParams, v: &Value, run: &mut Run) -> Result<(), CliError> {
    let c: Controls = run.controls(v)?;
    let open = p.clone().with_boundary(Boundary::Open);
    let ring = p.clone().with_boundary(Boundary::Periodic);
    let tm = open.drive_period();
    let s = MomentumSectors::new(p.sites)?;
    let basis = TwoBosonBasis::new(p.sites)?;
    let clusters = torus_clusters(&ring, &s, 5, c.cluster_grid.0, c.cluster_grid.1, tm)?;
    let obc = obc_spectrum(&open, c.nt, tm)?;

    let supports: Vec<Vec<(f64, f64)>> =
        obc.ts.iter().map(|&t| band_supports(&ring, &s, t, c.nk, &clusters)).collect::<Result<_, _>>()?;
    let gap_of = |t: f64| {
        let j = obc.ts.iter().position(|&x| x == t).unwrap();
        // Between the two bound bands.
        (supports[j][1].1, supports[j][0].0)
    };
    let in_gap = in_gap_states(&obc, gap_of);

    let mut tab = Table::new(&["t", "n", "E", "left", "right"]);
    for (j, &t) in obc.ts.iter().enumerate() {
        for (n, (e, m)) in obc.energies[j].iter().zip(&obc.edges[j]).enumerate() {
            tab.push(vec![t, n as f64, *e, m.left, m.right]);
        }
    }
    run.csv("obc_spectrum.csv", &tab)?;
    let mut tab = Table::new(&["t", "n", "E", "left", "right"]);
    for g in &in_gap {
        tab.push(vec![g.t, g.index as f64, g.energy, g.edge.left, g.edge.right]);
    }
    run.csv("in_gap_states.csv", &tab)?;

    // Bound sector plot: every level above the bottom of band (ii).
    let floor = supports.iter().map(|s| s[1].0).fold(f64::INFINITY, f64::min) - 1.0;
    let levels: Vec<usize> = (0..obc.energies[0].len()).filter(|&n| obc.energies[0][n] > floor).collect();
    let xs: Vec<f64> = obc.ts.iter().map(|t| t / tm).collect();
    let mut series: Vec<Series> = levels
        .iter()
        .map(|&n| Series {
            name: String::new(),
            xs: xs.clone(),
            ys: obc.energies.iter().map(|e| e[n]).collect(),
            markers: false,
        })
        .collect();
    series.push(Series {
        name: "in-gap".into(),
        xs: in_gap.iter().map(|g| g.t / tm).collect(),
        ys: in_gap.iter().map(|g| g.energy).collect(),
        markers: true,
    });
    run.plot(
        "obc_bound_spectrum.svg",
        &LinePlot {
            title: "open-chain bound-state spectrum".into(),
            x_label: "t / T_m".into(),
            y_label: "E".into(),
            series,
        },
    )?;

    let dim = basis.dim() as f64;
    let fewest = obc.energies.iter().map(|e| e.len()).min().unwrap_or(0) as f64;
    run.check("levels at every time", fewest, Expect::Equal { value: dim }, Source::Definition);
    let a = obc_eigen(&open, &basis, 0.0)?;
    let b = obc_eigen(&open, &basis, tm)?;
    run.check(
        "spectrum(t) vs spectrum(t + T_m)",
        (a.values - b.values).amax(),
        Expect::Below { limit: 1e-10 },
        Source::Definition,
    );
    run.check("times with an in-gap state", in_gap.len() as f64, Expect::Above { limit: 0.0 }, Source::Published);

    // Densities of the most left- and right-localised in-gap states.
    let pick = |side: fn(&tiltpump::spectrum::EdgeMetric) -> f64| {
        in_gap.iter().max_by(|x, y| side(&x.edge).total_cmp(&side(&y.edge)))
    };
    let mut tab = Table::new(&["side", "t", "j", "n"]);
    let mut dens_series = Vec::new();
    for (tag, g) in [(0.0, pick(|m| m.left)), (1.0, pick(|m| m.right))] {
        let Some(g) = g else { continue };
        let e = obc_eigen(&open, &basis, g.t)?;
        let psi: Vec<C64> = e.vectors.column(g.index).iter().copied().collect();
        let n = density(&psi, &basis);
        for (j, x) in n.iter().enumerate() {
            tab.push(vec![tag, g.t, (j + 1) as f64, *x]);
        }
        let side = if tag == 0.0 { "left" } else { "right" };
        run.check_with(
            format!("{side} bound edge state: edge weight"),
            if tag == 0.0 { g.edge.left } else { g.edge.right },
            Expect::Above { limit: 0.5 },
            Source::Published,
            Some(format!("t / T_m = {:.3}, E = {:.4}", g.t / tm, g.energy)),
        );
        dens_series.push(Series {
            name: format!("{side} t/T_m={:.2}", g.t / tm),
            xs: (1..=n.len()).map(|j| j as f64).collect(),
            ys: n,
            markers: false,
        });
    }
    run.csv("edge_densities.csv", &tab)?;
    run.plot(
        "edge_densities.svg",
        &LinePlot {
            title: "in-gap state densities".into(),
            x_label: "site j".into(),
            y_label: "n_j".into(),
            series: dens_series,
        },
    )?;

    // Bound-sector bulk levels must sit inside band (i) or (ii). The scattering
    // continuum also hosts states with one particle on an edge, so it is left out.
    let mut worst = 0.0f64;
    for (j, e) in obc.energies.iter().enumerate() {
        let bound = &supports[j][..2];
        let cut = 0.5 * (supports[j][1].0 + supports[j][2].1);
        for (x, m) in e.iter().zip(&obc.edges[j]) {
            if m.is_edge() || *x < cut {
                continue;
            }
            let d = bound
                .iter()
                .map(|&(lo, hi)| {
                    if *x < lo {
                        lo - x
                    } else if *x > hi {
                        x - hi
                    } else {
                        0.0
                    }
                })
                .fold(f64::INFINITY, f64::min);
            worst = worst.max(d);
        }
    }
    run.check(
        "bound bulk open-chain levels: distance to the ring bands",
        worst,
        Expect::Below { limit: c.bulk_tolerance },
        Source::Derived,
    );
    Ok(())
}
