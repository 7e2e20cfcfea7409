use serde::{Deserialize, Serialize};
use serde_json::Value;
use tiltpump::effective::EffectiveModel;
use tiltpump::export::{ColorScale, Heatmap, LinePlot, Series, Table};
use tiltpump::spectrum::{band_label, band_surface, find_clusters, solve_block, TorusGrid};
use tiltpump::topology::{chern_numbers_fhs, FhsOptions};
use tiltpump::{ModelParams, MomentumSectors, WrapPolicy};

use crate::report::{Expect, Run, Source};
use crate::CliError;

#[derive(Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Controls {
    /// Band-surface grid over `[0, pi) x [0, periods T_m)`.
    pub nk: usize,
    pub nt: usize,
    pub periods: f64,
    pub clusters: usize,
    /// Samples of the `k = 0` cut.
    pub cut_points: usize,
    pub fhs: bool,
    pub fhs_nk: usize,
    pub fhs_nt: usize,
    pub fhs_verify: bool,
}

impl Default for Controls {
    fn default() -> Self {
        Self {
            nk: 48,
            nt: 144,
            periods: 3.0,
            clusters: 5,
            cut_points: 300,
            fhs: true,
            fhs_nk: 48,
            fhs_nt: 144,
            fhs_verify: true,
        }
    }
}

pub fn defaults() -> Value {
    serde_json::to_value(Controls::default()).unwrap()
}

const CHERN: [f64; 5] = [-3.0, 3.0, -3.0, 0.0, 3.0];

pub fn run(p: &ModelParams, v: &Value, run: &mut Run) -> Result<(), CliError> {
    let c: Controls = run.controls(v)?;
    let p = p.clone().with_boundary(tiltpump::Boundary::Periodic);
    let s = MomentumSectors::new(p.sites)?;
    let t_tot = c.periods * p.drive_period();

    let bands = band_surface(&p, &s, TorusGrid::new(c.nk, c.nt, t_tot), WrapPolicy::Cut, false)?;
    let clusters = find_clusters(&bands.energies, c.clusters);
    let band_of = |level: usize| clusters.ranges.iter().position(|r| r.contains(&level)).unwrap();

    let mut tab = Table::new(&["k", "t", "m", "band", "E"]);
    for (i, &k) in bands.grid.ks.iter().enumerate() {
        for (j, &t) in bands.grid.ts.iter().enumerate() {
            for (m, e) in bands.energy(i, j).iter().enumerate() {
                tab.push(vec![k, t, m as f64, band_of(m) as f64, *e]);
            }
        }
    }
    run.csv("bands.csv", &tab)?;
    run.json("clusters.json", &clusters)?;
    for (b, r) in clusters.ranges.iter().enumerate() {
        // Cluster mean energy on the (k, t) grid, t outer.
        let mut values = Vec::with_capacity(bands.grid.len());
        for j in 0..bands.grid.ts.len() {
            for i in 0..bands.grid.ks.len() {
                let e = bands.energy(i, j);
                values.push(r.clone().map(|m| e[m]).sum::<f64>() / r.len() as f64);
            }
        }
        run.heatmap(
            &format!("band_{}.svg", band_label(b)),
            &Heatmap {
                title: format!("band ({}) energy", band_label(b)),
                x_label: "k".into(),
                y_label: "t".into(),
                xs: bands.grid.ks.clone(),
                ys: bands.grid.ts.clone(),
                values,
                scale: ColorScale::Sequential,
            },
        )?;
    }

    let gap = clusters.separating_gap();
    run.check_with(
        format!("{} isolated bands: smallest separating gap", clusters.count()),
        gap,
        Expect::Above { limit: 0.0 },
        Source::Published,
        Some(format!("cluster sizes {:?}", clusters.sizes())),
    );

    // k = 0 cut with the effective doublon bands.
    let ts: Vec<f64> = (0..c.cut_points).map(|j| t_tot * j as f64 / c.cut_points as f64).collect();
    let cut: Vec<Vec<f64>> = ts
        .iter()
        .map(|&t| Ok(solve_block(&s.block(&p, 0.0, t, WrapPolicy::Cut)?)?.values.iter().copied().collect()))
        .collect::<Result<_, tiltpump::Error>>()?;
    let eff = (p.interaction > 0.0).then(|| EffectiveModel::new(&p)).transpose()?;
    let mut tab = Table::new(&["t", "m", "E"]);
    for (t, e) in ts.iter().zip(&cut) {
        for (m, x) in e.iter().enumerate() {
            tab.push(vec![*t, m as f64, *x]);
        }
    }
    run.csv("cut_k0.csv", &tab)?;
    let bound = clusters.ranges.iter().take(2).flat_map(|r| r.clone()).collect::<Vec<_>>();
    let mut series: Vec<Series> = bound
        .iter()
        .map(|&m| Series {
            name: format!("level {m}"),
            xs: ts.iter().map(|t| t / p.drive_period()).collect(),
            ys: cut.iter().map(|e| e[m]).collect(),
            markers: false,
        })
        .collect();
    if let Some(eff) = &eff {
        let mut tab = Table::new(&["t", "eps_upper", "eps_lower"]);
        let mut worst = 0.0f64;
        let (mut up, mut lo) = (Vec::new(), Vec::new());
        for (t, e) in ts.iter().zip(&cut) {
            let (a, b) = eff.bands(0.0, *t);
            let shift = eff.offset(*t) - eff.constant();
            tab.push(vec![*t, a + shift, b + shift]);
            up.push(a + shift);
            lo.push(b + shift);
            worst = worst.max((a + shift - e[0]).abs()).max((b + shift - e[1]).abs());
        }
        run.csv("cut_k0_effective.csv", &tab)?;
        let xs: Vec<f64> = ts.iter().map(|t| t / p.drive_period()).collect();
        for (name, ys) in [("effective upper", up), ("effective lower", lo)] {
            series.push(Series {
                name: name.into(),
                xs: xs.iter().copied().step_by(6).collect(),
                ys: ys.into_iter().step_by(6).collect(),
                markers: true,
            });
        }
        if p.interaction >= 30.0 {
            run.check(
                "effective vs full bound bands at k = 0 (max |dE|)",
                worst,
                Expect::Below { limit: 0.1 },
                Source::Derived,
            );
        }
    }
    run.plot(
        "cut_k0.svg",
        &LinePlot { title: "bound bands at k = 0".into(), x_label: "t / T_m".into(), y_label: "E".into(), series },
    )?;

    if c.fhs {
        let opts = FhsOptions {
            nk: c.fhs_nk,
            nt: c.fhs_nt,
            t_tot,
            wrap: WrapPolicy::Cut,
            verify: c.fhs_verify,
            max_refinements: 2,
        };
        match chern_numbers_fhs(&p, &s, &clusters.ranges, opts) {
            Ok(res) => {
                run.json("chern.json", &res)?;
                let sum: f64 = res.iter().map(|r| r.trace).sum();
                run.check("sum of cluster Chern traces", sum, Expect::near(0.0, 0.02), Source::Derived);
                if res.len() == CHERN.len() {
                    for (m, (r, want)) in res.iter().zip(CHERN).enumerate() {
                        run.check(
                            format!("Chern number of band ({}), levels {:?}", band_label(m), r.levels),
                            r.raw,
                            Expect::near(want, 0.02),
                            Source::Published,
                        );
                        if !r.converged {
                            run.warn(format!("band ({}): lattice Chern number not converged", band_label(m)));
                        }
                    }
                }
            }
            Err(e) => run.fail("Chern numbers of all bands", Source::Published, format!("FHS: {e}")),
        }
    }
    Ok(())
}
