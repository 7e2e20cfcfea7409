use std::f64::consts::PI;

use serde::Serialize;

use crate::model::basis::TwoBosonBasis;
use crate::params::CELL;
use crate::C64;

/// `n_j = <n_j>` for `j = 1..=L_t` (index `j - 1`).
pub fn density(state: &[C64], basis: &TwoBosonBasis) -> Vec<f64> {
    let mut n = vec![0.0; basis.sites()];
    for (c, &(a, b)) in state.iter().zip(basis.pairs()) {
        let w = c.norm_sqr();
        n[a - 1] += w;
        n[b - 1] += w;
    }
    n
}

/// `X = sum (l1 + l2)/2 |psi|^2`, in sites.
pub fn centroid(state: &[C64], basis: &TwoBosonBasis) -> f64 {
    state.iter().zip(basis.pairs()).map(|(c, &(a, b))| 0.5 * (a + b) as f64 * c.norm_sqr()).sum()
}

/// `R_ij = <a_i^dag a_j^dag a_j a_i>` as a dense `L_t x L_t` matrix
/// (row-major, index `(i - 1) * L_t + (j - 1)`).
pub fn correlation(state: &[C64], basis: &TwoBosonBasis) -> Vec<f64> {
    let n = basis.sites();
    let mut r = vec![0.0; n * n];
    for (c, &(a, b)) in state.iter().zip(basis.pairs()) {
        let w = c.norm_sqr();
        if a == b {
            r[(a - 1) * n + a - 1] += 2.0 * w;
        } else {
            r[(a - 1) * n + b - 1] += w;
            r[(b - 1) * n + a - 1] += w;
        }
    }
    r
}

/// `R` summed over the sites of each unit cell (`L x L`, row-major).
pub fn cell_correlation(r: &[f64], sites: usize) -> Vec<f64> {
    let cells = sites / CELL;
    let mut out = vec![0.0; cells * cells];
    for i in 0..sites {
        for j in 0..sites {
            out[(i / CELL) * cells + j / CELL] += r[i * sites + j];
        }
    }
    out
}

/// Normalised overlap `<A, B> / (|A| |B|)` of two correlation matrices.
pub fn correlation_overlap(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    dot.abs() / (na * nb)
}

/// Centre-of-mass momentum distribution on `K = 2 pi n / L_t`, folded into
/// `[0, 2 pi / d)`.
#[derive(Clone, Debug, Serialize)]
pub struct MomentumDensity {
    pub ks: Vec<f64>,
    pub rho: Vec<f64>,
}

impl MomentumDensity {
    /// Circular mean `arg(sum rho e^{i K d}) / d` in `[0, 2 pi / d)`.
    pub fn mean(&self) -> f64 {
        let z: C64 = self.ks.iter().zip(&self.rho).map(|(&k, &r)| C64::from_polar(r, k * CELL as f64)).sum();
        (z.arg() / CELL as f64).rem_euclid(2.0 * PI / CELL as f64)
    }
}

/// Precomputed phases for [`MomentumTransform::apply`].
pub struct MomentumTransform {
    sites: usize,
    /// `e^{-i K s / 2}` for `s = l1 + l2`, indexed `[n][s]`.
    phases: Vec<Vec<C64>>,
}

impl MomentumTransform {
    pub fn new(sites: usize) -> Self {
        let phases = (0..sites)
            .map(|n| {
                let k = 2.0 * PI * n as f64 / sites as f64;
                (0..=2 * sites).map(|s| C64::from_polar(1.0, -0.5 * k * s as f64)).collect()
            })
            .collect();
        Self { sites, phases }
    }

    /// `psi~(K, r) = sum_{l2 - l1 = r} e^{-i K (l1 + l2)/2} psi`,
    /// `rho(K) = sum_r |psi~(K, r)|^2`, folded by `K ~ K + pi` and normalised.
    pub fn apply(&self, state: &[C64], basis: &TwoBosonBasis) -> MomentumDensity {
        let n = self.sites;
        let mut rho = vec![0.0; n];
        let mut acc = vec![C64::new(0.0, 0.0); n];
        for (m, ph) in self.phases.iter().enumerate() {
            acc.iter_mut().for_each(|x| *x = C64::new(0.0, 0.0));
            for (c, &(a, b)) in state.iter().zip(basis.pairs()) {
                acc[b - a] += ph[a + b] * c;
            }
            rho[m] = acc.iter().map(|x| x.norm_sqr()).sum();
        }
        let half = n / CELL;
        let folded: Vec<f64> = (0..half).map(|m| rho[m] + rho[m + half]).collect();
        let total: f64 = folded.iter().sum();
        MomentumDensity {
            ks: (0..half).map(|m| 2.0 * PI * m as f64 / n as f64).collect(),
            rho: folded.iter().map(|r| r / total).collect(),
        }
    }
}

pub fn momentum_density(state: &[C64], basis: &TwoBosonBasis) -> MomentumDensity {
    MomentumTransform::new(basis.sites()).apply(state, basis)
}

/// Linear fit of an unwrapped momentum series.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ScanFit {
    /// `dK/dt`.
    pub slope: f64,
    /// Time to sweep the zone `2 pi / d` once.
    pub period: f64,
    /// Largest deviation of the unwrapped series from the line.
    pub max_residual: f64,
}

/// Unwraps a series of zone-folded momenta and fits a line.
pub fn fit_momentum_scan(times: &[f64], means: &[f64]) -> ScanFit {
    let zone = 2.0 * PI / CELL as f64;
    let mut unwrapped = Vec::with_capacity(means.len());
    let mut offset = 0.0;
    for (i, &m) in means.iter().enumerate() {
        if i > 0 {
            let jump = m - means[i - 1];
            if jump > zone / 2.0 {
                offset -= zone;
            } else if jump < -zone / 2.0 {
                offset += zone;
            }
        }
        unwrapped.push(m + offset);
    }
    let n = times.len() as f64;
    let (mt, my) = (times.iter().sum::<f64>() / n, unwrapped.iter().sum::<f64>() / n);
    let sxy: f64 = times.iter().zip(&unwrapped).map(|(t, y)| (t - mt) * (y - my)).sum();
    let sxx: f64 = times.iter().map(|t| (t - mt) * (t - mt)).sum();
    let slope = sxy / sxx;
    let max_residual = times.iter().zip(&unwrapped).map(|(t, y)| (y - my - slope * (t - mt)).abs()).fold(0.0, f64::max);
    ScanFit { slope, period: zone / slope.abs(), max_residual }
}
