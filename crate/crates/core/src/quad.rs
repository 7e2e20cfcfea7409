//! Composite trapezoid with interval doubling and a Richardson step.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::Result;

#[derive(Clone, Copy, Debug, Serialize)]
pub struct Quadrature {
    pub value: f64,
    pub intervals: usize,
    /// `|R_n - R_{n/2}|` at exit.
    pub change: f64,
    pub converged: bool,
}

#[derive(Clone, Copy, Debug)]
pub struct QuadOptions {
    pub initial_intervals: usize,
    pub tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self { initial_intervals: 512, tol: 1e-3, max_intervals: 1 << 17 }
    }
}

/// Integrates `f` over `[a, b]`, halving the step until two successive
/// Richardson-extrapolated trapezoid estimates differ by less than `tol`.
/// Samples are evaluated in parallel.
pub fn integrate<F>(f: F, a: f64, b: f64, opts: QuadOptions) -> Result<Quadrature>
where
    F: Fn(f64) -> Result<f64> + Sync,
{
    let mut n = opts.initial_intervals.max(2);
    let eval = |xs: Vec<f64>| -> Result<f64> {
        let v: Vec<f64> = xs.par_iter().map(|&x| f(x)).collect::<Result<_>>()?;
        Ok(v.iter().sum())
    };
    let h = (b - a) / n as f64;
    let ends = f(a)? + f(b)?;
    let inner = eval((1..n).map(|i| a + h * i as f64).collect())?;
    let mut sum = 0.5 * ends + inner;
    let mut trap = h * sum;
    let mut rich: Option<f64> = None;
    loop {
        let h2 = (b - a) / (2 * n) as f64;
        let mids = eval((0..n).map(|i| a + h2 * (2 * i + 1) as f64).collect())?;
        sum += mids;
        let trap2 = h2 * sum;
        let r = trap2 + (trap2 - trap) / 3.0;
        n *= 2;
        trap = trap2;
        if let Some(prev) = rich {
            let change = (r - prev).abs();
            if change < opts.tol || 2 * n > opts.max_intervals {
                return Ok(Quadrature { value: r, intervals: n, change, converged: change < opts.tol });
            }
        }
        rich = Some(r);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_and_periodic() {
        let q = integrate(|x| Ok(x * x * x), 0.0, 2.0, QuadOptions { tol: 1e-12, ..Default::default() }).unwrap();
        assert!((q.value - 4.0).abs() < 1e-12 && q.converged);
        let q = integrate(
            |x| Ok((x.sin()).exp()),
            0.0,
            2.0 * std::f64::consts::PI,
            QuadOptions { initial_intervals: 8, tol: 1e-13, max_intervals: 1 << 12 },
        )
        .unwrap();
        // 2 pi I_0(1)
        assert!((q.value - 7.954_926_521_012_845).abs() < 1e-12);
    }

    #[test]
    fn gives_up_at_the_interval_cap() {
        let q = integrate(
            |x| Ok((1.0 / (x + 1e-9)).sin()),
            0.0,
            1.0,
            QuadOptions { initial_intervals: 4, tol: 1e-14, max_intervals: 64 },
        )
        .unwrap();
        assert!(!q.converged);
    }
}
