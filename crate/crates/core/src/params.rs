use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sites per unit cell.
pub const CELL: usize = 2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    Periodic,
    Open,
}

/// Physical constants of the driven, tilted superlattice.
///
/// Sites run over `1..=sites`. The tilt is `omega_f = (tilt_p / tilt_q) * omega`;
/// `tilt_p = 0` switches the tilt off.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    #[serde(rename = "J")]
    pub hopping: f64,
    pub delta0: f64,
    #[serde(rename = "Delta0")]
    pub stagger: f64,
    #[serde(rename = "U")]
    pub interaction: f64,
    pub omega: f64,
    pub tilt_p: u32,
    pub tilt_q: u32,
    pub phi0: f64,
    pub sites: usize,
    pub boundary: Boundary,
}

impl ModelParams {
    /// Bound-state pumping set: J=-1, delta0=0.8, Delta0=2, U=30, omega=0.005,
    /// tilt 10/3, 26 sites, periodic.
    pub fn bound_pump() -> Self {
        Self {
            hopping: -1.0,
            delta0: 0.8,
            stagger: 2.0,
            interaction: 30.0,
            omega: 0.005,
            tilt_p: 10,
            tilt_q: 3,
            phi0: 0.0,
            sites: 26,
            boundary: Boundary::Periodic,
        }
    }

    /// Scattering-state set: Delta0=7, omega=0.05, tilt 31/3, 58 sites.
    pub fn scattering() -> Self {
        Self { stagger: 7.0, omega: 0.05, tilt_p: 31, tilt_q: 3, sites: 58, ..Self::bound_pump() }
    }

    /// Resonant-tunnelling set: Delta0=20 (> U/2).
    pub fn resonant() -> Self {
        Self { stagger: 20.0, ..Self::bound_pump() }
    }

    pub fn with_sites(mut self, sites: usize) -> Self {
        self.sites = sites;
        self
    }

    pub fn with_boundary(mut self, boundary: Boundary) -> Self {
        self.boundary = boundary;
        self
    }

    pub fn with_tilt(mut self, p: u32, q: u32) -> Self {
        self.tilt_p = p;
        self.tilt_q = q;
        self
    }

    pub fn with_interaction(mut self, u: f64) -> Self {
        self.interaction = u;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParams(m));
        if self.sites < 4 || self.sites % CELL != 0 {
            return bad(format!("sites = {} must be even and >= 4", self.sites));
        }
        if self.tilt_q == 0 {
            return bad("tilt_q must be positive".into());
        }
        if self.tilt_p != 0 && gcd(self.tilt_p, self.tilt_q) != 1 {
            return bad(format!("tilt ratio {}/{} is not in lowest terms", self.tilt_p, self.tilt_q));
        }
        let finite = [self.hopping, self.delta0, self.stagger, self.interaction, self.omega, self.phi0];
        if finite.iter().any(|x| !x.is_finite()) {
            return bad("non-finite constant".into());
        }
        if self.interaction < 0.0 {
            return bad("U must be >= 0".into());
        }
        if self.omega < 0.0 {
            return bad("omega must be >= 0".into());
        }
        Ok(())
    }

    /// Number of unit cells `L = sites / d`.
    pub fn cells(&self) -> usize {
        self.sites / CELL
    }

    pub fn tilt_ratio(&self) -> f64 {
        self.tilt_p as f64 / self.tilt_q as f64
    }

    pub fn omega_f(&self) -> f64 {
        self.tilt_ratio() * self.omega
    }

    /// Drive period `T_m = 2 pi / omega`.
    pub fn drive_period(&self) -> f64 {
        2.0 * PI / self.omega
    }

    /// Common period `q T_m` of the rotating-frame Hamiltonian.
    pub fn pump_period(&self) -> f64 {
        self.tilt_q as f64 * self.drive_period()
    }

    /// Single-particle Bloch period `2 pi / (d omega_F)`.
    pub fn bloch_period(&self) -> f64 {
        2.0 * PI / (CELL as f64 * self.omega_f())
    }

    pub fn phase(&self, t: f64) -> f64 {
        self.phi0 + self.omega * t
    }
}

pub(crate) fn gcd(mut a: u32, mut b: u32) -> u32 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// +1 for even sites, -1 for odd ones: `cos(pi j)`.
#[inline]
pub(crate) fn parity(j: usize) -> f64 {
    if j % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_validate() {
        for p in [ModelParams::bound_pump(), ModelParams::scattering(), ModelParams::resonant()] {
            p.validate().unwrap();
        }
    }

    #[test]
    fn rejects_bad_sizes_and_ratios() {
        let p = ModelParams::bound_pump();
        assert!(p.clone().with_sites(7).validate().is_err());
        assert!(p.clone().with_sites(2).validate().is_err());
        assert!(p.clone().with_tilt(6, 4).validate().is_err());
        assert!(p.clone().with_tilt(0, 3).validate().is_ok());
        assert!(p.with_tilt(1, 0).validate().is_err());
    }

    #[test]
    fn derived_periods() {
        let p = ModelParams::bound_pump();
        assert!((p.drive_period() - 2.0 * PI / 0.005).abs() < 1e-9);
        assert!((p.pump_period() - 3.0 * p.drive_period()).abs() < 1e-9);
        assert!((p.omega_f() - 0.005 * 10.0 / 3.0).abs() < 1e-15);
        assert_eq!(p.cells(), 13);
    }

    #[test]
    fn json_round_trip_and_unknown_keys() {
        let p = ModelParams::scattering();
        let s = serde_json::to_string(&p).unwrap();
        assert!(s.contains("\"Delta0\":7.0"));
        let back: ModelParams = serde_json::from_str(&s).unwrap();
        assert_eq!(back, p);
        let extra = s.replacen('{', "{\"bogus\":1,", 1);
        assert!(serde_json::from_str::<ModelParams>(&extra).is_err());
    }
}
