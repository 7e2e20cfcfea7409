use crate::error::{Error, Result};
use crate::params::CELL;

/// Symmetric pair states `|l1 l2>` with `1 <= l1 <= l2 <= L_t`, in
/// lexicographic order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TwoBosonBasis {
    sites: usize,
    pairs: Vec<(usize, usize)>,
}

impl TwoBosonBasis {
    pub fn new(sites: usize) -> Result<Self> {
        if sites < 4 || sites % CELL != 0 {
            return Err(Error::InvalidParams(format!("sites = {sites} must be even and >= 4")));
        }
        let mut pairs = Vec::with_capacity(sites * (sites + 1) / 2);
        for a in 1..=sites {
            for b in a..=sites {
                pairs.push((a, b));
            }
        }
        Ok(Self { sites, pairs })
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn dim(&self) -> usize {
        self.pairs.len()
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn pair_of(&self, index: usize) -> (usize, usize) {
        self.pairs[index]
    }

    /// Index of `|l1 l2>`; the arguments may come in either order.
    pub fn index_of(&self, l1: usize, l2: usize) -> Option<usize> {
        let (a, b) = if l1 <= l2 { (l1, l2) } else { (l2, l1) };
        if a == 0 || b > self.sites {
            return None;
        }
        let n = self.sites;
        Some((a - 1) * (2 * n + 2 - a) / 2 + (b - a))
    }

    pub(crate) fn checked_index(&self, l1: usize, l2: usize) -> Result<usize> {
        self.index_of(l1, l2).ok_or(Error::SiteOutOfRange { l1, l2, sites: self.sites })
    }

    /// `(1 + delta_{l1 l2})^{-1/2}`.
    pub fn weight(&self, index: usize) -> f64 {
        let (a, b) = self.pairs[index];
        if a == b {
            std::f64::consts::FRAC_1_SQRT_2
        } else {
            1.0
        }
    }

    /// Centre of mass `(l1 + l2) / 2` of every basis state.
    pub fn com(&self) -> Vec<f64> {
        self.pairs.iter().map(|&(a, b)| 0.5 * (a + b) as f64).collect()
    }
}
