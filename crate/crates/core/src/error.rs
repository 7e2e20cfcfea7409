use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("basis built for {basis} sites, parameters ask for {params}")]
    BasisMismatch { basis: usize, params: usize },

    #[error("momentum blocks need a periodic chain")]
    NotPeriodic,

    #[error("quasimomentum {k} outside the fundamental interval [0, pi)")]
    MomentumOutOfRange { k: f64 },

    #[error("quasimomentum {k} is not commensurate with a chain that has short translation orbits")]
    Incommensurate { k: f64 },

    #[error("site pair ({l1}, {l2}) invalid for a chain of {sites} sites")]
    SiteOutOfRange { l1: usize, l2: usize, sites: usize },

    #[error("eigensolver did not converge at k = {k}, t = {t}")]
    NoConvergence { k: f64, t: f64 },

    #[error("gap {gap:.3e} below margin {margin:.1e} at k = {k}, t = {t}")]
    Degenerate { k: f64, t: f64, gap: f64, margin: f64 },

    #[error("link overlap {overlap:.3e} at k = {k}, t = {t}: the band crosses a neighbour on the grid")]
    GapClosure { k: f64, t: f64, overlap: f64 },

    #[error("no band index {band}; only {count} clusters")]
    NoSuchBand { band: usize, count: usize },

    #[error("point on a critical line: {0}")]
    Critical(String),

    #[error("the effective model needs U > 0")]
    ZeroInteraction,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
