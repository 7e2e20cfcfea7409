//! Two interacting bosons in a periodically driven, tilted Rice-Mele
//! superlattice.
//!
//! The crate is organised bottom-up:
//!
//! * [`model`] builds the two-boson basis and every Hamiltonian representation
//!   (lab frame, rotating frame, momentum blocks with analytic derivatives).
//! * [`spectrum`] diagonalises blocks and open chains and groups eigenpairs
//!   into band clusters.
//! * [`topology`] computes Berry curvature, lattice Chern numbers and reduced
//!   Chern numbers on the `(k, t)` torus.
//! * [`effective`] is the second-order doublon model and its two-level form.
//! * [`dynamics`] prepares states, propagates them with a Krylov midpoint
//!   scheme and measures densities, centroids and correlations.
//! * [`export`] writes CSV/JSON/SVG artifacts.

pub mod dynamics;
pub mod effective;
pub mod error;
pub mod export;
pub mod linalg;
pub mod model;
pub mod params;
pub mod quad;
pub mod spectrum;
pub mod topology;

pub use error::{Error, Result};
pub use model::basis::TwoBosonBasis;
pub use model::momentum::{MomentumBlock, MomentumSectors, WrapPolicy};
pub use model::operator::SparseHermitian;
pub use params::{Boundary, ModelParams, CELL};

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex64;
