//! State preparation, time evolution and dynamical observables.

pub mod evolve;
pub mod krylov;
pub mod observables;
pub mod semiclassical;
pub mod state;

pub use evolve::{evolve, EvolutionTrace, EvolveControls, Frame};
pub use krylov::{Krylov, KrylovOptions};
pub use observables::{
    cell_correlation, centroid, correlation, correlation_overlap, density, fit_momentum_scan, momentum_density,
};
pub use semiclassical::{semiclassical_displacement, Semiclassical};
pub use state::{band_fidelities, band_fidelity, bloch_state_realspace, prepare_fock, prepare_gaussian, StateVector};
