//! Simulation and certification toolkit for polarization-frequency
//! hyperentangled photon pairs.
//!
//! The crate is organized bottom-up:
//!
//! - [`linalg`]: density matrices, partial traces, fidelities, concurrence.
//! - [`source`]: the Sagnac-source states, post-selection and polarization
//!   correlation measurements.
//! - [`hom`]: Hong-Ou-Mandel interference (analytic fringe model, spectral
//!   quadrature, two-outcome POVM), spatial-mode statistics and count sampling.
//! - [`estimation`]: fringe fitting, the energy-conserving frequency state and
//!   the subspace fidelity bounds.
//! - [`certification`]: the semidefinite program bounding the global
//!   two-ququart fidelity and the entanglement-dimensionality certificate.
//!
//! Data-parallel loops go through [`parallel::Execution`]; with the default
//! `parallel` feature they run on rayon, otherwise sequentially, with
//! bit-identical results either way.

pub mod certification;
pub mod error;
pub mod estimation;
pub mod hom;
pub mod linalg;
pub mod parallel;
pub mod random;
pub mod source;

pub use error::{Error, Result};
pub use parallel::Execution;
