//! Numerical invariants of three-dimensional Reeb and Hamiltonian flows:
//! periodic orbits, Conley-Zehnder indices, linking numbers, Moser normal
//! forms, transition-map lifts with logarithmic twist, horseshoe certificates
//! and entropy estimates.
//!
//! The integrator and the model vector fields are generic over [`Real`];
//! the analysis layers work in `f64` through the aliases below.

pub mod error;
pub mod indices;
pub mod flowcore;
pub mod horseshoe;
pub mod linalg;
pub mod models;
pub mod orbits;
pub mod scalar;
pub mod transition;

pub use error::{ReebError, Result};
pub use scalar::Real;

pub type HenonHeilesF64 = models::HenonHeiles<f64>;
pub type IsotropicOscillatorF64 = models::IsotropicOscillator<f64>;
pub type LocalModelF64 = models::LocalModel<f64>;
pub type LinearReebModelF64 = models::LinearReebModel<f64>;
