//! Periodic orbits: shooting, Floquet data, the Hénon-Heiles Lyapunov orbits
//! and periodic-point growth statistics.

mod growth;
mod lyapunov;
mod periodic;

pub use growth::{count_orbits_up_to_period, GrowthRow, GrowthTable, PeriodicPointSource};
pub use lyapunov::{
    energy_continuation, find_lyapunov_triple, lyapunov_guess, orbit_amplitude, rotation_mismatch,
    LyapunovTriple,
};
pub use periodic::{
    find_periodic_orbit, transverse_monodromy, Floquet, OrbitClass, OrbitOptions, PeriodicOrbit,
};
pub(crate) use periodic::frame_basis;
