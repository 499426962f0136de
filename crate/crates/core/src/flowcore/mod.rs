//! Trajectory integration, linearized flow and section crossings.

mod dopri;
mod section;
mod trajectory;
mod variational;

pub use dopri::{solve, solve_with, IntegratorOptions, StepControl};
pub use section::{
    first_hit, first_hits, return_map, Crossing, CrossingDirection, HitOptions, HitStatus, Section,
    SectionMap,
};
pub use trajectory::{DenseStep, Trajectory, TrajectoryRecord};
pub use variational::{integrate_variational, symplectic_defect, VariationalTrajectory};

use crate::error::Result;
use crate::models::Flow;
use crate::scalar::Real;

/// Integrates an autonomous flow from `z0` over `[t0, t1]`.
pub fn integrate<R: Real, F: Flow<R> + ?Sized>(
    flow: &F,
    z0: &[R],
    t0: R,
    t1: R,
    opts: &IntegratorOptions,
) -> Result<Trajectory<R>> {
    let mut traj = solve(|_, z, out| flow.field(z, out), z0, t0, t1, opts)?;
    traj.model = flow.name().to_string();
    Ok(traj)
}

/// Largest deviation of each conserved quantity from its initial value over
/// the stored samples.
pub fn conserved_drift<R: Real, F: Flow<R> + ?Sized>(flow: &F, traj: &Trajectory<R>) -> Vec<R> {
    let c0 = flow.conserved(&traj.states[0]);
    let mut worst = vec![R::zero(); c0.len()];
    for s in &traj.states {
        for (w, (c, c_init)) in worst.iter_mut().zip(flow.conserved(s).iter().zip(&c0)) {
            *w = w.max((*c - *c_init).abs());
        }
    }
    worst
}
