//! Concrete dynamical systems: flows on three- and four-dimensional phase
//! spaces and planar maps.

mod hamiltonian;
mod linear;
mod local;
mod maps;
mod spec;
mod synthetic;

pub use hamiltonian::{
    HenonHeiles, HenonHeilesPotential, IsotropicOscillator, MechanicalFlow, OscillatorPotential,
    Potential, CRITICAL_ENERGY, DEFAULT_ENERGY_CAP,
};
pub use linear::{LinearKind, LinearReebModel};
pub use local::{LocalModel, LocalModelParams};
pub use maps::{invert2, mat_vec, AffineHorseshoe, Mat2, PlanarMap, PlaneRotation, Point2};
pub use spec::{ModelDocument, ModelKind, Tolerances};
pub use synthetic::SyntheticPassage;

use crate::scalar::Real;

/// Two vectors spanning the transverse plane at a point, used as the
/// trivialization for winding numbers and transverse monodromy.
///
/// `complement` holds extra vectors completing `(field, e1, e2)` to a basis
/// of the full tangent space (the energy gradient for Hamiltonian systems).
#[derive(Debug, Clone)]
pub struct TransverseFrame<R> {
    pub e1: Vec<R>,
    pub e2: Vec<R>,
    pub complement: Vec<Vec<R>>,
}

/// A vector field together with its derivative, conserved quantities and
/// transverse frame.
pub trait Flow<R: Real>: Send + Sync {
    fn name(&self) -> &str;

    fn dim(&self) -> usize;

    fn field(&self, z: &[R], out: &mut [R]);

    /// Row-major `dim x dim` derivative of the field.
    fn jacobian(&self, z: &[R], out: &mut [R]);

    /// Values of the conserved quantities at `z`, in the order of
    /// [`Flow::conserved_names`].
    fn conserved(&self, _z: &[R]) -> Vec<R> {
        Vec::new()
    }

    fn conserved_names(&self) -> Vec<&'static str> {
        Vec::new()
    }

    /// Prescribed values of the conserved quantities (the energy level of a
    /// Hamiltonian model), used to pin periodic-orbit searches to the level.
    fn conserved_targets(&self) -> Option<Vec<R>> {
        None
    }

    fn frame(&self, z: &[R]) -> Option<TransverseFrame<R>>;

    /// Identifier of the trivialization returned by [`Flow::frame`].
    fn frame_id(&self) -> &'static str;

    /// Coordinates living on a circle, as `(index, period)` pairs.
    fn periodic_coords(&self) -> Vec<(usize, R)> {
        Vec::new()
    }

    /// Number of leading position coordinates when the state is `(q, p)` of
    /// a mechanical system; used for the action `∮ p dq`.
    fn canonical_dof(&self) -> Option<usize> {
        None
    }

    fn field_vec(&self, z: &[R]) -> Vec<R> {
        let mut out = vec![R::zero(); self.dim()];
        self.field(z, &mut out);
        out
    }
}

impl<R: Real, F: Flow<R> + ?Sized> Flow<R> for Box<F> {
    fn name(&self) -> &str {
        (**self).name()
    }
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn field(&self, z: &[R], out: &mut [R]) {
        (**self).field(z, out)
    }
    fn jacobian(&self, z: &[R], out: &mut [R]) {
        (**self).jacobian(z, out)
    }
    fn conserved(&self, z: &[R]) -> Vec<R> {
        (**self).conserved(z)
    }
    fn conserved_names(&self) -> Vec<&'static str> {
        (**self).conserved_names()
    }
    fn conserved_targets(&self) -> Option<Vec<R>> {
        (**self).conserved_targets()
    }
    fn frame(&self, z: &[R]) -> Option<TransverseFrame<R>> {
        (**self).frame(z)
    }
    fn frame_id(&self) -> &'static str {
        (**self).frame_id()
    }
    fn periodic_coords(&self) -> Vec<(usize, R)> {
        (**self).periodic_coords()
    }
    fn canonical_dof(&self) -> Option<usize> {
        (**self).canonical_dof()
    }
}

impl<R: Real, F: Flow<R> + ?Sized> Flow<R> for std::sync::Arc<F> {
    fn name(&self) -> &str {
        (**self).name()
    }
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn field(&self, z: &[R], out: &mut [R]) {
        (**self).field(z, out)
    }
    fn jacobian(&self, z: &[R], out: &mut [R]) {
        (**self).jacobian(z, out)
    }
    fn conserved(&self, z: &[R]) -> Vec<R> {
        (**self).conserved(z)
    }
    fn conserved_names(&self) -> Vec<&'static str> {
        (**self).conserved_names()
    }
    fn conserved_targets(&self) -> Option<Vec<R>> {
        (**self).conserved_targets()
    }
    fn frame(&self, z: &[R]) -> Option<TransverseFrame<R>> {
        (**self).frame(z)
    }
    fn frame_id(&self) -> &'static str {
        (**self).frame_id()
    }
    fn periodic_coords(&self) -> Vec<(usize, R)> {
        (**self).periodic_coords()
    }
    fn canonical_dof(&self) -> Option<usize> {
        (**self).canonical_dof()
    }
}
