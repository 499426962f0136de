//! Flow with a closed-form passage map between the sections `σ = 0` and `σ = 1`.

use serde::{Deserialize, Serialize};

use crate::models::{Flow, TransverseFrame};
use crate::scalar::Real;

/// State `(θ, ρ, σ)` with `θ ∈ R/Z`: `θ' = α + βρ`, `ρ' = κρ`, `σ' = 1`.
///
/// Starting on `σ = 0`, the flow reaches `σ = 1` after unit time at
/// `θ₁ = θ + α + βρ (e^κ - 1)/κ`, `ρ₁ = ρ e^κ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticPassage {
    pub alpha: f64,
    pub beta: f64,
    pub kappa: f64,
}

impl SyntheticPassage {
    pub fn passage(&self, theta: f64, rho: f64) -> (f64, f64) {
        let growth = self.kappa.exp();
        let drift = if self.kappa.abs() < 1e-12 {
            1.0
        } else {
            (growth - 1.0) / self.kappa
        };
        (theta + self.alpha + self.beta * rho * drift, rho * growth)
    }
}

impl<R: Real> Flow<R> for SyntheticPassage {
    fn name(&self) -> &str {
        "synthetic-passage"
    }

    fn dim(&self) -> usize {
        3
    }

    fn field(&self, z: &[R], out: &mut [R]) {
        out[0] = R::lit(self.alpha) + R::lit(self.beta) * z[1];
        out[1] = R::lit(self.kappa) * z[1];
        out[2] = R::one();
    }

    fn jacobian(&self, _z: &[R], out: &mut [R]) {
        out.iter_mut().for_each(|v| *v = R::zero());
        out[1] = R::lit(self.beta);
        out[4] = R::lit(self.kappa);
    }

    fn frame(&self, _z: &[R]) -> Option<TransverseFrame<R>> {
        None
    }

    fn frame_id(&self) -> &'static str {
        "none"
    }

    fn periodic_coords(&self) -> Vec<(usize, R)> {
        vec![(0, R::one())]
    }
}
