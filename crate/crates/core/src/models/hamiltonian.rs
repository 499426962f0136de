//! Two-degree-of-freedom mechanical Hamiltonians `H = |p|²/2 + V(q)` on `R⁴`.

use crate::error::{ReebError, Result};
use crate::models::{Flow, TransverseFrame};
use crate::scalar::{norm, Real};

/// Critical value of the Hénon-Heiles potential (energy of its saddle-centers).
pub const CRITICAL_ENERGY: f64 = 1.0 / 6.0;

/// Default upper bound on `energy - 1/6` accepted by [`HenonHeiles::new`].
pub const DEFAULT_ENERGY_CAP: f64 = 0.05;

pub trait Potential<R: Real>: Send + Sync {
    fn value(&self, q: [R; 2]) -> R;
    fn gradient(&self, q: [R; 2]) -> [R; 2];
    fn hessian(&self, q: [R; 2]) -> [[R; 2]; 2];
}

#[derive(Debug, Clone, Copy, Default)]
pub struct HenonHeilesPotential;

impl<R: Real> Potential<R> for HenonHeilesPotential {
    fn value(&self, q: [R; 2]) -> R {
        let half = R::lit(0.5);
        let third = R::lit(1.0 / 3.0);
        half * (q[0] * q[0] + q[1] * q[1]) + q[0] * q[0] * q[1] - third * q[1] * q[1] * q[1]
    }

    fn gradient(&self, q: [R; 2]) -> [R; 2] {
        let two = R::lit(2.0);
        [q[0] + two * q[0] * q[1], q[1] + q[0] * q[0] - q[1] * q[1]]
    }

    fn hessian(&self, q: [R; 2]) -> [[R; 2]; 2] {
        let one = R::one();
        let two = R::lit(2.0);
        [[one + two * q[1], two * q[0]], [two * q[0], one - two * q[1]]]
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct OscillatorPotential;

impl<R: Real> Potential<R> for OscillatorPotential {
    fn value(&self, q: [R; 2]) -> R {
        R::lit(0.5) * (q[0] * q[0] + q[1] * q[1])
    }
    fn gradient(&self, q: [R; 2]) -> [R; 2] {
        q
    }
    fn hessian(&self, _q: [R; 2]) -> [[R; 2]; 2] {
        [[R::one(), R::zero()], [R::zero(), R::one()]]
    }
}

/// Hamiltonian flow `q' = p, p' = -∇V(q)` with state `(q1, q2, p1, p2)`.
///
/// The transverse frame is the quaternionic trivialization
/// `e1 = J₂∇H/|∇H|`, `e2 = J₃∇H/|∇H|`, which restricts to a global frame of
/// the contact structure on star-shaped levels. With this ordering
/// `dq∧dp(e1, e2) = -1`, so positive rotation of the linearized flow in frame
/// coordinates is counter-clockwise.
#[derive(Debug, Clone)]
pub struct MechanicalFlow<R, P> {
    name: String,
    potential: P,
    energy: R,
}

pub type HenonHeiles<R> = MechanicalFlow<R, HenonHeilesPotential>;
pub type IsotropicOscillator<R> = MechanicalFlow<R, OscillatorPotential>;

impl<R: Real> MechanicalFlow<R, HenonHeilesPotential> {
    /// Hénon-Heiles flow on the level `H = energy`, just above the critical
    /// value `1/6`.
    pub fn new(energy: R) -> Result<Self> {
        Self::with_cap(energy, R::lit(DEFAULT_ENERGY_CAP))
    }

    pub fn with_cap(energy: R, cap: R) -> Result<Self> {
        let e = energy.to_f64_lossy();
        let excess = e - CRITICAL_ENERGY;
        if excess.abs() <= 4.0 * f64::EPSILON * CRITICAL_ENERGY {
            return Err(ReebError::InvalidParameter(format!(
                "energy {e} is at critical value 1/6"
            )));
        }
        if excess < 0.0 {
            return Err(ReebError::InvalidParameter(format!(
                "energy {e} is below critical value 1/6"
            )));
        }
        if excess > cap.to_f64_lossy() {
            return Err(ReebError::InvalidParameter(format!(
                "energy excess {excess:e} above configured cap {}",
                cap.to_f64_lossy()
            )));
        }
        Ok(Self {
            name: "henon-heiles".into(),
            potential: HenonHeilesPotential,
            energy,
        })
    }

    /// The three saddle-center equilibria `(q1, q2)`, starting with `(0, 1)`
    /// and proceeding by rotation through `2π/3`.
    pub fn saddle_centers() -> [[R; 2]; 3] {
        let base = [R::zero(), R::one()];
        [base, rotate_plane(base, 1), rotate_plane(base, 2)]
    }
}

impl<R: Real> MechanicalFlow<R, OscillatorPotential> {
    pub fn new(energy: R) -> Self {
        Self {
            name: "isotropic-oscillator".into(),
            potential: OscillatorPotential,
            energy,
        }
    }
}

/// Rotation of a plane vector by `k · 2π/3`.
pub fn rotate_plane<R: Real>(v: [R; 2], k: i32) -> [R; 2] {
    let angle = R::lit(2.0 * std::f64::consts::PI / 3.0 * k as f64);
    let (s, c) = angle.sin_cos();
    [c * v[0] - s * v[1], s * v[0] + c * v[1]]
}

impl<R: Real, P: Potential<R>> MechanicalFlow<R, P> {
    pub fn energy(&self) -> R {
        self.energy
    }

    pub fn hamiltonian(&self, z: &[R]) -> R {
        R::lit(0.5) * (z[2] * z[2] + z[3] * z[3]) + self.potential.value([z[0], z[1]])
    }

    pub fn gradient(&self, z: &[R]) -> [R; 4] {
        let g = self.potential.gradient([z[0], z[1]]);
        [g[0], g[1], z[2], z[3]]
    }

    pub fn potential(&self) -> &P {
        &self.potential
    }

    /// Applies the `Z₃` rotation (simultaneously on positions and momenta).
    pub fn rotate_state(z: &[R], k: i32) -> Vec<R> {
        let q = rotate_plane([z[0], z[1]], k);
        let p = rotate_plane([z[2], z[3]], k);
        vec![q[0], q[1], p[0], p[1]]
    }

    /// Completes `(q1, q2)` and `p2` to a point of the energy level by
    /// solving for `p1 >= 0`. Returns `None` when the level is not reachable.
    pub fn lift_to_level(&self, q: [R; 2], p2: R) -> Option<Vec<R>> {
        let kinetic = self.energy - self.potential.value(q) - R::lit(0.5) * p2 * p2;
        if kinetic < R::zero() {
            return None;
        }
        Some(vec![q[0], q[1], (R::lit(2.0) * kinetic).sqrt(), p2])
    }
}

impl<R: Real, P: Potential<R>> Flow<R> for MechanicalFlow<R, P> {
    fn name(&self) -> &str {
        &self.name
    }

    fn dim(&self) -> usize {
        4
    }

    fn field(&self, z: &[R], out: &mut [R]) {
        let g = self.potential.gradient([z[0], z[1]]);
        out[0] = z[2];
        out[1] = z[3];
        out[2] = -g[0];
        out[3] = -g[1];
    }

    fn jacobian(&self, z: &[R], out: &mut [R]) {
        let h = self.potential.hessian([z[0], z[1]]);
        for v in out.iter_mut() {
            *v = R::zero();
        }
        out[2] = R::one();
        out[4 + 3] = R::one();
        out[8] = -h[0][0];
        out[8 + 1] = -h[0][1];
        out[12] = -h[1][0];
        out[12 + 1] = -h[1][1];
    }

    fn conserved(&self, z: &[R]) -> Vec<R> {
        vec![self.hamiltonian(z)]
    }

    fn conserved_names(&self) -> Vec<&'static str> {
        vec!["energy"]
    }

    fn conserved_targets(&self) -> Option<Vec<R>> {
        Some(vec![self.energy])
    }

    fn frame(&self, z: &[R]) -> Option<TransverseFrame<R>> {
        let g = self.gradient(z);
        let n = norm(&g);
        if n <= R::epsilon() {
            return None;
        }
        let e1 = vec![g[1] / n, -g[0] / n, -g[3] / n, g[2] / n];
        let e2 = vec![-g[3] / n, g[2] / n, -g[1] / n, g[0] / n];
        Some(TransverseFrame {
            e1,
            e2,
            complement: vec![g.iter().map(|&x| x / n).collect()],
        })
    }

    fn frame_id(&self) -> &'static str {
        "quaternionic-gradient"
    }

    fn canonical_dof(&self) -> Option<usize> {
        Some(2)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn numeric_jacobian(f: &HenonHeiles<f64>, z: &[f64]) -> Vec<f64> {
        let h = 1e-6;
        let mut out = vec![0.0; 16];
        for j in 0..4 {
            let mut zp = z.to_vec();
            let mut zm = z.to_vec();
            zp[j] += h;
            zm[j] -= h;
            let fp = f.field_vec(&zp);
            let fm = f.field_vec(&zm);
            for i in 0..4 {
                out[i * 4 + j] = (fp[i] - fm[i]) / (2.0 * h);
            }
        }
        out
    }

    #[test]
    fn rejects_energy_at_and_below_critical_value() {
        let err = HenonHeiles::<f64>::new(1.0 / 6.0).unwrap_err();
        assert!(err.to_string().contains("at critical value"));
        let err = HenonHeiles::<f64>::new(0.1).unwrap_err();
        assert!(err.to_string().contains("below critical value"));
        assert!(HenonHeiles::<f64>::new(1.0 / 6.0 + 0.2).is_err());
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let hh = HenonHeiles::new(1.0 / 6.0 + 1e-3).unwrap();
        let z = [0.1, -0.3, 0.2, 0.05];
        let mut jac = vec![0.0; 16];
        hh.jacobian(&z, &mut jac);
        for (a, b) in jac.iter().zip(numeric_jacobian(&hh, &z)) {
            assert!((a - b).abs() < 1e-8);
        }
    }

    #[test]
    fn frame_is_orthonormal_and_transverse() {
        let hh = HenonHeiles::new(1.0 / 6.0 + 1e-3).unwrap();
        let z = [0.3f64, 0.2, -0.1, 0.4];
        let fr = hh.frame(&z).unwrap();
        let f = hh.field_vec(&z);
        let d = crate::scalar::dot;
        assert!(d(&fr.e1, &fr.e2).abs() < 1e-14);
        assert!((d(&fr.e1, &fr.e1) - 1.0).abs() < 1e-14);
        assert!(d(&fr.e1, &f).abs() < 1e-14);
        assert!(d(&fr.e2, &f).abs() < 1e-14);
        assert!(d(&fr.e1, &fr.complement[0]).abs() < 1e-14);
        // dq∧dp(e1, e2) = -1
        let omega = fr.e1[0] * fr.e2[2] + fr.e1[1] * fr.e2[3] - fr.e1[2] * fr.e2[0] - fr.e1[3] * fr.e2[1];
        assert!((omega + 1.0).abs() < 1e-14);
    }

    #[test]
    fn field_is_z3_equivariant() {
        let hh = HenonHeiles::new(1.0 / 6.0 + 1e-3).unwrap();
        let z = [0.21, -0.13, 0.34, 0.05];
        for k in 1..3 {
            let rz = HenonHeiles::<f64>::rotate_state(&z, k);
            let f_rot = hh.field_vec(&rz);
            let rot_f = HenonHeiles::<f64>::rotate_state(&hh.field_vec(&z), k);
            for (a, b) in f_rot.iter().zip(&rot_f) {
                assert!((a - b).abs() < 1e-14);
            }
            assert!((hh.hamiltonian(&rz) - hh.hamiltonian(&z)).abs() < 1e-15);
        }
    }
}
