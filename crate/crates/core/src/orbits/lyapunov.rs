use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{ReebError, Result};
use crate::flowcore::integrate;
use crate::models::{HenonHeiles, CRITICAL_ENERGY};
use crate::orbits::periodic::{find_periodic_orbit, OrbitClass, OrbitOptions, PeriodicOrbit};

/// Saddle-center frequency `sqrt(3)` of the Hénon-Heiles potential.
const CENTER_FREQUENCY: f64 = 1.732_050_807_568_877_2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LyapunovTriple {
    pub energy: f64,
    pub orbits: Vec<PeriodicOrbit>,
    /// Largest pairwise difference of the periods.
    pub period_spread: f64,
    pub action_spread: f64,
    /// Largest pointwise distance between orbit `k` and the rotation of orbit 0
    /// by `k · 2π/3`, after aligning start points.
    pub symmetry_error: f64,
}

/// Initial guess for the Lyapunov orbit in sector `k`: a turning point on the
/// center direction of the saddle-center with the linearized amplitude.
pub fn lyapunov_guess(energy: f64, sector: i32) -> (Vec<f64>, f64) {
    let amp = (2.0 * (energy - CRITICAL_ENERGY) / 3.0).sqrt();
    let base = [amp, 1.0, 0.0, 0.0];
    (HenonHeiles::<f64>::rotate_state(&base, sector), 2.0 * std::f64::consts::PI / CENTER_FREQUENCY)
}

/// The three Lyapunov orbits in the necks around the saddle-centers.
pub fn find_lyapunov_triple(model: &HenonHeiles<f64>, opts: &OrbitOptions) -> Result<LyapunovTriple> {
    let energy = model.energy();
    let results: Vec<Result<PeriodicOrbit>> = (0..3)
        .into_par_iter()
        .map(|k| {
            let (guess, period) = lyapunov_guess(energy, k);
            find_periodic_orbit(model, &guess, period, opts)
        })
        .collect();
    let mut orbits = Vec::with_capacity(3);
    for (k, r) in results.into_iter().enumerate() {
        match r {
            Ok(o) if o.class == OrbitClass::Hyperbolic => orbits.push(o),
            Ok(o) => {
                return Err(ReebError::Numerical(format!(
                    "sector {k}: orbit found but classified {:?} (trace {})",
                    o.class, o.floquet.trace
                )))
            }
            Err(e) => return Err(ReebError::Numerical(format!("sector {k}: {e}"))),
        }
    }
    let spread = |f: &dyn Fn(&PeriodicOrbit) -> f64| {
        let v: Vec<f64> = orbits.iter().map(f).collect();
        v.iter().cloned().fold(f64::MIN, f64::max) - v.iter().cloned().fold(f64::MAX, f64::min)
    };
    let period_spread = spread(&|o| o.period);
    let action_spread = spread(&|o| o.action);
    let mut symmetry_error: f64 = 0.0;
    for k in 1..3 {
        symmetry_error = symmetry_error.max(rotation_mismatch(model, &orbits[0], &orbits[k as usize], k, opts)?);
    }
    Ok(LyapunovTriple {
        energy,
        orbits,
        period_spread,
        action_spread,
        symmetry_error,
    })
}

/// Pointwise distance between `other` and the rotation of `base` by `k · 2π/3`,
/// after shifting `other`'s start to the closest point.
pub fn rotation_mismatch(
    model: &HenonHeiles<f64>,
    base: &PeriodicOrbit,
    other: &PeriodicOrbit,
    k: i32,
    opts: &OrbitOptions,
) -> Result<f64> {
    let target = HenonHeiles::<f64>::rotate_state(&base.state, k);
    let traj = integrate(model, &other.state, 0.0, other.period, &opts.integrator)?;
    let dist2 = |t: f64| -> f64 {
        let s = traj.eval(t).unwrap_or_else(|| traj.end_state().to_vec());
        s.iter().zip(&target).map(|(a, b)| (a - b).powi(2)).sum()
    };
    let m = 512;
    let dt = other.period / m as f64;
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for i in 0..m {
        let d = dist2(i as f64 * dt);
        if d < best_d {
            best_d = d;
            best = i;
        }
    }
    // Golden-section refinement of the start-point shift.
    let (mut a, mut b) = ((best as f64 - 1.0) * dt, (best as f64 + 1.0) * dt);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..80 {
        let c = b - g * (b - a);
        let d = a + g * (b - a);
        if dist2(c.rem_euclid(other.period)) < dist2(d.rem_euclid(other.period)) {
            b = d;
        } else {
            a = c;
        }
    }
    let shift = (0.5 * (a + b)).rem_euclid(other.period);
    let start = traj.eval(shift).unwrap_or_else(|| other.state.clone());
    let period = 0.5 * (base.period + other.period);
    let p = integrate(model, &target, 0.0, period, &opts.integrator)?;
    let q = integrate(model, &start, 0.0, period, &opts.integrator)?;
    let mut worst: f64 = 0.0;
    for i in 0..=64 {
        let t = period * i as f64 / 64.0;
        let (u, v) = (p.eval(t).unwrap(), q.eval(t).unwrap());
        for (x, y) in u.iter().zip(&v) {
            worst = worst.max((x - y).abs());
        }
    }
    Ok(worst)
}

/// Largest distance of the orbit's position from its saddle-center.
pub fn orbit_amplitude(orbit: &PeriodicOrbit) -> f64 {
    let centers = HenonHeiles::<f64>::saddle_centers();
    let q0 = [orbit.state[0], orbit.state[1]];
    let c = centers
        .iter()
        .min_by(|a, b| {
            let da = (a[0] - q0[0]).hypot(a[1] - q0[1]);
            let db = (b[0] - q0[0]).hypot(b[1] - q0[1]);
            da.partial_cmp(&db).unwrap()
        })
        .unwrap();
    orbit
        .samples
        .iter()
        .map(|s| (s[0] - c[0]).hypot(s[1] - c[1]))
        .fold(0.0, f64::max)
}

/// Lyapunov orbit of sector 0 along a ladder of energies, with amplitudes.
pub fn energy_continuation(energies: &[f64], opts: &OrbitOptions) -> Result<Vec<(f64, PeriodicOrbit, f64)>> {
    energies
        .iter()
        .map(|&e| {
            let model = HenonHeiles::new(e)?;
            let (guess, period) = lyapunov_guess(e, 0);
            let orbit = find_periodic_orbit(&model, &guess, period, opts)?;
            let amp = orbit_amplitude(&orbit);
            Ok((e, orbit, amp))
        })
        .collect()
}

