use serde::{Deserialize, Serialize};

use crate::error::{ReebError, Result};
use crate::flowcore::{integrate_variational, IntegratorOptions, VariationalTrajectory};
use crate::linalg::{eig2, inverse, lstsq, matmul};
use crate::models::Flow;
use crate::scalar::norm;

#[derive(Debug, Clone, Copy)]
pub struct OrbitOptions {
    pub integrator: IntegratorOptions,
    pub tol_closure: f64,
    pub tol_floq: f64,
    pub max_iterations: usize,
    /// Field norm below which the solver reports convergence to an equilibrium.
    pub tol_equilibrium: f64,
    /// Largest Newton correction relative to the state scale.
    pub max_step: f64,
    /// Number of stored samples along the converged orbit.
    pub samples: usize,
}

impl Default for OrbitOptions {
    fn default() -> Self {
        Self {
            integrator: IntegratorOptions::with_tol(1e-12),
            tol_closure: 1e-10,
            tol_floq: 1e-6,
            max_iterations: 40,
            tol_equilibrium: 1e-8,
            max_step: 0.1,
            samples: 256,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OrbitClass {
    Elliptic,
    Hyperbolic,
    /// Transverse multipliers on the unit circle at `±1` within tolerance.
    Parabolic,
}

/// Transverse linearized return data over one period.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Floquet {
    /// Transverse monodromy in the model frame (2x2, row-major).
    pub monodromy: [[f64; 2]; 2],
    /// Multipliers as `(re, im)`, ordered by modulus.
    pub multipliers: [(f64, f64); 2],
    pub trace: f64,
    pub determinant: f64,
    /// A multiplier lies within `tol_floq` of 1.
    pub degenerate: bool,
}

impl Floquet {
    pub fn from_monodromy(m: [[f64; 2]; 2], tol_floq: f64) -> Self {
        let multipliers = eig2(m);
        let degenerate = multipliers
            .iter()
            .any(|&(re, im)| ((re - 1.0).powi(2) + im * im).sqrt() < tol_floq);
        Self {
            monodromy: m,
            multipliers,
            trace: m[0][0] + m[1][1],
            determinant: m[0][0] * m[1][1] - m[0][1] * m[1][0],
            degenerate,
        }
    }

    pub fn classify(&self, tol_floq: f64) -> OrbitClass {
        let t = self.trace.abs();
        if t > 2.0 + tol_floq {
            OrbitClass::Hyperbolic
        } else if t < 2.0 - tol_floq {
            OrbitClass::Elliptic
        } else {
            OrbitClass::Parabolic
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodicOrbit {
    pub model: String,
    pub frame: String,
    pub state: Vec<f64>,
    pub period: f64,
    /// `∮ p·dq` for mechanical models, the period otherwise.
    pub action: f64,
    pub floquet: Floquet,
    pub class: OrbitClass,
    pub closure_residual: f64,
    pub newton_iterations: usize,
    /// Equally spaced samples over one period, starting at `state`.
    pub samples: Vec<Vec<f64>>,
}

impl PeriodicOrbit {
    pub fn is_hyperbolic(&self) -> bool {
        self.class == OrbitClass::Hyperbolic
    }

    /// Unstable multiplier (largest modulus).
    pub fn unstable_multiplier(&self) -> f64 {
        self.floquet.multipliers[1].0
    }
}

/// Difference `a - b` with periodic coordinates wrapped to the nearest representative.
pub(crate) fn wrapped_difference(a: &[f64], b: &[f64], periodic: &[(usize, f64)]) -> Vec<f64> {
    let mut d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    for &(i, p) in periodic {
        d[i] -= p * (d[i] / p).round();
    }
    d
}

fn numeric_gradient<F: Flow<f64> + ?Sized>(flow: &F, z: &[f64], which: usize) -> Vec<f64> {
    (0..z.len())
        .map(|j| {
            let h = 1e-6 * (1.0 + z[j].abs());
            let mut zp = z.to_vec();
            let mut zm = z.to_vec();
            zp[j] += h;
            zm[j] -= h;
            (flow.conserved(&zp)[which] - flow.conserved(&zm)[which]) / (2.0 * h)
        })
        .collect()
}

/// Shooting with the period as unknown, the phase condition
/// `<f(z), Δz> = 0` and one row per prescribed conserved quantity.
pub fn find_periodic_orbit<F: Flow<f64> + ?Sized>(
    flow: &F,
    guess: &[f64],
    guess_period: f64,
    opts: &OrbitOptions,
) -> Result<PeriodicOrbit> {
    let n = flow.dim();
    if guess.len() != n {
        return Err(ReebError::InvalidParameter(format!(
            "guess has {} components, model dimension is {n}",
            guess.len()
        )));
    }
    if !(guess_period > 0.0) {
        return Err(ReebError::InvalidParameter("guess period must be positive".into()));
    }
    let periodic = flow.periodic_coords();
    let targets = flow.conserved_targets().unwrap_or_default();
    let mut z = guess.to_vec();
    let mut period = guess_period;
    let mut residual = f64::INFINITY;

    for iteration in 0..opts.max_iterations {
        let var = integrate_variational(flow, &z, 0.0, period, &opts.integrator)?;
        let end = var.end_state();
        let r = wrapped_difference(&end, &z, &periodic);
        let level: Vec<f64> = targets
            .iter()
            .enumerate()
            .map(|(i, &c)| flow.conserved(&z)[i] - c)
            .collect();
        residual = norm(&r).max(level.iter().fold(0.0, |m: f64, v| m.max(v.abs())));
        let field_norm = norm(&flow.field_vec(&z));
        if field_norm < opts.tol_equilibrium {
            return Err(ReebError::Equilibrium { field_norm });
        }
        if residual < opts.tol_closure {
            return finish(flow, z, period, var, residual, iteration, opts);
        }

        let phi = var.monodromy();
        let f_end = flow.field_vec(&end);
        let f0 = flow.field_vec(&z);
        let rows = n + 1 + targets.len();
        let cols = n + 1;
        let mut a = vec![0.0; rows * cols];
        let mut b = vec![0.0; rows];
        for i in 0..n {
            for j in 0..n {
                a[i * cols + j] = phi[i * n + j] - if i == j { 1.0 } else { 0.0 };
            }
            a[i * cols + n] = f_end[i];
            b[i] = -r[i];
        }
        for j in 0..n {
            a[n * cols + j] = f0[j];
        }
        for (k, lv) in level.iter().enumerate() {
            let g = numeric_gradient(flow, &z, k);
            let row = n + 1 + k;
            a[row * cols..row * cols + n].copy_from_slice(&g);
            b[row] = -lv;
        }
        let step = lstsq(&a, rows, cols, &b)?;
        let scale = 1.0 + norm(&z);
        let size = norm(&step[..n]);
        let damp = if size > opts.max_step * scale {
            opts.max_step * scale / size
        } else {
            1.0
        };
        for j in 0..n {
            z[j] += damp * step[j];
        }
        period += damp * step[n];
        if !(period > 0.0) || !period.is_finite() {
            return Err(ReebError::NewtonDivergence {
                iterations: iteration + 1,
                residual,
            });
        }
    }
    Err(ReebError::NewtonDivergence {
        iterations: opts.max_iterations,
        residual,
    })
}

fn finish<F: Flow<f64> + ?Sized>(
    flow: &F,
    z: Vec<f64>,
    period: f64,
    var: VariationalTrajectory<f64>,
    residual: f64,
    iterations: usize,
    opts: &OrbitOptions,
) -> Result<PeriodicOrbit> {
    let m = transverse_monodromy(flow, &z, &var.monodromy())?;
    let floquet = Floquet::from_monodromy(m, opts.tol_floq);
    let class = floquet.classify(opts.tol_floq);
    let count = opts.samples.max(8);
    let samples: Vec<Vec<f64>> = (0..count)
        .map(|k| {
            let t = period * k as f64 / count as f64;
            var.eval(t).map(|(s, _)| s).unwrap_or_else(|| z.clone())
        })
        .collect();
    let action = match flow.canonical_dof() {
        Some(d) => {
            let q = 2048;
            let base = var.base();
            (0..q)
                .map(|k| {
                    let t = period * k as f64 / q as f64;
                    let s = base.eval(t).unwrap_or_else(|| z.clone());
                    let f = flow.field_vec(&s);
                    (0..d).map(|i| s[d + i] * f[i]).sum::<f64>()
                })
                .sum::<f64>()
                * period
                / q as f64
        }
        None => period,
    };
    Ok(PeriodicOrbit {
        model: flow.name().to_string(),
        frame: flow.frame_id().to_string(),
        state: z,
        period,
        action,
        floquet,
        class,
        closure_residual: residual,
        newton_iterations: iterations,
        samples,
    })
}

/// Basis `[f, e1, e2, complement...]` at `z` as a row-major matrix with
/// these vectors as columns.
pub(crate) fn frame_basis<F: Flow<f64> + ?Sized>(flow: &F, z: &[f64]) -> Result<Vec<f64>> {
    let n = flow.dim();
    let fr = flow
        .frame(z)
        .ok_or_else(|| ReebError::Numerical("model declares no transverse frame here".into()))?;
    let f = flow.field_vec(z);
    let mut cols = vec![f, fr.e1, fr.e2];
    cols.extend(fr.complement);
    if cols.len() != n {
        return Err(ReebError::Numerical(format!(
            "frame provides {} of {n} basis vectors",
            cols.len()
        )));
    }
    let mut b = vec![0.0; n * n];
    for (j, c) in cols.iter().enumerate() {
        for i in 0..n {
            b[i * n + j] = c[i];
        }
    }
    Ok(b)
}

/// The `(e1, e2)` block of `B⁻¹ Φ B` for the frame basis `B` at a periodic point.
pub fn transverse_monodromy<F: Flow<f64> + ?Sized>(
    flow: &F,
    z: &[f64],
    phi: &[f64],
) -> Result<[[f64; 2]; 2]> {
    let n = flow.dim();
    if flow.frame(z).is_none() {
        return nontrivial_block(phi, n);
    }
    let b = frame_basis(flow, z)?;
    let binv = inverse(&b, n)?;
    let m = matmul(&binv, &matmul(phi, &b, n, n, n), n, n, n);
    Ok([[m[n + 1], m[n + 2]], [m[2 * n + 1], m[2 * n + 2]]])
}

/// Without a frame: a 2x2 matrix with the two multipliers of `Φ` farthest from 1.
fn nontrivial_block(phi: &[f64], n: usize) -> Result<[[f64; 2]; 2]> {
    let m = nalgebra::DMatrix::from_row_slice(n, n, phi);
    let mut ev: Vec<(f64, f64)> = m
        .complex_eigenvalues()
        .iter()
        .map(|c| (c.re, c.im))
        .collect();
    if ev.len() < 2 {
        return Err(ReebError::Numerical("monodromy too small".into()));
    }
    ev.sort_by(|a, b| {
        let da = (a.0 - 1.0).hypot(a.1);
        let db = (b.0 - 1.0).hypot(b.1);
        db.partial_cmp(&da).unwrap()
    });
    let (a, b) = (ev[0], ev[1]);
    if a.1.abs() > 0.0 {
        // Complex pair: rotation-scaling block with the same eigenvalues.
        Ok([[a.0, -a.1.abs()], [a.1.abs(), a.0]])
    } else {
        Ok([[a.0, 0.0], [0.0, b.0]])
    }
}
