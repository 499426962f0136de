use crate::error::Result;
use crate::flowcore::dopri::{solve, IntegratorOptions};
use crate::flowcore::trajectory::Trajectory;
use crate::models::Flow;
use crate::scalar::Real;

/// Trajectory of the state together with the fundamental solution `Φ(t)`
/// of the linearized flow, `Φ(t0) = I`.
#[derive(Debug, Clone)]
pub struct VariationalTrajectory<R> {
    pub dim: usize,
    /// Augmented samples `(z, Φ)` with `Φ` stored row-major.
    pub augmented: Trajectory<R>,
}

impl<R: Real> VariationalTrajectory<R> {
    fn split(&self, y: &[R]) -> (Vec<R>, Vec<R>) {
        (y[..self.dim].to_vec(), y[self.dim..].to_vec())
    }

    pub fn len(&self) -> usize {
        self.augmented.len()
    }

    pub fn is_empty(&self) -> bool {
        self.augmented.is_empty()
    }

    pub fn times(&self) -> &[R] {
        &self.augmented.times
    }

    pub fn state(&self, i: usize) -> Vec<R> {
        self.augmented.states[i][..self.dim].to_vec()
    }

    pub fn matrix(&self, i: usize) -> Vec<R> {
        self.augmented.states[i][self.dim..].to_vec()
    }

    /// State and row-major `Φ` at an arbitrary time in the span.
    pub fn eval(&self, t: R) -> Option<(Vec<R>, Vec<R>)> {
        self.augmented.eval(t).map(|y| self.split(&y))
    }

    /// `Φ` at the end of the span.
    pub fn monodromy(&self) -> Vec<R> {
        self.matrix(self.len() - 1)
    }

    pub fn end_state(&self) -> Vec<R> {
        self.state(self.len() - 1)
    }

    /// The base trajectory alone, resampled from the augmented one.
    pub fn base(&self) -> Trajectory<R> {
        let mut t = self.augmented.clone();
        for s in t.states.iter_mut() {
            s.truncate(self.dim);
        }
        t
    }
}

/// Integrates the flow together with `Φ' = Df(z) Φ`.
pub fn integrate_variational<R: Real, F: Flow<R> + ?Sized>(
    flow: &F,
    z0: &[R],
    t0: R,
    t1: R,
    opts: &IntegratorOptions,
) -> Result<VariationalTrajectory<R>> {
    let n = flow.dim();
    let mut y0 = z0.to_vec();
    for i in 0..n {
        for j in 0..n {
            y0.push(if i == j { R::one() } else { R::zero() });
        }
    }
    let mut jac = vec![R::zero(); n * n];
    let rhs = |_t: R, y: &[R], out: &mut [R]| {
        flow.field(&y[..n], &mut out[..n]);
        flow.jacobian(&y[..n], &mut jac);
        let phi = &y[n..];
        for i in 0..n {
            for j in 0..n {
                let mut acc = R::zero();
                for k in 0..n {
                    acc = acc + jac[i * n + k] * phi[k * n + j];
                }
                out[n + i * n + j] = acc;
            }
        }
    };
    let mut augmented = solve(rhs, &y0, t0, t1, opts)?;
    augmented.model = flow.name().to_string();
    Ok(VariationalTrajectory { dim: n, augmented })
}

/// `‖ΦᵀJΦ − J‖_max` for a canonical state `(q, p)` of even dimension.
pub fn symplectic_defect(phi: &[f64], dim: usize) -> f64 {
    let half = dim / 2;
    let j = |a: usize, b: usize| -> f64 {
        if a < half && b == a + half {
            1.0
        } else if a >= half && b + half == a {
            -1.0
        } else {
            0.0
        }
    };
    let mut worst: f64 = 0.0;
    for a in 0..dim {
        for b in 0..dim {
            let mut acc = 0.0;
            for k in 0..dim {
                for l in 0..dim {
                    acc += phi[k * dim + a] * j(k, l) * phi[l * dim + b];
                }
            }
            worst = worst.max((acc - j(a, b)).abs());
        }
    }
    worst
}
