//! Dormand–Prince 5(4) with continuous extension of order 4.

use crate::error::{ReebError, Result};
use crate::flowcore::trajectory::{DenseStep, Trajectory};
use crate::scalar::Real;

/// Step-size control and bookkeeping options.
#[derive(Debug, Clone, Copy)]
pub struct IntegratorOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Largest allowed step (also the largest gap between stored samples).
    pub h_max: f64,
    pub h_min: f64,
    pub max_steps: usize,
    /// States with a component above this magnitude count as leaving the domain.
    pub max_norm: f64,
}

impl Default for IntegratorOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-12,
            atol: 1e-12,
            h_max: 0.1,
            h_min: 1e-14,
            max_steps: 2_000_000,
            max_norm: 1e8,
        }
    }
}

impl IntegratorOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self {
            rtol: tol,
            atol: tol,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rtol > 0.0 && self.atol > 0.0) {
            return Err(ReebError::InvalidParameter("tolerances must be positive".into()));
        }
        if !(self.h_max > 0.0) || !(self.h_min >= 0.0) {
            return Err(ReebError::InvalidParameter("invalid step bounds".into()));
        }
        Ok(())
    }
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// Outcome of a stop test evaluated after each accepted step.
pub enum StepControl<R> {
    Continue,
    /// Stop at the given time inside the last step, which is truncated there.
    StopAt(R),
}

/// Integrates `y' = rhs(t, y)` from `t0` to `t1` (either direction).
pub fn solve<R, F>(rhs: F, y0: &[R], t0: R, t1: R, opts: &IntegratorOptions) -> Result<Trajectory<R>>
where
    R: Real,
    F: FnMut(R, &[R], &mut [R]),
{
    solve_with(rhs, y0, t0, t1, opts, |_: &DenseStep<R>| StepControl::Continue)
}

/// Like [`solve`], calling `monitor` after every accepted step; the monitor
/// may end the integration early.
pub fn solve_with<R, F, M>(
    mut rhs: F,
    y0: &[R],
    t0: R,
    t1: R,
    opts: &IntegratorOptions,
    mut monitor: M,
) -> Result<Trajectory<R>>
where
    R: Real,
    F: FnMut(R, &[R], &mut [R]),
    M: FnMut(&DenseStep<R>) -> StepControl<R>,
{
    opts.validate()?;
    let n = y0.len();
    let mut traj = Trajectory::new(t0, y0.to_vec());
    if t1 == t0 {
        return Ok(traj);
    }
    let dir = if t1 > t0 { R::one() } else { -R::one() };
    let rtol = R::lit(opts.rtol);
    let atol = R::lit(opts.atol);
    let h_max = R::lit(opts.h_max);
    let h_min = R::lit(opts.h_min);
    let max_norm = R::lit(opts.max_norm);
    let span = (t1 - t0).abs();

    let mut k = vec![vec![R::zero(); n]; 7];
    let mut y = y0.to_vec();
    let mut ytmp = vec![R::zero(); n];
    let mut ynew = vec![R::zero(); n];
    let mut t = t0;
    rhs(t, &y, &mut k[0]);

    let mut h = initial_step(&mut rhs, t, &y, &k[0], dir, rtol, atol).min(h_max).min(span);
    let mut rejected = false;
    let mut steps = 0usize;

    loop {
        if steps >= opts.max_steps {
            return Err(ReebError::Numerical(format!(
                "step budget {} exhausted at t = {}",
                opts.max_steps,
                t.to_f64_lossy()
            )));
        }
        let remaining = (t1 - t).abs();
        let mut last = false;
        if h >= remaining * R::lit(1.0 - 1e-12) {
            h = remaining;
            last = true;
        }
        if h < h_min {
            return Err(ReebError::StepUnderflow {
                t: t.to_f64_lossy(),
                h: h.to_f64_lossy(),
            });
        }
        let hs = h * dir;
        steps += 1;

        stage(&y, hs, &k, &[A21], &mut ytmp);
        eval_into(&mut rhs, &mut k, 1, t + R::lit(C2) * hs, &ytmp);
        stage(&y, hs, &k, &[A31, A32], &mut ytmp);
        eval_into(&mut rhs, &mut k, 2, t + R::lit(C3) * hs, &ytmp);
        stage(&y, hs, &k, &[A41, A42, A43], &mut ytmp);
        eval_into(&mut rhs, &mut k, 3, t + R::lit(C4) * hs, &ytmp);
        stage(&y, hs, &k, &[A51, A52, A53, A54], &mut ytmp);
        eval_into(&mut rhs, &mut k, 4, t + R::lit(C5) * hs, &ytmp);
        stage(&y, hs, &k, &[A61, A62, A63, A64, A65], &mut ytmp);
        eval_into(&mut rhs, &mut k, 5, t + hs, &ytmp);
        stage(&y, hs, &k, &[A71, 0.0, A73, A74, A75, A76], &mut ynew);
        eval_into(&mut rhs, &mut k, 6, t + hs, &ynew);

        let mut err = R::zero();
        let mut finite = true;
        for i in 0..n {
            let e = hs
                * (R::lit(E1) * k[0][i]
                    + R::lit(E3) * k[2][i]
                    + R::lit(E4) * k[3][i]
                    + R::lit(E5) * k[4][i]
                    + R::lit(E6) * k[5][i]
                    + R::lit(E7) * k[6][i]);
            let sk = atol + rtol * y[i].abs().max(ynew[i].abs());
            let q = e / sk;
            err = err + q * q;
            if !ynew[i].is_finite() {
                finite = false;
            }
        }
        err = (err / R::from_usize(n).unwrap()).sqrt();
        if !finite {
            err = R::lit(1e10);
        }

        if err <= R::one() {
            let mut d = vec![vec![R::zero(); n]; 5];
            for i in 0..n {
                let dy = ynew[i] - y[i];
                let bspl = hs * k[0][i] - dy;
                d[0][i] = y[i];
                d[1][i] = dy;
                d[2][i] = bspl;
                d[3][i] = dy - hs * k[6][i] - bspl;
                d[4][i] = hs
                    * (R::lit(D1) * k[0][i]
                        + R::lit(D3) * k[2][i]
                        + R::lit(D4) * k[3][i]
                        + R::lit(D5) * k[4][i]
                        + R::lit(D6) * k[5][i]
                        + R::lit(D7) * k[6][i]);
            }
            let t_new = if last { t1 } else { t + hs };
            let step = DenseStep {
                t0: t,
                t1: t_new,
                coeffs: d,
            };
            if ynew.iter().any(|v| v.abs() > max_norm) {
                return Err(ReebError::DomainExit { t: t_new.to_f64_lossy() });
            }
            match monitor(&step) {
                StepControl::Continue => {
                    traj.push_step(step, ynew.clone(), k[6].clone());
                }
                StepControl::StopAt(ts) => {
                    let ys = step.eval(ts);
                    let mut fs = vec![R::zero(); n];
                    rhs(ts, &ys, &mut fs);
                    traj.push_truncated(step, ts, ys, fs);
                    return Ok(traj);
                }
            }
            if last {
                return Ok(traj);
            }
            y.copy_from_slice(&ynew);
            let k7 = k[6].clone();
            k[0].copy_from_slice(&k7);
            t = t_new;
            let mut fac = R::lit(0.9) * err.powf(R::lit(-0.2));
            fac = fac.min(R::lit(if rejected { 1.0 } else { 5.0 })).max(R::lit(0.2));
            h = (h * fac).min(h_max);
            rejected = false;
        } else {
            let fac = (R::lit(0.9) * err.powf(R::lit(-0.2))).max(R::lit(0.1));
            h = h * fac;
            rejected = true;
        }
    }
}

fn stage<R: Real>(y: &[R], hs: R, k: &[Vec<R>], a: &[f64], out: &mut [R]) {
    for i in 0..y.len() {
        let mut acc = R::zero();
        for (j, &aj) in a.iter().enumerate() {
            if aj != 0.0 {
                acc = acc + R::lit(aj) * k[j][i];
            }
        }
        out[i] = y[i] + hs * acc;
    }
}

fn eval_into<R: Real, F: FnMut(R, &[R], &mut [R])>(
    rhs: &mut F,
    k: &mut [Vec<R>],
    idx: usize,
    t: R,
    y: &[R],
) {
    let mut buf = std::mem::take(&mut k[idx]);
    rhs(t, y, &mut buf);
    k[idx] = buf;
}

fn initial_step<R: Real, F: FnMut(R, &[R], &mut [R])>(
    rhs: &mut F,
    t: R,
    y: &[R],
    f0: &[R],
    dir: R,
    rtol: R,
    atol: R,
) -> R {
    let n = R::from_usize(y.len()).unwrap();
    let mut d0 = R::zero();
    let mut d1 = R::zero();
    for i in 0..y.len() {
        let sk = atol + rtol * y[i].abs();
        d0 = d0 + (y[i] / sk).powi(2);
        d1 = d1 + (f0[i] / sk).powi(2);
    }
    d0 = (d0 / n).sqrt();
    d1 = (d1 / n).sqrt();
    let mut h0 = if d0 < R::lit(1e-5) || d1 < R::lit(1e-5) {
        R::lit(1e-6)
    } else {
        R::lit(0.01) * d0 / d1
    };
    h0 = h0.min(R::one());
    let y1: Vec<R> = y.iter().zip(f0).map(|(&a, &b)| a + dir * h0 * b).collect();
    let mut f1 = vec![R::zero(); y.len()];
    rhs(t + dir * h0, &y1, &mut f1);
    let mut d2 = R::zero();
    for i in 0..y.len() {
        let sk = atol + rtol * y[i].abs();
        d2 = d2 + ((f1[i] - f0[i]) / sk).powi(2);
    }
    d2 = (d2 / n).sqrt() / h0;
    let h1 = if d1.max(d2) <= R::lit(1e-15) {
        (h0 * R::lit(1e-3)).max(R::lit(1e-6))
    } else {
        (R::lit(0.01) / d1.max(d2)).powf(R::lit(0.2))
    };
    (R::lit(100.0) * h0).min(h1)
}
