use serde::Serialize;

use crate::scalar::Real;

/// One accepted step with its continuous extension.
#[derive(Debug, Clone)]
pub struct DenseStep<R> {
    pub t0: R,
    pub t1: R,
    pub(crate) coeffs: Vec<Vec<R>>,
}

impl<R: Real> DenseStep<R> {
    /// State at `t` in `[t0, t1]` (or slightly outside, by extrapolation).
    pub fn eval(&self, t: R) -> Vec<R> {
        let h = self.t1 - self.t0;
        let s = if h == R::zero() { R::zero() } else { (t - self.t0) / h };
        let s1 = R::one() - s;
        let c = &self.coeffs;
        (0..c[0].len())
            .map(|i| c[0][i] + s * (c[1][i] + s1 * (c[2][i] + s * (c[3][i] + s1 * c[4][i]))))
            .collect()
    }

    pub fn start_state(&self) -> &[R] {
        &self.coeffs[0]
    }

    pub fn end_state(&self) -> Vec<R> {
        self.coeffs[0]
            .iter()
            .zip(&self.coeffs[1])
            .map(|(&a, &b)| a + b)
            .collect()
    }

    pub fn contains(&self, t: R) -> bool {
        let (lo, hi) = if self.t0 <= self.t1 {
            (self.t0, self.t1)
        } else {
            (self.t1, self.t0)
        };
        t >= lo && t <= hi
    }
}

/// Samples of an integrated trajectory in integration order, with the
/// continuous extension of every step.
#[derive(Debug, Clone)]
pub struct Trajectory<R> {
    pub times: Vec<R>,
    pub states: Vec<Vec<R>>,
    steps: Vec<DenseStep<R>>,
    /// Interpolant order of the continuous extension.
    pub order: usize,
    pub model: String,
}

impl<R: Real> Trajectory<R> {
    pub(crate) fn new(t0: R, y0: Vec<R>) -> Self {
        Self {
            times: vec![t0],
            states: vec![y0],
            steps: Vec::new(),
            order: 4,
            model: String::new(),
        }
    }

    pub(crate) fn push_step(&mut self, step: DenseStep<R>, y: Vec<R>, _f: Vec<R>) {
        self.times.push(step.t1);
        self.states.push(y);
        self.steps.push(step);
    }

    /// The step keeps its full interpolant; only the recorded end time moves.
    pub(crate) fn push_truncated(&mut self, step: DenseStep<R>, t: R, y: Vec<R>, _f: Vec<R>) {
        self.times.push(t);
        self.states.push(y);
        self.steps.push(step);
    }

    pub fn t_start(&self) -> R {
        self.times[0]
    }

    pub fn t_end(&self) -> R {
        *self.times.last().unwrap()
    }

    pub fn end_state(&self) -> &[R] {
        self.states.last().unwrap()
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn steps(&self) -> &[DenseStep<R>] {
        &self.steps
    }

    /// Dense-output state at time `t` within the integrated span.
    pub fn eval(&self, t: R) -> Option<Vec<R>> {
        if self.steps.is_empty() {
            return (t == self.times[0]).then(|| self.states[0].clone());
        }
        let forward = self.t_end() >= self.t_start();
        let idx = self.times[1..].partition_point(|&s| if forward { s < t } else { s > t });
        let idx = idx.min(self.steps.len() - 1);
        let step = &self.steps[idx];
        let (lo, hi) = if forward {
            (self.times[idx], self.times[idx + 1])
        } else {
            (self.times[idx + 1], self.times[idx])
        };
        let slack = R::lit(1e-12) * (R::one() + t.abs());
        if t < lo - slack || t > hi + slack {
            return None;
        }
        Some(step.eval(t))
    }

    /// Resamples the trajectory at `count` equally spaced times including both ends.
    pub fn resample(&self, count: usize) -> Vec<(R, Vec<R>)> {
        let t0 = self.t_start();
        let t1 = self.t_end();
        let m = R::from_usize(count.max(2) - 1).unwrap();
        (0..count.max(2))
            .map(|i| {
                let t = t0 + (t1 - t0) * R::from_usize(i).unwrap() / m;
                let y = self.eval(t).unwrap_or_else(|| self.end_state().to_vec());
                (t, y)
            })
            .collect()
    }

    /// Largest gap between consecutive stored samples.
    pub fn max_gap(&self) -> R {
        self.times
            .windows(2)
            .map(|w| (w[1] - w[0]).abs())
            .fold(R::zero(), R::max)
    }

    /// CSV text with header `t,z0,z1,...`.
    pub fn to_csv(&self) -> String {
        let dim = self.states[0].len();
        let mut out = String::from("t");
        for i in 0..dim {
            out.push_str(&format!(",z{i}"));
        }
        out.push('\n');
        for (t, y) in self.times.iter().zip(&self.states) {
            out.push_str(&format!("{:.17e}", t.to_f64_lossy()));
            for v in y {
                out.push_str(&format!(",{:.17e}", v.to_f64_lossy()));
            }
            out.push('\n');
        }
        out
    }
}

/// Serializable summary of a trajectory.
#[derive(Debug, Clone, Serialize)]
pub struct TrajectoryRecord {
    pub model: String,
    pub order: usize,
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
}

impl<R: Real> From<&Trajectory<R>> for TrajectoryRecord {
    fn from(t: &Trajectory<R>) -> Self {
        Self {
            model: t.model.clone(),
            order: t.order,
            times: t.times.iter().map(|v| v.to_f64_lossy()).collect(),
            states: t
                .states
                .iter()
                .map(|s| s.iter().map(|v| v.to_f64_lossy()).collect())
                .collect(),
        }
    }
}
