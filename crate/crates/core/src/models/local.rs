//! Hyperbolic local model `t' = 1, x' = -u(xy) x, y' = u(xy) y`.

use serde::{Deserialize, Serialize};

use crate::error::{ReebError, Result};
use crate::models::{Flow, TransverseFrame};
use crate::scalar::Real;

/// Parameters of the local model: period, the series `u(w) = Σ c_k w^k` and
/// the radius of the disk on which the series is used.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalModelParams {
    pub period: f64,
    /// `u_series[0] = ln η > 0`, followed by `η₁, η₂, ...`.
    pub u_series: Vec<f64>,
    pub radius: f64,
    /// Bound on the truncated tail of the series over `|w| <= radius²`.
    #[serde(default = "default_tol_series")]
    pub tol_series: f64,
    #[serde(default)]
    pub tail_bound: f64,
}

fn default_tol_series() -> f64 {
    1e-12
}

impl LocalModelParams {
    pub fn constant(period: f64, rate: f64, radius: f64) -> Self {
        Self {
            period,
            u_series: vec![rate],
            radius,
            tol_series: default_tol_series(),
            tail_bound: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.period > 0.0) {
            return Err(ReebError::InvalidParameter("period must be positive".into()));
        }
        match self.u_series.first() {
            Some(&c) if c > 0.0 => {}
            _ => {
                return Err(ReebError::InvalidParameter(
                    "u_series[0] = ln η must be positive (η > 1)".into(),
                ))
            }
        }
        if !(self.radius > 0.0) {
            return Err(ReebError::InvalidParameter("radius must be positive".into()));
        }
        if self.tail_bound > self.tol_series {
            return Err(ReebError::InvalidParameter(format!(
                "series tail bound {:e} exceeds tolerance {:e}",
                self.tail_bound, self.tol_series
            )));
        }
        Ok(())
    }

    /// `u(w)` evaluated with Horner's rule.
    pub fn u(&self, w: f64) -> f64 {
        horner(&self.u_series, w)
    }

    pub fn u_prime(&self, w: f64) -> f64 {
        horner_derivative(&self.u_series, w)
    }
}

pub(crate) fn horner<R: Real>(coeffs: &[R], w: R) -> R {
    coeffs.iter().rev().fold(R::zero(), |acc, &c| acc * w + c)
}

pub(crate) fn horner_derivative<R: Real>(coeffs: &[R], w: R) -> R {
    let mut acc = R::zero();
    for (k, &c) in coeffs.iter().enumerate().skip(1).rev() {
        acc = acc * w + c * R::from_usize(k).unwrap();
    }
    acc
}

/// State `(t, x, y)` with `t` on the circle `R / T Z`.
#[derive(Debug, Clone)]
pub struct LocalModel<R> {
    period: R,
    u_series: Vec<R>,
    radius: R,
}

impl<R: Real> LocalModel<R> {
    pub fn new(params: &LocalModelParams) -> Result<Self> {
        params.validate()?;
        Ok(Self {
            period: R::lit(params.period),
            u_series: params.u_series.iter().map(|&c| R::lit(c)).collect(),
            radius: R::lit(params.radius),
        })
    }

    pub fn period(&self) -> R {
        self.period
    }

    pub fn radius(&self) -> R {
        self.radius
    }

    pub fn u(&self, w: R) -> R {
        horner(&self.u_series, w)
    }

    /// Closed-form flow: `xy` is constant so `u` is frozen along trajectories.
    pub fn exact_flow(&self, z: &[R], s: R) -> Vec<R> {
        let rate = self.u(z[1] * z[2]);
        vec![z[0] + s, z[1] * (-rate * s).exp(), z[2] * (rate * s).exp()]
    }
}

impl<R: Real> Flow<R> for LocalModel<R> {
    fn name(&self) -> &str {
        "local-model"
    }

    fn dim(&self) -> usize {
        3
    }

    fn field(&self, z: &[R], out: &mut [R]) {
        let rate = self.u(z[1] * z[2]);
        out[0] = R::one();
        out[1] = -rate * z[1];
        out[2] = rate * z[2];
    }

    fn jacobian(&self, z: &[R], out: &mut [R]) {
        let (x, y) = (z[1], z[2]);
        let rate = self.u(x * y);
        let d = horner_derivative(&self.u_series, x * y);
        out.iter_mut().for_each(|v| *v = R::zero());
        out[3 + 1] = -rate - d * x * y;
        out[3 + 2] = -d * x * x;
        out[6 + 1] = d * y * y;
        out[6 + 2] = rate + d * x * y;
    }

    fn conserved(&self, z: &[R]) -> Vec<R> {
        vec![z[1] * z[2]]
    }

    fn conserved_names(&self) -> Vec<&'static str> {
        vec!["xy"]
    }

    fn frame(&self, _z: &[R]) -> Option<TransverseFrame<R>> {
        Some(TransverseFrame {
            e1: vec![R::zero(), R::one(), R::zero()],
            e2: vec![R::zero(), R::zero(), R::one()],
            complement: Vec::new(),
        })
    }

    fn frame_id(&self) -> &'static str {
        "xy-axes"
    }

    fn periodic_coords(&self) -> Vec<(usize, R)> {
        vec![(0, self.period)]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_expanding_series() {
        let mut p = LocalModelParams::constant(1.0, 1.0, 0.5);
        p.u_series[0] = 0.0;
        assert!(LocalModel::<f64>::new(&p).is_err());
        p.u_series[0] = 0.3;
        p.tail_bound = 1.0;
        assert!(LocalModel::<f64>::new(&p).is_err());
    }

    #[test]
    fn horner_derivative_matches_difference_quotient() {
        let c = [0.7f64, -0.2, 0.5, 0.1];
        let w = 0.31;
        let h = 1e-6;
        let fd = (horner(&c, w + h) - horner(&c, w - h)) / (2.0 * h);
        assert!((horner_derivative(&c, w) - fd).abs() < 1e-9);
    }
}
