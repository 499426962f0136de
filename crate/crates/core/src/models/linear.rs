//! Linear model Reeb flows along the circle `x = y = 0`, used as oracles for
//! index computations.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::models::{Flow, TransverseFrame};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum LinearKind {
    /// Rotation of the transverse plane by `2πθ` per period.
    Elliptic { theta: f64 },
    /// Hyperbolic with rate `rate`, eigendirections turning `turns` times per period.
    Hyperbolic { turns: u32, rate: f64 },
}

/// State `(t, x, y)`; the transverse part obeys `w' = J₀ S(t) w` with `J₀` the
/// counter-clockwise quarter turn.
#[derive(Debug, Clone)]
pub struct LinearReebModel<R> {
    kind: LinearKind,
    period: R,
}

impl<R: Real> LinearReebModel<R> {
    pub fn new(kind: LinearKind, period: R) -> Self {
        Self { kind, period }
    }

    pub fn kind(&self) -> LinearKind {
        self.kind
    }

    pub fn period(&self) -> R {
        self.period
    }

    /// The 2x2 generator `J₀ S(t)`.
    pub fn generator(&self, t: R) -> [[R; 2]; 2] {
        let two_pi = R::lit(2.0 * PI);
        match self.kind {
            LinearKind::Elliptic { theta } => {
                let w = two_pi * R::lit(theta) / self.period;
                [[R::zero(), -w], [w, R::zero()]]
            }
            LinearKind::Hyperbolic { turns, rate } => {
                let omega = two_pi * R::lit(turns as f64) / self.period;
                let a = R::lit(rate);
                let (s2, c2) = (R::lit(2.0) * omega * t).sin_cos();
                // ω J₀ + R(ωt) diag(-a, a) R(ωt)ᵀ
                [[-a * c2, -a * s2 - omega], [-a * s2 + omega, a * c2]]
            }
        }
    }

    fn generator_dt(&self, t: R) -> [[R; 2]; 2] {
        match self.kind {
            LinearKind::Elliptic { .. } => [[R::zero(); 2]; 2],
            LinearKind::Hyperbolic { turns, rate } => {
                let omega = R::lit(2.0 * PI * turns as f64) / self.period;
                let a = R::lit(rate);
                let two_omega = omega + omega;
                let (s2, c2) = (two_omega * t).sin_cos();
                [[a * two_omega * s2, -a * two_omega * c2], [-a * two_omega * c2, -a * two_omega * s2]]
            }
        }
    }

    /// Closed-form transverse monodromy over one period.
    pub fn monodromy(&self) -> [[R; 2]; 2] {
        match self.kind {
            LinearKind::Elliptic { theta } => {
                let (s, c) = R::lit(2.0 * PI * theta).sin_cos();
                [[c, -s], [s, c]]
            }
            LinearKind::Hyperbolic { rate, .. } => {
                let e = (R::lit(rate) * self.period).exp();
                [[R::one() / e, R::zero()], [R::zero(), e]]
            }
        }
    }
}

impl<R: Real> Flow<R> for LinearReebModel<R> {
    fn name(&self) -> &str {
        "linear-reeb"
    }

    fn dim(&self) -> usize {
        3
    }

    fn field(&self, z: &[R], out: &mut [R]) {
        let g = self.generator(z[0]);
        out[0] = R::one();
        out[1] = g[0][0] * z[1] + g[0][1] * z[2];
        out[2] = g[1][0] * z[1] + g[1][1] * z[2];
    }

    fn jacobian(&self, z: &[R], out: &mut [R]) {
        let g = self.generator(z[0]);
        let dg = self.generator_dt(z[0]);
        out.iter_mut().for_each(|v| *v = R::zero());
        for i in 0..2 {
            out[(i + 1) * 3] = dg[i][0] * z[1] + dg[i][1] * z[2];
            out[(i + 1) * 3 + 1] = g[i][0];
            out[(i + 1) * 3 + 2] = g[i][1];
        }
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
