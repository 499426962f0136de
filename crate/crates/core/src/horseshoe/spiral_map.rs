//! Return map of a square next to a homoclinic spiral: a local passage
//! with logarithmic twist followed by a linear global passage.

use serde::{Deserialize, Serialize};

use crate::error::{ReebError, Result};
use crate::models::{Mat2, PlanarMap, Point2};
use crate::transition::LocalLift;

/// `P = M ∘ ψ ∘ l ∘ M⁻¹` on `Q = [0, 1]²` with `M⁻¹(u, v) = (σ(u - v), σ v)`,
/// `l(t, r) = (t + Δt(r), r)` and `ψ(t, r) = (A t_c + B r, C t_c + D r)`,
/// where `t_c` is `t` reduced to `[-1/2, 1/2)`.
///
/// Horizontal strips `H_n` are the branches with `round(t + Δt) = n`; they
/// accumulate on `{v = 0}` and their images on `{u = 0}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpiralHorseshoe {
    pub global: [[f64; 2]; 2],
    pub sigma: f64,
    pub local: LocalLift,
}

fn in_unit(p: Point2) -> bool {
    (0.0..=1.0).contains(&p[0]) && (0.0..=1.0).contains(&p[1])
}

impl SpiralHorseshoe {
    pub fn new(global: [[f64; 2]; 2], sigma: f64, local: LocalLift) -> Result<Self> {
        let det = global[0][0] * global[1][1] - global[0][1] * global[1][0];
        if (det - 1.0).abs() > 1e-12 {
            return Err(ReebError::InvalidParameter(format!("global passage has determinant {det}, not 1")));
        }
        if !(sigma > 0.0 && sigma < local.domain()) {
            return Err(ReebError::InvalidParameter("sigma must lie inside the local chart".into()));
        }
        Ok(Self { global, sigma, local })
    }

    /// `A = 1, B = 1/2, C = -1, D = 1/2`, `σ = 0.1`, `u ≡ 1`, `T = 1`, `δ = 1`.
    pub fn standard() -> Self {
        Self::new(
            [[1.0, 0.5], [-1.0, 0.5]],
            0.1,
            LocalLift::new(vec![1.0], 1.0, 1.0).expect("valid local lift"),
        )
        .expect("valid spiral horseshoe")
    }

    /// Twisted angle `t + Δt(r)` and radius of a square point.
    fn twisted(&self, p: Point2) -> Option<(f64, f64)> {
        let r = self.sigma * p[1];
        if !(r > 0.0) {
            return None;
        }
        Some((self.sigma * (p[0] - p[1]) + self.local.delta_t(r), r))
    }

    /// Branch number `round(t + Δt)` of a square point.
    pub fn branch(&self, p: Point2) -> Option<i64> {
        self.twisted(p).map(|(tau, _)| tau.round() as i64)
    }

    fn out_of(&self, tc: f64, r: f64) -> Point2 {
        let g = self.global;
        let t1 = g[0][0] * tc + g[0][1] * r;
        let r1 = g[1][0] * tc + g[1][1] * r;
        [(t1 + r1) / self.sigma, r1 / self.sigma]
    }
}

impl PlanarMap for SpiralHorseshoe {
    fn name(&self) -> &str {
        "spiral-horseshoe"
    }

    fn apply(&self, p: Point2) -> Option<Point2> {
        if !in_unit(p) {
            return None;
        }
        let (tau, r) = self.twisted(p)?;
        Some(self.out_of(tau - tau.round(), r))
    }

    fn apply_inverse(&self, q: Point2) -> Option<Point2> {
        if !in_unit(q) {
            return None;
        }
        let r1 = self.sigma * q[1];
        let t1 = self.sigma * q[0] - r1;
        let g = self.global;
        // Inverse of a determinant-one matrix.
        let tc = g[1][1] * t1 - g[0][1] * r1;
        let r = -g[1][0] * t1 + g[0][0] * r1;
        if !(r > 0.0) || !(-0.5..0.5).contains(&tc) {
            return None;
        }
        let v = r / self.sigma;
        let base = tc - self.local.delta_t(r);
        // u = (tc + n - Δt)/σ + v must land in [0, 1].
        let n = (-(base) - self.sigma * v).ceil();
        let u = (base + n) / self.sigma + v;
        let p = [u, v];
        in_unit(p).then_some(p)
    }

    fn jacobian(&self, p: Point2) -> Mat2 {
        let s = self.sigma;
        let r = s * p[1];
        let dtau = [s, -s + self.local.twist_derivative(r) * s];
        let dr = [0.0, s];
        let g = self.global;
        let dt1 = [g[0][0] * dtau[0] + g[0][1] * dr[0], g[0][0] * dtau[1] + g[0][1] * dr[1]];
        let dr1 = [g[1][0] * dtau[0] + g[1][1] * dr[0], g[1][0] * dtau[1] + g[1][1] * dr[1]];
        [
            [(dt1[0] + dr1[0]) / s, (dt1[1] + dr1[1]) / s],
            [dr1[0] / s, dr1[1] / s],
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_undoes_forward_on_the_strips() {
        let m = SpiralHorseshoe::standard();
        let mut checked = 0;
        for i in 1..40 {
            for j in 1..200 {
                let p = [i as f64 / 40.0, j as f64 / 200.0];
                if let Some(q) = m.apply(p).filter(|&q| in_unit(q)) {
                    let back = m.apply_inverse(q).unwrap();
                    assert!((back[0] - p[0]).abs() < 1e-9 && (back[1] - p[1]).abs() < 1e-9);
                    checked += 1;
                }
            }
        }
        assert!(checked > 50);
    }

    #[test]
    fn jacobian_matches_differences_and_has_unit_determinant() {
        let m = SpiralHorseshoe::standard();
        let p = [0.4, 0.3];
        let j = m.jacobian(p);
        let h = 1e-7;
        for k in 0..2 {
            let mut a = p;
            let mut b = p;
            a[k] += h;
            b[k] -= h;
            let (fa, fb) = (m.apply(a).unwrap(), m.apply(b).unwrap());
            for i in 0..2 {
                assert!(((fa[i] - fb[i]) / (2.0 * h) - j[i][k]).abs() < 1e-5);
            }
        }
        assert!((j[0][0] * j[1][1] - j[0][1] * j[1][0] - 1.0).abs() < 1e-12);
    }
}
