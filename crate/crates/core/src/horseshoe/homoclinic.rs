//! Intersections of the twisted image of an unstable arc with a stable arc
//! in the `(t, r)` chart of a hyperbolic orbit.

use serde::{Deserialize, Serialize};

use crate::error::{ReebError, Result};
use crate::transition::LocalLift;

/// Arc given as a graph `t(r) = offset + coeff · r^power` over `[r_min, r_max]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GraphArc {
    pub offset: f64,
    pub coeff: f64,
    pub power: f64,
    pub r_min: f64,
    pub r_max: f64,
}

impl GraphArc {
    pub fn constant(t: f64, r_max: f64) -> Self {
        Self {
            offset: t,
            coeff: 0.0,
            power: 1.0,
            r_min: 0.0,
            r_max,
        }
    }

    pub fn t(&self, r: f64) -> f64 {
        self.offset + self.coeff * r.powf(self.power)
    }

    pub fn slope(&self, r: f64) -> f64 {
        if self.coeff == 0.0 {
            0.0
        } else {
            self.coeff * self.power * r.powf(self.power - 1.0)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HomoclinicIntersection {
    /// Winding level: the lifted arc meets `β + m`.
    pub turn: i64,
    pub r: f64,
    pub t: f64,
    /// `t'_β - (t'_γ + Δt')`, positive for a transverse crossing.
    pub margin: f64,
    /// `-r (t'_γ + Δt')`: the lifted arc has slope `-c1 / r`.
    pub c1: f64,
    /// `-r^{1-λ} t'_β`: the stable arc has slope `-c2 / r^{1-λ}`.
    pub c2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HomoclinicReport {
    pub transverse: Vec<HomoclinicIntersection>,
    /// Crossings whose margin fell inside the tolerance.
    pub tangential: Vec<HomoclinicIntersection>,
}

/// First `turns` intersections of `l(γ)` with `β` as `r → 0`, where
/// `l(t, r) = (t + Δt(r), r)`.
///
/// Crossings solve `t_γ(r) + Δt(r) - t_β(r) = m` for integers `m` above the
/// value at `r_max`; each is bracketed in `ln r` and bisected. An arc that
/// stays away from `r = 0` produces no spiral and an empty report.
pub fn detect_transverse_homoclinic(
    lift: &LocalLift,
    gamma: &GraphArc,
    beta: &GraphArc,
    turns: usize,
    lambda: f64,
    tol: f64,
) -> Result<HomoclinicReport> {
    let empty = HomoclinicReport {
        transverse: Vec::new(),
        tangential: Vec::new(),
    };
    if gamma.r_min > 0.0 || beta.r_min > 0.0 {
        return Ok(empty);
    }
    let r_top = gamma.r_max.min(beta.r_max).min(lift.domain());
    if !(r_top > 0.0) {
        return Err(ReebError::InvalidParameter("arcs do not overlap the chart".into()));
    }
    let d = |r: f64| gamma.t(r) + lift.delta_t(r) - beta.t(r);
    let mut report = empty;
    let mut m = d(r_top).floor() as i64 + 1;
    let mut hi = r_top;
    for _ in 0..turns {
        let target = m as f64;
        // Walk down geometrically until the level is passed.
        let mut lo = hi;
        while d(lo) < target {
            lo *= 0.5;
            if lo < 1e-300 {
                return Err(ReebError::Numerical(format!("turn {m} not reached above r = 1e-300")));
            }
        }
        let (mut a, mut b) = (lo.ln(), hi.ln());
        for _ in 0..200 {
            let mid = 0.5 * (a + b);
            if mid <= a || mid >= b {
                break;
            }
            if d(mid.exp()) >= target {
                a = mid;
            } else {
                b = mid;
            }
        }
        let r = (0.5 * (a + b)).exp();
        let lifted = gamma.slope(r) + lift.twist_derivative(r);
        let sb = beta.slope(r);
        let hit = HomoclinicIntersection {
            turn: m,
            r,
            t: beta.t(r),
            margin: sb - lifted,
            c1: -r * lifted,
            c2: -r.powf(1.0 - lambda) * sb,
        };
        if hit.margin.abs() > tol {
            report.transverse.push(hit);
        } else {
            report.tangential.push(hit);
        }
        hi = r;
        m += 1;
    }
    Ok(report)
}
