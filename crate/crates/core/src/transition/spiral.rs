//! Images of analytic curves under local lifts and transit-time checks
//! against direct integration.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{ReebError, Result};
use crate::flowcore::{first_hit, CrossingDirection, HitOptions, Section};
use crate::models::Flow;
use crate::transition::LocalLift;

/// Test curve `s ↦ (t₀ + s, a sⁿ)` approaching the circle `r = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerCurve {
    pub t0: f64,
    pub a: f64,
    pub n: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpiralReport {
    pub curve: PowerCurve,
    /// Image points `(t, r)` ordered by increasing `t`.
    pub points: Vec<(f64, f64)>,
    pub monotone: bool,
    pub initial_slope: f64,
    pub final_slope: f64,
    /// `|final_slope / initial_slope|`.
    pub slope_ratio: f64,
}

/// Image of a power curve under the local lift, sampled at `s` spaced
/// logarithmically over `[s_min, s_max]`, viewed as a graph `r = η(t)`.
pub fn spiral_image(lift: &LocalLift, curve: PowerCurve, s_min: f64, s_max: f64, samples: usize) -> Result<SpiralReport> {
    if !(0.0 < s_min && s_min < s_max) || samples < 4 {
        return Err(ReebError::InvalidParameter("need 0 < s_min < s_max and at least 4 samples".into()));
    }
    let slope_at = |s: f64| {
        let r = curve.a * s.powi(curve.n as i32);
        let dr = curve.a * curve.n as f64 * s.powi(curve.n as i32 - 1);
        let dt = 1.0 + lift.twist_derivative(r) * dr;
        dr / dt
    };
    let (lo, hi) = (s_max.ln(), s_min.ln());
    let points: Vec<(f64, f64)> = (0..samples)
        .map(|i| {
            let s = (lo + (hi - lo) * i as f64 / (samples - 1) as f64).exp();
            let r = curve.a * s.powi(curve.n as i32);
            (curve.t0 + s + lift.delta_t(r), r)
        })
        .collect();
    let monotone = points.windows(2).all(|w| w[1].0 > w[0].0 && w[1].1 < w[0].1);
    let initial_slope = slope_at(s_max);
    // Last decade of the parameter range.
    let final_slope = slope_at((10.0 * s_min).min(s_max));
    Ok(SpiralReport {
        curve,
        points,
        monotone: monotone && initial_slope < 0.0 && final_slope < 0.0,
        initial_slope,
        final_slope,
        slope_ratio: (final_slope / initial_slope).abs(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitSample {
    pub r: f64,
    pub integrated: f64,
    pub closed_form: f64,
    pub error: f64,
}

/// Flight time from `(0, δ/2, r)` to `{y = δ/2}` for the local model,
/// normalized by the period, compared with `Δt(r)`.
pub fn transit_time_check<F: Flow<f64> + ?Sized>(
    flow: &F,
    lift: &LocalLift,
    radii: &[f64],
    opts: &HitOptions,
) -> Result<Vec<TransitSample>> {
    if flow.dim() != 3 {
        return Err(ReebError::InvalidParameter("transit check expects a (t, x, y) model".into()));
    }
    let half = lift.delta / 2.0;
    let section = Section::coordinate(3, 2, half, CrossingDirection::Positive);
    radii
        .par_iter()
        .map(|&r| {
            if r >= half {
                let closed_form = lift.delta_t(r);
                return Ok(TransitSample {
                    r,
                    integrated: 0.0,
                    closed_form,
                    error: closed_form.abs(),
                });
            }
            let (hit, status) = first_hit(flow, &[0.0, half, r], &section, opts);
            status?;
            let (time, _) = hit.ok_or_else(|| ReebError::Numerical(format!("no exit from r = {r:e}")))?;
            let integrated = time / lift.period;
            let closed_form = lift.delta_t(r);
            Ok(TransitSample {
                r,
                integrated,
                closed_form,
                error: (integrated - closed_form).abs(),
            })
        })
        .collect()
}
