use serde::{Deserialize, Serialize};

use crate::error::{ReebError, Result};
use crate::linalg::linear_fit;
use crate::models::PlaneRotation;

/// Anything that can count its periodic points: fixed points of the `n`-th
/// iterate of a return map whose roof (return time) is `roof`.
pub trait PeriodicPointSource {
    fn fixed_points(&self, n: usize) -> Result<usize>;

    /// Return time of one iterate, used to convert iterates to flow time.
    fn roof(&self) -> f64 {
        1.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthRow {
    pub time: f64,
    pub iterate: usize,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthTable {
    pub rows: Vec<GrowthRow>,
    /// Regression slope of `ln P_T` against `T`.
    pub rate: f64,
    /// Two-standard-error band around `rate`.
    pub band: (f64, f64),
    /// `ln P_T / T` at the largest `T`.
    pub final_ratio: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
}

/// Table of `(T, P_T)` for iterates `1..=n_max` and the fitted growth rate.
pub fn count_orbits_up_to_period<S: PeriodicPointSource + ?Sized>(
    source: &S,
    n_max: usize,
) -> Result<GrowthTable> {
    if n_max == 0 {
        return Err(ReebError::InvalidParameter("n_max must be positive".into()));
    }
    let roof = source.roof();
    let mut rows = Vec::with_capacity(n_max);
    for n in 1..=n_max {
        rows.push(GrowthRow {
            time: roof * n as f64,
            iterate: n,
            count: source.fixed_points(n)?,
        });
    }
    let usable: Vec<&GrowthRow> = rows.iter().filter(|r| r.count > 0).collect();
    let mut warning = None;
    let (rate, se) = if usable.len() >= 3 {
        let x: Vec<f64> = usable.iter().map(|r| r.time).collect();
        let y: Vec<f64> = usable.iter().map(|r| (r.count as f64).ln()).collect();
        let (slope, _, se) = linear_fit(&x, &y);
        (slope, se)
    } else {
        warning = Some("insufficient range for a stable fit".to_string());
        (0.0, f64::INFINITY)
    };
    let last = rows.last().unwrap();
    let final_ratio = if last.count > 0 {
        (last.count as f64).ln() / last.time
    } else {
        0.0
    };
    Ok(GrowthTable {
        rows,
        rate,
        band: (rate - 2.0 * se, rate + 2.0 * se),
        final_ratio,
        warning,
    })
}

impl PeriodicPointSource for PlaneRotation {
    /// The center is the only fixed point unless `n · angle` is a full turn.
    fn fixed_points(&self, n: usize) -> Result<usize> {
        let turns = self.angle * n as f64 / std::f64::consts::TAU;
        if (turns - turns.round()).abs() < 1e-12 {
            return Err(ReebError::Undetermined(format!(
                "iterate {n} of the rotation is the identity"
            )));
        }
        Ok(1)
    }
}
