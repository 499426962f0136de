//! Separated-set entropy estimates along a sampling column.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{ReebError, Result};
use crate::linalg::linear_fit;
use crate::models::{PlanarMap, Point2};

#[derive(Debug, Clone, Copy)]
pub struct EntropyOptions {
    /// Sampling column `u = column`.
    pub column: f64,
    pub samples: usize,
    pub max_iterate: usize,
    /// Largest scale; the ladder is `base/2, base/4, base/8`.
    pub epsilon_base: f64,
    pub levels: usize,
    /// Return time of one iterate.
    pub roof: f64,
}

impl Default for EntropyOptions {
    fn default() -> Self {
        Self {
            column: 0.5,
            samples: 200_000,
            max_iterate: 8,
            epsilon_base: 0.1,
            levels: 3,
            roof: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyCell {
    pub iterate: usize,
    pub time: f64,
    pub epsilon: f64,
    /// Points whose orbit stays in the square up to this iterate.
    pub valid: usize,
    /// Size of the greedy maximal separated set.
    pub count: usize,
    /// The separated set used at least half of the valid samples.
    pub saturated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyEstimate {
    /// Slope of `ln N(T, ε)` against `T` at the finest `ε`.
    pub estimate: f64,
    /// Slope at each `ε` of the ladder, coarse to fine.
    pub slopes: Vec<f64>,
    pub epsilons: Vec<f64>,
    /// `N(T, ε)` is non-increasing in `ε` at every `T`.
    pub monotone_in_epsilon: bool,
    pub cells: Vec<EntropyCell>,
}

fn in_unit(p: Point2) -> bool {
    (0.0..=1.0).contains(&p[0]) && (0.0..=1.0).contains(&p[1])
}

/// Greedy maximal `(n, ε)`-separated subset of orbits sorted by their
/// initial `v`, in the max metric over the first `n` points.
fn greedy_count(orbits: &[&[Point2]], n: usize, eps: f64) -> usize {
    let dist = |a: &[Point2], b: &[Point2]| {
        (0..n).fold(0.0_f64, |m, i| m.max((a[i][0] - b[i][0]).abs()).max((a[i][1] - b[i][1]).abs()))
    };
    // Buckets on the last point: neighbours within ε share or touch a cell.
    let mut cells: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
    let mut chosen: Vec<usize> = Vec::new();
    let key = |p: Point2| ((p[0] / eps).floor() as i64, (p[1] / eps).floor() as i64);
    for (idx, o) in orbits.iter().enumerate() {
        let (kx, ky) = key(o[n - 1]);
        let mut separated = true;
        'nbr: for dx in -1..=1 {
            for dy in -1..=1 {
                if let Some(list) = cells.get(&(kx + dx, ky + dy)) {
                    for &c in list {
                        if dist(orbits[c], o) <= eps {
                            separated = false;
                            break 'nbr;
                        }
                    }
                }
            }
        }
        if separated {
            cells.entry((kx, ky)).or_default().push(idx);
            chosen.push(idx);
        }
    }
    chosen.len()
}

/// `N(T, ε)` for `T = 1..max_iterate` iterates and a dyadic `ε` ladder, and
/// the growth rate of `ln N` in `T`. Saturated cells are excluded from the
/// fit; fewer than three usable iterates is an error.
pub fn entropy_separated_sets(map: &dyn PlanarMap, opts: &EntropyOptions) -> Result<EntropyEstimate> {
    if opts.samples < 2 || opts.max_iterate < 3 || opts.levels == 0 {
        return Err(ReebError::InvalidParameter("entropy grid too small".into()));
    }
    let orbits: Vec<Vec<Point2>> = (0..opts.samples)
        .into_par_iter()
        .map(|j| {
            let mut p = [opts.column, j as f64 / (opts.samples - 1) as f64];
            let mut out = vec![p];
            for _ in 1..opts.max_iterate {
                match map.apply(p).filter(|&q| in_unit(q)) {
                    Some(q) => {
                        out.push(q);
                        p = q;
                    }
                    None => break,
                }
            }
            out
        })
        .collect();
    let epsilons: Vec<f64> = (1..=opts.levels).map(|k| opts.epsilon_base / 2f64.powi(k as i32)).collect();
    let jobs: Vec<(usize, f64)> = (1..=opts.max_iterate)
        .flat_map(|n| epsilons.iter().map(move |&e| (n, e)))
        .collect();
    let cells: Vec<EntropyCell> = jobs
        .par_iter()
        .map(|&(n, eps)| {
            let valid: Vec<&[Point2]> = orbits.iter().filter(|o| o.len() >= n).map(|o| o.as_slice()).collect();
            let count = greedy_count(&valid, n, eps);
            EntropyCell {
                iterate: n,
                time: n as f64 * opts.roof,
                epsilon: eps,
                valid: valid.len(),
                count,
                saturated: 2 * count >= valid.len(),
            }
        })
        .collect();
    let mut slopes = Vec::new();
    for &eps in &epsilons {
        let usable: Vec<&EntropyCell> = cells
            .iter()
            .filter(|c| c.epsilon == eps && !c.saturated && c.count > 0)
            .collect();
        if usable.len() < 3 {
            return Err(ReebError::Numerical(format!(
                "sampling grid too coarse: only {} unsaturated iterates at eps = {eps:e}",
                usable.len()
            )));
        }
        let x: Vec<f64> = usable.iter().map(|c| c.time).collect();
        let y: Vec<f64> = usable.iter().map(|c| (c.count as f64).ln()).collect();
        slopes.push(linear_fit(&x, &y).0);
    }
    let monotone = (1..=opts.max_iterate).all(|n| {
        let row: Vec<usize> = epsilons
            .iter()
            .map(|&e| cells.iter().find(|c| c.iterate == n && c.epsilon == e).unwrap().count)
            .collect();
        row.windows(2).all(|w| w[0] <= w[1])
    });
    Ok(EntropyEstimate {
        estimate: *slopes.last().unwrap(),
        slopes,
        epsilons,
        monotone_in_epsilon: monotone,
        cells,
    })
}
