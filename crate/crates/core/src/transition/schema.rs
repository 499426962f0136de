//! Bookkeeping for families of section disks: circle-coincidence
//! classification and the forwarding map `G`.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{ReebError, Result};
use crate::models::Point2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Circle {
    pub center: Point2,
    pub radius: f64,
}

impl Circle {
    pub fn point(&self, angle: f64) -> Point2 {
        let (s, c) = angle.sin_cos();
        [self.center[0] + self.radius * c, self.center[1] + self.radius * s]
    }

    /// Positive outside, negative inside.
    pub fn signed_distance(&self, p: Point2) -> f64 {
        (p[0] - self.center[0]).hypot(p[1] - self.center[1]) - self.radius
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BranchClass {
    Coincident,
    /// Touches the stable circle without entering the stable disk.
    ScenarioB,
    /// Enters the interior of the stable disk.
    ScenarioC,
    Undetermined,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchReport {
    pub class: BranchClass,
    pub hausdorff: f64,
    /// Sign changes of the signed distance along the image curve.
    pub crossings: usize,
    /// Touch points resolved as local minima of `|distance|` below tolerance.
    pub tangencies: usize,
    pub tol_circle: f64,
}

/// Compares `Ψ(C_u)` with `C_s` from `samples` points on `C_u`.
pub fn classify_branch<P>(unstable: &Circle, stable: &Circle, psi: P, samples: usize, tol_circle: f64) -> Result<BranchReport>
where
    P: Fn(Point2) -> Point2,
{
    if samples < 8 || !(tol_circle > 0.0) {
        return Err(ReebError::InvalidParameter("need at least 8 samples and a positive tolerance".into()));
    }
    let image: Vec<Point2> = (0..samples)
        .map(|i| psi(unstable.point(std::f64::consts::TAU * i as f64 / samples as f64)))
        .collect();
    let d: Vec<f64> = image.iter().map(|&p| stable.signed_distance(p)).collect();
    let to_circle = d.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    let from_circle = (0..samples)
        .map(|i| {
            let q = stable.point(std::f64::consts::TAU * i as f64 / samples as f64);
            image
                .iter()
                .map(|p| (p[0] - q[0]).hypot(p[1] - q[1]))
                .fold(f64::INFINITY, f64::min)
        })
        .fold(0.0_f64, f64::max);
    let hausdorff = to_circle.max(from_circle);

    let n = d.len();
    let crossings = (0..n)
        .filter(|&i| {
            let (a, b) = (d[i], d[(i + 1) % n]);
            a.abs() > tol_circle && b.abs() > tol_circle && a.signum() != b.signum()
                || (a.abs() <= tol_circle && d[(i + n - 1) % n].signum() != b.signum() && b.abs() > tol_circle)
        })
        .count();
    let tangencies = (0..n)
        .filter(|&i| {
            let (p, a, b) = (d[(i + n - 1) % n], d[i], d[(i + 1) % n]);
            a.abs() <= tol_circle && a.abs() <= p.abs() && a.abs() < b.abs() && p.signum() == b.signum()
        })
        .count();

    let class = if hausdorff < tol_circle {
        BranchClass::Coincident
    } else if hausdorff <= 10.0 * tol_circle {
        BranchClass::Undetermined
    } else if d.iter().any(|&v| v < -tol_circle) {
        BranchClass::ScenarioC
    } else {
        BranchClass::ScenarioB
    };
    Ok(BranchReport {
        class,
        hausdorff,
        crossings,
        tangencies,
        tol_circle,
    })
}

/// A family `(j, k)` of section disks with its available area.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiskFamily {
    pub j: usize,
    pub k: usize,
    pub disk_area: f64,
    /// Area of the section annulus available to forwarded disks.
    pub available_area: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoliationSchema {
    pub families: Vec<DiskFamily>,
    pub equal_area: bool,
    pub tol_area: f64,
    #[serde(default)]
    pub classification: BTreeMap<String, BranchClass>,
}

impl FoliationSchema {
    pub fn validate(&self) -> Result<()> {
        if self.families.is_empty() {
            return Err(ReebError::Schema("schema has no families".into()));
        }
        if self.equal_area {
            let a0 = self.families[0].disk_area;
            if let Some(f) = self.families.iter().find(|f| (f.disk_area - a0).abs() > self.tol_area) {
                return Err(ReebError::Schema(format!(
                    "family ({}, {}) has disk area {} but the schema declares equal areas {}",
                    f.j, f.k, f.disk_area, a0
                )));
            }
        }
        if self.families.iter().any(|f| !(f.disk_area > 0.0)) {
            return Err(ReebError::Schema("disk areas must be positive".into()));
        }
        Ok(())
    }

    fn family(&self, j: usize, k: usize) -> Option<&DiskFamily> {
        self.families.iter().find(|f| f.j == j && f.k == k)
    }
}

/// Result of pushing a disk one step forward.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ForwardStep {
    /// The forwarded disk meets the stable circle of family `(j, k)`.
    MeetsCircle { k: usize },
    /// The forwarded disk lands in the section at the area interval `[start, end)`.
    Disk { start: f64, end: f64 },
}

/// Per-step intersection oracle, queried with the family and the depth.
pub trait ForwardingOracle: Sync {
    fn step(&self, j: usize, k: usize, depth: usize) -> ForwardStep;
}

/// Oracle backed by a table of (steps before meeting a circle, target `k`).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TableOracle {
    pub entries: BTreeMap<(usize, usize), (usize, usize)>,
    pub disk_area: f64,
}

impl ForwardingOracle for TableOracle {
    fn step(&self, j: usize, k: usize, depth: usize) -> ForwardStep {
        match self.entries.get(&(j, k)) {
            Some(&(steps, target)) if depth >= steps => ForwardStep::MeetsCircle { k: target },
            _ => ForwardStep::Disk {
                start: depth as f64 * self.disk_area,
                end: (depth + 1) as f64 * self.disk_area,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForwardingTrace {
    pub start: (usize, usize),
    pub disks: Vec<(f64, f64)>,
    pub image: (usize, usize),
    pub bound: usize,
}

/// Forwards the unstable disk of `(j, k)` until it meets a stable circle,
/// enforcing disjointness and the area bound `⌊area(F) / area(D)⌋`.
pub fn iterate_disk_forwarding(
    schema: &FoliationSchema,
    oracle: &dyn ForwardingOracle,
    start: (usize, usize),
) -> Result<ForwardingTrace> {
    if !schema.equal_area {
        return Err(ReebError::InvalidParameter("forwarding needs the equal-area hypothesis".into()));
    }
    schema.validate()?;
    let fam = schema
        .family(start.0, start.1)
        .ok_or_else(|| ReebError::InvalidParameter(format!("unknown family {start:?}")))?;
    let bound = (fam.available_area / fam.disk_area + 1e-12).floor() as usize;
    let mut disks: Vec<(f64, f64)> = Vec::new();
    for depth in 0..=bound {
        match oracle.step(start.0, start.1, depth) {
            ForwardStep::MeetsCircle { k } => {
                return Ok(ForwardingTrace {
                    start,
                    disks,
                    image: (start.0, k),
                    bound,
                })
            }
            ForwardStep::Disk { start: a, end: b } => {
                if let Some(&(c, d)) = disks.iter().find(|&&(c, d)| a < d - schema.tol_area && c < b - schema.tol_area) {
                    return Err(ReebError::Numerical(format!(
                        "forwarded disks [{a}, {b}) and [{c}, {d}) overlap"
                    )));
                }
                disks.push((a, b));
                if disks.len() > bound {
                    break;
                }
            }
        }
    }
    Err(ReebError::Numerical(format!(
        "forwarding of {start:?} exceeded the area bound of {bound} disks"
    )))
}

/// `G` on every family, computed in parallel.
pub fn forwarding_map(schema: &FoliationSchema, oracle: &dyn ForwardingOracle) -> Vec<Result<ForwardingTrace>> {
    schema
        .families
        .par_iter()
        .map(|f| iterate_disk_forwarding(schema, oracle, (f.j, f.k)))
        .collect()
}
