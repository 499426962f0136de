//! Cone-field hyperbolicity checks and the assembled horseshoe certificate.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{ReebError, Result};
use crate::models::{mat_vec, PlanarMap, Point2};

use super::strips::{detect_strips, verify_moser_conditions, MoserOptions, MoserReport, StripOptions, StripSystem};

/// A sample where a cone is not mapped into its target cone or is not
/// expanded enough.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConeViolation {
    pub point: Point2,
    pub vector: Point2,
    pub image: Point2,
    /// `true` for the unstable cone under `dP`, `false` for the stable cone
    /// under `dP⁻¹`.
    pub unstable: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConeReport {
    pub mu: f64,
    pub passed: bool,
    pub samples: usize,
    /// Smallest max-norm expansion of unstable-cone vectors under `dP`.
    pub min_unstable_expansion: f64,
    /// Smallest max-norm expansion of stable-cone vectors under `dP⁻¹`.
    pub min_stable_expansion: f64,
    /// Largest ratio `|minor| / (μ |major|)` of an image vector; below 1
    /// means the image cone is strictly inside the target cone.
    pub max_aperture: f64,
    pub violation: Option<ConeViolation>,
}

/// Image of the cone spanned by `(±μ, 1)` (unstable, `major = 1`) or
/// `(1, ±μ)` (stable, `major = 0`); returns the worst expansion, the worst
/// aperture ratio and a violating vector if any.
fn cone_check(j: [[f64; 2]; 2], mu: f64, major: usize) -> (f64, f64, Option<(Point2, Point2)>) {
    let minor = 1 - major;
    let mut worst_exp = f64::INFINITY;
    let mut worst_ap = 0.0_f64;
    let mut bad = None;
    let mut signs = [0.0; 2];
    for (k, s) in [-1.0, 1.0].into_iter().enumerate() {
        let mut v = [0.0; 2];
        v[major] = 1.0;
        v[minor] = s * mu;
        let w = mat_vec(j, v);
        signs[k] = w[major].signum();
        let ap = w[minor].abs() / (mu * w[major].abs());
        worst_ap = worst_ap.max(ap);
        worst_exp = worst_exp.min(w[major].abs());
        if !(ap <= 1.0) && bad.is_none() {
            bad = Some((v, w));
        }
    }
    // Opposite signs would put a zero of the major component inside the cone.
    if signs[0] != signs[1] {
        worst_exp = 0.0;
        worst_ap = f64::INFINITY;
        if bad.is_none() {
            let mut v = [0.0; 2];
            v[major] = 1.0;
            bad = Some((v, mat_vec(j, v)));
        }
    }
    (worst_exp, worst_ap, bad)
}

/// Checks `dP·η_p ⊂ η_{P(p)}` on `forward` samples and `dP⁻¹·ζ_q ⊂ ζ_{P⁻¹(q)}`
/// on `backward` samples, with `|dP·η| > μ⁻¹|η|` and likewise for `ζ`.
///
/// Unstable cones are `|du| ≤ μ|dv|`, stable cones `|dv| ≤ μ|du|`, both in
/// the max norm.
pub fn cone_certificate(map: &dyn PlanarMap, forward: &[Point2], backward: &[Point2], mu: f64) -> Result<ConeReport> {
    if !(mu > 0.0 && mu < 0.5) {
        return Err(ReebError::InvalidParameter(format!("cone parameter {mu} outside (0, 1/2)")));
    }
    let unstable: Vec<(f64, f64, Option<ConeViolation>)> = forward
        .par_iter()
        .map(|&p| {
            let (e, a, bad) = cone_check(map.jacobian(p), mu, 1);
            let v = bad.map(|(vector, image)| ConeViolation {
                point: p,
                vector,
                image,
                unstable: true,
            });
            (e, a, v)
        })
        .collect();
    let stable: Vec<(f64, f64, Option<ConeViolation>)> = backward
        .par_iter()
        .map(|&q| match map.inverse_jacobian(q) {
            Some(j) => {
                let (e, a, bad) = cone_check(j, mu, 0);
                let v = bad.map(|(vector, image)| ConeViolation {
                    point: q,
                    vector,
                    image,
                    unstable: false,
                });
                (e, a, v)
            }
            None => (
                0.0,
                f64::INFINITY,
                Some(ConeViolation {
                    point: q,
                    vector: [1.0, 0.0],
                    image: [f64::NAN, f64::NAN],
                    unstable: false,
                }),
            ),
        })
        .collect();
    let fold = |rows: &[(f64, f64, Option<ConeViolation>)]| {
        rows.iter()
            .fold((f64::INFINITY, 0.0_f64), |(e, a), r| (e.min(r.0), a.max(r.1)))
    };
    let (eu, au) = fold(&unstable);
    let (es, as_) = fold(&stable);
    let mut violation = unstable.iter().chain(&stable).find_map(|r| r.2.clone());
    let threshold = 1.0 / mu;
    if violation.is_none() {
        let weak = unstable
            .iter()
            .zip(forward)
            .find(|(r, _)| !(r.0 > threshold))
            .map(|(_, &p)| (p, true))
            .or_else(|| stable.iter().zip(backward).find(|(r, _)| !(r.0 > threshold)).map(|(_, &q)| (q, false)));
        violation = weak.map(|(point, unstable)| {
            let vector = if unstable { [0.0, 1.0] } else { [1.0, 0.0] };
            let j = if unstable { Some(map.jacobian(point)) } else { map.inverse_jacobian(point) };
            ConeViolation {
                point,
                vector,
                image: j.map_or([f64::NAN; 2], |j| mat_vec(j, vector)),
                unstable,
            }
        });
    }
    Ok(ConeReport {
        mu,
        passed: violation.is_none() && !forward.is_empty() && !backward.is_empty(),
        samples: forward.len() + backward.len(),
        min_unstable_expansion: eu,
        min_stable_expansion: es,
        max_aperture: au.max(as_),
        violation,
    })
}

/// Strips, Moser conditions and cone fields for one map on the unit square.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HorseshoeCertificate {
    pub strips: StripSystem,
    pub symbols: usize,
    /// The alphabet was cut at the truncation level.
    pub truncated: bool,
    pub moser: MoserReport,
    pub cones: ConeReport,
    /// `ln N`, a lower bound for the entropy of the return map.
    pub entropy_lower_bound: f64,
    pub passed: bool,
}

/// Samples inside the vertical strips, the images of those from the
/// horizontal ones.
fn vertical_samples(system: &StripSystem, per_axis: usize) -> Vec<Point2> {
    let mut out = Vec::new();
    for s in &system.vertical {
        for i in 0..per_axis {
            let v = (i as f64 + 0.5) / per_axis as f64;
            let (a, b) = s.bounds_at(v);
            for j in 0..per_axis {
                out.push([a + (b - a) * (j as f64 + 0.5) / per_axis as f64, v]);
            }
        }
    }
    out
}

pub fn certify_horseshoe(
    map: &dyn PlanarMap,
    strip_opts: &StripOptions,
    moser_opts: &MoserOptions,
    mu: f64,
    samples_per_axis: usize,
) -> Result<HorseshoeCertificate> {
    let strips = detect_strips(map, strip_opts)?;
    let moser = verify_moser_conditions(map, &strips, moser_opts);
    let cones = cone_certificate(
        map,
        &strips.sample_points(samples_per_axis),
        &vertical_samples(&strips, samples_per_axis),
        mu,
    )?;
    let n = strips.symbols;
    Ok(HorseshoeCertificate {
        symbols: n,
        truncated: strips.truncated,
        passed: moser.passed && cones.passed,
        entropy_lower_bound: (n as f64).ln(),
        strips,
        moser,
        cones,
    })
}
