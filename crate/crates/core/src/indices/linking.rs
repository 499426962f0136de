use serde::{Deserialize, Serialize};

use crate::error::{ReebError, Result};

pub type P3 = [f64; 3];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LinkMethod {
    Gauss,
    Crossings,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkRecord {
    pub linking: i64,
    pub method: LinkMethod,
    /// Distance of the raw Gauss value from the reported integer (0 for crossings).
    pub error_bound: f64,
    pub raw: f64,
    pub min_distance: f64,
}

fn sub(a: P3, b: P3) -> P3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn cross(a: P3, b: P3) -> P3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn dot3(a: P3, b: P3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn unit(a: P3) -> P3 {
    let n = dot3(a, a).sqrt();
    [a[0] / n, a[1] / n, a[2] / n]
}

fn segment_distance(p1: P3, p2: P3, p3: P3, p4: P3) -> f64 {
    let d1 = sub(p2, p1);
    let d2 = sub(p4, p3);
    let r = sub(p1, p3);
    let a = dot3(d1, d1);
    let e = dot3(d2, d2);
    let f = dot3(d2, r);
    let c = dot3(d1, r);
    let b = dot3(d1, d2);
    let denom = a * e - b * b;
    let mut s = if denom > 1e-300 { ((b * f - c * e) / denom).clamp(0.0, 1.0) } else { 0.0 };
    let mut t = (b * s + f) / e;
    if t < 0.0 {
        t = 0.0;
        s = (-c / a).clamp(0.0, 1.0);
    } else if t > 1.0 {
        t = 1.0;
        s = ((b - c) / a).clamp(0.0, 1.0);
    }
    let q1 = [p1[0] + s * d1[0], p1[1] + s * d1[1], p1[2] + s * d1[2]];
    let q2 = [p3[0] + t * d2[0], p3[1] + t * d2[1], p3[2] + t * d2[2]];
    let d = sub(q1, q2);
    dot3(d, d).sqrt()
}

/// Smallest distance between the two closed polylines.
pub fn min_distance(a: &[P3], b: &[P3]) -> f64 {
    let mut best = f64::INFINITY;
    for i in 0..a.len() {
        let (p1, p2) = (a[i], a[(i + 1) % a.len()]);
        for j in 0..b.len() {
            best = best.min(segment_distance(p1, p2, b[j], b[(j + 1) % b.len()]));
        }
    }
    best
}

/// Signed solid-angle contribution of two straight segments to the Gauss integral.
fn segment_pair(p1: P3, p2: P3, p3: P3, p4: P3) -> f64 {
    let r13 = sub(p3, p1);
    let r14 = sub(p4, p1);
    let r23 = sub(p3, p2);
    let r24 = sub(p4, p2);
    let faces = [cross(r13, r14), cross(r14, r24), cross(r24, r23), cross(r23, r13)];
    if faces.iter().any(|f| dot3(*f, *f) < 1e-300) {
        return 0.0;
    }
    let n: Vec<P3> = faces.iter().map(|&f| unit(f)).collect();
    let mut omega = 0.0;
    for k in 0..4 {
        omega += dot3(n[k], n[(k + 1) % 4]).clamp(-1.0, 1.0).asin();
    }
    let orient = dot3(cross(sub(p4, p3), sub(p2, p1)), r13);
    omega * orient.signum() / (4.0 * std::f64::consts::PI)
}

/// Exact Gauss linking integral of two closed polylines.
pub fn gauss_linking(a: &[P3], b: &[P3]) -> f64 {
    let mut total = 0.0;
    for i in 0..a.len() {
        let (p1, p2) = (a[i], a[(i + 1) % a.len()]);
        for j in 0..b.len() {
            total += segment_pair(p1, p2, b[j], b[(j + 1) % b.len()]);
        }
    }
    total
}

/// Fixed generic rotation applied before projecting, so no segment is
/// parallel to the viewing direction for ordinary inputs.
fn generic_view(p: P3) -> P3 {
    let (a, b) = (0.3711_f64, 0.2179_f64);
    let (sa, ca) = a.sin_cos();
    let (sb, cb) = b.sin_cos();
    let x = ca * p[0] - sa * p[1];
    let y = sa * p[0] + ca * p[1];
    [x, cb * y - sb * p[2], sb * y + cb * p[2]]
}

/// Half the signed count of crossings between the projections of `a` and `b`.
pub fn crossing_linking(a: &[P3], b: &[P3]) -> f64 {
    let a: Vec<P3> = a.iter().map(|&p| generic_view(p)).collect();
    let b: Vec<P3> = b.iter().map(|&p| generic_view(p)).collect();
    let mut total = 0i64;
    for i in 0..a.len() {
        let (p1, p2) = (a[i], a[(i + 1) % a.len()]);
        let d1 = sub(p2, p1);
        for j in 0..b.len() {
            let (q1, q2) = (b[j], b[(j + 1) % b.len()]);
            let d2 = sub(q2, q1);
            let den = d1[0] * d2[1] - d1[1] * d2[0];
            if den.abs() < 1e-300 {
                continue;
            }
            let w = sub(q1, p1);
            let s = (w[0] * d2[1] - w[1] * d2[0]) / den;
            let t = (w[0] * d1[1] - w[1] * d1[0]) / den;
            if !(0.0..1.0).contains(&s) || !(0.0..1.0).contains(&t) {
                continue;
            }
            let za = p1[2] + s * d1[2];
            let zb = q1[2] + t * d2[2];
            let (over, under) = if za > zb { (d1, d2) } else { (d2, d1) };
            let z = over[0] * under[1] - over[1] * under[0];
            total += if z > 0.0 { 1 } else { -1 };
        }
    }
    total as f64 / 2.0
}

/// Linking number of two disjoint closed polylines.
pub fn linking_number(a: &[P3], b: &[P3], method: LinkMethod, tol_sep: f64) -> Result<LinkRecord> {
    if a.len() < 3 || b.len() < 3 {
        return Err(ReebError::InvalidParameter("loops need at least 3 vertices".into()));
    }
    let dist = min_distance(a, b);
    if dist < tol_sep {
        return Err(ReebError::Numerical(format!(
            "loops too close for a reliable linking number (min distance {dist:e})"
        )));
    }
    let raw = match method {
        LinkMethod::Gauss => gauss_linking(a, b),
        LinkMethod::Crossings => crossing_linking(a, b),
    };
    let linking = raw.round() as i64;
    let error_bound = (raw - linking as f64).abs();
    if error_bound > 0.25 {
        return Err(ReebError::Numerical(format!(
            "Gauss value {raw} is not within 0.25 of an integer"
        )));
    }
    Ok(LinkRecord {
        linking,
        method,
        error_bound,
        raw,
        min_distance: dist,
    })
}

/// Both methods; errors if they disagree.
pub fn linking_number_checked(a: &[P3], b: &[P3], tol_sep: f64) -> Result<LinkRecord> {
    let g = linking_number(a, b, LinkMethod::Gauss, tol_sep)?;
    let c = linking_number(a, b, LinkMethod::Crossings, tol_sep)?;
    if g.linking != c.linking {
        return Err(ReebError::Numerical(format!(
            "Gauss integral gives {} but crossing count gives {}",
            g.linking, c.linking
        )));
    }
    Ok(g)
}
