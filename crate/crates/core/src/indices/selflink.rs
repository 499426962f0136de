use serde::{Deserialize, Serialize};

use crate::error::{ReebError, Result};
use crate::indices::linking::{linking_number_checked, min_distance, P3};
use crate::linalg::determinant;
use crate::models::Flow;
use crate::orbits::PeriodicOrbit;

#[derive(Debug, Clone, Copy)]
pub struct SelfLinkOptions {
    /// Initial push-off distance.
    pub epsilon: f64,
    /// Number of halvings of `epsilon` tried before giving up.
    pub shrink_steps: usize,
    pub tol_sep: f64,
    pub tol_transverse: f64,
}

impl Default for SelfLinkOptions {
    fn default() -> Self {
        Self {
            epsilon: 1e-2,
            shrink_steps: 12,
            tol_sep: 1e-9,
            tol_transverse: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelfLinkRecord {
    pub self_linking: i64,
    pub epsilon: f64,
    pub min_distance: f64,
    pub chart: String,
}

fn tangent(loop_: &[P3], i: usize) -> P3 {
    let n = loop_.len();
    let (a, b) = (loop_[(i + n - 1) % n], loop_[(i + 1) % n]);
    [b[0] - a[0], b[1] - a[1], b[2] - a[2]]
}

/// Linking number of `loop_` with its push-off along `directions`.
///
/// With `plane_normals`, each vertex is first checked for transversality of
/// the loop to the plane with that normal.
pub fn self_linking(
    loop_: &[P3],
    directions: &[P3],
    plane_normals: Option<&[P3]>,
    chart: &str,
    opts: &SelfLinkOptions,
) -> Result<SelfLinkRecord> {
    if loop_.len() != directions.len() {
        return Err(ReebError::InvalidParameter("one push-off direction per vertex".into()));
    }
    if let Some(normals) = plane_normals {
        for (i, nrm) in normals.iter().enumerate() {
            let t = tangent(loop_, i);
            let tn = (t[0] * t[0] + t[1] * t[1] + t[2] * t[2]).sqrt();
            let nn = (nrm[0] * nrm[0] + nrm[1] * nrm[1] + nrm[2] * nrm[2]).sqrt();
            let c = (t[0] * nrm[0] + t[1] * nrm[1] + t[2] * nrm[2]) / (tn * nn);
            if c.abs() < opts.tol_transverse {
                return Err(ReebError::Numerical(format!(
                    "loop is not transverse to the plane field at vertex {i}"
                )));
            }
        }
    }
    let mut eps = opts.epsilon;
    for _ in 0..=opts.shrink_steps {
        let push: Vec<P3> = loop_
            .iter()
            .zip(directions)
            .map(|(p, d)| [p[0] + eps * d[0], p[1] + eps * d[1], p[2] + eps * d[2]])
            .collect();
        let dist = min_distance(loop_, &push);
        let typical = directions
            .iter()
            .map(|d| (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt())
            .fold(f64::INFINITY, f64::min)
            * eps;
        if dist >= 0.25 * typical {
            let rec = linking_number_checked(loop_, &push, opts.tol_sep)?;
            return Ok(SelfLinkRecord {
                self_linking: rec.linking,
                epsilon: eps,
                min_distance: dist,
                chart: chart.to_string(),
            });
        }
        eps *= 0.5;
    }
    Err(ReebError::Numerical(
        "push-off intersects the loop at every tried offset".into(),
    ))
}

/// Radial projection of `R⁴ \ 0` to `S³` followed by stereographic
/// projection from `pole`, oriented to agree with `S³` as the boundary of the
/// ball in the complex orientation `dq1∧dp1∧dq2∧dp2`.
#[derive(Debug, Clone)]
pub struct SphereChart {
    pole: [f64; 4],
    basis: [[f64; 4]; 3],
    flip: bool,
}

fn dot4(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl SphereChart {
    pub fn new(pole: [f64; 4]) -> Self {
        let n = dot4(&pole, &pole).sqrt();
        let pole = pole.map(|v| v / n);
        let mut basis: Vec<[f64; 4]> = Vec::new();
        for k in 0..4 {
            let mut v = [0.0; 4];
            v[k] = 1.0;
            let c = dot4(&v, &pole);
            for i in 0..4 {
                v[i] -= c * pole[i];
            }
            for b in &basis {
                let c = dot4(&v, b);
                for i in 0..4 {
                    v[i] -= c * b[i];
                }
            }
            let len = dot4(&v, &v).sqrt();
            if len > 1e-8 && basis.len() < 3 {
                basis.push(v.map(|x| x / len));
            }
        }
        let mut chart = Self {
            pole,
            basis: [basis[0], basis[1], basis[2]],
            flip: false,
        };
        chart.flip = chart.orientation_sign() < 0.0;
        chart
    }

    fn raw(&self, z: &[f64]) -> P3 {
        let r = dot4(z, z).sqrt();
        let x: Vec<f64> = z.iter().map(|v| v / r).collect();
        let s = 1.0 - dot4(&x, &self.pole);
        let y = [
            dot4(&x, &self.basis[0]) / s,
            dot4(&x, &self.basis[1]) / s,
            dot4(&x, &self.basis[2]) / s,
        ];
        y
    }

    pub fn map(&self, z: &[f64]) -> P3 {
        let mut y = self.raw(z);
        if self.flip {
            y[2] = -y[2];
        }
        y
    }

    /// Sign of the raw chart's orientation relative to the boundary orientation,
    /// evaluated at the antipode of the pole.
    fn orientation_sign(&self) -> f64 {
        let x: Vec<f64> = self.pole.iter().map(|v| -v).collect();
        // Positively oriented tangent basis: (x, u1, u2, u3) positive in the
        // complex orientation, i.e. negative in (q1, q2, p1, p2) order.
        let mut u = self.basis;
        let mut m = Vec::with_capacity(16);
        for i in 0..4 {
            m.push(x[i]);
            for b in &u {
                m.push(b[i]);
            }
        }
        if -determinant(&m, 4) < 0.0 {
            u.swap(0, 1);
        }
        let h = 1e-6;
        let mut jac = Vec::with_capacity(9);
        let cols: Vec<P3> = u
            .iter()
            .map(|d| {
                let p: Vec<f64> = x.iter().zip(d).map(|(a, b)| a + h * b).collect();
                let q: Vec<f64> = x.iter().zip(d).map(|(a, b)| a - h * b).collect();
                let (yp, yq) = (self.raw(&p), self.raw(&q));
                [(yp[0] - yq[0]) / (2.0 * h), (yp[1] - yq[1]) / (2.0 * h), (yp[2] - yq[2]) / (2.0 * h)]
            })
            .collect();
        for i in 0..3 {
            for c in &cols {
                jac.push(c[i]);
            }
        }
        determinant(&jac, 3)
    }

    pub fn describe(&self) -> String {
        format!(
            "radial projection to S3, stereographic from pole {:?}{}",
            self.pole,
            if self.flip { ", third axis reflected" } else { "" }
        )
    }
}

/// Self-linking of a periodic orbit of a 4-dimensional model, pushed off
/// along the frame vector `e1` and measured in a [`SphereChart`].
pub fn self_linking_of_orbit<F: Flow<f64> + ?Sized>(
    flow: &F,
    orbit: &PeriodicOrbit,
    opts: &SelfLinkOptions,
) -> Result<SelfLinkRecord> {
    if flow.dim() != 4 {
        return Err(ReebError::InvalidParameter(
            "sphere chart needs a 4-dimensional model".into(),
        ));
    }
    // Pole as far as possible from the orbit: the antipode of its mean
    // direction or a coordinate axis, whichever stays farther away.
    let unit: Vec<Vec<f64>> = orbit
        .samples
        .iter()
        .map(|s| {
            let r = dot4(s, s).sqrt();
            s.iter().map(|v| v / r).collect()
        })
        .collect();
    let mut mean = [0.0; 4];
    for x in &unit {
        for i in 0..4 {
            mean[i] -= x[i];
        }
    }
    let mut candidates = Vec::new();
    if dot4(&mean, &mean).sqrt() > 1e-3 * unit.len() as f64 {
        let n = dot4(&mean, &mean).sqrt();
        candidates.push(mean.map(|v| v / n));
    }
    for k in 0..4 {
        for sign in [1.0, -1.0] {
            let mut e = [0.0; 4];
            e[k] = sign;
            candidates.push(e);
        }
    }
    let closeness = |p: &[f64; 4]| unit.iter().map(|x| dot4(x, p)).fold(f64::MIN, f64::max);
    let pole = candidates
        .into_iter()
        .min_by(|a, b| closeness(a).partial_cmp(&closeness(b)).unwrap())
        .unwrap();
    let chart = SphereChart::new(pole);
    let mut pts = Vec::with_capacity(orbit.samples.len());
    let mut dirs = Vec::with_capacity(orbit.samples.len());
    let mut normals = Vec::with_capacity(orbit.samples.len());
    let h = 1e-7;
    for s in &orbit.samples {
        let fr = flow
            .frame(s)
            .ok_or_else(|| ReebError::Numerical("frame degenerates along the orbit".into()))?;
        let y = chart.map(s);
        let image = |v: &[f64]| -> P3 {
            let p: Vec<f64> = s.iter().zip(v).map(|(a, b)| a + h * b).collect();
            let q: Vec<f64> = s.iter().zip(v).map(|(a, b)| a - h * b).collect();
            let (yp, yq) = (chart.map(&p), chart.map(&q));
            [(yp[0] - yq[0]) / (2.0 * h), (yp[1] - yq[1]) / (2.0 * h), (yp[2] - yq[2]) / (2.0 * h)]
        };
        let d1 = image(&fr.e1);
        let d2 = image(&fr.e2);
        pts.push(y);
        dirs.push(d1);
        normals.push([
            d1[1] * d2[2] - d1[2] * d2[1],
            d1[2] * d2[0] - d1[0] * d2[2],
            d1[0] * d2[1] - d1[1] * d2[0],
        ]);
    }
    self_linking(&pts, &dirs, Some(&normals), &chart.describe(), opts)
}
