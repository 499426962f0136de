//! Composition of lifts, the twist certificate `T - t > -C ln r`,
//! `A r < R < B r`, and fixed points of `Ψ̃ - (k, 0)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{ReebError, Result};
use crate::transition::{ComposedLift, TransitionLift};

/// Sampling of the certificate grid.
#[derive(Debug, Clone, Copy)]
pub struct CertificateOptions {
    pub t_samples: usize,
    pub r_samples: usize,
    /// Smallest sampled radius.
    pub r_min: f64,
    /// Relative margin applied to the sampled extrema.
    pub margin: f64,
}

impl Default for CertificateOptions {
    fn default() -> Self {
        Self {
            t_samples: 100,
            r_samples: 100,
            r_min: 1e-12,
            margin: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwistCertificate {
    pub c: f64,
    pub a: f64,
    pub b: f64,
    pub r0: f64,
    pub r_min: f64,
    pub samples: usize,
    /// Extremes of `(T - t)/|ln r|` and `R/r` over the grid.
    pub min_twist_ratio: f64,
    pub min_radial_ratio: f64,
    pub max_radial_ratio: f64,
    pub trivial: bool,
}

/// Largest admissible input radius of a chain.
fn chain_domain(lift: &TransitionLift) -> f64 {
    match lift {
        TransitionLift::Identity => f64::INFINITY,
        TransitionLift::LocalExterior(l) => l.domain(),
        TransitionLift::Global(g) => g.r_max,
        TransitionLift::Composed(c) => c.chain.first().map_or(f64::INFINITY, chain_domain),
    }
}

/// Sampled extremes of the two certificate ratios for `r ∈ [r_min, r0]`.
fn ratios(lift: &TransitionLift, r0: f64, opts: &CertificateOptions) -> (f64, f64, f64, bool) {
    let (lo, hi) = (opts.r_min.ln(), r0.ln());
    let nr = opts.r_samples.max(2);
    let rows: Vec<(f64, f64, f64, bool)> = (0..nr)
        .into_par_iter()
        .map(|j| {
            let r = (lo + (hi - lo) * j as f64 / (nr - 1) as f64).exp();
            let mut acc = (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, true);
            for i in 0..opts.t_samples {
                let t = i as f64 / opts.t_samples as f64;
                let (tt, rr) = lift.eval(t, r);
                if !tt.is_finite() || !rr.is_finite() {
                    acc.3 = false;
                    continue;
                }
                acc.0 = acc.0.min((tt - t) / (-r.ln()));
                acc.1 = acc.1.min(rr / r);
                acc.2 = acc.2.max(rr / r);
            }
            acc
        })
        .collect();
    rows.iter().fold(
        (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, true),
        |a, b| (a.0.min(b.0), a.1.min(b.1), a.2.max(b.2), a.3 && b.3),
    )
}

/// Certifies a lift on the largest dyadic radius `r0 = 2^{-m}` at which the
/// sampled twist and radial ratios are positive and finite.
pub fn certify(lift: &TransitionLift, opts: &CertificateOptions) -> Result<TwistCertificate> {
    let domain = chain_domain(lift);
    for m in 1..=60 {
        let r0 = 0.5_f64.powi(m);
        if r0 >= domain || r0 >= 1.0 {
            continue;
        }
        if r0 <= opts.r_min {
            break;
        }
        let (twist, rmin, rmax, finite) = ratios(lift, r0, opts);
        if finite && twist > 0.0 && rmin > 0.0 {
            return Ok(TwistCertificate {
                c: (1.0 - opts.margin) * twist,
                a: (1.0 - opts.margin) * rmin,
                b: (1.0 + opts.margin) * rmax,
                r0,
                r_min: opts.r_min,
                samples: opts.t_samples * opts.r_samples,
                min_twist_ratio: twist,
                min_radial_ratio: rmin,
                max_radial_ratio: rmax,
                trivial: false,
            });
        }
    }
    // Report the violating sample at the smallest radius tried.
    let r = opts.r_min * 2.0;
    let (tt, rr) = lift.eval(0.0, r);
    Err(ReebError::Numerical(format!(
        "twist certificate fails at (t, r) = (0, {r:e}): T - t = {:e}, R / r = {:e}",
        tt,
        rr / r
    )))
}

/// Composes `chain` (first element applied first) and certifies the result.
pub fn compose_lifts(chain: Vec<TransitionLift>, opts: &CertificateOptions) -> Result<TransitionLift> {
    if chain.is_empty() {
        return Ok(TransitionLift::Composed(ComposedLift {
            chain,
            certificate: Some(TwistCertificate {
                c: 0.0,
                a: 1.0,
                b: 1.0,
                r0: 1.0,
                r_min: 0.0,
                samples: 0,
                min_twist_ratio: 0.0,
                min_radial_ratio: 1.0,
                max_radial_ratio: 1.0,
                trivial: true,
            }),
        }));
    }
    let mut lift = TransitionLift::Composed(ComposedLift {
        chain,
        certificate: None,
    });
    let cert = certify(&lift, opts)?;
    if let TransitionLift::Composed(c) = &mut lift {
        c.certificate = Some(cert);
    }
    Ok(lift)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwistFixedPoint {
    pub t: f64,
    pub r: f64,
    /// `max |Ψ̃_k(t, r) - (t, r)|`.
    pub residual: f64,
    pub newton_iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwistLevel {
    pub k: i64,
    pub bracketed: bool,
    /// Radius-preserving lifts have a whole circle of solutions per level.
    pub degenerate: bool,
    pub points: Vec<TwistFixedPoint>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, Copy)]
pub struct TwistSearchOptions {
    pub t_samples: usize,
    pub r_samples: usize,
    pub tol: f64,
    pub max_newton: usize,
}

impl Default for TwistSearchOptions {
    fn default() -> Self {
        Self {
            t_samples: 64,
            r_samples: 400,
            tol: 1e-13,
            max_newton: 30,
        }
    }
}

/// Root of `f` on the log-radius interval, scanning from the outer edge.
fn radial_root<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, n: usize) -> Option<f64> {
    let mut prev_rho = hi;
    let mut prev = f(hi.exp());
    for j in 1..n {
        let rho = hi + (lo - hi) * j as f64 / (n - 1) as f64;
        let v = f(rho.exp());
        if prev == 0.0 {
            return Some(prev_rho.exp());
        }
        if v.signum() != prev.signum() {
            let (mut a, mut b, mut fa) = (prev_rho, rho, prev);
            for _ in 0..200 {
                let m = 0.5 * (a + b);
                let fm = f(m.exp());
                if fm.signum() == fa.signum() {
                    a = m;
                    fa = fm;
                } else {
                    b = m;
                }
                if (a - b).abs() < 1e-15 {
                    break;
                }
            }
            return Some((0.5 * (a + b)).exp());
        }
        prev_rho = rho;
        prev = v;
    }
    None
}

fn residual_k(lift: &TransitionLift, k: f64, t: f64, r: f64) -> (f64, f64) {
    let (tt, rr) = lift.eval(t, r);
    (tt - k - t, rr - r)
}

/// Newton on `(t, ln r)` for `Ψ̃(t, r) = (t + k, r)`.
fn polish(lift: &TransitionLift, k: f64, t: f64, r: f64, opts: &TwistSearchOptions) -> (f64, f64, usize) {
    let (mut t, mut rho) = (t, r.ln());
    let mut used = 0;
    for it in 0..opts.max_newton {
        used = it + 1;
        let r = rho.exp();
        let (tt, rr) = lift.eval(t, r);
        let f = [tt - k - t, (rr / r).ln()];
        if f[0].abs().max(f[1].abs()) < opts.tol {
            break;
        }
        let j = lift.jacobian(t, r);
        // d/dt and d/dρ of both components.
        let m = [[j[0][0] - 1.0, j[0][1] * r], [j[1][0] / rr, j[1][1] * r / rr - 1.0]];
        let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
        if det == 0.0 || !det.is_finite() {
            break;
        }
        let dt = (m[1][1] * f[0] - m[0][1] * f[1]) / det;
        let dr = (m[0][0] * f[1] - m[1][0] * f[0]) / det;
        t -= dt;
        rho -= dr;
    }
    (t, rho.exp(), used)
}

/// Fixed points of `Ψ̃_k = Ψ̃ - (k, 0)` for each `k` within a certified lift.
pub fn find_twist_periodic_points(
    lift: &TransitionLift,
    ks: impl IntoIterator<Item = i64>,
    opts: &TwistSearchOptions,
) -> Result<Vec<TwistLevel>> {
    let cert = match lift {
        TransitionLift::LocalExterior(l) => TwistCertificate {
            c: 0.0,
            a: 1.0,
            b: 1.0,
            r0: l.domain(),
            r_min: 1e-300,
            samples: 0,
            min_twist_ratio: 0.0,
            min_radial_ratio: 1.0,
            max_radial_ratio: 1.0,
            trivial: true,
        },
        _ => lift
            .certificate()
            .cloned()
            .ok_or_else(|| ReebError::InvalidParameter("lift carries no twist certificate".into()))?,
    };
    let (lo, hi) = (cert.r_min.max(1e-300).ln(), cert.r0.ln());
    let ks: Vec<i64> = ks.into_iter().collect();
    let levels = ks
        .par_iter()
        .map(|&k| {
            let kf = k as f64;
            if lift.preserves_radius() {
                let root = radial_root(|r| residual_k(lift, kf, 0.0, r).0, lo, hi, opts.r_samples);
                return match root {
                    Some(r) => TwistLevel {
                        k,
                        bracketed: true,
                        degenerate: true,
                        points: vec![TwistFixedPoint {
                            t: 0.0,
                            r,
                            residual: residual_k(lift, kf, 0.0, r).0.abs(),
                            newton_iterations: 0,
                        }],
                        note: Some("radius-preserving lift: every t solves at this radius".into()),
                    },
                    None => not_bracketed(k, "twist level outside the certified radii"),
                };
            }
            let nt = opts.t_samples;
            let curve: Vec<Option<f64>> = (0..nt)
                .map(|i| {
                    let t = i as f64 / nt as f64;
                    radial_root(|r| residual_k(lift, kf, t, r).0, lo, hi, opts.r_samples)
                })
                .collect();
            if curve.iter().all(Option::is_none) {
                return not_bracketed(k, "twist level outside the certified radii");
            }
            let radial = |t: f64, r: f64| (lift.eval(t, r).1 / r).ln();
            let mut points: Vec<TwistFixedPoint> = Vec::new();
            for i in 0..nt {
                let j = (i + 1) % nt;
                let (t0, t1) = (i as f64 / nt as f64, if j == 0 { 1.0 } else { j as f64 / nt as f64 });
                let (Some(r0), Some(r1)) = (curve[i], curve[j]) else { continue };
                let (g0, g1) = (radial(t0, r0), radial(t1, r1));
                if g0.signum() == g1.signum() && g0 != 0.0 {
                    continue;
                }
                let (mut a, mut b, mut ga) = (t0, t1, g0);
                let mut rm = r0;
                for _ in 0..40 {
                    let m = 0.5 * (a + b);
                    let Some(r) = radial_root(|r| residual_k(lift, kf, m, r).0, lo, hi, opts.r_samples) else {
                        break;
                    };
                    rm = r;
                    let gm = radial(m, r);
                    if gm.signum() == ga.signum() {
                        a = m;
                        ga = gm;
                    } else {
                        b = m;
                    }
                }
                let (t, r, used) = polish(lift, kf, 0.5 * (a + b), rm, opts);
                let res = residual_k(lift, kf, t, r);
                let p = TwistFixedPoint {
                    t: t.rem_euclid(1.0),
                    r,
                    residual: res.0.abs().max(res.1.abs()),
                    newton_iterations: used,
                };
                let dup = points
                    .iter()
                    .any(|q| circle_gap(q.t, p.t) < 1e-9 && (q.r - p.r).abs() < 1e-9 * p.r.max(1e-300));
                if !dup {
                    points.push(p);
                }
            }
            if points.is_empty() {
                return not_bracketed(k, "radial component has no sign change on the twist curve");
            }
            points.sort_by(|a, b| a.t.partial_cmp(&b.t).unwrap());
            TwistLevel {
                k,
                bracketed: true,
                degenerate: false,
                points,
                note: None,
            }
        })
        .collect();
    Ok(levels)
}

fn circle_gap(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(1.0);
    d.min(1.0 - d)
}

fn not_bracketed(k: i64, why: &str) -> TwistLevel {
    TwistLevel {
        k,
        bracketed: false,
        degenerate: false,
        points: Vec::new(),
        note: Some(format!("not bracketed: {why}")),
    }
}
