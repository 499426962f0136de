//! Moser normal-form charts near a hyperbolic periodic orbit.
//!
//! The chart lives on a local section through the orbit. The first-return map
//! `P` is conjugated, by a polynomial map `N` tangent to the eigenbasis, to
//! `(x, y) ↦ (x e^{-U(xy)}, y e^{U(xy)})`; flowing the section forward then
//! gives the flow chart with `ṫ = 1, ẋ = -u(xy) x, ẏ = u(xy) y`, `u = U / T`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{ReebError, Result};
use crate::flowcore::{first_hit, integrate, CrossingDirection, HitOptions, IntegratorOptions, Section};
use crate::linalg::{inverse, lstsq};
use crate::models::{Flow, Point2};
use crate::orbits::{frame_basis, PeriodicOrbit};

#[derive(Debug, Clone, Copy)]
pub struct NormalFormOptions {
    /// Total degree of the polynomial conjugacy.
    pub order: usize,
    /// Samples per axis of the fitting grid.
    pub grid: usize,
    /// Height of the fitting rectangle in units of `δ' / μ`.
    pub aspect: f64,
    pub hit: HitOptions,
    /// Largest accepted conjugacy residual, in chart units.
    pub tol_nf: f64,
    pub max_iterations: usize,
}

impl Default for NormalFormOptions {
    fn default() -> Self {
        Self {
            order: 4,
            grid: 11,
            aspect: 1.2,
            hit: HitOptions {
                integrator: IntegratorOptions::with_tol(1e-12),
                ..HitOptions::default()
            },
            tol_nf: 1e-6,
            max_iterations: 40,
        }
    }
}

/// A hyperplane section through a periodic point with coordinates read off
/// the frame basis `[f, e1, e2, complement...]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SectionFrame {
    pub anchor: Vec<f64>,
    /// Lattice translation picked up by periodic coordinates over one turn.
    pub shift: Vec<f64>,
    /// Row-major basis with the frame vectors as columns.
    pub basis: Vec<f64>,
    /// Inverse of `basis`; its first row is the section normal.
    pub dual: Vec<f64>,
    pub period: f64,
    pub periodic: Vec<(usize, f64)>,
    pub level: Option<f64>,
}

impl SectionFrame {
    pub fn new<F: Flow<f64> + ?Sized>(flow: &F, orbit: &PeriodicOrbit, opts: &IntegratorOptions) -> Result<Self> {
        let n = flow.dim();
        let basis = frame_basis(flow, &orbit.state)?;
        let dual = inverse(&basis, n)?;
        let traj = integrate(flow, &orbit.state, 0.0, orbit.period, opts)?;
        let periodic = flow.periodic_coords();
        let end = traj.end_state();
        let mut shift = vec![0.0; n];
        for &(i, p) in &periodic {
            shift[i] = p * ((end[i] - orbit.state[i]) / p).round();
        }
        Ok(Self {
            anchor: orbit.state.clone(),
            shift,
            basis,
            dual,
            period: orbit.period,
            periodic,
            level: flow.conserved_targets().and_then(|v| v.first().copied()),
        })
    }

    fn dim(&self) -> usize {
        self.anchor.len()
    }

    fn column(&self, j: usize) -> Vec<f64> {
        let n = self.dim();
        (0..n).map(|i| self.basis[i * n + j]).collect()
    }

    /// Ambient point with section coordinates `(a, b)`, projected back onto
    /// the prescribed level of the first conserved quantity when there is one.
    pub fn embed<F: Flow<f64> + ?Sized>(&self, flow: &F, ab: Point2) -> Vec<f64> {
        let n = self.dim();
        let (e1, e2) = (self.column(1), self.column(2));
        let mut z: Vec<f64> = (0..n).map(|i| self.anchor[i] + ab[0] * e1[i] + ab[1] * e2[i]).collect();
        if let (Some(level), true) = (self.level, n > 3) {
            let dir = self.column(3);
            for _ in 0..6 {
                let c = flow.conserved(&z)[0] - level;
                if c.abs() < 1e-15 {
                    break;
                }
                let h = 1e-7;
                let zp: Vec<f64> = z.iter().zip(&dir).map(|(a, d)| a + h * d).collect();
                let zm: Vec<f64> = z.iter().zip(&dir).map(|(a, d)| a - h * d).collect();
                let slope = (flow.conserved(&zp)[0] - flow.conserved(&zm)[0]) / (2.0 * h);
                if slope == 0.0 {
                    break;
                }
                let s = -c / slope;
                z.iter_mut().zip(&dir).for_each(|(a, d)| *a += s * d);
            }
        }
        z
    }

    /// Section coordinates of an ambient point near the anchor.
    pub fn coords(&self, z: &[f64]) -> Point2 {
        let n = self.dim();
        let mut d: Vec<f64> = z.iter().zip(&self.anchor).map(|(a, b)| a - b).collect();
        for &(i, p) in &self.periodic {
            d[i] -= p * (d[i] / p).round();
        }
        let row = |k: usize| (0..n).map(|j| self.dual[k * n + j] * d[j]).sum::<f64>();
        [row(1), row(2)]
    }

    /// First return of `z` to the section, with the lattice shift removed.
    pub fn first_return<F: Flow<f64> + ?Sized>(&self, flow: &F, z: &[f64], opts: &HitOptions) -> Result<(f64, Vec<f64>)> {
        let n = self.dim();
        let anchor: Vec<f64> = self.anchor.iter().zip(&self.shift).map(|(a, s)| a + s).collect();
        let normal: Vec<f64> = self.dual[..n].to_vec();
        let section = Section::new(anchor, normal, CrossingDirection::Positive)?;
        let mut o = *opts;
        o.min_time = 0.5 * self.period;
        o.max_time = o.max_time.min(3.0 * self.period).max(o.min_time);
        let (hit, status) = first_hit(flow, z, &section, &o);
        status?;
        let (t, mut w) = hit.ok_or_else(|| ReebError::Numerical("seed did not return to the section".into()))?;
        w.iter_mut().zip(&self.shift).for_each(|(a, s)| *a -= s);
        Ok((t, w))
    }
}

/// Exponents `(i, j)` of `ξ^i ζ^j` with `i + j <= order`, ordered by degree.
fn monomials(order: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for d in 0..=order {
        for j in 0..=d {
            out.push((d - j, j));
        }
    }
    out
}

fn mono(e: (usize, usize), p: Point2) -> f64 {
    p[0].powi(e.0 as i32) * p[1].powi(e.1 as i32)
}

fn horner(c: &[f64], w: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &v| acc * w + v)
}

fn horner_prime(c: &[f64], w: f64) -> f64 {
    c.iter()
        .enumerate()
        .skip(1)
        .rev()
        .fold(0.0, |acc, (k, &v)| acc * w + v * k as f64)
}

/// Fitted Moser chart around a hyperbolic orbit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalFormChart {
    pub model: String,
    pub orbit_state: Vec<f64>,
    pub period: f64,
    pub section: SectionFrame,
    /// Columns: stable and unstable eigenvectors in section coordinates.
    pub eigenbasis: [[f64; 2]; 2],
    pub unstable_multiplier: f64,
    /// Chart radius `δ'`.
    pub radius: f64,
    pub order: usize,
    pub x_terms: Vec<(usize, usize)>,
    pub x_coeffs: Vec<f64>,
    pub y_terms: Vec<(usize, usize)>,
    pub y_coeffs: Vec<f64>,
    /// Coefficients of `u(w) = Σ u_k w^k` per unit time.
    pub u_series: Vec<f64>,
    /// Largest conjugacy defect over the fitting grid, in chart units.
    pub residual: f64,
    pub iterations: usize,
}

impl NormalFormChart {
    fn scaled_u(&self) -> Vec<f64> {
        let r2 = self.radius * self.radius;
        self.u_series
            .iter()
            .enumerate()
            .map(|(k, c)| c * self.period * r2.powi(k as i32))
            .collect()
    }

    fn eigen_inverse(&self) -> [[f64; 2]; 2] {
        let e = self.eigenbasis;
        let det = e[0][0] * e[1][1] - e[0][1] * e[1][0];
        [[e[1][1] / det, -e[0][1] / det], [-e[1][0] / det, e[0][0] / det]]
    }

    /// Scaled eigen-coordinates `(ξ, ζ) / δ'` of a section point.
    pub fn eigen_coords(&self, ab: Point2) -> Point2 {
        let m = self.eigen_inverse();
        [
            (m[0][0] * ab[0] + m[0][1] * ab[1]) / self.radius,
            (m[1][0] * ab[0] + m[1][1] * ab[1]) / self.radius,
        ]
    }

    /// Section coordinates of scaled eigen-coordinates.
    pub fn from_eigen(&self, e: Point2) -> Point2 {
        let m = self.eigenbasis;
        [
            self.radius * (m[0][0] * e[0] + m[0][1] * e[1]),
            self.radius * (m[1][0] * e[0] + m[1][1] * e[1]),
        ]
    }

    fn conjugacy_scaled(&self, e: Point2) -> Point2 {
        let x = e[0] + self.x_terms.iter().zip(&self.x_coeffs).map(|(&m, c)| c * mono(m, e)).sum::<f64>();
        let y = e[1] + self.y_terms.iter().zip(&self.y_coeffs).map(|(&m, c)| c * mono(m, e)).sum::<f64>();
        [x, y]
    }

    /// Chart coordinates `(x, y)` of a section point.
    pub fn to_chart(&self, ab: Point2) -> Point2 {
        let c = self.conjugacy_scaled(self.eigen_coords(ab));
        [c[0] * self.radius, c[1] * self.radius]
    }

    /// Section coordinates of chart coordinates `(x, y)`, by Newton on the conjugacy.
    pub fn from_chart(&self, xy: Point2) -> Option<Point2> {
        let target = [xy[0] / self.radius, xy[1] / self.radius];
        let mut e = target;
        for _ in 0..50 {
            let c = self.conjugacy_scaled(e);
            let f = [c[0] - target[0], c[1] - target[1]];
            if f[0].abs().max(f[1].abs()) < 1e-15 {
                return Some(self.from_eigen(e));
            }
            let h = 1e-7;
            let cx = self.conjugacy_scaled([e[0] + h, e[1]]);
            let cy = self.conjugacy_scaled([e[0], e[1] + h]);
            let j = [[(cx[0] - c[0]) / h, (cy[0] - c[0]) / h], [(cx[1] - c[1]) / h, (cy[1] - c[1]) / h]];
            let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
            if det.abs() < 1e-14 {
                return None;
            }
            e[0] -= (j[1][1] * f[0] - j[0][1] * f[1]) / det;
            e[1] -= (j[0][0] * f[1] - j[1][0] * f[0]) / det;
        }
        let c = self.conjugacy_scaled(e);
        ((c[0] - target[0]).abs().max((c[1] - target[1]).abs()) < 1e-12).then(|| self.from_eigen(e))
    }

    /// Chart coordinates of an ambient point lying on the section.
    pub fn chart_of_point(&self, z: &[f64]) -> Point2 {
        self.to_chart(self.section.coords(z))
    }

    pub fn u(&self, w: f64) -> f64 {
        horner(&self.u_series, w)
    }

    /// The normal-form return map in chart coordinates.
    pub fn model_map(&self, p: Point2) -> Point2 {
        let s = self.period * self.u(p[0] * p[1]);
        [p[0] * (-s).exp(), p[1] * s.exp()]
    }
}

/// Fits a Moser chart of radius `radius` around a hyperbolic orbit.
pub fn fit_normal_form<F: Flow<f64> + ?Sized>(
    flow: &F,
    orbit: &PeriodicOrbit,
    radius: f64,
    opts: &NormalFormOptions,
) -> Result<NormalFormChart> {
    if !orbit.is_hyperbolic() {
        return Err(ReebError::InvalidParameter("normal form requires a hyperbolic orbit".into()));
    }
    if !(radius > 0.0) || opts.order < 1 || opts.grid < 3 {
        return Err(ReebError::InvalidParameter("radius, order and grid must be positive".into()));
    }
    let mu_u = orbit.floquet.multipliers[1].0;
    let mu_s = orbit.floquet.multipliers[0].0;
    if !(mu_u > 1.0 && mu_s > 0.0) {
        return Err(ReebError::InvalidParameter(format!(
            "multipliers ({mu_s}, {mu_u}) are not positive real; the chart needs an orientation-preserving saddle"
        )));
    }
    let section = SectionFrame::new(flow, orbit, &opts.hit.integrator)?;
    let m = orbit.floquet.monodromy;
    let eigvec = |lam: f64| -> Point2 {
        let a = [m[0][1], lam - m[0][0]];
        let b = [lam - m[1][1], m[1][0]];
        let v = if a[0].hypot(a[1]) >= b[0].hypot(b[1]) { a } else { b };
        let n = v[0].hypot(v[1]);
        let s = if v[0].abs() >= v[1].abs() { v[0].signum() } else { v[1].signum() };
        [s * v[0] / n, s * v[1] / n]
    };
    let (vs, vu) = (eigvec(mu_s), eigvec(mu_u));
    let kmax = (opts.order - 1) / 2;
    let all = monomials(opts.order);
    let x_terms: Vec<_> = all.iter().copied().filter(|&(i, j)| i != j + 1).collect();
    let y_terms: Vec<_> = all.iter().copied().filter(|&(i, j)| j != i + 1).collect();
    let mut chart = NormalFormChart {
        model: flow.name().to_string(),
        orbit_state: orbit.state.clone(),
        period: orbit.period,
        section,
        eigenbasis: [[vs[0], vu[0]], [vs[1], vu[1]]],
        unstable_multiplier: mu_u,
        radius,
        order: opts.order,
        x_coeffs: vec![0.0; x_terms.len()],
        x_terms,
        y_coeffs: vec![0.0; y_terms.len()],
        y_terms,
        u_series: {
            let mut u = vec![0.0; kmax + 1];
            u[0] = mu_u.ln() / orbit.period;
            u
        },
        residual: f64::INFINITY,
        iterations: 0,
    };

    // Pairs (p, P(p)) in scaled eigen-coordinates, p on a rectangle that the
    // return map stretches into the chart's unstable arm.
    let height = (opts.aspect / mu_u).min(1.0);
    let lin = |k: usize, h: f64| -h + 2.0 * h * k as f64 / (opts.grid - 1) as f64;
    let seeds: Vec<Point2> = (0..opts.grid)
        .flat_map(|i| (0..opts.grid).map(move |j| (i, j)))
        .map(|(i, j)| [lin(i, 1.0), lin(j, height)])
        .collect();
    let pairs: Vec<(Point2, Point2)> = seeds
        .par_iter()
        .map(|&e| -> Result<(Point2, Point2)> {
            let z = chart.section.embed(flow, chart.from_eigen(e));
            let (_, w) = chart.section.first_return(flow, &z, &opts.hit)?;
            Ok((e, chart.eigen_coords(chart.section.coords(&w))))
        })
        .collect::<Result<_>>()?;

    gauss_newton(&mut chart, &pairs, opts)?;
    if chart.residual * radius > opts.tol_nf {
        return Err(ReebError::Numerical(format!(
            "normal-form residual {:e} exceeds {:e} at radius {radius}; shrink the radius",
            chart.residual * radius,
            opts.tol_nf
        )));
    }
    Ok(chart)
}

/// Unknowns: conjugacy coefficients for `x`, for `y`, then the scaled `U_k`.
fn gauss_newton(chart: &mut NormalFormChart, pairs: &[(Point2, Point2)], opts: &NormalFormOptions) -> Result<()> {
    let nx = chart.x_terms.len();
    let ny = chart.y_terms.len();
    let mut uhat = chart.scaled_u();
    let nu = uhat.len();
    let cols = nx + ny + nu;
    let rows = 2 * pairs.len();

    let residuals = |c: &NormalFormChart, u: &[f64]| -> Vec<f64> {
        let mut r = Vec::with_capacity(rows);
        for &(p, q) in pairs {
            let np = c.conjugacy_scaled(p);
            let nq = c.conjugacy_scaled(q);
            let s = horner(u, np[0] * np[1]);
            r.push(nq[0] - np[0] * (-s).exp());
            r.push(nq[1] - np[1] * s.exp());
        }
        r
    };
    let max_abs = |r: &[f64]| r.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    let sum_sq = |r: &[f64]| r.iter().map(|v| v * v).sum::<f64>();

    let mut r = residuals(chart, &uhat);
    let mut iterations = 0;
    for it in 0..opts.max_iterations {
        iterations = it + 1;
        let mut jac = vec![0.0; rows * cols];
        for (k, &(p, q)) in pairs.iter().enumerate() {
            let np = chart.conjugacy_scaled(p);
            let w = np[0] * np[1];
            let s = horner(&uhat, w);
            let ds = horner_prime(&uhat, w);
            let (em, ep) = ((-s).exp(), s.exp());
            // Derivatives of the model map at N(p).
            let fxx = em * (1.0 - np[0] * ds * np[1]);
            let fxy = -np[0] * em * ds * np[0];
            let fyx = np[1] * ep * ds * np[1];
            let fyy = ep * (1.0 + np[1] * ds * np[0]);
            let (rx, ry) = (2 * k * cols, (2 * k + 1) * cols);
            for (m, &e) in chart.x_terms.iter().enumerate() {
                let (mq, mp) = (mono(e, q), mono(e, p));
                jac[rx + m] = mq - fxx * mp;
                jac[ry + m] = -fyx * mp;
            }
            for (m, &e) in chart.y_terms.iter().enumerate() {
                let (mq, mp) = (mono(e, q), mono(e, p));
                jac[rx + nx + m] = -fxy * mp;
                jac[ry + nx + m] = mq - fyy * mp;
            }
            for kk in 0..nu {
                let wk = w.powi(kk as i32);
                jac[rx + nx + ny + kk] = np[0] * em * wk;
                jac[ry + nx + ny + kk] = -np[1] * ep * wk;
            }
        }
        let rhs: Vec<f64> = r.iter().map(|v| -v).collect();
        let step = lstsq(&jac, rows, cols, &rhs)?;
        let base = sum_sq(&r);
        let mut lambda = 1.0;
        let mut accepted = false;
        while lambda > 1e-6 {
            let mut trial = chart.clone();
            let mut tu = uhat.clone();
            for m in 0..nx {
                trial.x_coeffs[m] += lambda * step[m];
            }
            for m in 0..ny {
                trial.y_coeffs[m] += lambda * step[nx + m];
            }
            for kk in 0..nu {
                tu[kk] += lambda * step[nx + ny + kk];
            }
            let tr = residuals(&trial, &tu);
            if sum_sq(&tr) <= base {
                *chart = trial;
                uhat = tu;
                r = tr;
                accepted = true;
                break;
            }
            lambda *= 0.5;
        }
        let step_norm = step.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
        if !accepted || step_norm < 1e-15 || max_abs(&r) < 1e-15 {
            break;
        }
    }
    let r2 = chart.radius * chart.radius;
    chart.u_series = uhat
        .iter()
        .enumerate()
        .map(|(k, c)| c / (chart.period * r2.powi(k as i32)))
        .collect();
    chart.residual = max_abs(&r);
    chart.iterations = iterations;
    Ok(())
}

/// Conservation of `xy` along trajectories crossing the chart.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitReport {
    pub trajectories: usize,
    pub max_drift: f64,
    pub mean_returns: f64,
    pub drifts: Vec<f64>,
    pub returns: Vec<usize>,
}

/// Follows `count` trajectories entering along the stable arm and leaving
/// along the unstable arm, recording `max |x y - x₀ y₀|` at each return.
pub fn transit_drift<F: Flow<f64> + ?Sized>(
    flow: &F,
    chart: &NormalFormChart,
    count: usize,
    opts: &HitOptions,
) -> Result<TransitReport> {
    let height = (1.0 / chart.unstable_multiplier).min(1.0);
    let results: Vec<(f64, usize)> = (0..count)
        .into_par_iter()
        .map(|i| -> Result<(f64, usize)> {
            let frac = (i as f64 + 0.5) / count as f64;
            let xi = if i % 2 == 0 { 0.9 } else { -0.9 };
            let sign = if (i / 2) % 2 == 0 { 1.0 } else { -1.0 };
            // Products spread logarithmically over four decades.
            let w = sign * height * 10f64.powf(-4.0 * frac);
            let start = [xi * chart.radius, w / xi * chart.radius];
            let ab = chart
                .from_chart(start)
                .ok_or_else(|| ReebError::Numerical("chart inversion failed for a transit seed".into()))?;
            let mut e = chart.eigen_coords(ab);
            let mut z = chart.section.embed(flow, ab);
            let c0 = chart.to_chart(chart.section.coords(&z));
            let w0 = c0[0] * c0[1];
            let mut drift = 0.0_f64;
            let mut returns = 0;
            while e[0].abs() <= 1.0 && e[1].abs() <= 1.0 && returns < 64 {
                let (_, next) = chart.section.first_return(flow, &z, opts)?;
                z = next;
                let ab = chart.section.coords(&z);
                e = chart.eigen_coords(ab);
                if e[1].abs() > 1.0 {
                    break;
                }
                let c = chart.to_chart(ab);
                drift = drift.max((c[0] * c[1] - w0).abs());
                returns += 1;
            }
            Ok((drift, returns))
        })
        .collect::<Result<_>>()?;
    let drifts: Vec<f64> = results.iter().map(|r| r.0).collect();
    Ok(TransitReport {
        trajectories: count,
        max_drift: drifts.iter().copied().fold(0.0, f64::max),
        mean_returns: results.iter().map(|r| r.1 as f64).sum::<f64>() / count.max(1) as f64,
        drifts,
        returns: results.iter().map(|r| r.1).collect(),
    })
}
