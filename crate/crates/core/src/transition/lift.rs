//! Lifts of transition maps to the strip `(t, r) ∈ R × [0, r₀)` with the
//! period normalized to one.

use serde::{Deserialize, Serialize};

use crate::error::{ReebError, Result};
use crate::linalg::lstsq;
use crate::models::Mat2;
use crate::transition::NormalFormChart;

/// Passage past a hyperbolic orbit from `{x = δ/2}` to `{y = δ/2}`:
/// `(t, r) ↦ (t + Δt(r), r)` with `Δt(r) = ln(δ / 2r) / (T u(δ r / 2))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalLift {
    pub u_series: Vec<f64>,
    pub period: f64,
    pub delta: f64,
}

impl LocalLift {
    pub fn new(u_series: Vec<f64>, period: f64, delta: f64) -> Result<Self> {
        if u_series.first().map_or(true, |&c| c <= 0.0) {
            return Err(ReebError::InvalidParameter("u(0) must be positive".into()));
        }
        if !(period > 0.0) || !(delta > 0.0) {
            return Err(ReebError::InvalidParameter("period and delta must be positive".into()));
        }
        Ok(Self {
            u_series,
            period,
            delta,
        })
    }

    fn u(&self, w: f64) -> f64 {
        self.u_series.iter().rev().fold(0.0, |acc, &c| acc * w + c)
    }

    fn u_prime(&self, w: f64) -> f64 {
        self.u_series
            .iter()
            .enumerate()
            .skip(1)
            .rev()
            .fold(0.0, |acc, (k, &c)| acc * w + c * k as f64)
    }

    /// `g(r) = ln(δ/2) / (T u(δr/2))`.
    pub fn g(&self, r: f64) -> f64 {
        (self.delta / 2.0).ln() * self.h(r)
    }

    /// `h(r) = 1 / (T u(δr/2))`.
    pub fn h(&self, r: f64) -> f64 {
        1.0 / (self.period * self.u(self.delta * r / 2.0))
    }

    fn h_prime(&self, r: f64) -> f64 {
        let w = self.delta * r / 2.0;
        let u = self.u(w);
        -self.u_prime(w) * self.delta / 2.0 / (self.period * u * u)
    }

    /// Normalized passage time `g(r) - h(r) ln r`.
    pub fn delta_t(&self, r: f64) -> f64 {
        self.h(r) * (self.delta / (2.0 * r)).ln()
    }

    /// Passage time in the flow's own time units.
    pub fn raw_delta_t(&self, r: f64) -> f64 {
        self.period * self.delta_t(r)
    }

    /// `Δt'(r) = g' - h' ln r - h / r`.
    pub fn twist_derivative(&self, r: f64) -> f64 {
        self.h_prime(r) * (self.delta / (2.0 * r)).ln() - self.h(r) / r
    }

    pub fn domain(&self) -> f64 {
        self.delta / 2.0
    }
}

/// Real trigonometric polynomial `c₀ + Σ aₖ cos 2πkt + bₖ sin 2πkt`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FourierSeries {
    pub constant: f64,
    pub cos: Vec<f64>,
    pub sin: Vec<f64>,
}

impl FourierSeries {
    pub fn constant(c: f64) -> Self {
        Self {
            constant: c,
            cos: Vec::new(),
            sin: Vec::new(),
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        let w = std::f64::consts::TAU * t;
        let mut s = self.constant;
        for (k, (a, b)) in self.cos.iter().zip(&self.sin).enumerate() {
            let (sn, cs) = (w * (k + 1) as f64).sin_cos();
            s += a * cs + b * sn;
        }
        s
    }

    pub fn derivative(&self, t: f64) -> f64 {
        let w = std::f64::consts::TAU * t;
        let mut s = 0.0;
        for (k, (a, b)) in self.cos.iter().zip(&self.sin).enumerate() {
            let f = std::f64::consts::TAU * (k + 1) as f64;
            let (sn, cs) = (w * (k + 1) as f64).sin_cos();
            s += f * (b * cs - a * sn);
        }
        s
    }

    fn basis(modes: usize, t: f64) -> Vec<f64> {
        let w = std::f64::consts::TAU * t;
        let mut out = vec![1.0];
        for k in 1..=modes {
            out.push((w * k as f64).cos());
        }
        for k in 1..=modes {
            out.push((w * k as f64).sin());
        }
        out
    }

    fn from_coeffs(c: &[f64], modes: usize) -> Self {
        Self {
            constant: c[0],
            cos: c[1..=modes].to_vec(),
            sin: c[modes + 1..=2 * modes].to_vec(),
        }
    }
}

/// Lift of a passage between two annular sections in the form
/// `X = H(t) + r X̃(t, r)`, `Y = r Ỹ(t, r)`, with `H(t) = t + periodic`.
///
/// `x_tilde[j]` and `y_tilde[j]` are the coefficients of `r^j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlobalLift {
    pub h: FourierSeries,
    pub x_tilde: Vec<FourierSeries>,
    pub y_tilde: Vec<FourierSeries>,
    /// Largest fit defect over the sampling grid (zero for closed forms).
    pub fit_residual: f64,
    pub r_max: f64,
}

fn poly_fourier(series: &[FourierSeries], t: f64, r: f64) -> f64 {
    series.iter().rev().fold(0.0, |acc, s| acc * r + s.eval(t))
}

fn poly_fourier_dt(series: &[FourierSeries], t: f64, r: f64) -> f64 {
    series.iter().rev().fold(0.0, |acc, s| acc * r + s.derivative(t))
}

fn poly_fourier_dr(series: &[FourierSeries], t: f64, r: f64) -> f64 {
    series
        .iter()
        .enumerate()
        .skip(1)
        .rev()
        .fold(0.0, |acc, (j, s)| acc * r + j as f64 * s.eval(t))
}

impl GlobalLift {
    /// `H(t) = t + shift + amp sin 2πt`, `X̃ = x_tilde`, `Ỹ = y_mean + y_amp cos 2πt`.
    pub fn trigonometric(shift: f64, amp: f64, x_tilde: f64, y_mean: f64, y_amp: f64, r_max: f64) -> Result<Self> {
        if amp.abs() * std::f64::consts::TAU >= 1.0 {
            return Err(ReebError::InvalidParameter("H would fail to be monotone".into()));
        }
        if y_amp.abs() >= y_mean {
            return Err(ReebError::InvalidParameter("Ỹ must stay positive".into()));
        }
        Ok(Self {
            h: FourierSeries {
                constant: shift,
                cos: vec![0.0],
                sin: vec![amp],
            },
            x_tilde: vec![FourierSeries::constant(x_tilde)],
            y_tilde: vec![FourierSeries {
                constant: y_mean,
                cos: vec![y_amp],
                sin: vec![0.0],
            }],
            fit_residual: 0.0,
            r_max,
        })
    }

    /// Periodic part of `H`.
    pub fn h_value(&self, t: f64) -> f64 {
        t + self.h.eval(t)
    }

    pub fn h_prime(&self, t: f64) -> f64 {
        1.0 + self.h.derivative(t)
    }

    pub fn y_tilde_value(&self, t: f64, r: f64) -> f64 {
        poly_fourier(&self.y_tilde, t, r)
    }

    pub fn eval(&self, t: f64, r: f64) -> (f64, f64) {
        (
            self.h_value(t) + r * poly_fourier(&self.x_tilde, t, r),
            r * poly_fourier(&self.y_tilde, t, r),
        )
    }

    pub fn jacobian(&self, t: f64, r: f64) -> Mat2 {
        let xt = self.h_prime(t) + r * poly_fourier_dt(&self.x_tilde, t, r);
        let xr = poly_fourier(&self.x_tilde, t, r) + r * poly_fourier_dr(&self.x_tilde, t, r);
        let yt = r * poly_fourier_dt(&self.y_tilde, t, r);
        let yr = poly_fourier(&self.y_tilde, t, r) + r * poly_fourier_dr(&self.y_tilde, t, r);
        [[xt, xr], [yt, yr]]
    }
}

/// Settings for fitting a [`GlobalLift`] to sampled passages.
#[derive(Debug, Clone, Copy)]
pub struct GlobalFitOptions {
    pub modes: usize,
    pub r_degree: usize,
    pub t_samples: usize,
    pub r_samples: usize,
    pub r_max: f64,
}

impl Default for GlobalFitOptions {
    fn default() -> Self {
        Self {
            modes: 4,
            r_degree: 3,
            t_samples: 32,
            r_samples: 8,
            r_max: 0.05,
        }
    }
}

/// Fits the global form to a sampled passage `(t, r) ↦ (T, R)` on
/// `t ∈ [0, 1)`, `r ∈ (0, r_max]`, checking `H' > 0` and `Ỹ > 0`.
pub fn global_lift<P>(passage: P, opts: &GlobalFitOptions) -> Result<GlobalLift>
where
    P: Fn(f64, f64) -> Result<(f64, f64)> + Sync,
{
    use rayon::prelude::*;
    if opts.t_samples < 2 * opts.modes + 1 || opts.r_samples < opts.r_degree + 1 {
        return Err(ReebError::InvalidParameter("sampling grid too small for the requested fit".into()));
    }
    let grid: Vec<(f64, f64)> = (0..opts.t_samples)
        .flat_map(|i| (0..opts.r_samples).map(move |j| (i, j)))
        .map(|(i, j)| {
            (
                i as f64 / opts.t_samples as f64,
                opts.r_max * (j + 1) as f64 / opts.r_samples as f64,
            )
        })
        .collect();
    let values: Vec<(f64, f64)> = grid
        .par_iter()
        .map(|&(t, r)| passage(t, r))
        .collect::<Result<_>>()?;

    let nf = 2 * opts.modes + 1;
    let deg = opts.r_degree;
    // X - t = Σ_{j=0}^{deg} r^j F_j(t), Y / r = Σ_{j=0}^{deg-1} r^j G_j(t).
    let cols_x = nf * (deg + 1);
    let cols_y = nf * deg.max(1);
    let rows = grid.len();
    let mut ax = vec![0.0; rows * cols_x];
    let mut ay = vec![0.0; rows * cols_y];
    let mut bx = vec![0.0; rows];
    let mut by = vec![0.0; rows];
    for (k, (&(t, r), &(tt, rr))) in grid.iter().zip(&values).enumerate() {
        let b = FourierSeries::basis(opts.modes, t);
        for j in 0..=deg {
            for (m, v) in b.iter().enumerate() {
                ax[k * cols_x + j * nf + m] = v * r.powi(j as i32);
            }
        }
        for j in 0..deg.max(1) {
            for (m, v) in b.iter().enumerate() {
                ay[k * cols_y + j * nf + m] = v * r.powi(j as i32);
            }
        }
        bx[k] = tt - t;
        by[k] = rr / r;
    }
    let cx = lstsq(&ax, rows, cols_x, &bx)?;
    let cy = lstsq(&ay, rows, cols_y, &by)?;
    let lift = GlobalLift {
        h: FourierSeries::from_coeffs(&cx[..nf], opts.modes),
        x_tilde: (1..=deg)
            .map(|j| FourierSeries::from_coeffs(&cx[j * nf..(j + 1) * nf], opts.modes))
            .collect(),
        y_tilde: (0..deg.max(1))
            .map(|j| FourierSeries::from_coeffs(&cy[j * nf..(j + 1) * nf], opts.modes))
            .collect(),
        fit_residual: 0.0,
        r_max: opts.r_max,
    };
    let fit_residual = grid
        .iter()
        .zip(&values)
        .map(|(&(t, r), &(tt, rr))| {
            let (x, y) = lift.eval(t, r);
            (x - tt).abs().max((y - rr).abs())
        })
        .fold(0.0, f64::max);

    for i in 0..16 * opts.t_samples {
        let t = i as f64 / (16 * opts.t_samples) as f64;
        if lift.h_prime(t) <= 0.0 {
            return Err(ReebError::Numerical(format!("fitted H is not increasing at t = {t}")));
        }
        for &r in &[0.0, opts.r_max] {
            if lift.y_tilde_value(t, r) <= 0.0 {
                return Err(ReebError::Numerical(format!(
                    "fitted Ỹ changes sign at (t, r) = ({t}, {r}); check the section orientation"
                )));
            }
        }
    }
    Ok(GlobalLift { fit_residual, ..lift })
}

/// Lift of a transition map on the normalized strip.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum TransitionLift {
    Identity,
    LocalExterior(LocalLift),
    Global(GlobalLift),
    Composed(ComposedLift),
}

/// `chain[0]` is applied first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComposedLift {
    pub chain: Vec<TransitionLift>,
    pub certificate: Option<crate::transition::TwistCertificate>,
}

impl TransitionLift {
    pub fn eval(&self, t: f64, r: f64) -> (f64, f64) {
        match self {
            TransitionLift::Identity => (t, r),
            TransitionLift::LocalExterior(l) => (t + l.delta_t(r), r),
            TransitionLift::Global(g) => g.eval(t, r),
            TransitionLift::Composed(c) => c.chain.iter().fold((t, r), |(a, b), l| l.eval(a, b)),
        }
    }

    pub fn jacobian(&self, t: f64, r: f64) -> Mat2 {
        match self {
            TransitionLift::Identity => [[1.0, 0.0], [0.0, 1.0]],
            TransitionLift::LocalExterior(l) => [[1.0, l.twist_derivative(r)], [0.0, 1.0]],
            TransitionLift::Global(g) => g.jacobian(t, r),
            TransitionLift::Composed(c) => {
                let mut p = (t, r);
                let mut acc = [[1.0, 0.0], [0.0, 1.0]];
                for l in &c.chain {
                    let j = l.jacobian(p.0, p.1);
                    acc = mul2(j, acc);
                    p = l.eval(p.0, p.1);
                }
                acc
            }
        }
    }

    /// True when every factor fixes `r`.
    pub fn preserves_radius(&self) -> bool {
        match self {
            TransitionLift::Identity | TransitionLift::LocalExterior(_) => true,
            TransitionLift::Global(_) => false,
            TransitionLift::Composed(c) => c.chain.iter().all(|l| l.preserves_radius()),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            TransitionLift::Identity => "identity",
            TransitionLift::LocalExterior(_) => "local-exterior",
            TransitionLift::Global(_) => "global",
            TransitionLift::Composed(_) => "composed",
        }
    }

    pub fn certificate(&self) -> Option<&crate::transition::TwistCertificate> {
        match self {
            TransitionLift::Composed(c) => c.certificate.as_ref(),
            _ => None,
        }
    }
}

pub(crate) fn mul2(a: Mat2, b: Mat2) -> Mat2 {
    [
        [a[0][0] * b[0][0] + a[0][1] * b[1][0], a[0][0] * b[0][1] + a[0][1] * b[1][1]],
        [a[1][0] * b[0][0] + a[1][1] * b[1][0], a[1][0] * b[0][1] + a[1][1] * b[1][1]],
    ]
}

/// Local exterior lift of a fitted chart between `{x = δ/2}` and `{y = δ/2}`.
pub fn local_exterior_lift(chart: &NormalFormChart, delta: f64) -> Result<TransitionLift> {
    if !(delta > 0.0 && delta < chart.radius) {
        return Err(ReebError::InvalidParameter(format!(
            "delta {delta} must lie in (0, {}) for this chart",
            chart.radius
        )));
    }
    Ok(TransitionLift::LocalExterior(LocalLift::new(
        chart.u_series.clone(),
        chart.period,
        delta,
    )?))
}
