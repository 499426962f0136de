use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{ReebError, Result};
use crate::flowcore::{integrate_variational, IntegratorOptions};
use crate::linalg::{inverse, matmul};
use crate::models::Flow;
use crate::orbits::{frame_basis, PeriodicOrbit};

/// Counter-clockwise quarter turn on frame coordinates.
pub const J0: [[f64; 2]; 2] = [[0.0, -1.0], [1.0, 0.0]];

#[derive(Debug, Clone, Copy)]
pub struct SpectrumOptions {
    pub integrator: IntegratorOptions,
    /// Number of eigenvalues nearest 0 that are resolved and reported.
    pub window: usize,
    /// Eigenfunctions whose smallest modulus falls below this fraction of
    /// their largest are rejected.
    pub min_modulus_ratio: f64,
    pub tol_spec: f64,
    /// Constant symplectic `P` (det 1); the complex structure becomes
    /// `P J0 P⁻¹` and windings are measured on `P v`.
    pub conjugation: [[f64; 2]; 2],
}

impl Default for SpectrumOptions {
    fn default() -> Self {
        Self {
            integrator: IntegratorOptions::with_tol(1e-12),
            window: 40,
            min_modulus_ratio: 1e-6,
            tol_spec: 1e-6,
            conjugation: [[1.0, 0.0], [0.0, 1.0]],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Eigenpair {
    pub value: f64,
    /// `None` when the eigenfunction comes too close to zero.
    pub winding: Option<i64>,
    pub modulus_ratio: f64,
    #[serde(skip)]
    pub eigenfunction: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticSpectrum {
    pub model: String,
    pub frame: String,
    pub period: f64,
    pub grid: usize,
    /// Window of eigenpairs nearest 0, in increasing eigenvalue order.
    pub eigenpairs: Vec<Eigenpair>,
}

/// Symmetric generator `S(t)` of the transverse linearized flow `w' = J0 S w`
/// in frame coordinates, sampled at `count` equally spaced times.
pub fn transverse_generator<F: Flow<f64> + ?Sized>(
    flow: &F,
    orbit: &PeriodicOrbit,
    count: usize,
    integrator: &IntegratorOptions,
) -> Result<Vec<[[f64; 2]; 2]>> {
    let var = integrate_variational(flow, &orbit.state, 0.0, orbit.period, integrator)?;
    let mut out = Vec::with_capacity(count);
    for j in 0..count {
        let t = orbit.period * j as f64 / count as f64;
        let (z, _) = var
            .eval(t)
            .ok_or_else(|| ReebError::Numerical(format!("no dense output at t = {t}")))?;
        let k = frame_generator(flow, &z)?;
        // S = -J0 K, symmetrized.
        let s = [
            [k[1][0], k[1][1]],
            [-k[0][0], -k[0][1]],
        ];
        let off = 0.5 * (s[0][1] + s[1][0]);
        out.push([[s[0][0], off], [off, s[1][1]]]);
    }
    Ok(out)
}

/// `K = C (Df E - DE[f])` where `E = [e1 e2]` and `C` extracts frame
/// coordinates from the basis `[f, e1, e2, complement]`.
pub fn frame_generator<F: Flow<f64> + ?Sized>(flow: &F, z: &[f64]) -> Result<[[f64; 2]; 2]> {
    let n = flow.dim();
    let b = frame_basis(flow, z)?;
    let binv = inverse(&b, n)?;
    let mut jac = vec![0.0; n * n];
    flow.jacobian(z, &mut jac);
    let f = flow.field_vec(z);
    let scale = f.iter().map(|v| v * v).sum::<f64>().sqrt();
    let h = 1e-5 / scale.max(1e-12);
    let shifted = |s: f64| -> Result<(Vec<f64>, Vec<f64>)> {
        let zz: Vec<f64> = z.iter().zip(&f).map(|(a, b)| a + s * b).collect();
        let fr = flow
            .frame(&zz)
            .ok_or_else(|| ReebError::Numerical("frame degenerates along the orbit".into()))?;
        Ok((fr.e1, fr.e2))
    };
    let (p1, p2) = shifted(h)?;
    let (m1, m2) = shifted(-h)?;
    let fr = flow
        .frame(z)
        .ok_or_else(|| ReebError::Numerical("frame degenerates along the orbit".into()))?;
    let mut k = [[0.0; 2]; 2];
    for (col, (e, (ep, em))) in [(&fr.e1, (&p1, &m1)), (&fr.e2, (&p2, &m2))].into_iter().enumerate() {
        let de: Vec<f64> = ep.iter().zip(em).map(|(a, b)| (a - b) / (2.0 * h)).collect();
        let dfe = matmul(&jac, e, n, n, 1);
        let v: Vec<f64> = dfe.iter().zip(&de).map(|(a, b)| a - b).collect();
        for row in 0..2 {
            k[row][col] = (0..n).map(|j| binv[(row + 1) * n + j] * v[j]).sum();
        }
    }
    Ok(k)
}

/// Fourier differentiation matrix on `m` (odd) equally spaced points of a
/// circle of length `period`.
pub fn fourier_differentiation(m: usize, period: f64) -> DMatrix<f64> {
    let h = std::f64::consts::TAU / m as f64;
    let scale = std::f64::consts::TAU / period;
    DMatrix::from_fn(m, m, |i, j| {
        if i == j {
            0.0
        } else {
            let d = i as f64 - j as f64;
            let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
            scale * 0.5 * sign / (0.5 * d * h).sin()
        }
    })
}

/// Spectrum of `-J0 d/dt - S(t)` discretized by Fourier collocation.
pub fn spectrum_from_generator(
    s: &[[[f64; 2]; 2]],
    period: f64,
    opts: &SpectrumOptions,
) -> Result<Vec<Eigenpair>> {
    let m = s.len();
    if m % 2 == 0 {
        return Err(ReebError::InvalidParameter("collocation grid must be odd".into()));
    }
    let p = opts.conjugation;
    let det = p[0][0] * p[1][1] - p[0][1] * p[1][0];
    if (det - 1.0).abs() > 1e-12 {
        return Err(ReebError::InvalidParameter("conjugation must have determinant 1".into()));
    }
    // In v = P⁻¹ w coordinates the generator is conjugated by P.
    let pinv = [[p[1][1], -p[0][1]], [-p[1][0], p[0][0]]];
    let conj = |a: [[f64; 2]; 2]| -> [[f64; 2]; 2] {
        let mut k = [[0.0; 2]; 2];
        // K = J0 S, K' = P⁻¹ K P, S' = -J0 K'.
        let kk = mul2(J0, a);
        let kp = mul2(pinv, mul2(kk, p));
        let sp = mul2([[0.0, 1.0], [-1.0, 0.0]], kp);
        k[0][0] = sp[0][0];
        k[1][1] = sp[1][1];
        k[0][1] = 0.5 * (sp[0][1] + sp[1][0]);
        k[1][0] = k[0][1];
        k
    };
    let d = fourier_differentiation(m, period);
    let mut a = DMatrix::<f64>::zeros(2 * m, 2 * m);
    for i in 0..m {
        for j in 0..m {
            let dij = d[(i, j)];
            if dij == 0.0 {
                continue;
            }
            for c in 0..2 {
                for e in 0..2 {
                    a[(2 * i + c, 2 * j + e)] -= J0[c][e] * dij;
                }
            }
        }
        let si = conj(s[i]);
        for c in 0..2 {
            for e in 0..2 {
                a[(2 * i + c, 2 * i + e)] -= si[c][e];
            }
        }
    }
    let eig = SymmetricEigen::new(a);
    let mut order: Vec<usize> = (0..2 * m).collect();
    order.sort_by(|&x, &y| {
        eig.eigenvalues[x]
            .abs()
            .partial_cmp(&eig.eigenvalues[y].abs())
            .unwrap()
    });
    order.truncate(opts.window.min(2 * m));
    order.sort_by(|&x, &y| eig.eigenvalues[x].partial_cmp(&eig.eigenvalues[y]).unwrap());
    Ok(order
        .into_iter()
        .map(|idx| {
            let col = eig.eigenvectors.column(idx);
            let func: Vec<[f64; 2]> = (0..m)
                .map(|i| {
                    let v = [col[2 * i], col[2 * i + 1]];
                    [p[0][0] * v[0] + p[0][1] * v[1], p[1][0] * v[0] + p[1][1] * v[1]]
                })
                .collect();
            let (winding, ratio) = winding_number(&func, opts.min_modulus_ratio);
            Eigenpair {
                value: eig.eigenvalues[idx],
                winding,
                modulus_ratio: ratio,
                eigenfunction: func,
            }
        })
        .collect())
}

fn mul2(a: [[f64; 2]; 2], b: [[f64; 2]; 2]) -> [[f64; 2]; 2] {
    [
        [a[0][0] * b[0][0] + a[0][1] * b[1][0], a[0][0] * b[0][1] + a[0][1] * b[1][1]],
        [a[1][0] * b[0][0] + a[1][1] * b[1][0], a[1][0] * b[0][1] + a[1][1] * b[1][1]],
    ]
}

/// Winding of a closed loop of plane vectors around 0 from its unwrapped
/// phase, and the ratio of its smallest to largest modulus.
pub fn winding_number(func: &[[f64; 2]], min_ratio: f64) -> (Option<i64>, f64) {
    let moduli: Vec<f64> = func.iter().map(|v| v[0].hypot(v[1])).collect();
    let max = moduli.iter().cloned().fold(0.0, f64::max);
    let min = moduli.iter().cloned().fold(f64::INFINITY, f64::min);
    let ratio = if max > 0.0 { min / max } else { 0.0 };
    if ratio < min_ratio {
        return (None, ratio);
    }
    let phase: Vec<f64> = func.iter().map(|v| v[1].atan2(v[0])).collect();
    let mut total = 0.0;
    for i in 0..phase.len() {
        let mut d = phase[(i + 1) % phase.len()] - phase[i];
        d -= std::f64::consts::TAU * (d / std::f64::consts::TAU).round();
        total += d;
    }
    (Some((total / std::f64::consts::TAU).round() as i64), ratio)
}

/// Asymptotic operator spectrum along `orbit` on a grid of `n` points (even
/// sizes are bumped to the next odd size).
pub fn asymptotic_spectrum<F: Flow<f64> + ?Sized>(
    orbit: &PeriodicOrbit,
    flow: &F,
    n: usize,
    opts: &SpectrumOptions,
) -> Result<AsymptoticSpectrum> {
    let m = if n % 2 == 0 { n + 1 } else { n };
    if m < 5 {
        return Err(ReebError::InvalidParameter("grid too small".into()));
    }
    let s = transverse_generator(flow, orbit, m, &opts.integrator)?;
    let eigenpairs = spectrum_from_generator(&s, orbit.period, opts)?;
    Ok(AsymptoticSpectrum {
        model: flow.name().to_string(),
        frame: flow.frame_id().to_string(),
        period: orbit.period,
        grid: m,
        eigenpairs,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CzReport {
    pub index: i64,
    pub wind_negative: i64,
    pub wind_nonnegative: i64,
    pub largest_negative: f64,
    pub smallest_nonnegative: f64,
    /// An eigenvalue lies within `tol_spec` of 0; the index is the generalized one.
    pub degenerate: bool,
    pub frame: String,
    pub grid: usize,
}

/// `wind(largest negative eigenvalue) + wind(smallest non-negative eigenvalue)`.
pub fn cz_index(spec: &AsymptoticSpectrum, tol_spec: f64) -> Result<CzReport> {
    let neg = spec
        .eigenpairs
        .iter()
        .filter(|e| e.value < 0.0)
        .max_by(|a, b| a.value.partial_cmp(&b.value).unwrap())
        .ok_or_else(|| ReebError::Numerical("no negative eigenvalue in window".into()))?;
    let pos = spec
        .eigenpairs
        .iter()
        .filter(|e| e.value >= 0.0)
        .min_by(|a, b| a.value.partial_cmp(&b.value).unwrap())
        .ok_or_else(|| ReebError::Numerical("no non-negative eigenvalue in window".into()))?;
    let wn = neg.winding.ok_or_else(|| {
        ReebError::Numerical(format!("eigenfunction for {} nearly vanishes", neg.value))
    })?;
    let wp = pos.winding.ok_or_else(|| {
        ReebError::Numerical(format!("eigenfunction for {} nearly vanishes", pos.value))
    })?;
    Ok(CzReport {
        index: wn + wp,
        wind_negative: wn,
        wind_nonnegative: wp,
        largest_negative: neg.value,
        smallest_nonnegative: pos.value,
        degenerate: neg.value.abs() < tol_spec || pos.value < tol_spec,
        frame: spec.frame.clone(),
        grid: spec.grid,
    })
}

/// Windings are non-decreasing in the eigenvalue and every winding strictly
/// inside the window occurs exactly twice.
pub fn winding_structure_ok(spec: &AsymptoticSpectrum) -> bool {
    let w: Vec<i64> = match spec.eigenpairs.iter().map(|e| e.winding).collect::<Option<Vec<_>>>() {
        Some(w) => w,
        None => return false,
    };
    if w.windows(2).any(|p| p[1] < p[0]) {
        return false;
    }
    let (lo, hi) = (w[0], *w.last().unwrap());
    (lo + 1..hi).all(|k| w.iter().filter(|&&x| x == k).count() == 2)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefinedIndex {
    pub coarse: CzReport,
    pub fine: CzReport,
    /// Largest change of the eigenvalues nearest 0 under refinement.
    pub eigenvalue_shift: f64,
}

/// CZ index on grids `n` and `2n` in parallel; errors if they disagree.
pub fn cz_index_refined<F: Flow<f64> + ?Sized>(
    orbit: &PeriodicOrbit,
    flow: &F,
    n: usize,
    opts: &SpectrumOptions,
) -> Result<RefinedIndex> {
    let grids = [n, 2 * n];
    let spectra: Vec<Result<AsymptoticSpectrum>> = grids
        .par_iter()
        .map(|&g| asymptotic_spectrum(orbit, flow, g, opts))
        .collect();
    let mut it = spectra.into_iter();
    let coarse_spec = it.next().unwrap()?;
    let fine_spec = it.next().unwrap()?;
    let coarse = cz_index(&coarse_spec, opts.tol_spec)?;
    let fine = cz_index(&fine_spec, opts.tol_spec)?;
    let shift = (coarse.largest_negative - fine.largest_negative)
        .abs()
        .max((coarse.smallest_nonnegative - fine.smallest_nonnegative).abs());
    if coarse.index != fine.index {
        return Err(ReebError::Numerical(format!(
            "index changes under refinement: {} on grid {} vs {} on grid {}",
            coarse.index, coarse.grid, fine.index, fine.grid
        )));
    }
    Ok(RefinedIndex {
        coarse,
        fine,
        eigenvalue_shift: shift,
    })
}
