//! Small dense helpers on top of nalgebra for the `f64` analysis layers.

use nalgebra::{DMatrix, DVector};

use crate::error::{ReebError, Result};

/// Minimum-norm least-squares solution of `a x = b` (row-major `a`).
pub fn lstsq(a: &[f64], rows: usize, cols: usize, b: &[f64]) -> Result<Vec<f64>> {
    let m = DMatrix::from_row_slice(rows, cols, a);
    let rhs = DVector::from_column_slice(b);
    let svd = m.svd(true, true);
    let tol = svd.singular_values.max() * 1e-13 * rows.max(cols) as f64;
    svd.solve(&rhs, tol)
        .map(|x| x.iter().copied().collect())
        .map_err(|e| ReebError::Numerical(format!("least-squares solve failed: {e}")))
}

/// Inverse of a row-major square matrix.
pub fn inverse(a: &[f64], n: usize) -> Result<Vec<f64>> {
    let m = DMatrix::from_row_slice(n, n, a);
    let inv = m
        .try_inverse()
        .ok_or_else(|| ReebError::Numerical("singular matrix".into()))?;
    Ok(inv.transpose().iter().copied().collect())
}

/// Row-major product of an `r x k` and a `k x c` matrix.
pub fn matmul(a: &[f64], b: &[f64], r: usize, k: usize, c: usize) -> Vec<f64> {
    let mut out = vec![0.0; r * c];
    for i in 0..r {
        for l in 0..k {
            let ail = a[i * k + l];
            if ail == 0.0 {
                continue;
            }
            for j in 0..c {
                out[i * c + j] += ail * b[l * c + j];
            }
        }
    }
    out
}

pub fn determinant(a: &[f64], n: usize) -> f64 {
    DMatrix::from_row_slice(n, n, a).determinant()
}

/// Complex eigenvalues `(re, im)` of a real 2x2 matrix.
pub fn eig2(m: [[f64; 2]; 2]) -> [(f64, f64); 2] {
    let tr = m[0][0] + m[1][1];
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let disc = tr * tr / 4.0 - det;
    if disc >= 0.0 {
        let s = disc.sqrt();
        // Avoid cancellation in the smaller root.
        let big = tr / 2.0 + s.copysign(tr);
        let small = if big != 0.0 { det / big } else { tr / 2.0 - s };
        let (lo, hi) = if big.abs() >= small.abs() { (small, big) } else { (big, small) };
        [(lo, 0.0), (hi, 0.0)]
    } else {
        let s = (-disc).sqrt();
        [(tr / 2.0, -s), (tr / 2.0, s)]
    }
}

/// Slope and intercept of the least-squares line through `(x, y)`, with the
/// standard error of the slope.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let resid: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - intercept - slope * a).powi(2))
        .sum();
    let se = if x.len() > 2 {
        (resid / (n - 2.0) / sxx).sqrt()
    } else {
        f64::INFINITY
    };
    (slope, intercept, se)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eig2_hyperbolic_and_elliptic() {
        let e = eig2([[2.0, 0.0], [0.0, 0.5]]);
        assert!((e[0].0 - 0.5).abs() < 1e-15 && (e[1].0 - 2.0).abs() < 1e-15);
        let (s, c) = 0.3f64.sin_cos();
        let e = eig2([[c, -s], [s, c]]);
        assert!((e[1].1 - s).abs() < 1e-15);
    }

    #[test]
    fn inverse_round_trip() {
        let a = [2.0, 1.0, 0.0, 1.0, 3.0, 1.0, 0.0, 1.0, 4.0];
        let inv = inverse(&a, 3).unwrap();
        let id = matmul(&a, &inv, 3, 3, 3);
        for i in 0..3 {
            for j in 0..3 {
                assert!((id[i * 3 + j] - if i == j { 1.0 } else { 0.0 }).abs() < 1e-14);
            }
        }
    }
}
