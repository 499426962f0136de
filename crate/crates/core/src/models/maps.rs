//! Planar maps: the piecewise-affine horseshoe and rigid rotations.

use crate::error::{ReebError, Result};

pub type Point2 = [f64; 2];
pub type Mat2 = [[f64; 2]; 2];

/// A (possibly partially defined) planar map with evaluable inverse.
pub trait PlanarMap: Send + Sync {
    fn name(&self) -> &str;

    /// `None` outside the domain of definition.
    fn apply(&self, p: Point2) -> Option<Point2>;

    fn apply_inverse(&self, q: Point2) -> Option<Point2>;

    /// All preimages of `q`; more than one signals overlapping branches.
    fn preimages(&self, q: Point2) -> Vec<Point2> {
        self.apply_inverse(q).into_iter().collect()
    }

    fn jacobian(&self, p: Point2) -> Mat2;

    /// Density of the invariant area form (1 for the standard one).
    fn area_density(&self, _p: Point2) -> f64 {
        1.0
    }

    /// Derivative of the inverse at `q`, obtained from the forward derivative
    /// at the preimage.
    fn inverse_jacobian(&self, q: Point2) -> Option<Mat2> {
        let p = self.apply_inverse(q)?;
        invert2(self.jacobian(p))
    }
}

pub fn invert2(m: Mat2) -> Option<Mat2> {
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    if det.abs() < 1e-300 {
        return None;
    }
    Some([
        [m[1][1] / det, -m[0][1] / det],
        [-m[1][0] / det, m[0][0] / det],
    ])
}

pub fn mat_vec(m: Mat2, v: Point2) -> Point2 {
    [m[0][0] * v[0] + m[0][1] * v[1], m[1][0] * v[0] + m[1][1] * v[1]]
}

/// Piecewise-affine Smale map on the unit square.
///
/// Horizontal strips `H_i` (numbered top to bottom) are mapped affinely onto
/// full-height vertical strips `V_i` (numbered right to left):
/// `(x, y) ↦ (a_i + x/λ, λ (y - b_i))`.
#[derive(Debug, Clone)]
pub struct AffineHorseshoe {
    expansion: f64,
    branches: usize,
    offsets: Vec<f64>,
}

impl AffineHorseshoe {
    pub fn new(expansion: f64, branches: usize) -> Result<Self> {
        if branches < 2 {
            return Err(ReebError::InvalidParameter("need at least two branches".into()));
        }
        if !(expansion > branches as f64) {
            return Err(ReebError::InvalidParameter(format!(
                "expansion {expansion} must exceed the branch count {branches} (strips not disjoint)"
            )));
        }
        Ok(Self::layout(expansion, branches))
    }

    /// Same layout as [`AffineHorseshoe::new`] without the disjointness check;
    /// with `expansion <= branches` neighbouring strips overlap.
    pub fn overlapping(expansion: f64, branches: usize) -> Self {
        Self::layout(expansion, branches)
    }

    fn layout(expansion: f64, branches: usize) -> Self {
        let width = 1.0 / expansion;
        let gap = (1.0 - branches as f64 * width) / (branches as f64 + 1.0);
        let offsets = (1..=branches)
            .map(|i| 1.0 - i as f64 * (gap + width))
            .collect();
        Self {
            expansion,
            branches,
            offsets,
        }
    }

    pub fn expansion(&self) -> f64 {
        self.expansion
    }

    pub fn branches(&self) -> usize {
        self.branches
    }

    /// Width of each strip.
    pub fn strip_width(&self) -> f64 {
        1.0 / self.expansion
    }

    /// Gap between neighbouring strips (negative when they overlap).
    pub fn gap(&self) -> f64 {
        (1.0 - self.branches as f64 / self.expansion) / (self.branches as f64 + 1.0)
    }

    /// Lower edge of `H_i` and left edge of `V_i` (0-based `i`).
    pub fn strip_offset(&self, i: usize) -> f64 {
        self.offsets[i]
    }

    /// The affine branch `H_i → V_i`.
    pub fn branch(&self, i: usize, p: Point2) -> Point2 {
        let b = self.offsets[i];
        [b + p[0] / self.expansion, self.expansion * (p[1] - b)]
    }

    fn in_unit(p: Point2) -> bool {
        (0.0..=1.0).contains(&p[0]) && (0.0..=1.0).contains(&p[1])
    }

    /// Branch whose horizontal strip contains `p`.
    pub fn branch_of(&self, p: Point2) -> Option<usize> {
        if !Self::in_unit(p) {
            return None;
        }
        let w = self.strip_width();
        (0..self.branches).find(|&i| p[1] >= self.offsets[i] && p[1] <= self.offsets[i] + w)
    }
}

impl PlanarMap for AffineHorseshoe {
    fn name(&self) -> &str {
        "affine-horseshoe"
    }

    fn apply(&self, p: Point2) -> Option<Point2> {
        self.branch_of(p).map(|i| self.branch(i, p))
    }

    fn apply_inverse(&self, q: Point2) -> Option<Point2> {
        self.preimages(q).into_iter().next()
    }

    fn preimages(&self, q: Point2) -> Vec<Point2> {
        if !Self::in_unit(q) {
            return Vec::new();
        }
        let w = self.strip_width();
        (0..self.branches)
            .filter(|&i| q[0] >= self.offsets[i] && q[0] <= self.offsets[i] + w)
            .map(|i| {
                let a = self.offsets[i];
                [(q[0] - a) * self.expansion, q[1] / self.expansion + a]
            })
            .collect()
    }

    fn jacobian(&self, _p: Point2) -> Mat2 {
        [[1.0 / self.expansion, 0.0], [0.0, self.expansion]]
    }
}

/// Rigid rotation of the plane by `angle` about `center`.
#[derive(Debug, Clone, Copy)]
pub struct PlaneRotation {
    pub angle: f64,
    pub center: Point2,
}

impl PlaneRotation {
    pub fn new(angle: f64) -> Self {
        Self {
            angle,
            center: [0.0, 0.0],
        }
    }

    fn rotate(&self, p: Point2, angle: f64) -> Point2 {
        let (s, c) = angle.sin_cos();
        let d = [p[0] - self.center[0], p[1] - self.center[1]];
        [
            self.center[0] + c * d[0] - s * d[1],
            self.center[1] + s * d[0] + c * d[1],
        ]
    }
}

impl PlanarMap for PlaneRotation {
    fn name(&self) -> &str {
        "rotation"
    }

    fn apply(&self, p: Point2) -> Option<Point2> {
        Some(self.rotate(p, self.angle))
    }

    fn apply_inverse(&self, q: Point2) -> Option<Point2> {
        Some(self.rotate(q, -self.angle))
    }

    fn jacobian(&self, _p: Point2) -> Mat2 {
        let (s, c) = self.angle.sin_cos();
        [[c, -s], [s, c]]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_branch_strips_have_width_one_third() {
        let h = AffineHorseshoe::new(3.0, 2).unwrap();
        assert!((h.strip_width() - 1.0 / 3.0).abs() < 1e-15);
        assert!((h.gap() - 1.0 / 9.0).abs() < 1e-15);
        // V_1 is the rightmost strip
        assert!(h.strip_offset(0) > h.strip_offset(1));
        assert!(h.strip_offset(1) + h.strip_width() < h.strip_offset(0));
    }

    #[test]
    fn expansion_two_is_rejected() {
        assert!(AffineHorseshoe::new(2.0, 2).is_err());
        assert!(AffineHorseshoe::new(3.0, 1).is_err());
    }

    #[test]
    fn inverse_undoes_forward_and_preserves_area() {
        let h = AffineHorseshoe::new(3.5, 3).unwrap();
        let p = [0.37, h.strip_offset(1) + 0.1];
        let q = h.apply(p).unwrap();
        let back = h.apply_inverse(q).unwrap();
        assert!((back[0] - p[0]).abs() < 1e-14 && (back[1] - p[1]).abs() < 1e-14);
        let j = h.jacobian(p);
        assert!((j[0][0] * j[1][1] - j[0][1] * j[1][0] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn overlapping_layout_has_double_preimages() {
        let h = AffineHorseshoe::overlapping(2.0 - 1e-3, 2);
        assert!(h.gap() < 0.0);
        let x = 0.5;
        assert_eq!(h.preimages([x, 0.5]).len(), 2);
    }
}
