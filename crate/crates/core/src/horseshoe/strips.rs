//! Detection of horizontal and vertical strips of a planar map on the unit
//! square and the Moser conditions (N1), (N2).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{ReebError, Result};
use crate::models::{AffineHorseshoe, PlanarMap, Point2};

pub(crate) fn in_unit(p: Point2) -> bool {
    (0.0..=1.0).contains(&p[0]) && (0.0..=1.0).contains(&p[1])
}

/// Orientation of a strip family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StripAxis {
    /// Bounded by graphs `v = b(u)`; scanned along vertical lines.
    Horizontal,
    /// Bounded by graphs `u = b(v)`; scanned along horizontal lines.
    Vertical,
}

impl StripAxis {
    /// Coordinate that varies along a scan line.
    pub(crate) fn along(self) -> usize {
        match self {
            StripAxis::Horizontal => 1,
            StripAxis::Vertical => 0,
        }
    }

    pub(crate) fn point(self, line: f64, s: f64) -> Point2 {
        match self {
            StripAxis::Horizontal => [line, s],
            StripAxis::Vertical => [s, line],
        }
    }

    /// Membership in the domain of the forward (horizontal) or inverse
    /// (vertical) map restricted to the square.
    pub(crate) fn inside(self, map: &dyn PlanarMap, p: Point2) -> bool {
        if !in_unit(p) {
            return false;
        }
        let image = match self {
            StripAxis::Horizontal => map.apply(p),
            StripAxis::Vertical => map.apply_inverse(p),
        };
        image.is_some_and(in_unit)
    }
}

/// One strip, stored by its bounding interval on each scan line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Strip {
    pub index: usize,
    pub axis: StripAxis,
    pub lines: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Strip {
    /// Bounding interval at line coordinate `x`, interpolated between scans.
    pub fn bounds_at(&self, x: f64) -> (f64, f64) {
        let n = self.lines.len();
        let k = self.lines.partition_point(|&l| l < x);
        if k == 0 {
            return (self.lower[0], self.upper[0]);
        }
        if k == n {
            return (self.lower[n - 1], self.upper[n - 1]);
        }
        let (x0, x1) = (self.lines[k - 1], self.lines[k]);
        let w = (x - x0) / (x1 - x0);
        (
            self.lower[k - 1] + w * (self.lower[k] - self.lower[k - 1]),
            self.upper[k - 1] + w * (self.upper[k] - self.upper[k - 1]),
        )
    }

    pub fn center_at(&self, x: f64) -> f64 {
        let (a, b) = self.bounds_at(x);
        0.5 * (a + b)
    }

    pub fn max_width(&self) -> f64 {
        self.lower.iter().zip(&self.upper).map(|(a, b)| b - a).fold(0.0, f64::max)
    }

    /// Mean position of the strip across the scan lines.
    pub fn position(&self) -> f64 {
        self.lower.iter().zip(&self.upper).map(|(a, b)| 0.5 * (a + b)).sum::<f64>() / self.lines.len() as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StripSystem {
    pub map: String,
    /// Ordered top to bottom.
    pub horizontal: Vec<Strip>,
    /// Ordered right to left.
    pub vertical: Vec<Strip>,
    pub symbols: usize,
    /// More strips exist beyond the truncation level.
    pub truncated: bool,
    /// Strip positions and widths decrease monotonically toward `{v = 0}`
    /// (horizontal) and `{u = 0}` (vertical).
    pub accumulates: bool,
    /// Smallest gap between neighbouring strips over all scan lines.
    pub min_gap: f64,
}

impl StripSystem {
    /// Exact strips of the affine horseshoe layout, including overlapping ones.
    pub fn affine(map: &AffineHorseshoe, lines: usize) -> Self {
        let grid: Vec<f64> = (0..lines).map(|i| i as f64 / (lines - 1) as f64).collect();
        let w = map.strip_width();
        let strip = |i: usize, axis: StripAxis| {
            let a = map.strip_offset(i);
            Strip {
                index: i,
                axis,
                lines: grid.clone(),
                lower: vec![a; lines],
                upper: vec![a + w; lines],
            }
        };
        let n = map.branches();
        Self {
            map: map.name().to_string(),
            horizontal: (0..n).map(|i| strip(i, StripAxis::Horizontal)).collect(),
            vertical: (0..n).map(|i| strip(i, StripAxis::Vertical)).collect(),
            symbols: n,
            truncated: false,
            accumulates: false,
            min_gap: map.gap(),
        }
    }

    /// Index of the horizontal strip containing `p`, if `p` lies in the
    /// domain of the map on the square.
    pub fn horizontal_label(&self, map: &dyn PlanarMap, p: Point2) -> Option<usize> {
        label(&self.horizontal, StripAxis::Horizontal, map, p)
    }

    pub fn vertical_label(&self, map: &dyn PlanarMap, p: Point2) -> Option<usize> {
        label(&self.vertical, StripAxis::Vertical, map, p)
    }

    /// Grid of sample points inside each horizontal strip.
    pub fn sample_points(&self, per_axis: usize) -> Vec<Point2> {
        let mut out = Vec::new();
        for s in &self.horizontal {
            for i in 0..per_axis {
                let u = (i as f64 + 0.5) / per_axis as f64;
                let (a, b) = s.bounds_at(u);
                for j in 0..per_axis {
                    let v = a + (b - a) * (j as f64 + 0.5) / per_axis as f64;
                    out.push([u, v]);
                }
            }
        }
        out
    }

    /// Itinerary of the first `n` iterates through the horizontal strips.
    pub fn itinerary(&self, map: &dyn PlanarMap, p: Point2, n: usize) -> Option<Vec<usize>> {
        let mut q = p;
        let mut out = Vec::with_capacity(n);
        for _ in 0..n {
            out.push(self.horizontal_label(map, q)?);
            q = map.apply(q)?;
        }
        Some(out)
    }
}

pub(crate) fn label(strips: &[Strip], axis: StripAxis, map: &dyn PlanarMap, p: Point2) -> Option<usize> {
    if !axis.inside(map, p) {
        return None;
    }
    let (line, s) = (p[1 - axis.along()], p[axis.along()]);
    strips.iter().position(|st| {
        let (a, b) = st.bounds_at(line);
        let slack = 0.05 * (b - a) + 1e-12;
        s >= a - slack && s <= b + slack
    })
}

/// Position code of `p` among the strips, increasing away from the first
/// strip: `2k + 1` inside strip `k`, `2k` in the gap before it.
pub(crate) fn code(strips: &[Strip], axis: StripAxis, map: &dyn PlanarMap, p: Point2) -> usize {
    if let Some(k) = label(strips, axis, map, p) {
        return 2 * k + 1;
    }
    let (line, s) = (p[1 - axis.along()], p[axis.along()]);
    2 * strips.iter().filter(|st| st.center_at(line) > s).count()
}

#[derive(Debug, Clone, Copy)]
pub struct StripOptions {
    pub n_max: usize,
    pub lines: usize,
    pub uniform_samples: usize,
    /// Logarithmically spaced samples resolving accumulation at 0.
    pub log_samples: usize,
    pub log_floor: f64,
}

impl Default for StripOptions {
    fn default() -> Self {
        Self {
            n_max: 8,
            lines: 65,
            uniform_samples: 4000,
            log_samples: 4000,
            log_floor: 1e-12,
        }
    }
}

fn scan_positions(opts: &StripOptions) -> Vec<f64> {
    let mut s: Vec<f64> = (0..opts.uniform_samples)
        .map(|j| j as f64 / (opts.uniform_samples - 1) as f64)
        .collect();
    let lf = opts.log_floor.ln();
    s.extend((0..opts.log_samples).map(|j| (lf * (1.0 - j as f64 / (opts.log_samples - 1) as f64)).exp()));
    s.push(0.0);
    s.sort_by(|a, b| a.partial_cmp(b).unwrap());
    s.dedup();
    s
}

/// Bisection for the boundary between `inside` at `a` and outside at `b`;
/// returns the last inside point.
fn refine<F: Fn(f64) -> bool>(f: F, mut a: f64, mut b: f64) -> f64 {
    for _ in 0..80 {
        let m = 0.5 * (a + b);
        if m == a || m == b {
            break;
        }
        if f(m) {
            a = m;
        } else {
            b = m;
        }
    }
    a
}

/// Intervals of the domain along one scan line, in descending position.
fn line_intervals(map: &dyn PlanarMap, axis: StripAxis, line: f64, pos: &[f64]) -> Vec<(f64, f64)> {
    let inside = |s: f64| axis.inside(map, axis.point(line, s));
    let flags: Vec<bool> = pos.iter().map(|&s| inside(s)).collect();
    let mut out = Vec::new();
    let mut k = 0;
    while k < pos.len() {
        if !flags[k] {
            k += 1;
            continue;
        }
        let start = k;
        while k + 1 < pos.len() && flags[k + 1] {
            k += 1;
        }
        let lo = if start == 0 { pos[0] } else { refine(inside, pos[start], pos[start - 1]) };
        let hi = if k + 1 == pos.len() { pos[k] } else { refine(inside, pos[k], pos[k + 1]) };
        out.push((lo, hi));
        k += 1;
    }
    out.reverse();
    out
}

fn detect_family(map: &dyn PlanarMap, axis: StripAxis, opts: &StripOptions) -> Result<(Vec<Strip>, bool)> {
    let pos = scan_positions(opts);
    let lines: Vec<f64> = (0..opts.lines).map(|i| i as f64 / (opts.lines - 1) as f64).collect();
    let per_line: Vec<Vec<(f64, f64)>> = lines.par_iter().map(|&l| line_intervals(map, axis, l, &pos)).collect();
    let counts: Vec<usize> = per_line.iter().map(Vec::len).collect();
    let min = *counts.iter().min().unwrap();
    let max = *counts.iter().max().unwrap();
    let name = match axis {
        StripAxis::Horizontal => "horizontal",
        StripAxis::Vertical => "vertical",
    };
    if min == 0 {
        return Err(ReebError::Numerical(format!("no {name} strips found on some scan line")));
    }
    let n = min.min(opts.n_max);
    if max != min && min < opts.n_max {
        return Err(ReebError::Numerical(format!(
            "{name} strip count varies between {min} and {max} across scan lines; boundaries are not monotone graphs"
        )));
    }
    for (l, iv) in lines.iter().zip(&per_line) {
        if let Some(&(a, b)) = iv.iter().take(n).find(|&&(a, b)| a <= 0.0 && b >= 1.0) {
            return Err(ReebError::Numerical(format!(
                "{name} component [{a}, {b}] on line {l} spans the whole square; not a strip"
            )));
        }
    }
    let strips = (0..n)
        .map(|i| Strip {
            index: i,
            axis,
            lines: lines.clone(),
            lower: per_line.iter().map(|iv| iv[i].0).collect(),
            upper: per_line.iter().map(|iv| iv[i].1).collect(),
        })
        .collect();
    Ok((strips, min > opts.n_max))
}

fn family_gap(strips: &[Strip]) -> f64 {
    let mut gap = f64::INFINITY;
    for w in strips.windows(2) {
        for k in 0..w[0].lines.len() {
            gap = gap.min(w[0].lower[k] - w[1].upper[k]);
        }
    }
    gap
}

fn accumulating(strips: &[Strip]) -> bool {
    strips.len() >= 3
        && strips.windows(2).all(|w| w[1].position() < w[0].position())
        && strips.windows(2).all(|w| w[1].max_width() < w[0].max_width())
        && strips
            .windows(3)
            .all(|w| w[1].position() - w[2].position() < w[0].position() - w[1].position())
}

/// Horizontal strips as components of `Q ∩ P⁻¹(Q)` and vertical strips as
/// components of `P(Q) ∩ Q`, truncated at `n_max`.
pub fn detect_strips(map: &dyn PlanarMap, opts: &StripOptions) -> Result<StripSystem> {
    let (horizontal, h_tail) = detect_family(map, StripAxis::Horizontal, opts)?;
    let (vertical, v_tail) = detect_family(map, StripAxis::Vertical, opts)?;
    if horizontal.len() != vertical.len() {
        return Err(ReebError::Numerical(format!(
            "{} horizontal but {} vertical strips",
            horizontal.len(),
            vertical.len()
        )));
    }
    let min_gap = family_gap(&horizontal).min(family_gap(&vertical));
    let system = StripSystem {
        map: map.name().to_string(),
        symbols: horizontal.len(),
        truncated: h_tail && v_tail,
        accumulates: accumulating(&horizontal) && accumulating(&vertical),
        horizontal,
        vertical,
        min_gap,
    };
    Ok(system)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "condition", rename_all = "kebab-case")]
pub enum MoserWitness {
    /// A point with several preimages: branches overlap.
    Overlap { point: Point2, preimages: usize },
    /// `P(H_i)` and `V_i` disagree at a sampled boundary point.
    Boundary { strip: usize, point: Point2, defect: f64 },
    /// A test vertical strip whose image misses a full crossing of `V_k`.
    Crossing { strip: usize, target: usize, fraction: f64, defect: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MoserReport {
    pub n1: bool,
    pub n2: bool,
    pub passed: bool,
    pub boundary_defect: f64,
    pub substrips_tested: usize,
    pub witnesses: Vec<MoserWitness>,
}

#[derive(Debug, Clone, Copy)]
pub struct MoserOptions {
    pub tol: f64,
    pub substrips: usize,
    pub seed: u64,
    pub overlap_grid: usize,
}

impl Default for MoserOptions {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            substrips: 4,
            seed: 7,
            overlap_grid: 201,
        }
    }
}

/// Checks (N1) by mapping the boundaries of each `H_i` and (N2) on random
/// vertical sub-strips of each `V_j`.
pub fn verify_moser_conditions(map: &dyn PlanarMap, system: &StripSystem, opts: &MoserOptions) -> MoserReport {
    let mut witnesses = Vec::new();
    let g = opts.overlap_grid;
    'scan: for i in 0..g {
        for j in 0..g {
            let q = [i as f64 / (g - 1) as f64, j as f64 / (g - 1) as f64];
            let pre: Vec<Point2> = map.preimages(q).into_iter().filter(|&p| in_unit(p)).collect();
            if pre.len() >= 2 {
                witnesses.push(MoserWitness::Overlap {
                    point: q,
                    preimages: pre.len(),
                });
                break 'scan;
            }
        }
    }
    let overlap = !witnesses.is_empty();

    let (defect, mut n1_w) = check_n1(map, system, opts.tol);
    let n1 = !overlap && n1_w.is_empty();
    witnesses.append(&mut n1_w);

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let tests: Vec<(usize, f64)> = (0..system.symbols)
        .flat_map(|j| (0..opts.substrips).map(move |_| j).collect::<Vec<_>>())
        .map(|j| (j, rng.random_range(0.1..0.9)))
        .collect();
    let n2_w: Vec<MoserWitness> = tests
        .par_iter()
        .flat_map_iter(|&(j, frac)| (0..system.symbols).filter_map(move |k| check_n2(map, system, j, k, frac, opts.tol)))
        .collect();
    let n2 = !overlap && n2_w.is_empty();
    witnesses.extend(n2_w);
    MoserReport {
        n1,
        n2,
        passed: n1 && n2,
        boundary_defect: defect,
        substrips_tested: tests.len(),
        witnesses,
    }
}

fn check_n1(map: &dyn PlanarMap, system: &StripSystem, tol: f64) -> (f64, Vec<MoserWitness>) {
    let mut worst = 0.0_f64;
    let mut out = Vec::new();
    for (i, h) in system.horizontal.iter().enumerate() {
        // Horizontal boundaries land on the horizontal edges, one on each.
        for k in 0..h.lines.len() {
            let u = h.lines[k];
            let lo = map.apply([u, h.lower[k]]);
            let hi = map.apply([u, h.upper[k]]);
            let (Some(lo), Some(hi)) = (lo, hi) else {
                out.push(MoserWitness::Boundary {
                    strip: i,
                    point: [u, h.lower[k]],
                    defect: f64::INFINITY,
                });
                continue;
            };
            let edge = |y: f64| y.abs().min((1.0 - y).abs());
            let d = edge(lo[1]).max(edge(hi[1]));
            let opposite = (lo[1] - hi[1]).abs() > 0.5;
            worst = worst.max(d);
            if d > tol || !opposite {
                out.push(MoserWitness::Boundary {
                    strip: i,
                    point: [u, h.lower[k]],
                    defect: d,
                });
            }
        }
        // Vertical boundaries map onto the boundary of V_i, monotonically in v.
        let v_strip = &system.vertical[i];
        for &u in &[0.0, 1.0] {
            let k = if u == 0.0 { 0 } else { h.lines.len() - 1 };
            let (a, b) = (h.lower[k], h.upper[k]);
            let mut prev: Option<f64> = None;
            let mut sign = 0.0;
            for s in 0..=32 {
                let v = a + (b - a) * s as f64 / 32.0;
                let Some(q) = map.apply([u, v]) else { continue };
                let (ba, bb) = v_strip.bounds_at(q[1]);
                let d = (q[0] - ba).abs().min((q[0] - bb).abs());
                let eps = 1e-9;
                let flip = StripAxis::Vertical.inside(map, [q[0] + eps, q[1]])
                    != StripAxis::Vertical.inside(map, [q[0] - eps, q[1]]);
                let interp = 1e-3 * v_strip.max_width().max(1e-12);
                let ok_bound = flip || d < interp.max(tol);
                let monotone = match prev {
                    None => true,
                    Some(p) => {
                        let step = (q[1] - p).signum();
                        let ok = sign == 0.0 || step == sign;
                        sign = step;
                        ok
                    }
                };
                prev = Some(q[1]);
                if !ok_bound || !monotone {
                    out.push(MoserWitness::Boundary {
                        strip: i,
                        point: [u, v],
                        defect: d,
                    });
                    break;
                }
            }
        }
        // Pairing: the center of H_i lands in V_i.
        let p = [0.5, h.center_at(0.5)];
        if let Some(q) = map.apply(p) {
            if system.vertical_label(map, q) != Some(i) {
                out.push(MoserWitness::Boundary {
                    strip: i,
                    point: p,
                    defect: f64::INFINITY,
                });
            }
        }
    }
    (worst, out)
}

/// Center curve of a sub-strip of `V_j` at fraction `frac`, intersected with
/// `H_k`; its image must run from one horizontal edge to the other inside `V_k`.
fn check_n2(map: &dyn PlanarMap, system: &StripSystem, j: usize, k: usize, frac: f64, tol: f64) -> Option<MoserWitness> {
    let vj = &system.vertical[j];
    let hk = &system.horizontal[k];
    let curve = |v: f64| -> Point2 {
        let (a, b) = vj.bounds_at(v);
        [a + frac * (b - a), v]
    };
    let fail = |defect: f64| {
        Some(MoserWitness::Crossing {
            strip: j,
            target: k,
            fraction: frac,
            defect,
        })
    };
    // Point of the curve at the middle of H_k.
    let mut v = 0.5;
    for _ in 0..8 {
        v = hk.center_at(curve(v)[0]);
    }
    let inside = |v: f64| StripAxis::Horizontal.inside(map, curve(v));
    if !inside(v) {
        return fail(f64::INFINITY);
    }
    let u_mid = curve(v)[0];
    let (lo_k, hi_k) = hk.bounds_at(u_mid);
    let above = if k == 0 { 1.0 } else { 0.5 * (hi_k + system.horizontal[k - 1].bounds_at(u_mid).0) };
    let below = if k + 1 == system.horizontal.len() {
        (lo_k - 0.5 * system.min_gap.max(0.0)).max(0.0)
    } else {
        0.5 * (lo_k + system.horizontal[k + 1].bounds_at(u_mid).1)
    };
    let top = if inside(above) { above } else { refine(inside, v, above) };
    let bottom = if inside(below) { below } else { refine(inside, v, below) };
    let (Some(qt), Some(qb)) = (map.apply(curve(top)), map.apply(curve(bottom))) else {
        return fail(f64::INFINITY);
    };
    let edge = |y: f64| y.abs().min((1.0 - y).abs());
    let defect = edge(qt[1]).max(edge(qb[1]));
    if defect > tol || (qt[1] - qb[1]).abs() < 0.5 {
        return fail(defect);
    }
    for s in 1..16 {
        let vv = bottom + (top - bottom) * s as f64 / 16.0;
        match map.apply(curve(vv)) {
            Some(q) if system.vertical_label(map, q) == Some(k) => {}
            _ => return fail(f64::INFINITY),
        }
    }
    None
}
