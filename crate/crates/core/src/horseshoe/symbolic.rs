//! Realization of symbol words by nested strip bisection, periodic points
//! and orbit counts of a certified horseshoe.

use std::cmp::Ordering;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{ReebError, Result};
use crate::models::{invert2, mat_vec, PlanarMap, Point2};
use crate::orbits::PeriodicPointSource;

use super::strips::{code, StripAxis, StripSystem};

/// Compares the code sequence of the orbit of `p` with `word`.
fn compare(map: &dyn PlanarMap, system: &StripSystem, axis: StripAxis, p: Point2, word: &[usize]) -> Ordering {
    let strips = match axis {
        StripAxis::Horizontal => &system.horizontal,
        StripAxis::Vertical => &system.vertical,
    };
    let mut q = p;
    for (i, &w) in word.iter().enumerate() {
        let c = code(strips, axis, map, q);
        match c.cmp(&(2 * w + 1)) {
            Ordering::Equal => {}
            other => return other,
        }
        if i + 1 < word.len() {
            let next = match axis {
                StripAxis::Horizontal => map.apply(q),
                StripAxis::Vertical => map.apply_inverse(q),
            };
            match next {
                Some(n) => q = n,
                None => return Ordering::Greater,
            }
        }
    }
    Ordering::Equal
}

/// Interval `(b, a]` of positions along a scan line whose orbit follows
/// `word`; codes grow as the position decreases. Endpoints are resolved to a
/// small fraction of the interval width. `hint` is a previous interval used
/// to narrow the initial bracket.
fn locate(
    map: &dyn PlanarMap,
    system: &StripSystem,
    axis: StripAxis,
    line: f64,
    word: &[usize],
    hint: Option<(f64, f64)>,
) -> Option<(f64, f64)> {
    const REL: f64 = 1e-4;
    let cmp = |s: f64| compare(map, system, axis, axis.point(line, s), word);
    let strips = match axis {
        StripAxis::Horizontal => &system.horizontal,
        StripAxis::Vertical => &system.vertical,
    };
    // Bracket [lo, hi] with cmp(lo) = Greater and cmp(hi) = Less, unless the
    // word already holds at the top of the square.
    let bracket = |lo: f64, hi: f64| (cmp(lo) == Ordering::Greater).then_some((lo, hi));
    let mut start = hint.and_then(|(b, a)| {
        let w = (a - b).max(1e-300);
        let (lo, hi) = ((b - w).max(0.0), (a + w).min(1.0));
        bracket(lo, hi).filter(|_| cmp(hi) == Ordering::Less)
    });
    if start.is_none() {
        // The first symbol confines the search to a neighbourhood of its strip.
        let (lo, hi) = strips[word[0]].bounds_at(line);
        let pad = 0.1 * (hi - lo) + 1e-12;
        start = bracket((lo - pad).max(0.0), (hi + pad).min(1.0)).or_else(|| bracket(0.0, 1.0));
    }
    let (mut lo, mut hi) = start?;
    // Any point of the interval.
    let inner = if cmp(hi) == Ordering::Equal {
        hi
    } else {
        loop {
            let m = 0.5 * (lo + hi);
            if m <= lo || m >= hi {
                return None;
            }
            match cmp(m) {
                Ordering::Equal => break m,
                Ordering::Greater => lo = m,
                Ordering::Less => hi = m,
            }
        }
    };
    // Upper end: last point with cmp != Less.
    let a = if cmp(hi) == Ordering::Equal {
        hi
    } else {
        let (mut x, mut y) = (inner, hi);
        loop {
            let m = 0.5 * (x + y);
            if m <= x || m >= y || y - x <= REL * (x - lo) {
                break x;
            }
            if cmp(m) == Ordering::Less {
                y = m;
            } else {
                x = m;
            }
        }
    };
    // Lower end: last point with cmp == Greater.
    let (mut x, mut y) = (lo, inner);
    let b = loop {
        let m = 0.5 * (x + y);
        if m <= x || m >= y || y - x <= REL * (a - y) {
            break x;
        }
        if cmp(m) == Ordering::Greater {
            x = m;
        } else {
            y = m;
        }
    };
    Some((b, a))
}

/// A point `z` with `P^i(z) ∈ H_{forward[i]}` and `P^{-i-1}(z) ∈ H_{backward[i]}`,
/// found by alternating bisections along vertical and horizontal lines.
/// The flag reports whether both nested intervals stayed resolvable.
fn realize_split(map: &dyn PlanarMap, system: &StripSystem, forward: &[usize], backward: &[usize]) -> Option<(Point2, bool)> {
    let mut u = 0.5;
    let mut v = 0.5;
    let mut resolved = true;
    let (mut fwd, mut bwd) = (None, None);
    for _ in 0..16 {
        let mut settled = true;
        if !forward.is_empty() {
            let (b, a) = locate(map, system, StripAxis::Horizontal, u, forward, fwd)?;
            resolved &= a > b;
            let next = 0.5 * (a + b);
            settled &= (next - v).abs() <= 1e-3 * (a - b);
            v = next;
            fwd = Some((b, a));
        }
        if !backward.is_empty() {
            let (b, a) = locate(map, system, StripAxis::Vertical, v, backward, bwd)?;
            resolved &= a > b;
            let next = 0.5 * (a + b);
            settled &= (next - u).abs() <= 1e-3 * (a - b);
            u = next;
            bwd = Some((b, a));
        }
        if settled {
            break;
        }
    }
    Some(([u, v], resolved))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RealizedWord {
    pub word: Vec<usize>,
    /// First point of the orbit segment.
    pub point: Point2,
    /// Orbit segment, computed forward and backward from `orbit[anchor]`.
    pub orbit: Vec<Point2>,
    pub anchor: usize,
    /// Horizontal-strip labels of the orbit segment.
    pub itinerary: Vec<usize>,
}

/// An orbit segment whose points visit the horizontal strips named by
/// `word`.
///
/// The segment is anchored at its middle time: the anchor is located in the
/// intersection of a forward and a backward nested strip family, and the
/// other points are obtained by iterating `P` and `P⁻¹` from it. Both
/// families stay wider than the float resolution where a single starting
/// point iterated forward could not.
pub fn realize_word(map: &dyn PlanarMap, system: &StripSystem, word: &[usize]) -> Result<RealizedWord> {
    if word.is_empty() || word.iter().any(|&w| w >= system.symbols) {
        return Err(ReebError::InvalidParameter(format!("word {word:?} is not over {} symbols", system.symbols)));
    }
    let n = word.len();
    let m = n / 2;
    let backward: Vec<usize> = word[..m].iter().rev().copied().collect();
    let unresolved = || ReebError::Numerical(format!("nested strip intersection for {word:?} is empty at float resolution"));
    let (z, resolved) = realize_split(map, system, &word[m..], &backward).ok_or_else(unresolved)?;
    if !resolved {
        return Err(unresolved());
    }
    let mut orbit = vec![z; n];
    for i in (0..m).rev() {
        orbit[i] = map.apply_inverse(orbit[i + 1]).ok_or_else(unresolved)?;
    }
    for i in (m + 1)..n {
        orbit[i] = map.apply(orbit[i - 1]).ok_or_else(unresolved)?;
    }
    let itinerary = orbit
        .iter()
        .map(|&q| system.horizontal_label(map, q))
        .collect::<Option<Vec<usize>>>()
        .ok_or_else(unresolved)?;
    Ok(RealizedWord {
        word: word.to_vec(),
        point: orbit[0],
        orbit,
        anchor: m,
        itinerary,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodicPoint {
    pub word: Vec<usize>,
    pub point: Point2,
    /// `|P^p(x) - x|` in the max norm.
    pub residual: f64,
}

/// The fixed point of `P^p` coded by the periodic word `word` (length `p`).
pub fn periodic_point(map: &dyn PlanarMap, system: &StripSystem, word: &[usize], tol: f64) -> Result<PeriodicPoint> {
    let p = word.len();
    if p == 0 || word.iter().any(|&w| w >= system.symbols) {
        return Err(ReebError::InvalidParameter(format!("word {word:?} is not over {} symbols", system.symbols)));
    }
    let fail = |what: &str| ReebError::Numerical(format!("periodic point for {word:?}: {what}"));
    // Longest repetition of the word whose nested strips are still resolvable.
    let seed = (1..=8_usize.div_ceil(p)).rev().find_map(|reps| {
        let forward: Vec<usize> = word.iter().copied().cycle().take(reps * p).collect();
        let backward: Vec<usize> = word.iter().rev().copied().cycle().take(reps * p).collect();
        realize_split(map, system, &forward, &backward).filter(|s| s.1).map(|s| s.0)
    });
    let mut x = seed.ok_or_else(|| fail("no seed"))?;
    let orbit = |x: Point2| -> Option<(Point2, [[f64; 2]; 2])> {
        let mut q = x;
        let mut j = [[1.0, 0.0], [0.0, 1.0]];
        for _ in 0..p {
            let d = map.jacobian(q);
            j = [
                [d[0][0] * j[0][0] + d[0][1] * j[1][0], d[0][0] * j[0][1] + d[0][1] * j[1][1]],
                [d[1][0] * j[0][0] + d[1][1] * j[1][0], d[1][0] * j[0][1] + d[1][1] * j[1][1]],
            ];
            q = map.apply(q)?;
        }
        Some((q, j))
    };
    let mut residual = f64::INFINITY;
    for _ in 0..40 {
        let (q, j) = orbit(x).ok_or_else(|| fail("orbit left the square"))?;
        let f = [q[0] - x[0], q[1] - x[1]];
        residual = f[0].abs().max(f[1].abs());
        if residual < tol * 1e-3 {
            break;
        }
        let inv = invert2([[j[0][0] - 1.0, j[0][1]], [j[1][0], j[1][1] - 1.0]]).ok_or_else(|| fail("singular"))?;
        let d = mat_vec(inv, f);
        let next = [x[0] - d[0], x[1] - d[1]];
        if next == x {
            break;
        }
        x = next;
    }
    if !(residual < tol) {
        return Err(fail(&format!("residual {residual:e}")));
    }
    if system.itinerary(map, x, p).as_deref() != Some(word) {
        return Err(fail("converged to a point with another itinerary"));
    }
    Ok(PeriodicPoint {
        word: word.to_vec(),
        point: x,
        residual,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SemiconjugacyReport {
    pub words: usize,
    pub realized: usize,
    /// Re-extracted itineraries equal to the requested words.
    pub itineraries_match: usize,
    /// `h(P x)` equals the shifted word.
    pub shift_equivariant: usize,
    /// Smallest pairwise distance between realized points.
    pub min_separation: f64,
    pub failures: Vec<Vec<usize>>,
    pub passed: bool,
}

/// Realizes every word, re-extracts its itinerary and checks
/// `h ∘ P = σ ∘ h` on the realized points.
pub fn semiconjugacy_check(map: &dyn PlanarMap, system: &StripSystem, words: &[Vec<usize>]) -> SemiconjugacyReport {
    let results: Vec<Option<(RealizedWord, bool)>> = words
        .par_iter()
        .map(|w| {
            let r = realize_word(map, system, w).ok()?;
            // h(P x) = σ h(x) along the segment: the image of each point
            // carries the label of the next one.
            let shifted = r.orbit.windows(2).zip(&r.itinerary[1..]).all(|(pair, &next)| {
                map.apply(pair[0]).and_then(|q| system.horizontal_label(map, q)) == Some(next)
            });
            Some((r, shifted))
        })
        .collect();
    let mut failures = Vec::new();
    let mut points = Vec::new();
    let (mut realized, mut matched, mut shifted) = (0, 0, 0);
    for (w, r) in words.iter().zip(&results) {
        match r {
            Some((rw, sh)) => {
                realized += 1;
                let ok = rw.itinerary == *w;
                matched += ok as usize;
                shifted += *sh as usize;
                if !ok || !sh {
                    failures.push(w.clone());
                }
                points.push((w, rw.point));
            }
            None => failures.push(w.clone()),
        }
    }
    points.sort_by(|a, b| a.1[1].total_cmp(&b.1[1]).then(a.1[0].total_cmp(&b.1[0])));
    let mut min_sep = f64::INFINITY;
    for i in 0..points.len() {
        for k in (i + 1)..points.len() {
            if points[k].0.len() != points[i].0.len() || points[k].0 == points[i].0 {
                continue;
            }
            let dv = points[k].1[1] - points[i].1[1];
            if dv > min_sep {
                break;
            }
            let d = (points[k].1[0] - points[i].1[0]).abs().max(dv);
            min_sep = min_sep.min(d);
        }
    }
    SemiconjugacyReport {
        words: words.len(),
        realized,
        itineraries_match: matched,
        shift_equivariant: shifted,
        min_separation: min_sep,
        passed: failures.is_empty() && min_sep > 0.0,
        failures,
    }
}

/// Periodic-point counts of a horseshoe by exhaustive word enumeration.
pub struct HorseshoeOrbits<'a> {
    pub map: &'a dyn PlanarMap,
    pub system: &'a StripSystem,
    /// Largest number of words enumerated for one iterate.
    pub cap: usize,
    pub roof: f64,
    pub tol: f64,
}

impl<'a> HorseshoeOrbits<'a> {
    pub fn new(map: &'a dyn PlanarMap, system: &'a StripSystem) -> Self {
        Self {
            map,
            system,
            cap: 1 << 16,
            roof: 1.0,
            tol: 1e-10,
        }
    }

    /// Largest iterate, at most 12, whose word count stays within the cap.
    pub fn max_iterate(&self) -> usize {
        let n = self.system.symbols.max(2) as f64;
        ((self.cap as f64).ln() / n.ln()).floor().clamp(1.0, 12.0) as usize
    }

    fn words(&self, n: usize) -> Vec<Vec<usize>> {
        let s = self.system.symbols;
        let total = s.pow(n as u32);
        (0..total)
            .map(|mut k| {
                let mut w = vec![0; n];
                for slot in w.iter_mut().rev() {
                    *slot = k % s;
                    k /= s;
                }
                w
            })
            .collect()
    }
}

impl PeriodicPointSource for HorseshoeOrbits<'_> {
    fn fixed_points(&self, n: usize) -> Result<usize> {
        let total = (self.system.symbols as f64).powi(n as i32);
        if total > self.cap as f64 {
            return Err(ReebError::InvalidParameter(format!(
                "{total} words of length {n} exceed the enumeration cap {}",
                self.cap
            )));
        }
        let found: Vec<bool> = self
            .words(n)
            .par_iter()
            .map(|w| periodic_point(self.map, self.system, w, self.tol).is_ok())
            .collect();
        Ok(found.into_iter().filter(|&ok| ok).count())
    }

    fn roof(&self) -> f64 {
        self.roof
    }
}
