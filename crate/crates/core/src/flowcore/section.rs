use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{ReebError, Result};
use crate::flowcore::dopri::{solve_with, IntegratorOptions, StepControl};
use crate::flowcore::trajectory::DenseStep;
use crate::models::Flow;
use crate::scalar::{dot, Real};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CrossingDirection {
    Positive,
    Negative,
    Both,
}

impl CrossingDirection {
    fn accepts(self, before: f64, after: f64) -> bool {
        match self {
            CrossingDirection::Positive => before < 0.0 && after >= 0.0,
            CrossingDirection::Negative => before > 0.0 && after <= 0.0,
            CrossingDirection::Both => {
                (before < 0.0 && after >= 0.0) || (before > 0.0 && after <= 0.0)
            }
        }
    }
}

/// Affine hyperplane `{z : <normal, z - anchor> = 0}` with a crossing direction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Section {
    pub anchor: Vec<f64>,
    pub normal: Vec<f64>,
    pub direction: CrossingDirection,
}

impl Section {
    pub fn new(anchor: Vec<f64>, normal: Vec<f64>, direction: CrossingDirection) -> Result<Self> {
        if anchor.len() != normal.len() {
            return Err(ReebError::InvalidParameter(
                "section anchor and normal differ in length".into(),
            ));
        }
        if normal.iter().all(|&v| v == 0.0) {
            return Err(ReebError::InvalidParameter("section normal is zero".into()));
        }
        Ok(Self {
            anchor,
            normal,
            direction,
        })
    }

    /// The coordinate hyperplane `z[index] = value`.
    pub fn coordinate(dim: usize, index: usize, value: f64, direction: CrossingDirection) -> Self {
        let mut anchor = vec![0.0; dim];
        let mut normal = vec![0.0; dim];
        anchor[index] = value;
        normal[index] = 1.0;
        Self {
            anchor,
            normal,
            direction,
        }
    }

    pub fn level<R: Real>(&self, z: &[R]) -> R {
        z.iter()
            .zip(&self.normal)
            .zip(&self.anchor)
            .fold(R::zero(), |acc, ((&zi, &n), &a)| acc + R::lit(n) * (zi - R::lit(a)))
    }

    /// `<field, normal> / |normal|`.
    pub fn flux<R: Real>(&self, field: &[R]) -> R {
        let n: Vec<R> = self.normal.iter().map(|&v| R::lit(v)).collect();
        dot(field, &n) / crate::scalar::norm(&n)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HitStatus {
    Hit,
    /// Crossing found but `|<field, normal>|` is below the transversality threshold.
    NonTransverse,
    NoReturn,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Crossing {
    pub seed_index: usize,
    pub entry: Vec<f64>,
    pub exit: Option<Vec<f64>>,
    pub time: Option<f64>,
    pub flux: Option<f64>,
    pub status: HitStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl Crossing {
    pub fn is_hit(&self) -> bool {
        self.status == HitStatus::Hit
    }
}

/// Settings for crossing searches.
#[derive(Debug, Clone, Copy)]
pub struct HitOptions {
    pub integrator: IntegratorOptions,
    pub max_time: f64,
    pub tol_transverse: f64,
    /// Crossings closer than this to the start time are ignored.
    pub min_time: f64,
    /// Time tolerance of the event location.
    pub tol_time: f64,
}

impl Default for HitOptions {
    fn default() -> Self {
        Self {
            integrator: IntegratorOptions::default(),
            max_time: 100.0,
            tol_transverse: 1e-6,
            min_time: 1e-8,
            tol_time: 1e-12,
        }
    }
}

/// First crossing of `section` by the forward trajectory of `seed`.
pub fn first_hit<R: Real, F: Flow<R> + ?Sized>(
    flow: &F,
    seed: &[R],
    section: &Section,
    opts: &HitOptions,
) -> (Option<(R, Vec<R>)>, Result<()>) {
    let t_end = R::lit(opts.max_time);
    let min_time = R::lit(opts.min_time);
    let mut found: Option<(R, Vec<R>)> = None;
    let res = solve_with(
        |_, z, out| flow.field(z, out),
        seed,
        R::zero(),
        t_end,
        &opts.integrator,
        |step: &DenseStep<R>| {
            let g0 = section.level(step.start_state()).to_f64_lossy();
            let g1 = section.level(&step.end_state()).to_f64_lossy();
            if !section.direction.accepts(g0, g1) {
                return StepControl::Continue;
            }
            let ts = locate(flow, step, section, opts.tol_time);
            if ts <= min_time {
                return StepControl::Continue;
            }
            found = Some((ts, step.eval(ts)));
            StepControl::StopAt(ts)
        },
    );
    (found, res.map(|_| ()))
}

/// Bisection on the interpolant followed by Newton steps using `<normal, field>`.
fn locate<R: Real, F: Flow<R> + ?Sized>(flow: &F, step: &DenseStep<R>, section: &Section, tol: f64) -> R {
    let mut a = step.t0;
    let mut b = step.t1;
    let mut ga = section.level(step.start_state());
    let coarse = (b - a).abs() * R::lit(1e-6);
    while (b - a).abs() > coarse {
        let m = (a + b) * R::lit(0.5);
        let gm = section.level(&step.eval(m));
        if (gm <= R::zero()) == (ga <= R::zero()) {
            a = m;
            ga = gm;
        } else {
            b = m;
        }
    }
    let (lo, hi) = if a < b { (a, b) } else { (b, a) };
    let mut t = (a + b) * R::lit(0.5);
    let n: Vec<R> = section.normal.iter().map(|&v| R::lit(v)).collect();
    for _ in 0..8 {
        let z = step.eval(t);
        let g = section.level(&z);
        let dg = dot(&flow.field_vec(&z), &n);
        if dg == R::zero() {
            break;
        }
        let dt = g / dg;
        let next = t - dt;
        if next < lo - coarse || next > hi + coarse {
            break;
        }
        t = next;
        if dt.abs() < R::lit(tol) {
            break;
        }
    }
    t
}

fn crossing_record<R: Real, F: Flow<R> + ?Sized>(
    flow: &F,
    index: usize,
    seed: &[R],
    section: &Section,
    opts: &HitOptions,
) -> Crossing {
    let entry: Vec<f64> = seed.iter().map(|v| v.to_f64_lossy()).collect();
    let (hit, res) = first_hit(flow, seed, section, opts);
    match (hit, res) {
        (Some((t, z)), _) => {
            let flux = section.flux(&flow.field_vec(&z)).to_f64_lossy();
            let status = if flux.abs() >= opts.tol_transverse {
                HitStatus::Hit
            } else {
                HitStatus::NonTransverse
            };
            Crossing {
                seed_index: index,
                entry,
                exit: Some(z.iter().map(|v| v.to_f64_lossy()).collect()),
                time: Some(t.to_f64_lossy()),
                flux: Some(flux),
                status,
                note: None,
            }
        }
        (None, Ok(())) => Crossing {
            seed_index: index,
            entry,
            exit: None,
            time: None,
            flux: None,
            status: HitStatus::NoReturn,
            note: None,
        },
        (None, Err(e)) => Crossing {
            seed_index: index,
            entry,
            exit: None,
            time: None,
            flux: None,
            status: HitStatus::Failed,
            note: Some(e.to_string()),
        },
    }
}

/// Section-to-section data for a batch of seeds, reduced in seed order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SectionMap {
    pub section: Section,
    pub crossings: Vec<Crossing>,
}

/// First hits of `section` from every seed, computed in parallel.
pub fn first_hits<R: Real, F: Flow<R> + ?Sized>(
    flow: &F,
    section: &Section,
    seeds: &[Vec<R>],
    opts: &HitOptions,
) -> SectionMap {
    let crossings = seeds
        .par_iter()
        .enumerate()
        .map(|(i, s)| crossing_record(flow, i, s, section, opts))
        .collect();
    SectionMap {
        section: section.clone(),
        crossings,
    }
}

/// Return map of `section` to itself: seeds are expected on the section.
pub fn return_map<R: Real, F: Flow<R> + ?Sized>(
    flow: &F,
    section: &Section,
    seeds: &[Vec<R>],
    opts: &HitOptions,
) -> SectionMap {
    first_hits(flow, section, seeds, opts)
}
