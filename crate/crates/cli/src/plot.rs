//! Plain CSV tables extracted from stage artifacts; nothing is rendered.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use reeb_core::{ReebError, Result};
use serde::de::DeserializeOwned;

use crate::json::write_atomic;
use crate::pipeline::{EntropyArtifact, HorseshoeArtifact, NormalFormArtifact, Stage, TransitionArtifact};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotKind {
    /// `seed,iterate,x,y,xy` from a normal-form artifact.
    SectionScatter,
    /// `curve,t,r` for the lifted unstable arc, the stable arc and their crossings.
    Spiral,
    /// `axis,index,along,lower,upper` boundary polylines from a horseshoe artifact.
    Strips,
    /// `epsilon,time,log_count,count,valid,saturated` from an entropy artifact.
    EntropyCurve,
}

impl PlotKind {
    pub fn name(self) -> &'static str {
        match self {
            PlotKind::SectionScatter => "section-scatter",
            PlotKind::Spiral => "spiral",
            PlotKind::Strips => "strips",
            PlotKind::EntropyCurve => "entropy-curve",
        }
    }

    fn stage(self) -> Stage {
        match self {
            PlotKind::SectionScatter => Stage::NormalForm,
            PlotKind::Spiral => Stage::Transition,
            PlotKind::Strips => Stage::Horseshoe,
            PlotKind::EntropyCurve => Stage::Entropy,
        }
    }
}

impl FromStr for PlotKind {
    type Err = ReebError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "section-scatter" => Ok(PlotKind::SectionScatter),
            "spiral" => Ok(PlotKind::Spiral),
            "strips" => Ok(PlotKind::Strips),
            "entropy-curve" => Ok(PlotKind::EntropyCurve),
            _ => Err(ReebError::InvalidParameter(format!(
                "unknown plot kind '{s}' (expected section-scatter, spiral, strips or entropy-curve)"
            ))),
        }
    }
}

fn parse<T: DeserializeOwned>(value: serde_json::Value) -> Result<T> {
    Ok(serde_json::from_value(value)?)
}

/// Writes `<kind>.csv` into `out_dir` from the artifact at `artifact`.
pub fn emit_plot_data(artifact: &Path, kind: PlotKind, out_dir: &Path) -> Result<PathBuf> {
    let value: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(artifact)?)?;
    let found = value.get("concept").and_then(|c| c.as_str()).unwrap_or("");
    let wanted = kind.stage();
    if found != wanted.concept() {
        return Err(ReebError::InvalidParameter(format!(
            "plot kind {} needs a {} artifact ({}), got '{found}'",
            kind.name(),
            wanted.name(),
            wanted.file()
        )));
    }
    let csv = match kind {
        PlotKind::SectionScatter => section_scatter(&parse(value)?),
        PlotKind::Spiral => spiral(&parse(value)?),
        PlotKind::Strips => strips(&parse(value)?),
        PlotKind::EntropyCurve => entropy_curve(&parse(value)?)?,
    };
    let path = out_dir.join(format!("{}.csv", kind.name()));
    write_atomic(&path, csv.as_bytes())?;
    Ok(path)
}

fn section_scatter(a: &NormalFormArtifact) -> String {
    let mut s = String::from("seed,iterate,x,y,xy\n");
    for p in &a.section_scatter {
        let _ = writeln!(s, "{},{},{:e},{:e},{:e}", p.seed, p.iterate, p.x, p.y, p.x * p.y);
    }
    s
}

fn spiral(a: &TransitionArtifact) -> String {
    let h = &a.homoclinic;
    let lift = &a.local;
    let r_top = h.gamma.r_max.min(h.beta.r_max).min(lift.domain());
    let deepest = h
        .report
        .transverse
        .iter()
        .chain(&h.report.tangential)
        .map(|x| x.r)
        .fold(r_top, f64::min);
    let r_bottom = (deepest / 10.0).max(1e-300);
    let samples = 400;
    let radii: Vec<f64> = (0..samples)
        .map(|i| (r_top.ln() + (r_bottom.ln() - r_top.ln()) * i as f64 / (samples - 1) as f64).exp())
        .collect();
    let mut s = String::from("curve,t,r\n");
    for &r in &radii {
        let _ = writeln!(s, "lift_gamma,{:e},{:e}", h.gamma.t(r) + lift.delta_t(r), r);
    }
    for &r in &radii {
        let _ = writeln!(s, "beta,{:e},{:e}", h.beta.t(r), r);
    }
    for x in h.report.transverse.iter().chain(&h.report.tangential) {
        let _ = writeln!(s, "crossing,{:e},{:e}", x.t + x.turn as f64, x.r);
    }
    s
}

fn strips(a: &HorseshoeArtifact) -> String {
    let mut s = String::from("axis,index,along,lower,upper\n");
    let sys = &a.certificate.strips;
    for (axis, family) in [("horizontal", &sys.horizontal), ("vertical", &sys.vertical)] {
        for strip in family {
            for ((x, lo), hi) in strip.lines.iter().zip(&strip.lower).zip(&strip.upper) {
                let _ = writeln!(s, "{axis},{},{:e},{:e},{:e}", strip.index, x, lo, hi);
            }
        }
    }
    s
}

fn entropy_curve(a: &EntropyArtifact) -> Result<String> {
    let est = a.separated_sets.as_ref().ok_or_else(|| {
        ReebError::Numerical(format!(
            "entropy artifact has no separated-set counts: {}",
            a.separated_sets_error.as_deref().unwrap_or("not computed")
        ))
    })?;
    let mut s = String::from("epsilon,time,log_count,count,valid,saturated\n");
    for c in &est.cells {
        let _ = writeln!(
            s,
            "{:e},{:e},{:e},{},{},{}",
            c.epsilon,
            c.time,
            (c.count as f64).ln(),
            c.count,
            c.valid,
            c.saturated
        );
    }
    Ok(s)
}
