//! Staged computation from a model document to horseshoe and entropy
//! artifacts, with one JSON file per stage and a digest manifest.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use reeb_core::flowcore::{HitOptions, IntegratorOptions};
use reeb_core::horseshoe::{
    certify_horseshoe, detect_transverse_homoclinic, entropy_separated_sets, semiconjugacy_check, EntropyEstimate,
    EntropyOptions, GraphArc, HomoclinicReport, HorseshoeCertificate, MoserOptions, SemiconjugacyReport,
    SpiralHorseshoe, StripOptions,
};
use reeb_core::indices::{cz_index_refined, RefinedIndex, SpectrumOptions};
use reeb_core::models::{Flow, HenonHeiles, ModelDocument, ModelKind};
use reeb_core::orbits::{find_lyapunov_triple, find_periodic_orbit, OrbitOptions, PeriodicOrbit};
use reeb_core::transition::{
    compose_lifts, find_twist_periodic_points, fit_normal_form, local_exterior_lift, transit_drift,
    CertificateOptions, GlobalLift, LocalLift, NormalFormChart, NormalFormOptions, TransitReport, TransitionLift,
    TwistLevel, TwistSearchOptions,
};
use reeb_core::{ReebError, Result};
use serde::{Deserialize, Serialize};

use crate::config::{
    EntropyStage, HorseshoeStage, IndicesStage, NormalFormStage, OrbitsStage, RunConfig, TransitionStage,
};
use crate::json::{sha256_hex, to_canonical, write_atomic};
use crate::manifest::{ArtifactEntry, ArtifactManifest, StageRecord, StageStatus, MANIFEST_FILE};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Model,
    Orbits,
    Indices,
    NormalForm,
    Transition,
    Horseshoe,
    Entropy,
}

impl Stage {
    pub const ALL: [Stage; 7] = [
        Stage::Model,
        Stage::Orbits,
        Stage::Indices,
        Stage::NormalForm,
        Stage::Transition,
        Stage::Horseshoe,
        Stage::Entropy,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Model => "model",
            Stage::Orbits => "orbits",
            Stage::Indices => "indices",
            Stage::NormalForm => "normal_form",
            Stage::Transition => "transition",
            Stage::Horseshoe => "horseshoe",
            Stage::Entropy => "entropy",
        }
    }

    pub fn file(self) -> &'static str {
        match self {
            Stage::Model => "model.json",
            Stage::Orbits => "orbits.json",
            Stage::Indices => "cz.json",
            Stage::NormalForm => "nf.json",
            Stage::Transition => "transition.json",
            Stage::Horseshoe => "horseshoe.json",
            Stage::Entropy => "entropy.json",
        }
    }

    pub fn concept(self) -> &'static str {
        match self {
            Stage::Model => "model document",
            Stage::Orbits => "periodic orbits with transverse Floquet data",
            Stage::Indices => "Conley-Zehnder indices from the asymptotic operator",
            Stage::NormalForm => "Moser normal form chart around a hyperbolic orbit",
            Stage::Transition => "transition-map lifts with logarithmic twist",
            Stage::Horseshoe => "horseshoe on countably many strips",
            Stage::Entropy => "topological entropy bounds",
        }
    }

    fn enabled(self, cfg: &RunConfig) -> bool {
        let s = &cfg.stages;
        match self {
            Stage::Model => true,
            Stage::Orbits => s.orbits.is_some(),
            Stage::Indices => s.indices.is_some(),
            Stage::NormalForm => s.normal_form.is_some(),
            Stage::Transition => s.transition.is_some(),
            Stage::Horseshoe => s.horseshoe.is_some(),
            Stage::Entropy => s.entropy.is_some(),
        }
    }

    fn prerequisites(self, cfg: &RunConfig, is_map: bool) -> Vec<Stage> {
        match self {
            Stage::Model => vec![],
            Stage::Orbits | Stage::Horseshoe if is_map => vec![Stage::Model],
            Stage::Orbits => vec![Stage::Model],
            Stage::Indices | Stage::NormalForm => vec![Stage::Orbits],
            Stage::Transition => vec![Stage::NormalForm],
            Stage::Horseshoe => vec![Stage::Transition],
            Stage::Entropy => match cfg.stages.entropy.as_ref().and_then(|e| e.map.as_ref()) {
                Some(_) => vec![Stage::Model],
                None => vec![Stage::Horseshoe],
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelArtifact {
    pub concept: String,
    pub model: ModelDocument,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrbitsArtifact {
    pub concept: String,
    pub model: String,
    pub energy: Option<f64>,
    pub period_spread: f64,
    /// Pointwise mismatch under the threefold rotation (Hénon-Heiles only).
    pub symmetry_error: Option<f64>,
    pub orbits: Vec<PeriodicOrbit>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndicesArtifact {
    pub concept: String,
    pub indices: Vec<i64>,
    pub orbits: Vec<RefinedIndex>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScatterPoint {
    pub seed: usize,
    pub iterate: usize,
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalFormArtifact {
    pub concept: String,
    pub orbit: usize,
    pub chart: NormalFormChart,
    pub transit: TransitReport,
    /// Successive section returns in chart coordinates.
    pub section_scatter: Vec<ScatterPoint>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LadderRow {
    pub m: usize,
    pub r: f64,
    pub delta_t: f64,
    pub raw_delta_t: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HomoclinicArtifact {
    pub gamma: GraphArc,
    pub beta: GraphArc,
    pub lambda: f64,
    pub report: HomoclinicReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionArtifact {
    pub concept: String,
    pub local: LocalLift,
    pub ladder: Vec<LadderRow>,
    pub composed: TransitionLift,
    pub twist_levels: Vec<TwistLevel>,
    pub homoclinic: HomoclinicArtifact,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HorseshoeArtifact {
    pub concept: String,
    pub map: ModelDocument,
    pub certificate: HorseshoeCertificate,
    pub semiconjugacy: SemiconjugacyReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyArtifact {
    pub concept: String,
    pub map: String,
    /// `ln N` from a certified horseshoe on `N` strips, per iterate.
    pub lower_bound: Option<f64>,
    pub separated_sets: Option<EntropyEstimate>,
    pub separated_sets_error: Option<String>,
}

/// Results handed from one stage to the next.
#[derive(Default)]
struct Carry {
    flow: Option<Box<dyn Flow<f64>>>,
    orbits: Vec<PeriodicOrbit>,
    chart: Option<NormalFormChart>,
    local: Option<LocalLift>,
    horseshoe: Option<(ModelDocument, usize, bool)>,
}

/// Serialized artifact plus the verdict of its checks.
struct Emitted {
    text: String,
    verdict: Result<()>,
}

fn emitted<T: Serialize>(value: &T, verdict: Result<()>) -> Result<Emitted> {
    Ok(Emitted {
        text: to_canonical(value)?,
        verdict,
    })
}

fn orbit_options(s: &OrbitsStage) -> OrbitOptions {
    OrbitOptions {
        integrator: IntegratorOptions::with_tol(s.tol_integration),
        tol_closure: s.tol_closure,
        tol_floq: s.tol_floquet,
        ..OrbitOptions::default()
    }
}

fn hit_options() -> HitOptions {
    HitOptions {
        integrator: IntegratorOptions::with_tol(1e-12),
        ..HitOptions::default()
    }
}

fn run_orbits(doc: &ModelDocument, s: &OrbitsStage, carry: &mut Carry) -> Result<Emitted> {
    let flow = carry.flow.as_deref().expect("flow model");
    let opts = orbit_options(s);
    let artifact = match (&doc.kind, &s.guess) {
        (ModelKind::HenonHeiles { energy, energy_cap }, None) => {
            let model = HenonHeiles::with_cap(*energy, *energy_cap)?;
            let triple = find_lyapunov_triple(&model, &opts)?;
            OrbitsArtifact {
                concept: Stage::Orbits.concept().into(),
                model: doc.name.clone(),
                energy: Some(triple.energy),
                period_spread: triple.period_spread,
                symmetry_error: Some(triple.symmetry_error),
                orbits: triple.orbits,
            }
        }
        (_, Some(guess)) => {
            let period = s
                .period
                .ok_or_else(|| ReebError::Schema("`stages.orbits.period` is required with `guess`".into()))?;
            let orbit = find_periodic_orbit(flow, guess, period, &opts)?;
            OrbitsArtifact {
                concept: Stage::Orbits.concept().into(),
                model: doc.name.clone(),
                energy: None,
                period_spread: 0.0,
                symmetry_error: None,
                orbits: vec![orbit],
            }
        }
        (_, None) => {
            return Err(ReebError::Schema(format!(
                "`stages.orbits.guess` and `period` are required for model kind of '{}'",
                doc.name
            )))
        }
    };
    carry.orbits = artifact.orbits.clone();
    emitted(&artifact, Ok(()))
}

fn run_indices(s: &IndicesStage, carry: &Carry) -> Result<Emitted> {
    let flow = carry.flow.as_deref().expect("flow model");
    let opts = SpectrumOptions {
        tol_spec: s.tol_spectrum,
        ..SpectrumOptions::default()
    };
    let orbits = carry
        .orbits
        .iter()
        .map(|o| cz_index_refined(o, flow, s.grid, &opts))
        .collect::<Result<Vec<_>>>()?;
    let artifact = IndicesArtifact {
        concept: Stage::Indices.concept().into(),
        indices: orbits.iter().map(|r| r.fine.index).collect(),
        orbits,
    };
    emitted(&artifact, Ok(()))
}

/// Returns of trajectories started across the stable arm, in chart coordinates,
/// until they leave the chart.
fn section_scatter(flow: &dyn Flow<f64>, chart: &NormalFormChart, seeds: usize) -> Vec<ScatterPoint> {
    let hit = hit_options();
    let radius = chart.radius;
    let per_seed: Vec<Vec<ScatterPoint>> = (0..seeds)
        .into_par_iter()
        .map(|i| {
            let frac = if seeds > 1 { i as f64 / (seeds - 1) as f64 } else { 0.0 };
            let sx = if i % 2 == 0 { 1.0 } else { -1.0 };
            let sy = if (i / 2) % 2 == 0 { 1.0 } else { -1.0 };
            let mut xy = [sx * 0.9 * radius, sy * 0.9 * radius * 10f64.powf(-1.0 - 5.0 * frac)];
            let mut out = Vec::new();
            let Some(ab) = chart.from_chart(xy) else { return out };
            let mut z = chart.section.embed(flow, ab);
            for k in 0..16 {
                out.push(ScatterPoint { seed: i, iterate: k, x: xy[0], y: xy[1] });
                let Ok((_, next)) = chart.section.first_return(flow, &z, &hit) else { break };
                xy = chart.chart_of_point(&next);
                if xy[0].abs() > radius || xy[1].abs() > radius {
                    break;
                }
                z = next;
            }
            out
        })
        .collect();
    per_seed.into_iter().flatten().collect()
}

fn run_normal_form(s: &NormalFormStage, carry: &mut Carry) -> Result<Emitted> {
    let flow = carry.flow.as_deref().expect("flow model");
    let orbit = carry.orbits.get(s.orbit).ok_or_else(|| {
        ReebError::InvalidParameter(format!("orbit {} requested but {} available", s.orbit, carry.orbits.len()))
    })?;
    let opts = NormalFormOptions {
        order: s.order,
        tol_nf: s.tol_normal_form,
        ..NormalFormOptions::default()
    };
    let chart = fit_normal_form(flow, orbit, s.radius, &opts)?;
    let transit = transit_drift(flow, &chart, s.transits, &hit_options())?;
    let artifact = NormalFormArtifact {
        concept: Stage::NormalForm.concept().into(),
        orbit: s.orbit,
        section_scatter: section_scatter(flow, &chart, s.scatter_seeds),
        chart,
        transit,
    };
    carry.chart = Some(artifact.chart.clone());
    emitted(&artifact, Ok(()))
}

fn run_transition(s: &TransitionStage, carry: &mut Carry) -> Result<Emitted> {
    let chart = carry.chart.as_ref().expect("chart from the normal-form stage");
    let local_lift = local_exterior_lift(chart, s.delta)?;
    let TransitionLift::LocalExterior(local) = local_lift.clone() else {
        unreachable!("local_exterior_lift returns a local lift")
    };
    let ladder = (1..=s.ladder)
        .map(|m| {
            let r = s.delta / 2f64.powi(m as i32);
            LadderRow {
                m,
                r,
                delta_t: local.delta_t(r),
                raw_delta_t: local.raw_delta_t(r),
            }
        })
        .collect();
    let g = &s.global;
    let global = GlobalLift::trigonometric(g.shift, g.amp, g.x_tilde, g.y_mean, g.y_amp, local.domain())?;
    let cert_opts = CertificateOptions {
        t_samples: s.certificate_samples,
        r_samples: s.certificate_samples,
        ..CertificateOptions::default()
    };
    let composed = compose_lifts(vec![local_lift, TransitionLift::Global(global)], &cert_opts)?;
    let twist_levels =
        find_twist_periodic_points(&composed, s.twist_k_min..=s.twist_k_max, &TwistSearchOptions::default())?;
    let h = &s.homoclinic;
    let report = detect_transverse_homoclinic(&local, &h.gamma, &h.beta, h.turns, h.lambda, h.tol)?;
    let artifact = TransitionArtifact {
        concept: Stage::Transition.concept().into(),
        local: local.clone(),
        ladder,
        composed,
        twist_levels,
        homoclinic: HomoclinicArtifact {
            gamma: h.gamma,
            beta: h.beta,
            lambda: h.lambda,
            report,
        },
    };
    carry.local = Some(local);
    emitted(&artifact, Ok(()))
}

/// `count` words of length `len` over `symbols` letters from a seeded stream.
pub fn random_words(seed: u64, symbols: usize, len: usize, count: usize) -> Vec<Vec<usize>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| (0..len).map(|_| rng.random_range(0..symbols)).collect()).collect()
}

fn run_horseshoe(doc: &ModelDocument, s: &HorseshoeStage, seed: u64, carry: &mut Carry) -> Result<Emitted> {
    let map_doc = if doc.is_map() {
        doc.clone()
    } else {
        let local = carry.local.clone().expect("lift from the transition stage");
        let spiral = SpiralHorseshoe::new(s.global, s.sigma, local)?;
        ModelDocument::new(format!("{}-spiral", doc.name), ModelKind::SpiralHorseshoe(spiral))?
    };
    let map = map_doc.build_map()?;
    let strip_opts = StripOptions {
        n_max: s.n_max,
        lines: s.lines,
        ..StripOptions::default()
    };
    let moser_opts = MoserOptions {
        tol: s.tol_moser,
        substrips: s.substrips,
        seed,
        ..MoserOptions::default()
    };
    let certificate = certify_horseshoe(map.as_ref(), &strip_opts, &moser_opts, s.mu, s.cone_samples)?;
    let len = if s.word_length == 0 { s.n_max } else { s.word_length };
    let words = random_words(seed.wrapping_add(1), certificate.symbols, len, s.words);
    let semiconjugacy = semiconjugacy_check(map.as_ref(), &certificate.strips, &words);
    let verdict = if !certificate.passed {
        Err(ReebError::Numerical(certificate_witness(&certificate)))
    } else if !semiconjugacy.passed {
        Err(ReebError::Numerical(format!(
            "semiconjugacy check failed: {} of {} words realized, first failure {:?}",
            semiconjugacy.realized,
            semiconjugacy.words,
            semiconjugacy.failures.first()
        )))
    } else {
        Ok(())
    };
    carry.horseshoe = Some((map_doc.clone(), certificate.symbols, certificate.passed));
    let artifact = HorseshoeArtifact {
        concept: Stage::Horseshoe.concept().into(),
        map: map_doc,
        certificate,
        semiconjugacy,
    };
    emitted(&artifact, verdict)
}

fn certificate_witness(c: &HorseshoeCertificate) -> String {
    if !c.moser.passed {
        let w = c.moser.witnesses.first().map(|w| serde_json::to_string(w).unwrap_or_default());
        format!("Moser conditions fail (n1 {}, n2 {}): witness {}", c.moser.n1, c.moser.n2, w.unwrap_or_default())
    } else {
        let w = c.cones.violation.as_ref().map(|v| serde_json::to_string(v).unwrap_or_default());
        format!("cone condition fails at mu = {}: witness {}", c.cones.mu, w.unwrap_or_default())
    }
}

fn run_entropy(s: &EntropyStage, carry: &Carry) -> Result<Emitted> {
    let (map_doc, lower_bound) = match (&s.map, &carry.horseshoe) {
        (Some(doc), _) => (doc.clone(), None),
        (None, Some((doc, symbols, passed))) => (doc.clone(), passed.then(|| (*symbols as f64).ln())),
        (None, None) => unreachable!("prerequisites ensure a horseshoe map"),
    };
    let map = map_doc.build_map()?;
    let opts = EntropyOptions {
        column: s.column,
        samples: s.samples,
        max_iterate: s.max_iterate,
        epsilon_base: s.epsilon_base,
        levels: s.levels,
        roof: 1.0,
    };
    let (separated_sets, separated_sets_error) = match entropy_separated_sets(map.as_ref(), &opts) {
        Ok(e) => (Some(e), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let verdict = match (&separated_sets, lower_bound) {
        (None, None) => Err(ReebError::Numerical(separated_sets_error.clone().unwrap_or_default())),
        _ => Ok(()),
    };
    let artifact = EntropyArtifact {
        concept: Stage::Entropy.concept().into(),
        map: map.name().to_string(),
        lower_bound,
        separated_sets,
        separated_sets_error,
    };
    emitted(&artifact, verdict)
}

fn run_stage(stage: Stage, cfg: &RunConfig, doc: &ModelDocument, carry: &mut Carry) -> Result<Emitted> {
    let st = &cfg.stages;
    match stage {
        Stage::Model => {
            if doc.is_map() {
                doc.build_map()?;
            } else {
                carry.flow = Some(doc.build_flow()?);
            }
            let artifact = ModelArtifact {
                concept: Stage::Model.concept().into(),
                model: doc.clone(),
            };
            emitted(&artifact, Ok(()))
        }
        Stage::Orbits => run_orbits(doc, st.orbits.as_ref().unwrap(), carry),
        Stage::Indices => run_indices(st.indices.as_ref().unwrap(), carry),
        Stage::NormalForm => run_normal_form(st.normal_form.as_ref().unwrap(), carry),
        Stage::Transition => run_transition(st.transition.as_ref().unwrap(), carry),
        Stage::Horseshoe => run_horseshoe(doc, st.horseshoe.as_ref().unwrap(), cfg.seed, carry),
        Stage::Entropy => run_entropy(st.entropy.as_ref().unwrap(), carry),
    }
}

fn flow_only(stage: Stage, is_map: bool) -> bool {
    is_map && matches!(stage, Stage::Orbits | Stage::Indices | Stage::NormalForm | Stage::Transition)
}

/// Runs the enabled stages in dependency order, writing one artifact per
/// stage and `manifest.json` into `config.output_dir`.
///
/// A failing stage keeps the artifacts written so far; stages that need
/// its output are recorded as skipped with the reason.
pub fn run_pipeline(config: &RunConfig) -> Result<ArtifactManifest> {
    let doc = config.model_document()?.clone();
    let is_map = doc.is_map();
    let dir = config.output_dir.as_path();
    std::fs::create_dir_all(dir)?;
    let mut carry = Carry::default();
    let mut records: Vec<StageRecord> = Vec::new();
    for stage in Stage::ALL {
        let mut record = StageRecord {
            stage: stage.name().into(),
            status: StageStatus::Completed,
            reason: None,
            exit_code: None,
            artifacts: Vec::new(),
        };
        if !stage.enabled(config) {
            record.status = StageStatus::Disabled;
            records.push(record);
            continue;
        }
        if flow_only(stage, is_map) {
            record.status = StageStatus::Skipped;
            record.reason = Some(format!("model '{}' is a planar map", doc.name));
            records.push(record);
            continue;
        }
        let blocked = stage.prerequisites(config, is_map).into_iter().find(|p| {
            records.iter().find(|r| r.stage == p.name()).map(|r| r.status) != Some(StageStatus::Completed)
        });
        if let Some(p) = blocked {
            record.status = StageStatus::Skipped;
            record.reason = Some(format!("requires stage '{}', which did not complete", p.name()));
            records.push(record);
            continue;
        }
        match run_stage(stage, config, &doc, &mut carry) {
            Ok(out) => {
                record.artifacts.push(write_artifact(dir, stage, &out.text)?);
                if let Err(e) = out.verdict {
                    record.status = StageStatus::Failed;
                    record.reason = Some(e.to_string());
                    record.exit_code = Some(e.exit_code());
                }
            }
            Err(e) => {
                record.status = StageStatus::Failed;
                record.reason = Some(e.to_string());
                record.exit_code = Some(e.exit_code());
            }
        }
        records.push(record);
    }
    let mut concepts: Vec<String> = records
        .iter()
        .flat_map(|r| r.artifacts.iter().map(|a| a.concept.clone()))
        .collect();
    concepts.sort();
    concepts.dedup();
    let manifest = ArtifactManifest {
        name: config.name.clone(),
        seed: config.seed,
        config_sha256: config.digest()?,
        stages: records,
        concepts,
    };
    write_atomic(&dir.join(MANIFEST_FILE), to_canonical(&manifest)?.as_bytes())?;
    Ok(manifest)
}

/// [`run_pipeline`] on a dedicated pool of `workers` threads.
pub fn run_pipeline_with_workers(config: &RunConfig, workers: usize) -> Result<ArtifactManifest> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| ReebError::InvalidParameter(format!("thread pool: {e}")))?;
    pool.install(|| run_pipeline(config))
}

fn write_artifact(dir: &Path, stage: Stage, text: &str) -> Result<ArtifactEntry> {
    write_atomic(&dir.join(stage.file()), text.as_bytes())?;
    Ok(ArtifactEntry {
        file: stage.file().into(),
        sha256: sha256_hex(text.as_bytes()),
        concept: stage.concept().into(),
    })
}
