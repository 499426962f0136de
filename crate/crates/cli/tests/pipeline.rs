use std::path::{Path, PathBuf};
use std::sync::OnceLock;

use proptest::prelude::*;
use reeb_core::ReebError;
use reeb_lab::json::to_canonical;
use reeb_lab::pipeline::{EntropyArtifact, HorseshoeArtifact, IndicesArtifact, OrbitsArtifact};
use reeb_lab::{emit_plot_data, run_pipeline, ArtifactManifest, PlotKind, RunConfig, StageStatus};
use serde::de::DeserializeOwned;
use tempfile::TempDir;

fn demo_path() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/henon-heiles-demo.json")
}

fn demo_into(dir: &Path) -> RunConfig {
    let mut cfg = RunConfig::load(&demo_path()).unwrap();
    cfg.output_dir = dir.to_path_buf();
    cfg
}

/// One shared demo run; the pipeline is deterministic so tests may read it concurrently.
fn demo_run() -> &'static (TempDir, ArtifactManifest) {
    static RUN: OnceLock<(TempDir, ArtifactManifest)> = OnceLock::new();
    RUN.get_or_init(|| {
        let dir = tempfile::tempdir().unwrap();
        let manifest = run_pipeline(&demo_into(dir.path())).unwrap();
        (dir, manifest)
    })
}

fn read<T: DeserializeOwned>(dir: &Path, file: &str) -> T {
    serde_json::from_str(&std::fs::read_to_string(dir.join(file)).unwrap()).unwrap()
}

fn status(m: &ArtifactManifest, stage: &str) -> StageStatus {
    m.stage(stage).unwrap().status
}

fn affine_config(dir: &Path) -> RunConfig {
    let text = format!(
        r#"{{"name":"affine","seed":3,"output_dir":{:?},
            "model":{{"name":"affine-2","kind":"affine-horseshoe","params":{{"expansion":3.0,"n_branches":2}}}},
            "stages":{{"orbits":{{}},"horseshoe":{{"n_max":2}},"entropy":{{"epsilon_base":0.1111111111111111}}}}}}"#,
        dir.display().to_string()
    );
    RunConfig::from_json(&text).unwrap()
}

#[test]
fn demo_completes_and_verifies() {
    let (dir, m) = demo_run();
    m.verify(dir.path()).unwrap();
    assert!(m.stages.iter().all(|s| s.status == StageStatus::Completed), "{:?}", m.failure());
    let orbits: OrbitsArtifact = read(dir.path(), "orbits.json");
    assert_eq!(orbits.orbits.len(), 3);
    assert!(orbits.symmetry_error.unwrap() < 1e-6);
    let cz: IndicesArtifact = read(dir.path(), "cz.json");
    assert_eq!(cz.indices, vec![2, 2, 2]);
    let hs: HorseshoeArtifact = read(dir.path(), "horseshoe.json");
    assert!(hs.certificate.moser.passed);
    assert!(hs.semiconjugacy.passed);
    let entropy: EntropyArtifact = read(dir.path(), "entropy.json");
    assert_eq!(entropy.lower_bound, Some((hs.certificate.symbols as f64).ln()));
    assert!(m.concepts.windows(2).all(|w| w[0] <= w[1]));
}

#[test]
fn rerun_reproduces_digests() {
    let (_, first) = demo_run();
    let dir = tempfile::tempdir().unwrap();
    let second = run_pipeline(&demo_into(dir.path())).unwrap();
    assert_eq!(first.digests(), second.digests());
    assert_eq!(first.config_sha256, second.config_sha256);
}

#[test]
fn unknown_stage_is_schema_error() {
    let text = std::fs::read_to_string(demo_path()).unwrap().replace("\"orbits\":", "\"orbitz\":");
    match RunConfig::from_json(&text) {
        Err(ReebError::Schema(msg)) => assert!(msg.contains("orbitz"), "{msg}"),
        other => panic!("expected schema error, got {other:?}"),
    }
}

#[test]
fn unknown_stage_field_is_schema_error() {
    let text = r#"{"name":"x","output_dir":"o","model":{"name":"r","kind":"rotation","params":{"angle":0.3}},
                   "stages":{"horseshoe":{"n_maks":3}}}"#;
    match RunConfig::from_json(text) {
        Err(ReebError::Schema(msg)) => assert!(msg.contains("n_maks"), "{msg}"),
        other => panic!("expected schema error, got {other:?}"),
    }
}

#[test]
fn failing_stage_skips_downstream_only() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = demo_into(dir.path());
    cfg.stages.normal_form.as_mut().unwrap().orbit = 5;
    let m = run_pipeline(&cfg).unwrap();
    assert_eq!(status(&m, "orbits"), StageStatus::Completed);
    assert_eq!(status(&m, "indices"), StageStatus::Completed);
    assert_eq!(status(&m, "normal_form"), StageStatus::Failed);
    assert_eq!(m.failure().unwrap().stage, "normal_form");
    assert_eq!(m.failure().unwrap().exit_code, Some(2));
    for stage in ["transition", "horseshoe", "entropy"] {
        let rec = m.stage(stage).unwrap();
        assert_eq!(rec.status, StageStatus::Skipped, "{stage}");
        assert!(rec.reason.as_deref().unwrap().contains("did not complete"), "{stage}");
        assert!(!dir.path().join(format!("{stage}.json")).exists(), "{stage}");
    }
    m.verify(dir.path()).unwrap();
    let (_, demo) = demo_run();
    assert_eq!(m.artifact("orbits.json"), demo.artifact("orbits.json"));
    assert_eq!(m.artifact("cz.json"), demo.artifact("cz.json"));
}

#[test]
fn horseshoe_without_transition_is_skipped_for_flows() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = demo_into(dir.path());
    cfg.stages.transition = None;
    let m = run_pipeline(&cfg).unwrap();
    assert_eq!(status(&m, "transition"), StageStatus::Disabled);
    assert_eq!(status(&m, "horseshoe"), StageStatus::Skipped);
    assert_eq!(status(&m, "entropy"), StageStatus::Skipped);
    assert!(m.failure().is_none());
    m.verify(dir.path()).unwrap();
}

#[test]
fn affine_map_runs_map_stages() {
    let dir = tempfile::tempdir().unwrap();
    let m = run_pipeline(&affine_config(dir.path())).unwrap();
    m.verify(dir.path()).unwrap();
    let orbits = m.stage("orbits").unwrap();
    assert_eq!(orbits.status, StageStatus::Skipped);
    assert!(orbits.reason.as_deref().unwrap().contains("planar map"));
    assert_eq!(status(&m, "horseshoe"), StageStatus::Completed);
    assert_eq!(status(&m, "entropy"), StageStatus::Completed);
    let e: EntropyArtifact = read(dir.path(), "entropy.json");
    let h = e.separated_sets.expect("separated-set estimate").estimate;
    let ln2 = 2f64.ln();
    assert!((h - ln2).abs() < 0.1 * ln2, "{h}");

    let strips = emit_plot_data(&dir.path().join("horseshoe.json"), PlotKind::Strips, dir.path()).unwrap();
    let text = std::fs::read_to_string(strips).unwrap();
    assert!(text.starts_with("axis,index,along,lower,upper"));
    assert!(text.lines().any(|l| l.starts_with("vertical,1,")), "{text}");
    let curve = emit_plot_data(&dir.path().join("entropy.json"), PlotKind::EntropyCurve, dir.path()).unwrap();
    assert!(std::fs::read_to_string(curve).unwrap().lines().count() > 2);
}

#[test]
fn plot_data_from_demo() {
    let (dir, _) = demo_run();
    let out = tempfile::tempdir().unwrap();
    let scatter = emit_plot_data(&dir.path().join("nf.json"), PlotKind::SectionScatter, out.path()).unwrap();
    assert_eq!(scatter.file_name().unwrap(), "section-scatter.csv");
    let text = std::fs::read_to_string(&scatter).unwrap();
    // xy is conserved along each seed; its scale is radius² = 1e-4.
    let mut per_seed = std::collections::BTreeMap::<String, Vec<f64>>::new();
    for line in text.lines().skip(1) {
        let cols: Vec<&str> = line.split(',').collect();
        per_seed.entry(cols[0].into()).or_default().push(cols[4].parse().unwrap());
    }
    assert!(!per_seed.is_empty());
    for xs in per_seed.values() {
        let spread = xs.iter().cloned().fold(f64::MIN, f64::max) - xs.iter().cloned().fold(f64::MAX, f64::min);
        assert!(spread <= 1e-6 * 1e-4, "{xs:?}");
    }
    let spiral = emit_plot_data(&dir.path().join("transition.json"), PlotKind::Spiral, out.path()).unwrap();
    assert!(std::fs::read_to_string(spiral).unwrap().contains("crossing,"));
    emit_plot_data(&dir.path().join("horseshoe.json"), PlotKind::Strips, out.path()).unwrap();

    let mismatch = emit_plot_data(&dir.path().join("cz.json"), PlotKind::Strips, out.path());
    assert!(matches!(mismatch, Err(ReebError::InvalidParameter(_))), "{mismatch:?}");
    let no_curve = emit_plot_data(&dir.path().join("entropy.json"), PlotKind::EntropyCurve, out.path());
    assert!(no_curve.is_err());
}

#[test]
fn model_path_is_resolved_relative_to_config() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::create_dir(dir.path().join("models")).unwrap();
    std::fs::write(
        dir.path().join("models/rot.json"),
        r#"{"name":"rot","kind":"rotation","params":{"angle":0.25}}"#,
    )
    .unwrap();
    let cfg_path = dir.path().join("run.json");
    std::fs::write(&cfg_path, r#"{"name":"r","model_path":"models/rot.json","output_dir":"out"}"#).unwrap();
    let cfg = RunConfig::load(&cfg_path).unwrap();
    assert_eq!(cfg.model_document().unwrap().name, "rot");
    assert!(cfg.model_path.is_none());

    std::fs::write(&cfg_path, r#"{"name":"r","model_path":"models/missing.json","output_dir":"out"}"#).unwrap();
    assert!(RunConfig::load(&cfg_path).is_err());
}

#[test]
fn tampered_artifact_fails_verification() {
    let dir = tempfile::tempdir().unwrap();
    let m = run_pipeline(&affine_config(dir.path())).unwrap();
    m.verify(dir.path()).unwrap();
    let path = dir.path().join("horseshoe.json");
    let text = std::fs::read_to_string(&path).unwrap();
    std::fs::write(&path, text.replacen("\"passed\": true", "\"passed\": false", 1)).unwrap();
    assert!(m.verify(dir.path()).is_err());
    let reloaded = ArtifactManifest::load(dir.path()).unwrap();
    assert!(reloaded.verify(dir.path()).is_err());
}

#[test]
fn output_dir_does_not_change_config_digest() {
    let a = affine_config(Path::new("/a"));
    let b = affine_config(Path::new("/b"));
    assert_eq!(a.digest().unwrap(), b.digest().unwrap());
    let mut c = a.clone();
    c.seed += 1;
    assert_ne!(a.digest().unwrap(), c.digest().unwrap());
}

proptest! {
    #[test]
    fn canonical_json_round_trips_floats(xs in prop::collection::vec(any::<f64>().prop_filter("finite", |x| x.is_finite()), 0..16)) {
        let text = to_canonical(&xs).unwrap();
        let back: Vec<f64> = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(xs.len(), back.len());
        for (a, b) in xs.iter().zip(&back) {
            prop_assert_eq!(a.to_bits(), b.to_bits());
        }
        prop_assert_eq!(to_canonical(&back).unwrap(), text);
    }
}
