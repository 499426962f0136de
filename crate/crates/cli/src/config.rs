//! Run configuration: one JSON document per pipeline run.

use std::path::{Path, PathBuf};

use reeb_core::horseshoe::GraphArc;
use reeb_core::models::ModelDocument;
use reeb_core::{ReebError, Result};
use serde::{Deserialize, Serialize};

/// Environment variable that replaces `output_dir`; the only one consulted.
pub const OUTPUT_DIR_ENV: &str = "REEB_LAB_OUTPUT_DIR";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub name: String,
    /// Inline model document; exclusive with `model_path`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelDocument>,
    /// Model document on disk, relative to the configuration file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model_path: Option<PathBuf>,
    #[serde(default)]
    pub seed: u64,
    pub output_dir: PathBuf,
    #[serde(default)]
    pub stages: StageConfigs,
}

/// Stages to run; an absent entry disables the stage.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StageConfigs {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub orbits: Option<OrbitsStage>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub indices: Option<IndicesStage>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub normal_form: Option<NormalFormStage>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub transition: Option<TransitionStage>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub horseshoe: Option<HorseshoeStage>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub entropy: Option<EntropyStage>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OrbitsStage {
    pub tol_integration: f64,
    pub tol_closure: f64,
    pub tol_floquet: f64,
    /// Start state for a single orbit; Hénon-Heiles models default to the Lyapunov triple.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub guess: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub period: Option<f64>,
}

impl Default for OrbitsStage {
    fn default() -> Self {
        Self {
            tol_integration: 1e-12,
            tol_closure: 1e-10,
            tol_floquet: 1e-6,
            guess: None,
            period: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IndicesStage {
    /// Coarse grid; the index is confirmed on twice this grid.
    pub grid: usize,
    pub tol_spectrum: f64,
}

impl Default for IndicesStage {
    fn default() -> Self {
        Self {
            grid: 128,
            tol_spectrum: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NormalFormStage {
    pub orbit: usize,
    pub radius: f64,
    pub order: usize,
    pub tol_normal_form: f64,
    pub transits: usize,
    /// Trajectories followed through the chart for the section scatter.
    pub scatter_seeds: usize,
}

impl Default for NormalFormStage {
    fn default() -> Self {
        Self {
            orbit: 0,
            radius: 0.01,
            order: 4,
            tol_normal_form: 1e-6,
            transits: 100,
            scatter_seeds: 12,
        }
    }
}

/// Closed-form global passage `t ↦ t + shift + amp sin 2πt` with radial factor
/// `y_mean + y_amp cos 2πt`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GlobalPassage {
    pub shift: f64,
    pub amp: f64,
    pub x_tilde: f64,
    pub y_mean: f64,
    pub y_amp: f64,
}

impl Default for GlobalPassage {
    fn default() -> Self {
        Self {
            shift: 0.3,
            amp: 0.05,
            x_tilde: 0.5,
            y_mean: 1.0,
            y_amp: 0.3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HomoclinicStage {
    pub turns: usize,
    pub gamma: GraphArc,
    pub beta: GraphArc,
    pub lambda: f64,
    pub tol: f64,
}

impl Default for HomoclinicStage {
    fn default() -> Self {
        Self {
            turns: 10,
            gamma: GraphArc::constant(0.0, 1.0),
            beta: GraphArc::constant(0.25, 1.0),
            lambda: 0.5,
            tol: 1e-12,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TransitionStage {
    /// Width `δ` of the passage sections; must be below the chart radius.
    pub delta: f64,
    /// Radii `δ/2^m` for `m = 1..=ladder` in the passage-time table.
    pub ladder: usize,
    pub global: GlobalPassage,
    pub certificate_samples: usize,
    pub twist_k_min: i64,
    pub twist_k_max: i64,
    pub homoclinic: HomoclinicStage,
}

impl Default for TransitionStage {
    fn default() -> Self {
        Self {
            delta: 0.009,
            ladder: 15,
            global: GlobalPassage::default(),
            certificate_samples: 100,
            twist_k_min: 1,
            twist_k_max: 6,
            homoclinic: HomoclinicStage::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HorseshoeStage {
    /// Linear global passage of the spiral return map (flow models only).
    pub global: [[f64; 2]; 2],
    /// Chart scale of the square (flow models only).
    pub sigma: f64,
    pub n_max: usize,
    pub lines: usize,
    pub mu: f64,
    pub cone_samples: usize,
    pub tol_moser: f64,
    pub substrips: usize,
    pub words: usize,
    /// Length of the random test words; 0 uses `n_max`.
    pub word_length: usize,
}

impl Default for HorseshoeStage {
    fn default() -> Self {
        Self {
            global: [[1.0, 0.5], [-1.0, 0.5]],
            sigma: 0.004,
            n_max: 3,
            lines: 65,
            mu: 0.4,
            cone_samples: 41,
            tol_moser: 1e-6,
            substrips: 4,
            words: 50,
            word_length: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EntropyStage {
    /// Map to sample; defaults to the map certified by the horseshoe stage.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub map: Option<ModelDocument>,
    pub column: f64,
    pub samples: usize,
    pub max_iterate: usize,
    pub epsilon_base: f64,
    pub levels: usize,
}

impl Default for EntropyStage {
    fn default() -> Self {
        Self {
            map: None,
            column: 0.5,
            samples: 200_000,
            max_iterate: 8,
            epsilon_base: 0.1,
            levels: 3,
        }
    }
}

impl RunConfig {
    /// Parses a configuration; schema violations name the offending field.
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| ReebError::Schema(e.to_string()))
    }

    /// Reads a configuration file and inlines `model_path`.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut cfg = Self::from_json(&text)?;
        if let Some(rel) = cfg.model_path.take() {
            if cfg.model.is_some() {
                return Err(ReebError::Schema("`model` and `model_path` are mutually exclusive".into()));
            }
            let base = path.parent().unwrap_or(Path::new("."));
            cfg.model = Some(ModelDocument::load(&base.join(rel))?);
        }
        Ok(cfg)
    }

    /// Applies the output-directory override from the environment.
    pub fn with_env_override(mut self) -> Self {
        if let Some(dir) = std::env::var_os(OUTPUT_DIR_ENV) {
            self.output_dir = PathBuf::from(dir);
        }
        self
    }

    pub fn model_document(&self) -> Result<&ModelDocument> {
        match (&self.model, &self.model_path) {
            (Some(m), None) => Ok(m),
            (Some(_), Some(_)) => Err(ReebError::Schema("`model` and `model_path` are mutually exclusive".into())),
            (None, Some(p)) => Err(ReebError::Schema(format!(
                "`model_path` {} must be resolved with RunConfig::load",
                p.display()
            ))),
            (None, None) => Err(ReebError::Schema("missing field `model`".into())),
        }
    }

    /// Canonical text of the configuration without the output directory,
    /// so that the digest identifies the computation rather than its location.
    pub fn digest(&self) -> Result<String> {
        let mut c = self.clone();
        c.output_dir = PathBuf::new();
        Ok(crate::json::sha256_hex(crate::json::to_canonical(&c)?.as_bytes()))
    }
}
