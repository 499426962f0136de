//! JSON model documents `{name, kind, params, frame_spec, tolerances}`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{ReebError, Result};
use crate::horseshoe::SpiralHorseshoe;
use crate::models::{
    AffineHorseshoe, Flow, HenonHeiles, IsotropicOscillator, LinearKind, LinearReebModel,
    LocalModel, LocalModelParams, PlanarMap, PlaneRotation, SyntheticPassage, DEFAULT_ENERGY_CAP,
};

/// Numerical tolerances recorded alongside a model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    pub integration: f64,
    pub energy: f64,
    pub closure: f64,
    pub floquet: f64,
    pub transverse: f64,
    pub spectrum: f64,
    pub area: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            integration: 1e-12,
            energy: 1e-9,
            closure: 1e-9,
            floquet: 1e-6,
            transverse: 1e-6,
            spectrum: 1e-6,
            area: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "kebab-case")]
pub enum ModelKind {
    HenonHeiles {
        energy: f64,
        #[serde(default = "default_cap")]
        energy_cap: f64,
    },
    IsotropicOscillator {
        energy: f64,
    },
    LocalModel(LocalModelParams),
    LinearReeb {
        #[serde(flatten)]
        kind: LinearKind,
        period: f64,
    },
    SyntheticPassage(SyntheticPassage),
    AffineHorseshoe {
        expansion: f64,
        n_branches: usize,
    },
    Rotation {
        angle: f64,
    },
    SpiralHorseshoe(SpiralHorseshoe),
}

fn default_cap() -> f64 {
    DEFAULT_ENERGY_CAP
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelDocument {
    pub name: String,
    #[serde(flatten)]
    pub kind: ModelKind,
    #[serde(default)]
    pub frame_spec: String,
    #[serde(default)]
    pub tolerances: Tolerances,
}

impl ModelDocument {
    pub fn new(name: impl Into<String>, kind: ModelKind) -> Result<Self> {
        let mut doc = Self {
            name: name.into(),
            kind,
            frame_spec: String::new(),
            tolerances: Tolerances::default(),
        };
        doc.frame_spec = match &doc.kind {
            ModelKind::AffineHorseshoe { .. } | ModelKind::Rotation { .. } | ModelKind::SpiralHorseshoe(_) => "planar".into(),
            _ => doc.build_flow()?.frame_id().into(),
        };
        Ok(doc)
    }

    pub fn is_map(&self) -> bool {
        matches!(
            self.kind,
            ModelKind::AffineHorseshoe { .. } | ModelKind::Rotation { .. } | ModelKind::SpiralHorseshoe(_)
        )
    }

    pub fn build_flow(&self) -> Result<Box<dyn Flow<f64>>> {
        Ok(match &self.kind {
            ModelKind::HenonHeiles { energy, energy_cap } => {
                Box::new(HenonHeiles::with_cap(*energy, *energy_cap)?)
            }
            ModelKind::IsotropicOscillator { energy } => Box::new(IsotropicOscillator::new(*energy)),
            ModelKind::LocalModel(p) => Box::new(LocalModel::<f64>::new(p)?),
            ModelKind::LinearReeb { kind, period } => {
                if !(*period > 0.0) {
                    return Err(ReebError::InvalidParameter("period must be positive".into()));
                }
                Box::new(LinearReebModel::new(*kind, *period))
            }
            ModelKind::SyntheticPassage(s) => Box::new(*s),
            ModelKind::AffineHorseshoe { .. } | ModelKind::Rotation { .. } | ModelKind::SpiralHorseshoe(_) => {
                return Err(ReebError::InvalidParameter(format!(
                    "model '{}' is a planar map, not a flow",
                    self.name
                )))
            }
        })
    }

    pub fn build_map(&self) -> Result<Box<dyn PlanarMap>> {
        match &self.kind {
            ModelKind::AffineHorseshoe {
                expansion,
                n_branches,
            } => Ok(Box::new(AffineHorseshoe::new(*expansion, *n_branches)?)),
            ModelKind::Rotation { angle } => Ok(Box::new(PlaneRotation::new(*angle))),
            ModelKind::SpiralHorseshoe(m) => Ok(Box::new(SpiralHorseshoe::new(m.global, m.sigma, m.local.clone())?)),
            _ => Err(ReebError::InvalidParameter(format!(
                "model '{}' is a flow, not a planar map",
                self.name
            ))),
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn henon_heiles_document_round_trips() {
        let doc = ModelDocument::new(
            "hh",
            ModelKind::HenonHeiles {
                energy: 0.1677,
                energy_cap: DEFAULT_ENERGY_CAP,
            },
        )
        .unwrap();
        let text = serde_json::to_string(&doc).unwrap();
        assert!(text.contains("\"kind\":\"henon-heiles\""));
        assert!(text.contains("\"params\""));
        let back: ModelDocument = serde_json::from_str(&text).unwrap();
        assert_eq!(back, doc);
        assert_eq!(back.frame_spec, "quaternionic-gradient");
    }

    #[test]
    fn linear_kind_is_flattened_into_params() {
        let text = r#"{"name":"e","kind":"linear-reeb","params":{"type":"elliptic","theta":0.3,"period":1.0}}"#;
        let doc: ModelDocument = serde_json::from_str(text).unwrap();
        assert!(doc.build_flow().is_ok());
        assert!(doc.build_map().is_err());
    }
}
