//! Run configurations, the staged artifact pipeline and CSV plot data for
//! the `reeb-lab` command line.

pub mod config;
pub mod json;
pub mod manifest;
pub mod pipeline;
pub mod plot;

pub use config::RunConfig;
pub use manifest::{ArtifactEntry, ArtifactManifest, StageRecord, StageStatus};
pub use pipeline::{run_pipeline, run_pipeline_with_workers, Stage};
pub use plot::{emit_plot_data, PlotKind};
