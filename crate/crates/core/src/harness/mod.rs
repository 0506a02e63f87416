//! End-to-end experiment runner: config, stage manifest, pipeline and
//! report rendering.

mod config;
mod manifest;
mod pipeline;
mod svg;

pub use config::{
    AttributionSettings, DataSource, DatasetSpec, EvaluationSettings, ExperimentConfig, ExplainJob, LstmSettings,
    ModelKind, CONFIG_VERSION,
};
pub use manifest::{stage_hash, FileLog, RunManifest, StageRecord, StageStatus, MANIFEST_FILE};
pub use pipeline::{ModelMetrics, Pipeline, RunOptions, SimilaritySummary};
pub use svg::{bar_chart, line_chart};
