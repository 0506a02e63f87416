//! Predictive and explainability metrics.

mod auc;
mod importance;
mod similarity;
mod tracker;

pub use auc::{auc, auc_brute_force};
pub use importance::{global_importance, GlobalImportance, ImportanceRow};
pub use similarity::{
    local_similarity_sweep, set_similarity, similarity_for, SetSimilarityReport, SimilarityMode, SimilarityRow,
};
pub use tracker::{track_epoch, EpochTracker, HistoryRow, TrackMethod, TrackPoint, TrackedModel, TrainingHistory};
