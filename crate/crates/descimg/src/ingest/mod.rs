//! Manifests, score files and image-set statistics.

pub mod manifest;
pub mod scores;
pub mod stats;

pub use manifest::{parse_manifest, write_manifest, DatasetManifest, ManifestFormat};
pub use scores::{
    load_scores, read_score_document, read_scores_csv, scores_to_csv, write_score_document,
    LoadedScores, RejectedScores,
    ScoreDocument,
};
pub use stats::{language_table, scan_image_sets, HistogramBin, ImageSetStats, ScanOptions};
