//! Fusion algebra for classifying an item from an ordered bag of
//! descriptive images.
//!
//! Every item (a web site, in the original setting) is described by up to
//! twenty images. A per-image classifier produces one row of class scores
//! per image; this crate turns that [`ScoreMatrix`] into a single decision
//! using three families of truncated column sums:
//!
//! | Family | Rows summed |
//! |--------|-------------|
//! | `S` | raw scores, first `k` rows in image order |
//! | `H` | one-hot rows (argmax of each image), first `k` rows |
//! | `A` | raw scores, first `k` rows after reordering by the dominant column |
//!
//! with `k` in {5, 10, 15, 20}. Together with per-image accuracy these make
//! the thirteen [`MetricId`]s reported by [`evaluate()`].
//!
//! The crate is `no_std` and only needs `alloc`; IO, file formats and the
//! CLI live in the `descimg` crate.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod aggregate;
pub mod error;
pub mod evaluate;
pub mod labels;
pub mod matrix;
pub mod metric;
pub mod record;

pub use aggregate::{
    argmax, average_reorder, classify_site, fuse, one_hot, FusedScores, OneHotMatrix,
    ReorderedMatrix,
};
pub use error::CoreError;
pub use evaluate::{
    best_metric, evaluate, CheckpointPoint, CheckpointSeries, ConfusionMatrix, EvaluationReport,
    EvaluationSet, FailedCheckpoint, SiteOutcome, SkippedSite,
};
pub use labels::{ClassLabel, LabelSet};
pub use matrix::{validate_matrix, SchemaMode, ScoreMatrix, ScoreRow, Verdict, Violation};
pub use metric::{Family, Level, MetricId};
pub use record::{is_directory_safe, Split, WebSiteRecord};

/// Largest number of descriptive images kept per item.
pub const MAX_IMAGES: usize = 20;

/// Row-sum tolerance applied in [`SchemaMode::Softmax`].
pub const SOFTMAX_TOLERANCE: f64 = 1e-4;
