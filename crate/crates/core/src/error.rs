use alloc::string::String;
use core::fmt;

use crate::metric::MetricId;

/// Errors raised by the fusion and evaluation algebra.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CoreError {
    /// Per-image accuracy is computed over a whole evaluation set, not per item.
    NotAFusionMetric(MetricId),
    /// The score matrix has no rows.
    NoEvidence { site_id: String },
    /// Rows of one matrix disagree on the number of classes.
    RaggedMatrix { site_id: String },
    /// Matrix width differs from the label set size.
    ClassCountMismatch { site_id: String, width: usize, classes: usize },
    /// Nothing left to evaluate once skipped sites are removed.
    EmptyEvaluationSet,
    InvalidLabelSet(String),
    UnknownLabel(String),
    UnknownMetric(String),
    UnknownSplit(String),
    /// Checkpoint epochs must be strictly increasing.
    EpochOrder { previous: u32, next: u32 },
}

impl fmt::Display for CoreError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::NotAFusionMetric(m) => write!(f, "{m} is not a fusion metric"),
            Self::NoEvidence { site_id } => write!(f, "no evidence for site {site_id}"),
            Self::RaggedMatrix { site_id } => {
                write!(f, "score rows for site {site_id} have differing class counts")
            }
            Self::ClassCountMismatch {
                site_id,
                width,
                classes,
            } => write!(
                f,
                "site {site_id} has {width} score columns but {classes} labels"
            ),
            Self::EmptyEvaluationSet => write!(f, "empty evaluation set"),
            Self::InvalidLabelSet(why) => write!(f, "invalid label set: {why}"),
            Self::UnknownLabel(name) => write!(f, "unknown label {name:?}"),
            Self::UnknownMetric(name) => write!(f, "unknown metric {name:?}"),
            Self::UnknownSplit(name) => write!(f, "unknown split {name:?}"),
            Self::EpochOrder { previous, next } => {
                write!(f, "epoch {next} does not follow epoch {previous}")
            }
        }
    }
}

impl core::error::Error for CoreError {}
