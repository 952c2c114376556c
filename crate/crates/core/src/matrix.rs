use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::labels::LabelSet;
use crate::{MAX_IMAGES, SOFTMAX_TOLERANCE};

/// Scores of one descriptive image, keyed by its 1-based ordinal (`01.jpg` is 1).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRow {
    pub ordinal: u8,
    pub scores: Vec<f64>,
}

impl ScoreRow {
    pub fn new(ordinal: u8, scores: Vec<f64>) -> Self {
        Self { ordinal, scores }
    }
}

/// Per-image class scores for one site, rows in ascending ordinal order.
///
/// Ordinals may have gaps when the search returned fewer images or a
/// download failed. Construction does not check anything; run
/// [`validate_matrix`] before feeding untrusted data to the algebra.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreMatrix {
    pub site_id: String,
    pub rows: Vec<ScoreRow>,
}

impl ScoreMatrix {
    pub fn new(site_id: impl Into<String>, rows: Vec<ScoreRow>) -> Self {
        Self {
            site_id: site_id.into(),
            rows,
        }
    }

    /// Builds a matrix whose ordinals are 1, 2, 3, ...
    pub fn from_scores<R>(site_id: impl Into<String>, rows: impl IntoIterator<Item = R>) -> Self
    where
        R: Into<Vec<f64>>,
    {
        let rows = rows
            .into_iter()
            .enumerate()
            .map(|(i, r)| ScoreRow::new((i + 1) as u8, r.into()))
            .collect();
        Self::new(site_id, rows)
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Number of classes, taken from the first row.
    pub fn classes(&self) -> usize {
        self.rows.first().map_or(0, |r| r.scores.len())
    }

    pub fn ordinals(&self) -> impl Iterator<Item = u8> + '_ {
        self.rows.iter().map(|r| r.ordinal)
    }

    /// Multiplies every score by `factor`. The result is generally not a
    /// valid matrix any more; used to probe scale invariance.
    pub fn scaled(&self, factor: f64) -> Self {
        let rows = self
            .rows
            .iter()
            .map(|r| ScoreRow::new(r.ordinal, r.scores.iter().map(|s| s * factor).collect()))
            .collect();
        Self::new(self.site_id.clone(), rows)
    }
}

/// How strictly score rows are checked.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SchemaMode {
    /// Scores in `[0, 1]` and each row sums to 1 within [`SOFTMAX_TOLERANCE`].
    #[default]
    Softmax,
    /// Scores in `[0, 1]` only.
    Bounded,
}

impl SchemaMode {
    pub fn as_str(self) -> &'static str {
        match self {
            SchemaMode::Softmax => "softmax",
            SchemaMode::Bounded => "bounded",
        }
    }
}

impl fmt::Display for SchemaMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SchemaMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "softmax" => Ok(SchemaMode::Softmax),
            "bounded" => Ok(SchemaMode::Bounded),
            other => Err(alloc::format!("unknown schema mode {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    TooFewRows { count: usize },
    TooManyRows { count: usize },
    OrdinalOutOfRange { ordinal: u8 },
    OrdinalNotIncreasing { previous: u8, ordinal: u8 },
    WrongWidth { ordinal: u8, width: usize, expected: usize },
    ScoreOutOfRange { ordinal: u8, column: usize, value: f64 },
    RowSum { ordinal: u8, sum: f64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::TooFewRows { count } => write!(f, "row count {count} < 1"),
            Self::TooManyRows { count } => write!(f, "row count {count} > {MAX_IMAGES}"),
            Self::OrdinalOutOfRange { ordinal } => {
                write!(f, "ordinal {ordinal} ∉ 1..={MAX_IMAGES}")
            }
            Self::OrdinalNotIncreasing { previous, ordinal } => {
                write!(f, "ordinal {ordinal} does not follow ordinal {previous}")
            }
            Self::WrongWidth {
                ordinal,
                width,
                expected,
            } => write!(f, "row {ordinal:02} has {width} scores, expected {expected}"),
            Self::ScoreOutOfRange {
                ordinal,
                column,
                value,
            } => write!(f, "row {ordinal:02} column {} score {value} ∉ [0,1]", column + 1),
            Self::RowSum { ordinal, sum } => {
                write!(f, "row {ordinal:02}: row sum {sum} ∉ 1±{SOFTMAX_TOLERANCE:e}")
            }
        }
    }
}

/// Outcome of [`validate_matrix`]; valid exactly when no violations were found.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Verdict {
    pub violations: Vec<Violation>,
}

impl Verdict {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn messages(&self) -> Vec<String> {
        self.violations.iter().map(|v| v.to_string()).collect()
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_valid() {
            return f.write_str("valid");
        }
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

/// Lists every invariant `m` breaks against `labels` under `mode`.
pub fn validate_matrix(m: &ScoreMatrix, labels: &LabelSet, mode: SchemaMode) -> Verdict {
    let mut violations = Vec::new();
    let count = m.rows.len();
    if count < 1 {
        violations.push(Violation::TooFewRows { count });
    } else if count > MAX_IMAGES {
        violations.push(Violation::TooManyRows { count });
    }

    let expected = labels.len();
    let mut previous: Option<u8> = None;
    for row in &m.rows {
        let ordinal = row.ordinal;
        if ordinal < 1 || usize::from(ordinal) > MAX_IMAGES {
            violations.push(Violation::OrdinalOutOfRange { ordinal });
        }
        if let Some(previous) = previous {
            if ordinal <= previous {
                violations.push(Violation::OrdinalNotIncreasing { previous, ordinal });
            }
        }
        previous = Some(ordinal);

        if row.scores.len() != expected {
            violations.push(Violation::WrongWidth {
                ordinal,
                width: row.scores.len(),
                expected,
            });
        }
        let mut in_range = true;
        for (column, &value) in row.scores.iter().enumerate() {
            // NaN fails both comparisons and lands here too.
            if !(0.0..=1.0).contains(&value) {
                in_range = false;
                violations.push(Violation::ScoreOutOfRange {
                    ordinal,
                    column,
                    value,
                });
            }
        }
        if mode == SchemaMode::Softmax && in_range {
            let sum: f64 = row.scores.iter().sum();
            if (sum - 1.0).abs() > SOFTMAX_TOLERANCE {
                violations.push(Violation::RowSum { ordinal, sum });
            }
        }
    }
    Verdict { violations }
}
