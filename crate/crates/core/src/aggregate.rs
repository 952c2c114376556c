//! Row transforms and the truncated-sum fusion metrics.
//!
//! Ties are resolved deterministically: an argmax tie goes to the lowest
//! class index, and rows with equal dominant-column scores keep ascending
//! ordinal order when reordered.

use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::CoreError;
use crate::labels::{ClassLabel, LabelSet};
use crate::matrix::{ScoreMatrix, ScoreRow};
use crate::metric::{Family, MetricId};

/// Index of the largest value; the first one wins a tie. `None` for an empty slice.
pub fn argmax(values: &[f64]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, &v) in values.iter().enumerate() {
        match best {
            Some((_, b)) if v <= b => {}
            _ => best = Some((i, v)),
        }
    }
    best.map(|(i, _)| i)
}

/// Each row replaced by the indicator of its argmax column.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OneHotMatrix {
    pub site_id: alloc::string::String,
    pub classes: usize,
    /// `(ordinal, hot column)` per row, ascending ordinal.
    pub rows: Vec<(u8, usize)>,
}

impl OneHotMatrix {
    pub fn row(&self, i: usize) -> Vec<u8> {
        let (_, hot) = self.rows[i];
        let mut out = vec![0u8; self.classes];
        out[hot] = 1;
        out
    }

    pub fn to_score_matrix(&self) -> ScoreMatrix {
        let rows = self
            .rows
            .iter()
            .map(|&(ordinal, hot)| {
                let mut scores = vec![0.0; self.classes];
                scores[hot] = 1.0;
                ScoreRow::new(ordinal, scores)
            })
            .collect();
        ScoreMatrix::new(self.site_id.clone(), rows)
    }
}

/// Rows sorted by the column with the greatest mean, highest first.
/// Each row keeps its original ordinal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReorderedMatrix {
    pub site_id: alloc::string::String,
    pub dominant: usize,
    pub rows: Vec<ScoreRow>,
}

impl ReorderedMatrix {
    pub fn original_ordinals(&self) -> Vec<u8> {
        self.rows.iter().map(|r| r.ordinal).collect()
    }

    pub fn to_score_matrix(&self) -> ScoreMatrix {
        ScoreMatrix::new(self.site_id.clone(), self.rows.clone())
    }
}

pub fn one_hot(m: &ScoreMatrix) -> OneHotMatrix {
    let rows = m
        .rows
        .iter()
        .map(|r| (r.ordinal, argmax(&r.scores).unwrap_or(0)))
        .collect();
    OneHotMatrix {
        site_id: m.site_id.clone(),
        classes: m.classes(),
        rows,
    }
}

fn column_means(m: &ScoreMatrix) -> Vec<f64> {
    let mut sums = vec![0.0; m.classes()];
    for row in &m.rows {
        for (acc, s) in sums.iter_mut().zip(&row.scores) {
            *acc += s;
        }
    }
    let n = m.rows.len() as f64;
    sums.iter().map(|s| s / n).collect()
}

fn reorder_cmp(dominant: usize) -> impl Fn(&ScoreRow, &ScoreRow) -> Ordering {
    move |a, b| {
        b.scores[dominant]
            .total_cmp(&a.scores[dominant])
            .then(a.ordinal.cmp(&b.ordinal))
    }
}

pub fn average_reorder(m: &ScoreMatrix) -> ReorderedMatrix {
    let dominant = argmax(&column_means(m)).unwrap_or(0);
    let mut rows = m.rows.clone();
    rows.sort_by(reorder_cmp(dominant));
    ReorderedMatrix {
        site_id: m.site_id.clone(),
        dominant,
        rows,
    }
}

/// Fused class scores of one site under one metric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FusedScores {
    pub metric: MetricId,
    pub per_class: Vec<f64>,
    /// Column index of the decided class.
    pub decided: usize,
    pub images_used: usize,
}

impl FusedScores {
    pub fn decided_label(&self, labels: &LabelSet) -> Option<ClassLabel> {
        labels.get(self.decided)
    }
}

fn check_shape(m: &ScoreMatrix) -> Result<usize, CoreError> {
    if m.is_empty() {
        return Err(CoreError::NoEvidence {
            site_id: m.site_id.clone(),
        });
    }
    let classes = m.classes();
    if classes == 0 || m.rows.iter().any(|r| r.scores.len() != classes) {
        return Err(CoreError::RaggedMatrix {
            site_id: m.site_id.clone(),
        });
    }
    Ok(classes)
}

/// Sums the first `min(k, rows)` rows of the family's transformed matrix.
///
/// The selected rows are always accumulated in ascending ordinal order, so a
/// full-depth `A` sum is bitwise equal to the `S` sum over the same rows.
pub fn fuse(m: &ScoreMatrix, metric: MetricId) -> Result<FusedScores, CoreError> {
    let (family, level) = match metric {
        MetricId::Fusion(f, l) => (f, l),
        MetricId::PerImage => return Err(CoreError::NotAFusionMetric(metric)),
    };
    let classes = check_shape(m)?;
    let used = level.k().min(m.len());
    let mut per_class = vec![0.0; classes];

    match family {
        Family::S => {
            for row in &m.rows[..used] {
                add_row(&mut per_class, &row.scores);
            }
        }
        Family::H => {
            for row in &m.rows[..used] {
                if let Some(hot) = argmax(&row.scores) {
                    per_class[hot] += 1.0;
                }
            }
        }
        Family::A => {
            let reordered = average_reorder(m);
            let mut kept: Vec<&ScoreRow> = reordered.rows[..used].iter().collect();
            kept.sort_by_key(|r| r.ordinal);
            for row in kept {
                add_row(&mut per_class, &row.scores);
            }
        }
    }

    let decided = argmax(&per_class).unwrap_or(0);
    Ok(FusedScores {
        metric,
        per_class,
        decided,
        images_used: used,
    })
}

fn add_row(acc: &mut [f64], row: &[f64]) {
    for (a, s) in acc.iter_mut().zip(row) {
        *a += s;
    }
}

/// The class decided for a site under `metric`.
pub fn classify_site(
    m: &ScoreMatrix,
    metric: MetricId,
    labels: &LabelSet,
) -> Result<ClassLabel, CoreError> {
    let classes = check_shape(m)?;
    if classes != labels.len() {
        return Err(CoreError::ClassCountMismatch {
            site_id: m.site_id.clone(),
            width: classes,
            classes: labels.len(),
        });
    }
    let fused = fuse(m, metric)?;
    Ok(labels
        .get(fused.decided)
        .expect("decided index is within the label set"))
}
