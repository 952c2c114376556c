//! Dataset-level accuracy: the thirteen metrics, confusion matrices and
//! checkpoint series.
//!
//! Evaluation is split into a per-site map ([`SiteOutcome::compute`]) and an
//! ordered reduction ([`EvaluationReport::from_outcomes`]) so callers can run
//! the map step on any number of workers and still get an identical report.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::aggregate::{argmax, fuse};
use crate::error::CoreError;
use crate::labels::LabelSet;
use crate::matrix::ScoreMatrix;
use crate::metric::MetricId;
use crate::record::WebSiteRecord;

/// Reason recorded for sites with no descriptive images.
pub const NO_EVIDENCE: &str = "no evidence";

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SkippedSite {
    pub site_id: String,
    pub reason: String,
}

impl SkippedSite {
    pub fn new(site_id: impl Into<String>, reason: impl Into<String>) -> Self {
        Self {
            site_id: site_id.into(),
            reason: reason.into(),
        }
    }
}

/// Test-split sites paired with their score matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationSet {
    pub labels: LabelSet,
    pub sites: Vec<(WebSiteRecord, ScoreMatrix)>,
    /// Sites excluded before evaluation, with the reason.
    pub skipped: Vec<SkippedSite>,
}

impl EvaluationSet {
    pub fn new(labels: LabelSet) -> Self {
        Self {
            labels,
            sites: Vec::new(),
            skipped: Vec::new(),
        }
    }

    pub fn push(&mut self, record: WebSiteRecord, matrix: ScoreMatrix) {
        self.sites.push((record, matrix));
    }

    pub fn skip(&mut self, site_id: impl Into<String>, reason: impl Into<String>) {
        self.skipped.push(SkippedSite::new(site_id, reason));
    }
}

/// Everything the reduction needs to know about one evaluated site.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SiteOutcome {
    pub site_id: String,
    pub truth: usize,
    /// Decided class per fusion metric, indexed like [`MetricId::FUSION`].
    pub predictions: [usize; 12],
    /// Argmax of each image row, in ordinal order.
    pub image_predictions: Vec<usize>,
}

impl SiteOutcome {
    /// Runs every fusion metric on one site; `Err` carries the skip record.
    pub fn compute(
        record: &WebSiteRecord,
        matrix: &ScoreMatrix,
        labels: &LabelSet,
    ) -> Result<Self, SkippedSite> {
        let skip = |reason: String| SkippedSite::new(record.site_id.clone(), reason);
        if matrix.is_empty() {
            return Err(skip(NO_EVIDENCE.to_string()));
        }
        if record.label.index >= labels.len() {
            return Err(skip(alloc::format!("label {} outside label set", record.label)));
        }
        if matrix.rows.iter().any(|r| r.scores.len() != labels.len()) {
            return Err(skip(alloc::format!(
                "score rows do not have {} columns",
                labels.len()
            )));
        }
        let mut predictions = [0usize; 12];
        for (slot, metric) in predictions.iter_mut().zip(MetricId::FUSION) {
            *slot = fuse(matrix, metric)
                .map_err(|e| skip(e.to_string()))?
                .decided;
        }
        let image_predictions = matrix
            .rows
            .iter()
            .map(|r| argmax(&r.scores).unwrap_or(0))
            .collect();
        Ok(Self {
            site_id: record.site_id.clone(),
            truth: record.label.index,
            predictions,
            image_predictions,
        })
    }
}

/// Square count matrix, rows are true classes and columns predicted classes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub classes: usize,
    /// Row-major `classes × classes` counts.
    pub counts: Vec<u64>,
}

impl ConfusionMatrix {
    pub fn new(classes: usize) -> Self {
        Self {
            classes,
            counts: vec![0; classes * classes],
        }
    }

    pub fn record(&mut self, truth: usize, predicted: usize) {
        self.counts[truth * self.classes + predicted] += 1;
    }

    pub fn get(&self, truth: usize, predicted: usize) -> u64 {
        self.counts[truth * self.classes + predicted]
    }

    pub fn trace(&self) -> u64 {
        (0..self.classes).map(|c| self.get(c, c)).sum()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn is_diagonal(&self) -> bool {
        (0..self.classes)
            .all(|t| (0..self.classes).all(|p| t == p || self.get(t, p) == 0))
    }

    /// `trace / total`, or 0 for an empty matrix.
    pub fn accuracy(&self) -> f64 {
        let total = self.total();
        if total == 0 {
            0.0
        } else {
            self.trace() as f64 / total as f64
        }
    }

    pub fn row(&self, truth: usize) -> &[u64] {
        &self.counts[truth * self.classes..(truth + 1) * self.classes]
    }
}

/// Accuracies and confusion matrices for all thirteen metrics.
///
/// Fusion-metric confusion matrices count sites; the `PerImage` matrix
/// counts individual images.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub labels: LabelSet,
    pub accuracy_by_metric: BTreeMap<MetricId, f64>,
    pub confusion: BTreeMap<MetricId, ConfusionMatrix>,
    pub skipped: Vec<SkippedSite>,
    pub evaluated_sites: u64,
    pub per_image_count: u64,
}

impl EvaluationReport {
    /// Ordered reduction of per-site outcomes. Outcomes and skips are sorted
    /// by site id first, so the input order does not matter.
    pub fn from_outcomes(
        labels: &LabelSet,
        mut outcomes: Vec<SiteOutcome>,
        mut skipped: Vec<SkippedSite>,
    ) -> Result<Self, CoreError> {
        if outcomes.is_empty() {
            return Err(CoreError::EmptyEvaluationSet);
        }
        outcomes.sort_by(|a, b| a.site_id.cmp(&b.site_id));
        skipped.sort();

        let classes = labels.len();
        let mut fusion: Vec<ConfusionMatrix> =
            (0..12).map(|_| ConfusionMatrix::new(classes)).collect();
        let mut per_image = ConfusionMatrix::new(classes);
        for outcome in &outcomes {
            for (cm, &predicted) in fusion.iter_mut().zip(&outcome.predictions) {
                cm.record(outcome.truth, predicted);
            }
            for &predicted in &outcome.image_predictions {
                per_image.record(outcome.truth, predicted);
            }
        }

        let mut confusion: BTreeMap<MetricId, ConfusionMatrix> =
            MetricId::FUSION.into_iter().zip(fusion).collect();
        confusion.insert(MetricId::PerImage, per_image);
        let accuracy_by_metric = confusion
            .iter()
            .map(|(m, cm)| (*m, cm.accuracy()))
            .collect();
        let per_image_count = confusion[&MetricId::PerImage].total();
        Ok(Self {
            labels: labels.clone(),
            accuracy_by_metric,
            confusion,
            skipped,
            evaluated_sites: outcomes.len() as u64,
            per_image_count,
        })
    }

    pub fn accuracy(&self, metric: MetricId) -> Option<f64> {
        self.accuracy_by_metric.get(&metric).copied()
    }
}

/// Evaluates every site of `set` serially.
pub fn evaluate(set: &EvaluationSet) -> Result<EvaluationReport, CoreError> {
    let mut skipped = set.skipped.clone();
    let mut outcomes = Vec::with_capacity(set.sites.len());
    for (record, matrix) in &set.sites {
        match SiteOutcome::compute(record, matrix, &set.labels) {
            Ok(o) => outcomes.push(o),
            Err(s) => skipped.push(s),
        }
    }
    EvaluationReport::from_outcomes(&set.labels, outcomes, skipped)
}

/// Highest-accuracy metric; ties resolve to the earliest metric in
/// [`MetricId::ALL`].
pub fn best_metric(report: &EvaluationReport) -> Option<(MetricId, f64)> {
    let mut best: Option<(MetricId, f64)> = None;
    for metric in MetricId::ALL {
        if let Some(&acc) = report.accuracy_by_metric.get(&metric) {
            match best {
                Some((_, b)) if acc <= b => {}
                _ => best = Some((metric, acc)),
            }
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointPoint {
    pub epoch: u32,
    pub report: EvaluationReport,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FailedCheckpoint {
    pub epoch: u32,
    pub reason: String,
}

/// Reports for model snapshots taken at increasing epochs.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct CheckpointSeries {
    pub points: Vec<CheckpointPoint>,
    pub failed: Vec<FailedCheckpoint>,
}

impl CheckpointSeries {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, epoch: u32, report: EvaluationReport) -> Result<(), CoreError> {
        if let Some(last) = self.points.last() {
            if epoch <= last.epoch {
                return Err(CoreError::EpochOrder {
                    previous: last.epoch,
                    next: epoch,
                });
            }
        }
        self.points.push(CheckpointPoint { epoch, report });
        Ok(())
    }

    pub fn push_failure(&mut self, epoch: u32, reason: impl Into<String>) {
        self.failed.push(FailedCheckpoint {
            epoch,
            reason: reason.into(),
        });
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn last(&self) -> Option<&CheckpointPoint> {
        self.points.last()
    }

    /// Best `(epoch, metric, accuracy)` over all points. Earlier epochs win
    /// ties, then the metric order of [`best_metric`].
    pub fn best(&self) -> Option<(u32, MetricId, f64)> {
        let mut best: Option<(u32, MetricId, f64)> = None;
        for point in &self.points {
            if let Some((metric, acc)) = best_metric(&point.report) {
                match best {
                    Some((_, _, b)) if acc <= b => {}
                    _ => best = Some((point.epoch, metric, acc)),
                }
            }
        }
        best
    }

    /// Accuracy of `metric` at every point, in epoch order.
    pub fn curve(&self, metric: MetricId) -> Vec<(u32, f64)> {
        self.points
            .iter()
            .filter_map(|p| p.report.accuracy(metric).map(|a| (p.epoch, a)))
            .collect()
    }
}
