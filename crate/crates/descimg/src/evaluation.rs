//! Dataset-level evaluation: pairing manifests with score directories,
//! parallel evaluation and checkpoint sweeps over `epoch_NNN` snapshots.

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};

use descimg_core::evaluate::NO_EVIDENCE;
use descimg_core::{
    CheckpointSeries, CoreError, EvaluationReport, EvaluationSet, SchemaMode, SiteOutcome, Split,
};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::ingest::{load_scores, DatasetManifest, LoadedScores};

pub const NO_SCORE_FILE: &str = "no score file";
pub const SNAPSHOT_PREFIX: &str = "epoch_";

/// Test-split records of `manifest` paired with their loaded matrices. Every
/// record without a usable matrix lands in the skipped register.
pub fn build_evaluation_set(manifest: &DatasetManifest, loaded: &LoadedScores) -> EvaluationSet {
    let mut set = EvaluationSet::new(manifest.labels.clone());
    for record in manifest.in_split(Split::Test) {
        let id = &record.site_id;
        if let Some(matrix) = loaded.matrices.get(id) {
            set.push(record.clone(), matrix.clone());
        } else if loaded.no_evidence.contains(id) {
            set.skip(id.clone(), NO_EVIDENCE);
        } else if let Some(rejected) = loaded.rejected.iter().find(|r| &r.site_id == id) {
            set.skip(
                id.clone(),
                format!("invalid scores: {}", rejected.reasons.join("; ")),
            );
        } else {
            set.skip(id.clone(), NO_SCORE_FILE);
        }
    }
    set
}

/// Same result as [`descimg_core::evaluate`], bit for bit, for any worker
/// count.
pub fn evaluate_parallel(
    set: &EvaluationSet,
    workers: usize,
) -> std::result::Result<EvaluationReport, CoreError> {
    let work = || {
        set.sites
            .par_iter()
            .map(|(record, matrix)| SiteOutcome::compute(record, matrix, &set.labels))
            .collect::<Vec<_>>()
    };
    let results = match rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
    {
        Ok(pool) => pool.install(work),
        Err(_) => work(),
    };
    let mut outcomes = Vec::with_capacity(results.len());
    let mut skipped = set.skipped.clone();
    for r in results {
        match r {
            Ok(o) => outcomes.push(o),
            Err(s) => skipped.push(s),
        }
    }
    EvaluationReport::from_outcomes(&set.labels, outcomes, skipped)
}

/// Loads `scores_dir` against `manifest` and evaluates the test split.
pub fn evaluate_dir(
    manifest: &DatasetManifest,
    scores_dir: &Path,
    mode: SchemaMode,
    workers: usize,
) -> Result<EvaluationReport> {
    let loaded = load_scores(scores_dir, manifest, mode)?;
    for (path, why) in &loaded.unreadable {
        tracing::warn!(path = %path.display(), error = %why, "unreadable score file");
    }
    let set = build_evaluation_set(manifest, &loaded);
    Ok(evaluate_parallel(&set, workers)?)
}

/// Parses `epoch_NNN` (at least three digits).
pub fn snapshot_epoch(name: &str) -> Option<u32> {
    let digits = name.strip_prefix(SNAPSHOT_PREFIX)?;
    if digits.len() < 3 || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    digits.parse().ok()
}

pub fn snapshot_dir_name(epoch: u32) -> String {
    format!("{SNAPSHOT_PREFIX}{epoch:03}")
}

/// Snapshot directories directly under `root`, in epoch order. Other entries
/// are ignored.
pub fn discover_snapshots(root: &Path) -> Result<Vec<(u32, PathBuf)>> {
    let mut found = Vec::new();
    for entry in std::fs::read_dir(root).map_err(|e| Error::io(root, e))? {
        let entry = entry.map_err(|e| Error::io(root, e))?;
        if !entry.path().is_dir() {
            continue;
        }
        if let Some(epoch) = entry.file_name().to_str().and_then(snapshot_epoch) {
            found.push((epoch, entry.path()));
        }
    }
    found.sort();
    if let Some(w) = found.windows(2).find(|w| w[0].0 == w[1].0) {
        return Err(Error::Config(format!(
            "snapshots {} and {} share epoch {}",
            w[0].1.display(),
            w[1].1.display(),
            w[0].0
        )));
    }
    Ok(found)
}

/// Evaluates every snapshot. A snapshot that cannot be read, holds an
/// unparsable score file or has no evaluable site becomes a failed point.
pub fn sweep(
    snapshots: &[(u32, PathBuf)],
    manifest: &DatasetManifest,
    mode: SchemaMode,
    workers: usize,
    cancel: &AtomicBool,
) -> Result<CheckpointSeries> {
    if let Some(w) = snapshots.windows(2).find(|w| w[0].0 >= w[1].0) {
        return Err(CoreError::EpochOrder {
            previous: w[0].0,
            next: w[1].0,
        }
        .into());
    }
    let mut series = CheckpointSeries::new();
    for (epoch, dir) in snapshots {
        if cancel.load(Ordering::Relaxed) {
            return Err(Error::Interrupted);
        }
        let report = load_scores(dir, manifest, mode).and_then(|loaded| {
            if let Some((path, why)) = loaded.unreadable.first() {
                return Err(Error::parse(path, why));
            }
            let set = build_evaluation_set(manifest, &loaded);
            Ok(evaluate_parallel(&set, workers)?)
        });
        match report {
            Ok(report) => series.push(*epoch, report)?,
            Err(e) => {
                tracing::warn!(epoch, error = %e, "snapshot failed");
                series.push_failure(*epoch, e.to_string());
            }
        }
    }
    Ok(series)
}
