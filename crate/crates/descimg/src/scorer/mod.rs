//! Score producers: the planted stub, precomputed score files and the
//! external adapter.

mod external;
mod stub;

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};

use descimg_core::{validate_matrix, LabelSet, SchemaMode, ScoreMatrix, Split, WebSiteRecord};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use external::{AdapterRequest, ExternalConfig, Granularity};
pub use stub::StubConfig;

use crate::error::{Error, Result};
use crate::fsutil;
use crate::ingest::{read_score_document, write_score_document, DatasetManifest, ScoreDocument};

#[derive(Debug, Clone, PartialEq)]
pub enum ScorerSpec {
    Stub(StubConfig),
    /// Reads `<dir>/<site_id>.json` score documents.
    Precomputed { dir: PathBuf },
    External(ExternalConfig),
}

/// Scores the images present under `image_dir` for one site.
pub fn score_site(
    record: &WebSiteRecord,
    image_dir: &Path,
    labels: &LabelSet,
    spec: &ScorerSpec,
) -> Result<ScoreMatrix> {
    let site_id = &record.site_id;
    let matrix = match spec {
        ScorerSpec::Precomputed { dir } => {
            let doc = read_score_document(&dir.join(format!("{site_id}.json")))?;
            if doc.site_id != *site_id || doc.labels != labels.names() {
                return Err(Error::InvalidScores {
                    site_id: site_id.clone(),
                    reasons: "precomputed document does not match site or labels".into(),
                });
            }
            let m = doc.matrix();
            if m.is_empty() {
                return Err(Error::NoEvidence(site_id.clone()));
            }
            m
        }
        ScorerSpec::Stub(cfg) => {
            let ordinals = fsutil::list_image_ordinals(image_dir)?;
            if ordinals.is_empty() {
                return Err(Error::NoEvidence(site_id.clone()));
            }
            cfg.score(labels, site_id, record.label.index, &ordinals)
        }
        ScorerSpec::External(cfg) => {
            let images: Vec<(u8, PathBuf)> = fsutil::list_image_ordinals(image_dir)?
                .into_iter()
                .map(|o| (o, image_dir.join(fsutil::image_file_name(o))))
                .collect();
            if images.is_empty() {
                return Err(Error::NoEvidence(site_id.clone()));
            }
            cfg.score(labels, site_id, &images)?
        }
    };
    let verdict = validate_matrix(&matrix, labels, SchemaMode::Softmax);
    if !verdict.is_valid() {
        return Err(Error::InvalidScores {
            site_id: site_id.clone(),
            reasons: verdict.to_string(),
        });
    }
    Ok(matrix)
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScoreSummary {
    pub sites_scored: usize,
    pub images_scored: usize,
    /// Sites without images; each gets a document with no rows.
    pub no_evidence: Vec<String>,
    pub failures: Vec<(String, String)>,
    pub cancelled: usize,
}

#[derive(Debug, Clone)]
pub struct ScoreOptions {
    /// Only score records of this split; all records when `None`.
    pub split: Option<Split>,
    pub workers: usize,
}

impl Default for ScoreOptions {
    fn default() -> Self {
        Self {
            split: None,
            workers: 1,
        }
    }
}

/// Writes `<out_dir>/<site_id>.json` for every scored site; sites without
/// images get a document with no rows. Failures are collected per site and
/// never stop the batch.
pub fn score_dataset(
    manifest: &DatasetManifest,
    images_root: &Path,
    spec: &ScorerSpec,
    out_dir: &Path,
    options: &ScoreOptions,
    cancel: &AtomicBool,
) -> Result<ScoreSummary> {
    if let ScorerSpec::Stub(cfg) = spec {
        cfg.validate(&manifest.labels)?;
    }
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let records: Vec<&WebSiteRecord> = manifest
        .records
        .iter()
        .filter(|r| options.split.is_none_or(|s| r.split == s))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(options.workers.max(1))
        .build()
        .map_err(|e| Error::Config(e.to_string()))?;

    enum Outcome {
        Scored(usize),
        NoEvidence(String),
        Failed(String, String),
        Cancelled,
    }
    let outcomes: Vec<Outcome> = pool.install(|| {
        records
            .par_iter()
            .map(|record| {
                if cancel.load(Ordering::Relaxed) {
                    return Outcome::Cancelled;
                }
                let dir = images_root.join(&record.site_id);
                let result = score_site(record, &dir, &manifest.labels, spec).and_then(|m| {
                    let doc = ScoreDocument::new(&m, &manifest.labels, SchemaMode::Softmax);
                    write_score_document(&out_dir.join(format!("{}.json", record.site_id)), &doc)?;
                    Ok(m.len())
                });
                match result {
                    Ok(n) => Outcome::Scored(n),
                    Err(Error::NoEvidence(site)) => {
                        let empty = ScoreMatrix::new(site.clone(), Vec::new());
                        let doc = ScoreDocument::new(&empty, &manifest.labels, SchemaMode::Softmax);
                        match write_score_document(&out_dir.join(format!("{site}.json")), &doc) {
                            Ok(()) => Outcome::NoEvidence(site),
                            Err(e) => Outcome::Failed(site, e.to_string()),
                        }
                    }
                    Err(e) => {
                        tracing::warn!(site_id = %record.site_id, error = %e, "scoring failed");
                        Outcome::Failed(record.site_id.clone(), e.to_string())
                    }
                }
            })
            .collect()
    });

    let mut summary = ScoreSummary::default();
    for o in outcomes {
        match o {
            Outcome::Scored(n) => {
                summary.sites_scored += 1;
                summary.images_scored += n;
            }
            Outcome::NoEvidence(site) => summary.no_evidence.push(site),
            Outcome::Failed(site, why) => summary.failures.push((site, why)),
            Outcome::Cancelled => summary.cancelled += 1,
        }
    }
    Ok(summary)
}
