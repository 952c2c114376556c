//! Score-matrix interchange: one JSON document per site, or a long-form CSV
//! holding any number of sites.
//!
//! JSON: `{"site_id", "labels": [...], "mode", "rows": [{"ordinal", "scores": [...]}]}`
//!
//! CSV: `site_id,ordinal,score_1,...,score_C`, one line per image.
//!
//! Scores are written in the shortest form that parses back to the same
//! `f64`, so write-then-read is exact.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use descimg_core::{validate_matrix, LabelSet, SchemaMode, ScoreMatrix, ScoreRow};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fsutil;
use crate::ingest::DatasetManifest;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreDocument {
    pub site_id: String,
    pub labels: Vec<String>,
    #[serde(default)]
    pub mode: SchemaMode,
    pub rows: Vec<ScoreRow>,
}

impl ScoreDocument {
    pub fn new(matrix: &ScoreMatrix, labels: &LabelSet, mode: SchemaMode) -> Self {
        Self {
            site_id: matrix.site_id.clone(),
            labels: labels.names().to_vec(),
            mode,
            rows: matrix.rows.clone(),
        }
    }

    pub fn matrix(&self) -> ScoreMatrix {
        ScoreMatrix::new(self.site_id.clone(), self.rows.clone())
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("score documents serialize");
        s.push('\n');
        s
    }
}

pub fn read_score_document(path: &Path) -> Result<ScoreDocument> {
    let text = fsutil::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| Error::parse(path, e))
}

pub fn write_score_document(path: &Path, doc: &ScoreDocument) -> Result<()> {
    fsutil::write_atomic(path, doc.to_json().as_bytes())
}

pub fn scores_to_csv<'a>(
    matrices: impl IntoIterator<Item = &'a ScoreMatrix>,
    classes: usize,
) -> Result<Vec<u8>> {
    let csv_err = |e: csv::Error| Error::parse("<scores>", e);
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["site_id".to_string(), "ordinal".to_string()];
    header.extend((1..=classes).map(|c| format!("score_{c}")));
    w.write_record(&header).map_err(csv_err)?;
    for m in matrices {
        for row in &m.rows {
            let mut line = vec![m.site_id.clone(), row.ordinal.to_string()];
            line.extend(row.scores.iter().map(|s| s.to_string()));
            w.write_record(&line).map_err(csv_err)?;
        }
    }
    w.into_inner()
        .map_err(|e| Error::parse("<scores>", e.to_string()))
}

/// Reads a long-form CSV into matrices keyed by site id (first-seen order
/// of sites is not kept; rows keep file order).
pub fn read_scores_csv(path: &Path) -> Result<BTreeMap<String, ScoreMatrix>> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| Error::parse(path, e))?;
    let mut out: BTreeMap<String, ScoreMatrix> = BTreeMap::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| Error::parse(path, e))?;
        let bad = |what: &str| Error::parse(path, format!("row {}: bad {what}", i + 1));
        let site_id = rec.get(0).ok_or_else(|| bad("site_id"))?.to_string();
        let ordinal: u8 = rec
            .get(1)
            .and_then(|s| s.trim().parse().ok())
            .ok_or_else(|| bad("ordinal"))?;
        let scores = rec
            .iter()
            .skip(2)
            .map(|s| s.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|_| bad("score"))?;
        out.entry(site_id.clone())
            .or_insert_with(|| ScoreMatrix::new(site_id, Vec::new()))
            .rows
            .push(ScoreRow::new(ordinal, scores));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RejectedScores {
    pub site_id: String,
    pub path: PathBuf,
    pub reasons: Vec<String>,
}

/// Result of reading a directory of score files against a manifest.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LoadedScores {
    /// Valid matrices by site id.
    pub matrices: BTreeMap<String, ScoreMatrix>,
    /// Sites whose score file has no rows at all.
    pub no_evidence: Vec<String>,
    /// Score files for site ids absent from the manifest.
    pub unknown_sites: Vec<(PathBuf, String)>,
    /// Matrices that failed validation; they never reach evaluation.
    pub rejected: Vec<RejectedScores>,
    /// Files that could not be read or parsed.
    pub unreadable: Vec<(PathBuf, String)>,
}

impl LoadedScores {
    pub fn len(&self) -> usize {
        self.matrices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.matrices.is_empty()
    }

    fn admit(
        &mut self,
        manifest: &DatasetManifest,
        mode: SchemaMode,
        path: &Path,
        matrix: ScoreMatrix,
        doc_labels: Option<&[String]>,
    ) {
        let site_id = matrix.site_id.clone();
        if manifest.get(&site_id).is_none() {
            tracing::warn!(site_id = %site_id, path = %path.display(), "score file for unknown site");
            self.unknown_sites.push((path.to_path_buf(), site_id));
            return;
        }
        let reject = |reasons: Vec<String>| RejectedScores {
            site_id: site_id.clone(),
            path: path.to_path_buf(),
            reasons,
        };
        if let Some(labels) = doc_labels {
            if labels != manifest.labels.names() {
                self.rejected.push(reject(vec![format!(
                    "labels {labels:?} differ from manifest labels {:?}",
                    manifest.labels.names()
                )]));
                return;
            }
        }
        if self.matrices.contains_key(&site_id) || self.no_evidence.contains(&site_id) {
            self.rejected.push(reject(vec!["duplicate score file".into()]));
            return;
        }
        if matrix.is_empty() {
            self.no_evidence.push(site_id);
            return;
        }
        let verdict = validate_matrix(&matrix, &manifest.labels, mode);
        if verdict.is_valid() {
            self.matrices.insert(site_id, matrix);
        } else {
            tracing::warn!(site_id = %site_id, %verdict, "rejected score matrix");
            self.rejected.push(reject(verdict.messages()));
        }
    }
}

/// Reads every `*.json` and `*.csv` file directly under `dir`.
pub fn load_scores(dir: &Path, manifest: &DatasetManifest, mode: SchemaMode) -> Result<LoadedScores> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file())
        .collect();
    paths.sort();

    let mut loaded = LoadedScores::default();
    for path in paths {
        match path.extension().and_then(|e| e.to_str()) {
            Some("json") => match read_score_document(&path) {
                Ok(doc) => {
                    let matrix = doc.matrix();
                    loaded.admit(manifest, mode, &path, matrix, Some(&doc.labels));
                }
                Err(e) => loaded.unreadable.push((path.clone(), e.to_string())),
            },
            Some("csv") => match read_scores_csv(&path) {
                Ok(matrices) => {
                    for (_, m) in matrices {
                        loaded.admit(manifest, mode, &path, m, None);
                    }
                }
                Err(e) => loaded.unreadable.push((path.clone(), e.to_string())),
            },
            _ => {}
        }
    }
    Ok(loaded)
}

#[cfg(test)]
mod tests {
    use super::*;
    use descimg_core::{Split, WebSiteRecord};

    fn manifest() -> DatasetManifest {
        let labels = LabelSet::new(["machinery", "music", "sport", "tourism"]).unwrap();
        let records = ["a", "b", "c"]
            .iter()
            .map(|id| WebSiteRecord {
                site_id: id.to_string(),
                url: format!("http://{id}"),
                label: labels.get(0).unwrap(),
                split: Split::Test,
                language: None,
                screenshot_path: None,
                text_path: None,
            })
            .collect();
        DatasetManifest {
            name: "t".into(),
            labels,
            records,
        }
    }

    fn doc(site: &str, rows: Vec<Vec<f64>>) -> ScoreDocument {
        let m = manifest();
        ScoreDocument::new(&ScoreMatrix::from_scores(site, rows), &m.labels, SchemaMode::Softmax)
    }

    #[test]
    fn loads_and_reports_problems() {
        let dir = tempfile::tempdir().unwrap();
        let d = dir.path();
        write_score_document(&d.join("a.json"), &doc("a", vec![vec![0.7, 0.1, 0.1, 0.1]])).unwrap();
        // 21 rows
        let many = (0..21).map(|_| vec![0.7, 0.1, 0.1, 0.1]).collect();
        write_score_document(&d.join("b.json"), &doc("b", many)).unwrap();
        // bad row sum
        write_score_document(&d.join("c.json"), &doc("c", vec![vec![0.5, 0.2, 0.2, 0.03]])).unwrap();
        write_score_document(&d.join("zz.json"), &doc("zz", vec![vec![1.0, 0.0, 0.0, 0.0]])).unwrap();
        fs::write(d.join("broken.json"), "{").unwrap();

        let loaded = load_scores(d, &manifest(), SchemaMode::Softmax).unwrap();
        assert_eq!(loaded.matrices.keys().collect::<Vec<_>>(), ["a"]);
        assert_eq!(loaded.unknown_sites.len(), 1);
        assert_eq!(loaded.unreadable.len(), 1);
        let rejected: BTreeMap<_, _> = loaded
            .rejected
            .iter()
            .map(|r| (r.site_id.as_str(), r.reasons.join("; ")))
            .collect();
        assert!(rejected["b"].contains("row count 21 > 20"), "{}", rejected["b"]);
        assert!(rejected["c"].starts_with("row 01: row sum 0.929"), "{}", rejected["c"]);

        // Bounded mode accepts the 0.93 row.
        let loaded = load_scores(d, &manifest(), SchemaMode::Bounded).unwrap();
        assert!(loaded.matrices.contains_key("c"));
    }

    #[test]
    fn csv_round_trip() {
        let a = ScoreMatrix::new(
            "a",
            vec![
                ScoreRow::new(1, vec![0.1, 0.2, 0.3, 0.4]),
                ScoreRow::new(3, vec![1.0 / 3.0, 1.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0]),
            ],
        );
        let b = ScoreMatrix::from_scores("b", [vec![0.25; 4]]);
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("all.csv");
        fs::write(&p, scores_to_csv([&a, &b], 4).unwrap()).unwrap();
        let back = read_scores_csv(&p).unwrap();
        assert_eq!(back["a"], a);
        assert_eq!(back["b"], b);

        let loaded = load_scores(dir.path(), &manifest(), SchemaMode::Softmax).unwrap();
        assert_eq!(loaded.len(), 2);
    }

    #[test]
    fn empty_rows_are_no_evidence() {
        let dir = tempfile::tempdir().unwrap();
        write_score_document(&dir.path().join("a.json"), &doc("a", vec![])).unwrap();
        let loaded = load_scores(dir.path(), &manifest(), SchemaMode::Softmax).unwrap();
        assert_eq!(loaded.no_evidence, ["a"]);
        assert!(loaded.rejected.is_empty());
    }

    #[test]
    fn label_mismatch_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let mut d = doc("a", vec![vec![0.7, 0.1, 0.1, 0.1]]);
        d.labels.swap(0, 1);
        write_score_document(&dir.path().join("a.json"), &d).unwrap();
        let loaded = load_scores(dir.path(), &manifest(), SchemaMode::Softmax).unwrap();
        assert_eq!(loaded.rejected.len(), 1);
    }
}
