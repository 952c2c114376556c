//! Subprocess adapter for external inference.
//!
//! The adapter is spawned once per request. It reads one JSON request on
//! stdin:
//!
//! ```json
//! {"site_id": "s1", "image_paths": ["/data/s1/01.jpg"], "labels": ["a", "b"]}
//! ```
//!
//! and answers on stdout with a score document (see
//! [`crate::ingest::ScoreDocument`]), exiting with status 0.

use std::io::Write;
use std::path::PathBuf;
use std::process::{Command, Stdio};

use descimg_core::{validate_matrix, LabelSet, SchemaMode, ScoreMatrix, ScoreRow};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::ScoreDocument;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Granularity {
    /// One request carrying all images of a site.
    #[default]
    Site,
    /// One request per image; each response holds exactly one row.
    Image,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExternalConfig {
    pub command: String,
    #[serde(default)]
    pub args: Vec<String>,
    #[serde(default)]
    pub granularity: Granularity,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdapterRequest {
    pub site_id: String,
    pub image_paths: Vec<PathBuf>,
    pub labels: Vec<String>,
}

impl ExternalConfig {
    fn call(&self, request: &AdapterRequest) -> Result<ScoreDocument> {
        let fail = |message: String| Error::Adapter {
            command: self.command.clone(),
            message,
        };
        let mut child = Command::new(&self.command)
            .args(&self.args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::piped())
            .spawn()
            .map_err(|e| fail(format!("spawn: {e}")))?;
        let payload = serde_json::to_vec(request).expect("request serializes");
        if let Some(mut stdin) = child.stdin.take() {
            // An adapter that ignores stdin may close it early.
            if let Err(e) = stdin.write_all(&payload) {
                if e.kind() != std::io::ErrorKind::BrokenPipe {
                    return Err(fail(format!("write request: {e}")));
                }
            }
        }
        let output = child
            .wait_with_output()
            .map_err(|e| fail(format!("wait: {e}")))?;
        if !output.status.success() {
            let stderr = String::from_utf8_lossy(&output.stderr);
            return Err(fail(format!(
                "exit status {}: {}",
                output
                    .status
                    .code()
                    .map_or_else(|| "signal".to_string(), |c| c.to_string()),
                stderr.trim()
            )));
        }
        serde_json::from_slice(&output.stdout).map_err(|e| fail(format!("malformed output: {e}")))
    }

    /// Scores the given images; `images` pairs each ordinal with its path.
    pub fn score(
        &self,
        labels: &LabelSet,
        site_id: &str,
        images: &[(u8, PathBuf)],
    ) -> Result<ScoreMatrix> {
        let request = |paths: Vec<PathBuf>| AdapterRequest {
            site_id: site_id.to_string(),
            image_paths: paths,
            labels: labels.names().to_vec(),
        };
        let check_doc = |doc: &ScoreDocument| -> Result<()> {
            if doc.site_id != site_id {
                return Err(Error::InvalidScores {
                    site_id: site_id.to_string(),
                    reasons: format!("adapter answered for site {:?}", doc.site_id),
                });
            }
            if doc.labels != labels.names() {
                return Err(Error::InvalidScores {
                    site_id: site_id.to_string(),
                    reasons: format!("adapter labels {:?} differ", doc.labels),
                });
            }
            Ok(())
        };

        let matrix = match self.granularity {
            Granularity::Site => {
                let doc = self.call(&request(images.iter().map(|(_, p)| p.clone()).collect()))?;
                check_doc(&doc)?;
                let expected: Vec<u8> = images.iter().map(|(o, _)| *o).collect();
                let got: Vec<u8> = doc.rows.iter().map(|r| r.ordinal).collect();
                if got != expected {
                    return Err(Error::InvalidScores {
                        site_id: site_id.to_string(),
                        reasons: format!("adapter returned ordinals {got:?}, expected {expected:?}"),
                    });
                }
                doc.matrix()
            }
            Granularity::Image => {
                let mut rows = Vec::with_capacity(images.len());
                for (ordinal, path) in images {
                    let doc = self.call(&request(vec![path.clone()]))?;
                    check_doc(&doc)?;
                    match doc.rows.as_slice() {
                        [row] => rows.push(ScoreRow::new(*ordinal, row.scores.clone())),
                        other => {
                            return Err(Error::InvalidScores {
                                site_id: site_id.to_string(),
                                reasons: format!(
                                    "adapter returned {} rows for one image",
                                    other.len()
                                ),
                            })
                        }
                    }
                }
                ScoreMatrix::new(site_id, rows)
            }
        };

        let verdict = validate_matrix(&matrix, labels, SchemaMode::Softmax);
        if !verdict.is_valid() {
            return Err(Error::InvalidScores {
                site_id: site_id.to_string(),
                reasons: verdict.to_string(),
            });
        }
        Ok(matrix)
    }
}
