//! Planted synthetic datasets with a known per-image correct rate.
//!
//! Layout under the output directory:
//!
//! ```text
//! manifest.csv          every site in the test split, label = index mod C
//! images/<site>/NN.jpg  small placeholder JPEGs
//! scores/<site>.json    stub scores for the images above
//! synth.toml            the generating configuration
//! ```

use std::path::Path;
use std::sync::atomic::AtomicBool;

use descimg_core::{LabelSet, Split, WebSiteRecord, MAX_IMAGES};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::fetch::placeholder_jpeg;
use crate::fsutil;
use crate::ingest::{write_manifest, DatasetManifest, ManifestFormat};
use crate::scorer::{score_dataset, ScoreOptions, ScoreSummary, ScorerSpec, StubConfig};

pub const FOUR_CLASS_LABELS: [&str; 4] = ["machinery", "music", "sport", "tourism"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthConfig {
    pub sites: usize,
    pub classes: usize,
    pub images: u8,
    /// Per-image probability that the argmax is the true class.
    pub correct_rate: f64,
    pub seed: u64,
    pub concentration: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            sites: 500,
            classes: 4,
            images: MAX_IMAGES as u8,
            correct_rate: 0.6,
            seed: 7,
            concentration: 1.0,
        }
    }
}

impl SynthConfig {
    pub fn labels(&self) -> Result<LabelSet> {
        if self.classes == FOUR_CLASS_LABELS.len() {
            return Ok(LabelSet::new(FOUR_CLASS_LABELS)?);
        }
        Ok(LabelSet::new(
            (1..=self.classes).map(|i| format!("class_{i:02}")),
        )?)
    }

    pub fn site_id(index: usize) -> String {
        format!("site_{:04}", index + 1)
    }

    pub fn stub(&self) -> StubConfig {
        StubConfig {
            concentration: self.concentration,
            ..StubConfig::new(self.seed, self.correct_rate)
        }
    }

    pub fn manifest(&self) -> Result<DatasetManifest> {
        let labels = self.labels()?;
        let records = (0..self.sites)
            .map(|i| {
                let site_id = Self::site_id(i);
                WebSiteRecord {
                    url: format!("http://{}.example/", site_id.replace('_', "-")),
                    label: labels.get(i % labels.len()).expect("index below class count"),
                    split: Split::Test,
                    language: None,
                    screenshot_path: None,
                    text_path: None,
                    site_id,
                }
            })
            .collect();
        Ok(DatasetManifest {
            name: "synth".into(),
            labels,
            records,
        })
    }

    fn validate(&self) -> Result<()> {
        if self.sites == 0 {
            return Err(Error::Config("synth needs at least one site".into()));
        }
        if !(1..=MAX_IMAGES).contains(&(self.images as usize)) {
            return Err(Error::Config(format!(
                "images per site must be in 1..={MAX_IMAGES}"
            )));
        }
        let labels = self.labels()?;
        self.stub().validate(&labels)
    }

    fn image_bytes(&self, site_id: &str, ordinal: u8) -> Vec<u8> {
        let mut h = Sha256::new();
        h.update(b"descimg-synth-image\0");
        h.update(self.seed.to_le_bytes());
        h.update(site_id.as_bytes());
        h.update([ordinal]);
        let mut rng = ChaCha8Rng::from_seed(h.finalize().into());
        let (w, h) = (rng.gen_range(16..=64), rng.gen_range(16..=64));
        placeholder_jpeg(w, h, rng.gen())
    }
}

/// Writes the dataset under `out`. The same config always yields the same
/// bytes.
pub fn generate(config: &SynthConfig, out: &Path, cancel: &AtomicBool) -> Result<ScoreSummary> {
    config.validate()?;
    let manifest = config.manifest()?;
    let images_root = out.join("images");
    let scores_dir = out.join("scores");

    manifest
        .records
        .par_iter()
        .try_for_each(|record| -> Result<()> {
            let dir = images_root.join(&record.site_id);
            std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
            for ordinal in 1..=config.images {
                let bytes = config.image_bytes(&record.site_id, ordinal);
                fsutil::write_atomic(&dir.join(fsutil::image_file_name(ordinal)), &bytes)?;
            }
            Ok(())
        })?;

    write_manifest(&manifest, &out.join("manifest.csv"), ManifestFormat::Csv)?;
    let toml = toml::to_string(config).map_err(|e| Error::Config(e.to_string()))?;
    fsutil::write_atomic(&out.join("synth.toml"), toml.as_bytes())?;

    let options = ScoreOptions {
        split: None,
        workers: rayon::current_num_threads(),
    };
    let summary = score_dataset(
        &manifest,
        &images_root,
        &ScorerSpec::Stub(config.stub()),
        &scores_dir,
        &options,
        cancel,
    )?;
    if summary.cancelled > 0 {
        return Err(Error::Interrupted);
    }
    Ok(summary)
}
