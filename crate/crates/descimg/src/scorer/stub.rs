//! Deterministic planted scorer.
//!
//! Every image row is derived from a SHA-256 of `(seed, site_id, ordinal)`,
//! so it does not depend on which other sites or images are scored. For an
//! image of a site whose true class is `t`:
//!
//! 1. with probability `p` the winning class is `t`, otherwise a uniformly
//!    chosen other class;
//! 2. `C` values are drawn from a symmetric Dirichlet with the configured
//!    concentration and sorted descending;
//! 3. the largest value goes to the winner; when the winner is not `t`, the
//!    second largest goes to `t`; the rest are shuffled over the remaining
//!    classes.
//!
//! The per-image argmax is therefore correct with probability `p`, while a
//! wrongly classified image still ranks the true class second.

use std::collections::BTreeMap;

use descimg_core::{LabelSet, ScoreMatrix, ScoreRow};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StubConfig {
    pub seed: u64,
    /// Probability that an image's argmax is the site's true class.
    pub correct_rate: f64,
    /// Dirichlet concentration of the score draw; smaller is peakier.
    #[serde(default = "default_concentration")]
    pub concentration: f64,
    /// Per-class override of `correct_rate`, keyed by label name.
    #[serde(default)]
    pub class_correct_rate: BTreeMap<String, f64>,
}

fn default_concentration() -> f64 {
    1.0
}

impl StubConfig {
    pub fn new(seed: u64, correct_rate: f64) -> Self {
        Self {
            seed,
            correct_rate,
            concentration: default_concentration(),
            class_correct_rate: BTreeMap::new(),
        }
    }

    pub fn validate(&self, labels: &LabelSet) -> Result<()> {
        let rate_ok = |p: f64| (0.0..=1.0).contains(&p);
        if !rate_ok(self.correct_rate) {
            return Err(Error::Config(format!(
                "correct rate {} outside [0,1]",
                self.correct_rate
            )));
        }
        if !(self.concentration > 0.0 && self.concentration.is_finite()) {
            return Err(Error::Config("concentration must be positive".into()));
        }
        for (name, p) in &self.class_correct_rate {
            labels.label(name)?;
            if !rate_ok(*p) {
                return Err(Error::Config(format!("correct rate for {name} outside [0,1]")));
            }
        }
        Ok(())
    }

    fn rate_for(&self, labels: &LabelSet, truth: usize) -> f64 {
        labels
            .names()
            .get(truth)
            .and_then(|n| self.class_correct_rate.get(n))
            .copied()
            .unwrap_or(self.correct_rate)
    }

    fn rng(&self, site_id: &str, ordinal: u8) -> ChaCha8Rng {
        let mut h = Sha256::new();
        h.update(b"descimg-stub\0");
        h.update(self.seed.to_le_bytes());
        h.update((site_id.len() as u64).to_le_bytes());
        h.update(site_id.as_bytes());
        h.update([ordinal]);
        ChaCha8Rng::from_seed(h.finalize().into())
    }

    /// One softmax row for image `ordinal` of a site whose true class is `truth`.
    pub fn row(&self, labels: &LabelSet, site_id: &str, ordinal: u8, truth: usize) -> Vec<f64> {
        let classes = labels.len();
        let mut rng = self.rng(site_id, ordinal);
        let winner = if rng.gen::<f64>() < self.rate_for(labels, truth) {
            truth
        } else {
            let other = rng.gen_range(0..classes - 1);
            if other >= truth {
                other + 1
            } else {
                other
            }
        };

        let gamma = Gamma::new(self.concentration, 1.0).expect("validated concentration");
        let mut draws: Vec<f64> = (0..classes)
            .map(|_| gamma.sample(&mut rng).max(f64::MIN_POSITIVE))
            .collect();
        draws.sort_by(|a, b| b.total_cmp(a));
        let total: f64 = draws.iter().sum();

        let mut order = vec![winner];
        if winner != truth {
            order.push(truth);
        }
        let mut rest: Vec<usize> = (0..classes).filter(|c| !order.contains(c)).collect();
        rest.shuffle(&mut rng);
        order.extend(rest);

        let mut row = vec![0.0; classes];
        for (class, value) in order.into_iter().zip(draws) {
            row[class] = value / total;
        }
        row
    }

    pub fn score(&self, labels: &LabelSet, site_id: &str, truth: usize, ordinals: &[u8]) -> ScoreMatrix {
        let rows = ordinals
            .iter()
            .map(|&o| ScoreRow::new(o, self.row(labels, site_id, o, truth)))
            .collect();
        ScoreMatrix::new(site_id, rows)
    }
}
