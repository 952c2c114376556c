#![allow(dead_code)]

pub mod mock_server;
pub mod naive;

use std::path::{Path, PathBuf};

use descimg_core::{ScoreMatrix, ScoreRow};
use rand::seq::index::sample;
use rand::Rng;

pub fn fixture(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(rel)
}

/// Copies every file directly under `from` into `to`.
pub fn copy_dir(from: &Path, to: &Path) {
    std::fs::create_dir_all(to).unwrap();
    for entry in std::fs::read_dir(from).unwrap() {
        let path = entry.unwrap().path();
        if path.is_file() {
            std::fs::copy(&path, to.join(path.file_name().unwrap())).unwrap();
        }
    }
}

/// 1-20 rows with distinct, sorted, possibly gapped ordinals. Some rows
/// are softmax-like, some have exact ties so tie-breaking is exercised.
pub fn random_matrix(rng: &mut impl Rng, classes: usize) -> ScoreMatrix {
    let n = rng.gen_range(1..=20);
    let mut ordinals: Vec<u8> = sample(rng, 20, n)
        .into_iter()
        .map(|i| i as u8 + 1)
        .collect();
    ordinals.sort_unstable();
    let rows = ordinals
        .into_iter()
        .map(|o| {
            let scores: Vec<f64> = if rng.gen_bool(0.15) {
                let v = [0.25, 0.5][rng.gen_range(0..2)];
                (0..classes).map(|_| if rng.gen_bool(0.5) { v } else { 0.0 }).collect()
            } else {
                let raw: Vec<f64> = (0..classes).map(|_| rng.gen::<f64>()).collect();
                let total: f64 = raw.iter().sum();
                raw.into_iter().map(|x| x / total).collect()
            };
            ScoreRow::new(o, scores)
        })
        .collect();
    ScoreMatrix::new("random", rows)
}
