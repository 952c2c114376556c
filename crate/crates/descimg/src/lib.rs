//! Pipeline around the `descimg-core` fusion algebra: dataset manifests and
//! score files, descriptive-image fetching, scoring backends, evaluation
//! sweeps, report rendering, dataset statistics and the `descimg` CLI.

pub mod cli;
pub mod error;
pub mod evaluation;
pub mod fetch;
pub mod fsutil;
pub mod ingest;
pub mod report;
pub mod scorer;
pub mod synth;

pub use descimg_core as core;
pub use error::{Error, Result};
