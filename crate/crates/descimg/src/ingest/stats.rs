//! Image-set statistics: the width-height ratio histogram, the count of
//! images larger than the network input size, and per-site/per-split image
//! counts. Only image headers are read.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use descimg_core::Split;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::fsutil;
use crate::ingest::DatasetManifest;

/// Histogram bin width in percentage points.
pub const BIN_WIDTH_PERCENT: u32 = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScanOptions {
    /// Ratios at or above this many percent share one overflow bin. Rounded
    /// down to a multiple of the bin width.
    pub max_ratio_percent: u32,
    /// Images count as large when both edges are strictly greater than this.
    pub large_edge_px: u32,
}

impl Default for ScanOptions {
    fn default() -> Self {
        Self {
            max_ratio_percent: 300,
            large_edge_px: 224,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HistogramBin {
    /// Lower edge of the bin, in percent of `width / height`.
    pub base_percent: u32,
    pub count: u64,
    /// The last bin is open-ended.
    pub overflow: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorruptImage {
    pub path: PathBuf,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImageSetStats {
    pub total_images: u64,
    pub wh_ratio_histogram: Vec<HistogramBin>,
    pub large_edge_px: u32,
    /// Images whose width and height both exceed `large_edge_px`.
    pub large_image_count: u64,
    pub per_site_image_counts: BTreeMap<String, u64>,
    pub images_by_split: BTreeMap<Split, u64>,
    pub corrupt: Vec<CorruptImage>,
}

impl ImageSetStats {
    pub fn histogram_csv(&self) -> String {
        let mut out = String::from("bin_base_percent,count\n");
        for bin in &self.wh_ratio_histogram {
            out.push_str(&format!("{},{}\n", bin.base_percent, bin.count));
        }
        out
    }

    /// Train+validation and test image totals, one row per dataset.
    pub fn split_counts_csv(&self) -> String {
        let get = |s| self.images_by_split.get(&s).copied().unwrap_or(0);
        format!(
            "sites,train_validation,test\n{},{},{}\n",
            self.per_site_image_counts.len(),
            get(Split::Train) + get(Split::Validation),
            get(Split::Test)
        )
    }
}

/// Histogram bin index of a `width × height` image: `floor(10·w/h)` which is
/// `floor((100·w/h) / 10)` in integer arithmetic.
pub fn ratio_bin(width: u32, height: u32, bins: usize) -> usize {
    let idx = (u64::from(width) * 10) / u64::from(height.max(1));
    (idx as usize).min(bins - 1)
}

enum ImageRead {
    Ok { width: u32, height: u32 },
    Corrupt(CorruptImage),
}

fn read_dimensions(path: &Path) -> ImageRead {
    let corrupt = |reason: String| {
        ImageRead::Corrupt(CorruptImage {
            path: path.to_path_buf(),
            reason,
        })
    };
    let reader = match image::ImageReader::open(path).and_then(|r| r.with_guessed_format()) {
        Ok(r) => r,
        Err(e) => return corrupt(e.to_string()),
    };
    match reader.into_dimensions() {
        Ok((0, _)) | Ok((_, 0)) => corrupt("zero-sized image".into()),
        Ok((width, height)) => ImageRead::Ok { width, height },
        Err(e) => corrupt(e.to_string()),
    }
}

struct SiteScan {
    site_id: String,
    split: Split,
    dims: Vec<(u32, u32)>,
    corrupt: Vec<CorruptImage>,
}

/// Scans `<root>/<site_id>/NN.jpg` for every manifest record. Sites are
/// scanned in parallel and merged in manifest order.
pub fn scan_image_sets(
    root: &Path,
    manifest: &DatasetManifest,
    options: ScanOptions,
) -> Result<ImageSetStats> {
    let scans: Vec<SiteScan> = manifest
        .records
        .par_iter()
        .map(|record| -> Result<SiteScan> {
            let dir = root.join(&record.site_id);
            let mut scan = SiteScan {
                site_id: record.site_id.clone(),
                split: record.split,
                dims: Vec::new(),
                corrupt: Vec::new(),
            };
            for ordinal in fsutil::list_image_ordinals(&dir)? {
                match read_dimensions(&dir.join(fsutil::image_file_name(ordinal))) {
                    ImageRead::Ok { width, height } => scan.dims.push((width, height)),
                    ImageRead::Corrupt(c) => scan.corrupt.push(c),
                }
            }
            Ok(scan)
        })
        .collect::<Result<_>>()?;

    let bins = (options.max_ratio_percent / BIN_WIDTH_PERCENT).max(1) as usize + 1;
    let mut histogram: Vec<HistogramBin> = (0..bins)
        .map(|i| HistogramBin {
            base_percent: i as u32 * BIN_WIDTH_PERCENT,
            count: 0,
            overflow: i + 1 == bins,
        })
        .collect();
    let mut stats = ImageSetStats {
        total_images: 0,
        wh_ratio_histogram: Vec::new(),
        large_edge_px: options.large_edge_px,
        large_image_count: 0,
        per_site_image_counts: BTreeMap::new(),
        images_by_split: Split::ALL.iter().map(|s| (*s, 0)).collect(),
        corrupt: Vec::new(),
    };
    for scan in scans {
        let n = scan.dims.len() as u64;
        for (w, h) in scan.dims {
            histogram[ratio_bin(w, h, bins)].count += 1;
            if w > options.large_edge_px && h > options.large_edge_px {
                stats.large_image_count += 1;
            }
        }
        stats.total_images += n;
        *stats.images_by_split.entry(scan.split).or_default() += n;
        stats.per_site_image_counts.insert(scan.site_id, n);
        stats.corrupt.extend(scan.corrupt);
    }
    stats.wh_ratio_histogram = histogram;
    Ok(stats)
}

/// Sites per language, most frequent first (ties by name). Records without a
/// language are counted as `unknown`.
pub fn language_table(manifest: &DatasetManifest) -> Vec<(String, usize)> {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for r in &manifest.records {
        *counts.entry(r.language.as_deref().unwrap_or("unknown")).or_default() += 1;
    }
    let mut table: Vec<(String, usize)> = counts
        .into_iter()
        .map(|(l, c)| (l.to_string(), c))
        .collect();
    table.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    table
}
