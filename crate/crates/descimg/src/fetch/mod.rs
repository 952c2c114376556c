//! Descriptive-image retrieval.
//!
//! For each site the provider is queried with the site URL, results that
//! are not photo-like are dropped, and the first `max_images` survivors are
//! downloaded in rank order to `<root>/<site_id>/01.jpg ... 20.jpg`. A
//! failed download leaves its ordinal empty instead of shifting later
//! images down, so ordinal `n` is always the `n`-th surviving result. A
//! `meta.json` sidecar records the provenance of every ordinal.

mod mock;
mod provider;

use std::collections::{BTreeSet, HashMap};
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use mock::{placeholder_jpeg, MockBody, MockImage, MockProvider};
pub use provider::{
    parse_results, FieldPaths, HttpJsonProvider, ImageProvider, ProviderConfig, ProviderError,
    ProviderErrorKind,
};

use crate::error::{Error, Result};
use crate::fsutil;
use crate::ingest::DatasetManifest;

pub const META_FILE: &str = "meta.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchResult {
    pub rank: u32,
    pub thumbnail_url: String,
    pub width: u32,
    pub height: u32,
    pub mime: String,
}

/// What the provider is asked for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QueryMode {
    /// The URL exactly as listed in the manifest.
    #[default]
    Url,
    /// Only the host name of the URL.
    Domain,
}

impl QueryMode {
    pub fn query(self, site_url: &str) -> String {
        match self {
            QueryMode::Url => site_url.to_string(),
            QueryMode::Domain => host_of(site_url).unwrap_or_else(|| site_url.to_string()),
        }
    }
}

impl std::str::FromStr for QueryMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "url" => Ok(QueryMode::Url),
            "domain" => Ok(QueryMode::Domain),
            other => Err(Error::Config(format!("unknown query mode {other:?}"))),
        }
    }
}

fn host_of(u: &str) -> Option<String> {
    let parsed = url::Url::parse(u)
        .or_else(|_| url::Url::parse(&format!("http://{u}")))
        .ok()?;
    parsed.host_str().map(str::to_string)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FetchPolicy {
    /// 1..=20.
    pub max_images: usize,
    pub min_edge_px: u32,
    pub allowed_mimes: BTreeSet<String>,
    /// Square results with edges at most this size are treated as icons.
    pub icon_max_px: u32,
    pub request_timeout: Duration,
    pub max_concurrent: usize,
    pub per_host_delay: Duration,
    pub query_mode: QueryMode,
}

impl Default for FetchPolicy {
    fn default() -> Self {
        Self {
            max_images: 20,
            min_edge_px: 64,
            allowed_mimes: ["image/jpeg", "image/png", "image/webp", "image/bmp"]
                .into_iter()
                .map(String::from)
                .collect(),
            icon_max_px: 128,
            request_timeout: Duration::from_secs(20),
            max_concurrent: 4,
            per_host_delay: Duration::from_millis(0),
            query_mode: QueryMode::Url,
        }
    }
}

impl FetchPolicy {
    pub fn validate(&self) -> Result<()> {
        if !(1..=descimg_core::MAX_IMAGES).contains(&self.max_images) {
            return Err(Error::Config(format!(
                "max_images must be within 1..=20, got {}",
                self.max_images
            )));
        }
        if self.min_edge_px < 1 {
            return Err(Error::Config("min_edge_px must be at least 1".into()));
        }
        if self.max_concurrent < 1 {
            return Err(Error::Config("max_concurrent must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FilterReason {
    /// Not an allowed raster type (vector graphics and the like).
    Mime,
    TooSmall,
    Icon,
}

/// Photo-like test: allowed raster MIME, both edges at least `min_edge_px`,
/// and not a small square.
pub fn photo_like(result: &SearchResult, policy: &FetchPolicy) -> std::result::Result<(), FilterReason> {
    if !policy.allowed_mimes.contains(&result.mime.to_ascii_lowercase()) {
        return Err(FilterReason::Mime);
    }
    if result.width < policy.min_edge_px || result.height < policy.min_edge_px {
        return Err(FilterReason::TooSmall);
    }
    if result.width == result.height && result.width <= policy.icon_max_px {
        return Err(FilterReason::Icon);
    }
    Ok(())
}

/// Serializes requests per host so consecutive requests to one host are at
/// least `delay` apart.
#[derive(Debug, Default)]
pub struct Politeness {
    delay: Duration,
    next_slot: Mutex<HashMap<String, Instant>>,
}

impl Politeness {
    pub fn new(delay: Duration) -> Self {
        Self {
            delay,
            next_slot: Mutex::new(HashMap::new()),
        }
    }

    pub fn wait(&self, url: &str) {
        if self.delay.is_zero() {
            return;
        }
        let host = host_of(url).unwrap_or_default();
        let start = {
            let mut slots = self.next_slot.lock().expect("politeness lock");
            let now = Instant::now();
            let start = slots.get(&host).copied().filter(|t| *t > now).unwrap_or(now);
            slots.insert(host, start + self.delay);
            start
        };
        let now = Instant::now();
        if start > now {
            std::thread::sleep(start - now);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SavedImage {
    pub ordinal: u8,
    pub rank: u32,
    pub source_url: String,
    pub width: u32,
    pub height: u32,
    pub mime: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FailedImage {
    pub ordinal: u8,
    pub rank: u32,
    pub source_url: String,
    pub reason: String,
    pub retryable: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilteredResult {
    pub rank: u32,
    pub reason: FilterReason,
}

/// Contents of `<site>/meta.json`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SiteMeta {
    pub site_id: String,
    pub url: String,
    pub query: String,
    pub query_mode: QueryMode,
    pub provider: String,
    pub returned: usize,
    pub filtered: Vec<FilteredResult>,
    pub images: Vec<SavedImage>,
    pub failures: Vec<FailedImage>,
    /// True when every selected result was saved.
    pub complete: bool,
}

impl SiteMeta {
    pub fn read(site_dir: &Path) -> Option<Self> {
        let text = fs::read_to_string(site_dir.join(META_FILE)).ok()?;
        serde_json::from_str(&text).ok()
    }

    /// Every listed image is on disk with the recorded size.
    pub fn files_intact(&self, site_dir: &Path) -> bool {
        self.images.iter().all(|img| file_has_size(&site_dir.join(fsutil::image_file_name(img.ordinal)), img.bytes))
    }
}

fn file_has_size(path: &Path, bytes: u64) -> bool {
    fs::metadata(path).map(|m| m.is_file() && m.len() == bytes).unwrap_or(false)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "status")]
pub enum FetchStatus {
    Complete,
    /// Some selected results failed to download.
    Partial,
    /// A complete directory already existed.
    Skipped,
    /// The search itself failed; nothing was written.
    Failed { error: String, retryable: bool },
    Cancelled,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FetchOutcome {
    pub site_id: String,
    pub query: String,
    #[serde(flatten)]
    pub status: FetchStatus,
    /// Results returned by the provider.
    pub returned: usize,
    /// Results dropped as not photo-like.
    pub filtered: usize,
    /// Selected results (at most `max_images`).
    pub requested: usize,
    /// Images on disk after the run, downloaded or reused.
    pub saved: usize,
    /// Images kept from an earlier run without downloading.
    pub reused: usize,
    pub failed: usize,
    pub failures: Vec<FailedImage>,
}

impl FetchOutcome {
    fn empty(site_id: &str, query: String, status: FetchStatus) -> Self {
        Self {
            site_id: site_id.to_string(),
            query,
            status,
            returned: 0,
            filtered: 0,
            requested: 0,
            saved: 0,
            reused: 0,
            failed: 0,
            failures: Vec::new(),
        }
    }
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Fetches one site into `<dest_root>/<site_id>/`.
///
/// Provider search failures are returned as [`Error::Provider`]; failures of
/// individual downloads are recorded in the outcome and the sidecar.
pub fn fetch_descriptive_images(
    site_id: &str,
    url: &str,
    provider: &dyn ImageProvider,
    policy: &FetchPolicy,
    dest_root: &Path,
    politeness: &Politeness,
) -> Result<FetchOutcome> {
    policy.validate()?;
    let site_dir = dest_root.join(site_id);
    let query = policy.query_mode.query(url);
    let previous = SiteMeta::read(&site_dir);
    if let Some(meta) = &previous {
        if meta.complete && meta.query == query && meta.files_intact(&site_dir) {
            let mut outcome = FetchOutcome::empty(site_id, query, FetchStatus::Skipped);
            outcome.returned = meta.returned;
            outcome.filtered = meta.filtered.len();
            outcome.requested = meta.images.len();
            outcome.saved = meta.images.len();
            outcome.reused = meta.images.len();
            return Ok(outcome);
        }
    }

    politeness.wait(url);
    let results = provider.search(&query)?;
    let mut filtered = Vec::new();
    let mut survivors = Vec::new();
    for r in &results {
        match photo_like(r, policy) {
            Ok(()) => survivors.push(r),
            Err(reason) => filtered.push(FilteredResult {
                rank: r.rank,
                reason,
            }),
        }
    }
    survivors.truncate(policy.max_images);

    fs::create_dir_all(&site_dir).map_err(|e| Error::io(&site_dir, e))?;
    let mut images = Vec::new();
    let mut failures = Vec::new();
    let mut reused = 0;
    for (i, result) in survivors.iter().enumerate() {
        let ordinal = (i + 1) as u8;
        let path = site_dir.join(fsutil::image_file_name(ordinal));
        let earlier = previous.as_ref().and_then(|m| {
            m.images.iter().find(|img| {
                img.ordinal == ordinal
                    && img.rank == result.rank
                    && img.source_url == result.thumbnail_url
            })
        });
        if let Some(img) = earlier {
            if file_has_size(&path, img.bytes) {
                images.push(img.clone());
                reused += 1;
                continue;
            }
        }

        politeness.wait(&result.thumbnail_url);
        match provider.download(result) {
            Ok(bytes) => {
                let unchanged = fs::read(&path).map(|b| b == bytes).unwrap_or(false);
                if !unchanged {
                    fsutil::write_atomic(&path, &bytes)?;
                }
                images.push(SavedImage {
                    ordinal,
                    rank: result.rank,
                    source_url: result.thumbnail_url.clone(),
                    width: result.width,
                    height: result.height,
                    mime: result.mime.clone(),
                    bytes: bytes.len() as u64,
                    sha256: sha256_hex(&bytes),
                });
            }
            Err(e) => {
                tracing::warn!(site_id, rank = result.rank, ordinal, error = %e, "download failed");
                if path.exists() {
                    fs::remove_file(&path).map_err(|e| Error::io(&path, e))?;
                }
                failures.push(FailedImage {
                    ordinal,
                    rank: result.rank,
                    source_url: result.thumbnail_url.clone(),
                    reason: e.summary(),
                    retryable: e.is_retryable(),
                });
            }
        }
    }

    // Drop images left over from an earlier, longer selection.
    for ordinal in fsutil::list_image_ordinals(&site_dir)? {
        if usize::from(ordinal) > survivors.len() {
            let p = site_dir.join(fsutil::image_file_name(ordinal));
            fs::remove_file(&p).map_err(|e| Error::io(&p, e))?;
        }
    }

    let meta = SiteMeta {
        site_id: site_id.to_string(),
        url: url.to_string(),
        query: query.clone(),
        query_mode: policy.query_mode,
        provider: provider.name().to_string(),
        returned: results.len(),
        filtered: filtered.clone(),
        images,
        failures: failures.clone(),
        complete: failures.is_empty(),
    };
    let mut json = serde_json::to_string_pretty(&meta).expect("meta serializes");
    json.push('\n');
    let meta_path = site_dir.join(META_FILE);
    let unchanged = fs::read_to_string(&meta_path).map(|t| t == json).unwrap_or(false);
    if !unchanged {
        fsutil::write_atomic(&meta_path, json.as_bytes())?;
    }

    let status = if failures.is_empty() {
        FetchStatus::Complete
    } else {
        FetchStatus::Partial
    };
    Ok(FetchOutcome {
        site_id: site_id.to_string(),
        query,
        status,
        returned: results.len(),
        filtered: filtered.len(),
        requested: survivors.len(),
        saved: meta.images.len(),
        reused,
        failed: failures.len(),
        failures,
    })
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BatchReport {
    /// One outcome per manifest record, in manifest order.
    pub outcomes: Vec<FetchOutcome>,
}

impl BatchReport {
    pub fn count(&self, pred: impl Fn(&FetchStatus) -> bool) -> usize {
        self.outcomes.iter().filter(|o| pred(&o.status)).count()
    }

    /// Downloads performed in this run.
    pub fn downloads(&self) -> usize {
        self.outcomes.iter().map(|o| o.saved - o.reused).sum()
    }
}

/// Fetches every record of `manifest` with at most `policy.max_concurrent`
/// sites in flight. One site failing never stops the batch; once `cancel`
/// is set no new site is started.
pub fn batch_fetch(
    manifest: &DatasetManifest,
    provider: &dyn ImageProvider,
    policy: &FetchPolicy,
    dest_root: &Path,
    cancel: &AtomicBool,
) -> Result<BatchReport> {
    policy.validate()?;
    fs::create_dir_all(dest_root).map_err(|e| Error::io(dest_root, e))?;
    let politeness = Politeness::new(policy.per_host_delay);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(policy.max_concurrent)
        .build()
        .map_err(|e| Error::Config(e.to_string()))?;
    let outcomes = pool.install(|| {
        manifest
            .records
            .par_iter()
            .map(|record| {
                let query = policy.query_mode.query(&record.url);
                if cancel.load(Ordering::Relaxed) {
                    return FetchOutcome::empty(&record.site_id, query, FetchStatus::Cancelled);
                }
                match fetch_descriptive_images(
                    &record.site_id,
                    &record.url,
                    provider,
                    policy,
                    dest_root,
                    &politeness,
                ) {
                    Ok(o) => {
                        tracing::info!(site_id = %o.site_id, saved = o.saved, failed = o.failed, "fetched");
                        o
                    }
                    Err(e) => {
                        tracing::error!(site_id = %record.site_id, error = %e, "fetch failed");
                        let retryable = matches!(&e, Error::Provider(p) if p.is_retryable());
                        FetchOutcome::empty(
                            &record.site_id,
                            query,
                            FetchStatus::Failed {
                                error: e.to_string(),
                                retryable,
                            },
                        )
                    }
                }
            })
            .collect()
    });
    Ok(BatchReport { outcomes })
}

/// Paths of every file under `root`, relative and sorted. Handy for
/// comparing fetched trees.
pub fn tree_listing(root: &Path) -> Result<Vec<(PathBuf, Vec<u8>)>> {
    fn walk(base: &Path, dir: &Path, out: &mut Vec<(PathBuf, Vec<u8>)>) -> Result<()> {
        for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
            let path = entry.map_err(|e| Error::io(dir, e))?.path();
            if path.is_dir() {
                walk(base, &path, out)?;
            } else {
                let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
                out.push((path.strip_prefix(base).unwrap_or(&path).to_path_buf(), bytes));
            }
        }
        Ok(())
    }
    let mut out = Vec::new();
    walk(root, root, &mut out)?;
    out.sort_by(|a, b| a.0.cmp(&b.0));
    Ok(out)
}
