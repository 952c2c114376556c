use std::collections::HashMap;
use std::io::Cursor;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use crate::fetch::provider::{ImageProvider, ProviderError, ProviderErrorKind};
use crate::fetch::SearchResult;

/// A small JPEG of the given size filled with a gradient of `tint`.
pub fn placeholder_jpeg(width: u32, height: u32, tint: [u8; 3]) -> Vec<u8> {
    let img = image::RgbImage::from_fn(width.max(1), height.max(1), |x, y| {
        let shade = ((x + y) % 32) as u8;
        image::Rgb([
            tint[0].saturating_add(shade),
            tint[1].saturating_add(shade),
            tint[2],
        ])
    });
    let mut out = Cursor::new(Vec::new());
    img.write_to(&mut out, image::ImageFormat::Jpeg)
        .expect("in-memory JPEG encoding");
    out.into_inner()
}

#[derive(Debug, Clone)]
pub enum MockBody {
    Bytes(Vec<u8>),
    Fail(ProviderErrorKind),
}

#[derive(Debug, Clone)]
pub struct MockImage {
    pub result: SearchResult,
    pub body: MockBody,
}

/// Deterministic in-process provider.
///
/// Scripted queries answer with exactly what was inserted. Other queries get
/// a synthetic result list derived from a hash of the seed and the query,
/// including a few vector graphics and icons for the filter to drop.
#[derive(Debug, Clone, Default)]
pub struct MockProvider {
    seed: u64,
    scripted: HashMap<String, Vec<MockImage>>,
    failing_queries: HashMap<String, ProviderErrorKind>,
    synthetic: bool,
}

impl MockProvider {
    /// Provider that only knows scripted queries.
    pub fn scripted() -> Self {
        Self::default()
    }

    pub fn synthetic(seed: u64) -> Self {
        Self {
            seed,
            synthetic: true,
            ..Self::default()
        }
    }

    pub fn insert(&mut self, query: impl Into<String>, images: Vec<MockImage>) {
        self.scripted.insert(query.into(), images);
    }

    pub fn fail_query(&mut self, query: impl Into<String>, kind: ProviderErrorKind) {
        self.failing_queries.insert(query.into(), kind);
    }

    fn rng_for(&self, query: &str) -> ChaCha8Rng {
        let mut h = Sha256::new();
        h.update(b"descimg-mock\0");
        h.update(self.seed.to_le_bytes());
        h.update(query.as_bytes());
        ChaCha8Rng::from_seed(h.finalize().into())
    }

    fn synthesize(&self, query: &str) -> Vec<SearchResult> {
        let mut rng = self.rng_for(query);
        let count = rng.gen_range(5..=28u32);
        let key = hex_prefix(query);
        (1..=count)
            .map(|rank| {
                let roll: f64 = rng.gen();
                let (mime, width, height) = if roll < 0.07 {
                    ("image/svg+xml", 200, 200)
                } else if roll < 0.12 {
                    let edge = rng.gen_range(16..=64);
                    ("image/png", edge, edge)
                } else {
                    ("image/jpeg", rng.gen_range(60..=320), rng.gen_range(60..=320))
                };
                SearchResult {
                    rank,
                    thumbnail_url: format!("mock://{key}/{rank}"),
                    width,
                    height,
                    mime: mime.to_string(),
                }
            })
            .collect()
    }
}

fn hex_prefix(s: &str) -> String {
    Sha256::digest(s.as_bytes())[..6]
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

impl ImageProvider for MockProvider {
    fn name(&self) -> &str {
        "mock"
    }

    fn search(&self, query: &str) -> Result<Vec<SearchResult>, ProviderError> {
        if let Some(kind) = self.failing_queries.get(query) {
            return Err(ProviderError::new(*kind, format!("mock failure for {query}")));
        }
        match self.scripted.get(query) {
            Some(images) => Ok(images.iter().map(|i| i.result.clone()).collect()),
            None if self.synthetic => Ok(self.synthesize(query)),
            None => Ok(Vec::new()),
        }
    }

    fn download(&self, result: &SearchResult) -> Result<Vec<u8>, ProviderError> {
        let found = self
            .scripted
            .values()
            .flatten()
            .find(|i| i.result.thumbnail_url == result.thumbnail_url)
            .cloned()
            .or_else(|| self.synthetic_lookup(result));
        match found.map(|i| i.body) {
            Some(MockBody::Bytes(b)) => Ok(b),
            Some(MockBody::Fail(kind)) => Err(ProviderError::new(
                kind,
                format!("mock failure for {}", result.thumbnail_url),
            )),
            None => Err(ProviderError::new(
                ProviderErrorKind::Status(404),
                format!("{} not found", result.thumbnail_url),
            )),
        }
    }
}

impl MockProvider {
    fn synthetic_lookup(&self, result: &SearchResult) -> Option<MockImage> {
        if !self.synthetic {
            return None;
        }
        // Bodies derive from the result metadata alone.
        let mut h = Sha256::new();
        h.update(self.seed.to_le_bytes());
        h.update(result.thumbnail_url.as_bytes());
        let d = h.finalize();
        let body = if result.mime == "image/jpeg" {
            placeholder_jpeg(result.width, result.height, [d[0], d[1], d[2]])
        } else {
            format!("{} {}x{}", result.mime, result.width, result.height).into_bytes()
        };
        Some(MockImage {
            result: result.clone(),
            body: MockBody::Bytes(body),
        })
    }
}
