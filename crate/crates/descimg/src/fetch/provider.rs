//! Image-search providers.
//!
//! A provider answers a query with ranked result metadata and serves the
//! thumbnail bytes for a result. [`HttpJsonProvider`] talks to any JSON
//! search endpoint described by a [`ProviderConfig`]; [`super::MockProvider`]
//! is a deterministic in-process stand-in.

use std::fmt;
use std::path::Path;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::fetch::SearchResult;
use crate::fsutil;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProviderErrorKind {
    Timeout,
    /// Non-success HTTP status.
    Status(u16),
    Transport,
    /// Response could not be understood.
    Malformed,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProviderError {
    pub kind: ProviderErrorKind,
    pub message: String,
    /// Server-suggested wait before retrying, when it sent one.
    pub retry_after: Option<Duration>,
}

impl ProviderError {
    pub fn new(kind: ProviderErrorKind, message: impl Into<String>) -> Self {
        Self {
            kind,
            message: message.into(),
            retry_after: None,
        }
    }

    /// Whether repeating the same request later may succeed.
    pub fn is_retryable(&self) -> bool {
        match self.kind {
            ProviderErrorKind::Timeout | ProviderErrorKind::Transport => true,
            ProviderErrorKind::Status(s) => s == 429 || s >= 500,
            ProviderErrorKind::Malformed => false,
        }
    }

    /// Short, stable description used in sidecar files.
    pub fn summary(&self) -> String {
        match self.kind {
            ProviderErrorKind::Timeout => "timeout".into(),
            ProviderErrorKind::Status(s) => format!("http status {s}"),
            ProviderErrorKind::Transport => "transport error".into(),
            ProviderErrorKind::Malformed => "malformed response".into(),
        }
    }
}

impl fmt::Display for ProviderError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.summary(), self.message)?;
        if self.is_retryable() {
            match self.retry_after {
                Some(d) => write!(f, " (retry after {}s)", d.as_secs())?,
                None => f.write_str(" (retryable)")?,
            }
        }
        Ok(())
    }
}

impl std::error::Error for ProviderError {}

pub trait ImageProvider: Send + Sync {
    fn name(&self) -> &str;

    /// Ranked results for `query`, rank 1 first.
    fn search(&self, query: &str) -> std::result::Result<Vec<SearchResult>, ProviderError>;

    fn download(&self, result: &SearchResult) -> std::result::Result<Vec<u8>, ProviderError>;
}

/// JSON pointers (RFC 6901) locating result fields.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldPaths {
    /// Optional; results are ranked by position when absent.
    #[serde(default)]
    pub rank: Option<String>,
    pub url: String,
    pub width: String,
    pub height: String,
    pub mime: String,
}

/// Provider config file (TOML).
///
/// ```toml
/// endpoint = "https://search.example/v1/images?q={query}"
/// auth_header = "X-Api-Key"
/// auth_env = "IMAGE_SEARCH_KEY"
/// results = "/items"
///
/// [fields]
/// url = "/image/thumbnailLink"
/// width = "/image/thumbnailWidth"
/// height = "/image/thumbnailHeight"
/// mime = "/mime"
/// ```
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProviderConfig {
    /// Search URL; `{query}` is replaced by the percent-encoded query.
    pub endpoint: String,
    #[serde(default)]
    pub auth_header: Option<String>,
    /// Environment variable holding the credential for `auth_header`.
    #[serde(default)]
    pub auth_env: Option<String>,
    /// Pointer to the result array; empty means the document itself.
    #[serde(default)]
    pub results: String,
    pub fields: FieldPaths,
}

impl ProviderConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fsutil::read_to_string(path)?;
        toml::from_str(&text).map_err(|e| Error::parse(path, e))
    }
}

pub struct HttpJsonProvider {
    config: ProviderConfig,
    client: reqwest::blocking::Client,
    auth: Option<(String, String)>,
}

impl HttpJsonProvider {
    pub fn new(config: ProviderConfig, timeout: Duration) -> Result<Self> {
        if !config.endpoint.contains("{query}") {
            return Err(Error::Config("provider endpoint lacks a {query} placeholder".into()));
        }
        let auth = match (&config.auth_header, &config.auth_env) {
            (Some(header), Some(var)) => {
                let value = std::env::var(var).map_err(|_| {
                    Error::Config(format!("environment variable {var} is not set"))
                })?;
                Some((header.clone(), value))
            }
            (None, None) => None,
            _ => {
                return Err(Error::Config(
                    "auth_header and auth_env must be given together".into(),
                ))
            }
        };
        let client = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| Error::Config(e.to_string()))?;
        Ok(Self {
            config,
            client,
            auth,
        })
    }

    fn get(&self, url: &str) -> std::result::Result<reqwest::blocking::Response, ProviderError> {
        let mut req = self.client.get(url);
        if let Some((h, v)) = &self.auth {
            req = req.header(h.as_str(), v.as_str());
        }
        let resp = req.send().map_err(classify_reqwest)?;
        let status = resp.status();
        if !status.is_success() {
            let retry_after = resp
                .headers()
                .get(reqwest::header::RETRY_AFTER)
                .and_then(|v| v.to_str().ok())
                .and_then(|v| v.trim().parse::<u64>().ok())
                .map(Duration::from_secs);
            let mut err = ProviderError::new(
                ProviderErrorKind::Status(status.as_u16()),
                format!("GET {url} returned {status}"),
            );
            err.retry_after = retry_after;
            return Err(err);
        }
        Ok(resp)
    }

    pub fn search_url(&self, query: &str) -> String {
        let encoded: String = url::form_urlencoded::byte_serialize(query.as_bytes()).collect();
        self.config.endpoint.replace("{query}", &encoded)
    }
}

fn classify_reqwest(e: reqwest::Error) -> ProviderError {
    let kind = if e.is_timeout() {
        ProviderErrorKind::Timeout
    } else if e.is_decode() || e.is_body() {
        ProviderErrorKind::Malformed
    } else {
        ProviderErrorKind::Transport
    };
    ProviderError::new(kind, e.to_string())
}

fn as_u32(v: Option<&Value>) -> Option<u32> {
    match v? {
        Value::Number(n) => n.as_u64().and_then(|n| u32::try_from(n).ok()),
        Value::String(s) => s.trim().parse().ok(),
        _ => None,
    }
}

/// Extracts ranked results from a search response according to `config`.
pub fn parse_results(
    config: &ProviderConfig,
    doc: &Value,
) -> std::result::Result<Vec<SearchResult>, ProviderError> {
    let malformed = |m: String| ProviderError::new(ProviderErrorKind::Malformed, m);
    let items = doc
        .pointer(&config.results)
        .and_then(Value::as_array)
        .ok_or_else(|| malformed(format!("no result array at {:?}", config.results)))?;
    let f = &config.fields;
    let mut out = Vec::with_capacity(items.len());
    for (i, item) in items.iter().enumerate() {
        let missing = |field: &str| malformed(format!("result {}: missing {field}", i + 1));
        let rank = match &f.rank {
            Some(p) => as_u32(item.pointer(p)).ok_or_else(|| missing("rank"))?,
            None => i as u32 + 1,
        };
        let thumbnail_url = item
            .pointer(&f.url)
            .and_then(Value::as_str)
            .ok_or_else(|| missing("url"))?
            .to_string();
        let width = as_u32(item.pointer(&f.width)).ok_or_else(|| missing("width"))?;
        let height = as_u32(item.pointer(&f.height)).ok_or_else(|| missing("height"))?;
        let mime = item
            .pointer(&f.mime)
            .and_then(Value::as_str)
            .ok_or_else(|| missing("mime"))?
            .to_ascii_lowercase();
        out.push(SearchResult {
            rank,
            thumbnail_url,
            width,
            height,
            mime,
        });
    }
    if out.windows(2).any(|w| w[0].rank >= w[1].rank) {
        return Err(malformed("result ranks are not strictly increasing".into()));
    }
    Ok(out)
}

impl ImageProvider for HttpJsonProvider {
    fn name(&self) -> &str {
        "http"
    }

    fn search(&self, query: &str) -> std::result::Result<Vec<SearchResult>, ProviderError> {
        let url = self.search_url(query);
        let body = self.get(&url)?.bytes().map_err(classify_reqwest)?;
        let doc: Value = serde_json::from_slice(&body)
            .map_err(|e| ProviderError::new(ProviderErrorKind::Malformed, e.to_string()))?;
        parse_results(&self.config, &doc)
    }

    fn download(&self, result: &SearchResult) -> std::result::Result<Vec<u8>, ProviderError> {
        let bytes = self
            .get(&result.thumbnail_url)?
            .bytes()
            .map_err(classify_reqwest)?;
        Ok(bytes.to_vec())
    }
}
