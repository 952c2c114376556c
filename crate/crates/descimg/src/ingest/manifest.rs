use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::path::Path;
use std::str::FromStr;

use descimg_core::{is_directory_safe, LabelSet, Split, WebSiteRecord};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fsutil;

/// CSV header, in column order.
pub const CSV_COLUMNS: [&str; 7] = [
    "site_id",
    "url",
    "label",
    "split",
    "language",
    "screenshot_path",
    "text_path",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ManifestFormat {
    Csv,
    Json,
}

impl ManifestFormat {
    /// Guesses from the file extension; anything but `.json` is CSV.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("json") => ManifestFormat::Json,
            _ => ManifestFormat::Csv,
        }
    }
}

impl FromStr for ManifestFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(ManifestFormat::Csv),
            "json" => Ok(ManifestFormat::Json),
            other => Err(Error::UnknownFormat(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub name: String,
    pub labels: LabelSet,
    pub records: Vec<WebSiteRecord>,
}

impl DatasetManifest {
    pub fn split_counts(&self) -> BTreeMap<Split, usize> {
        let mut counts: BTreeMap<Split, usize> = Split::ALL.iter().map(|s| (*s, 0)).collect();
        for r in &self.records {
            *counts.entry(r.split).or_default() += 1;
        }
        counts
    }

    pub fn get(&self, site_id: &str) -> Option<&WebSiteRecord> {
        self.records.iter().find(|r| r.site_id == site_id)
    }

    pub fn in_split(&self, split: Split) -> impl Iterator<Item = &WebSiteRecord> + '_ {
        self.records.iter().filter(move |r| r.split == split)
    }

    /// Checks the invariants a parsed manifest must hold.
    pub fn validate(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for r in &self.records {
            if !seen.insert(r.site_id.as_str()) {
                return Err(Error::DuplicateSite(r.site_id.clone()));
            }
            match self.labels.get(r.label.index) {
                Some(l) if l.name == r.label.name => {}
                _ => return Err(descimg_core::CoreError::UnknownLabel(r.label.name.clone()).into()),
            }
        }
        Ok(())
    }
}

/// Reads a manifest. CSV manifests carry no label order of their own: pass
/// `labels` to fix it (unknown labels are then an error), otherwise the
/// distinct labels are taken in sorted order.
pub fn parse_manifest(
    path: &Path,
    format: ManifestFormat,
    labels: Option<&LabelSet>,
) -> Result<DatasetManifest> {
    let manifest = match format {
        ManifestFormat::Csv => parse_csv(path, labels)?,
        ManifestFormat::Json => {
            let text = fsutil::read_to_string(path)?;
            if text.trim().is_empty() {
                return Err(Error::NoRecords(path.to_path_buf()));
            }
            let m: DatasetManifest =
                serde_json::from_str(&text).map_err(|e| Error::parse(path, e))?;
            if let Some(l) = labels {
                if *l != m.labels {
                    return Err(Error::parse(path, "label set differs from the one requested"));
                }
            }
            m
        }
    };
    if manifest.records.is_empty() {
        return Err(Error::NoRecords(path.to_path_buf()));
    }
    for r in &manifest.records {
        if !is_directory_safe(&r.site_id) {
            return Err(Error::parse(
                path,
                format!("site id {:?} is not directory-safe", r.site_id),
            ));
        }
    }
    manifest.validate()?;
    Ok(manifest)
}

struct RawRow {
    row: usize,
    fields: Vec<Option<String>>,
}

fn parse_csv(path: &Path, labels: Option<&LabelSet>) -> Result<DatasetManifest> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| Error::parse(path, e))?;
    let headers = reader.headers().map_err(|e| Error::parse(path, e))?.clone();
    let column = |name: &str| headers.iter().position(|h| h.trim() == name);
    let positions: Vec<Option<usize>> = CSV_COLUMNS.iter().map(|c| column(c)).collect();
    for (name, pos) in CSV_COLUMNS.iter().zip(&positions).take(4) {
        if pos.is_none() {
            if headers.is_empty() {
                return Err(Error::NoRecords(path.to_path_buf()));
            }
            return Err(Error::parse(path, format!("missing column `{name}`")));
        }
    }

    let mut raw = Vec::new();
    for (i, result) in reader.records().enumerate() {
        let row = i + 1;
        let record = result.map_err(|e| Error::ManifestRow {
            path: path.to_path_buf(),
            row,
            field: "*".into(),
            message: e.to_string(),
        })?;
        let fields = positions
            .iter()
            .map(|p| {
                p.and_then(|p| record.get(p))
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(str::to_string)
            })
            .collect();
        raw.push(RawRow { row, fields });
    }

    let mut parsed = Vec::with_capacity(raw.len());
    for r in raw {
        let err = |field: &str, message: String| Error::ManifestRow {
            path: path.to_path_buf(),
            row: r.row,
            field: field.to_string(),
            message,
        };
        let required = |i: usize| {
            r.fields[i]
                .clone()
                .ok_or_else(|| err(CSV_COLUMNS[i], "missing value".into()))
        };
        let site_id = required(0)?;
        if !is_directory_safe(&site_id) {
            return Err(err("site_id", format!("{site_id:?} is not directory-safe")));
        }
        let url = required(1)?;
        let label_name = required(2)?;
        let split = required(3)?
            .parse::<Split>()
            .map_err(|e| err("split", e.to_string()))?;
        parsed.push((r, site_id, url, label_name, split));
    }
    if parsed.is_empty() {
        return Err(Error::NoRecords(path.to_path_buf()));
    }

    let labels = match labels {
        Some(l) => l.clone(),
        None => {
            let names: BTreeSet<&str> = parsed.iter().map(|p| p.3.as_str()).collect();
            LabelSet::new(names).map_err(|e| Error::parse(path, e))?
        }
    };

    let mut records = Vec::with_capacity(parsed.len());
    for (r, site_id, url, label_name, split) in parsed {
        let label = labels.label(&label_name).map_err(|e| Error::ManifestRow {
            path: path.to_path_buf(),
            row: r.row,
            field: "label".into(),
            message: e.to_string(),
        })?;
        records.push(WebSiteRecord {
            site_id,
            url,
            label,
            split,
            language: r.fields[4].clone(),
            screenshot_path: r.fields[5].clone(),
            text_path: r.fields[6].clone(),
        });
    }

    let name = path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("manifest")
        .to_string();
    Ok(DatasetManifest {
        name,
        labels,
        records,
    })
}

pub fn manifest_to_csv(manifest: &DatasetManifest) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| Error::parse("<manifest>", e);
    w.write_record(CSV_COLUMNS).map_err(csv_err)?;
    for r in &manifest.records {
        let opt = |o: &Option<String>| o.clone().unwrap_or_default();
        w.write_record([
            r.site_id.clone(),
            r.url.clone(),
            r.label.name.clone(),
            r.split.to_string(),
            opt(&r.language),
            opt(&r.screenshot_path),
            opt(&r.text_path),
        ])
        .map_err(csv_err)?;
    }
    w.into_inner()
        .map_err(|e| Error::parse("<manifest>", e.to_string()))
}

pub fn write_manifest(manifest: &DatasetManifest, path: &Path, format: ManifestFormat) -> Result<()> {
    let bytes = match format {
        ManifestFormat::Csv => manifest_to_csv(manifest)?,
        ManifestFormat::Json => {
            let mut s = serde_json::to_string_pretty(manifest).map_err(|e| Error::parse(path, e))?;
            s.push('\n');
            s.into_bytes()
        }
    };
    fsutil::write_atomic(path, &bytes)
}
