//! Small filesystem helpers shared by every writer.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

/// Writes `bytes` to `path` through a temporary file in the same directory
/// followed by a rename, so readers never observe a half-written file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut tmp = tempfile::Builder::new()
        .prefix(".tmp-")
        .tempfile_in(dir)
        .map_err(|e| Error::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

pub fn read_to_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Parses `NN.jpg` into its ordinal when `NN` is two digits in `01..=20`.
pub fn image_ordinal(file_name: &str) -> Option<u8> {
    let stem = file_name.strip_suffix(".jpg")?;
    if stem.len() != 2 || !stem.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    let n: u8 = stem.parse().ok()?;
    (1..=descimg_core::MAX_IMAGES as u8).contains(&n).then_some(n)
}

pub fn image_file_name(ordinal: u8) -> String {
    format!("{ordinal:02}.jpg")
}

/// Ordinals of the `NN.jpg` files in `dir`, ascending. A missing directory
/// has no images.
pub fn list_image_ordinals(dir: &Path) -> Result<Vec<u8>> {
    let entries = match fs::read_dir(dir) {
        Ok(e) => e,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(Error::io(dir, e)),
    };
    let mut out = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        if let Some(o) = entry.file_name().to_str().and_then(image_ordinal) {
            if entry.path().is_file() {
                out.push(o);
            }
        }
    }
    out.sort_unstable();
    Ok(out)
}
