use alloc::string::{String, ToString};
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::CoreError;
use crate::labels::ClassLabel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Validation,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Validation, Split::Test];

    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Validation => "validation",
            Split::Test => "test",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Split {
    type Err = CoreError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "train" => Ok(Split::Train),
            "validation" => Ok(Split::Validation),
            "test" => Ok(Split::Test),
            other => Err(CoreError::UnknownSplit(other.to_string())),
        }
    }
}

/// One dataset item.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WebSiteRecord {
    /// Used as a directory name, so restricted to `[A-Za-z0-9._-]`.
    pub site_id: String,
    pub url: String,
    pub label: ClassLabel,
    pub split: Split,
    pub language: Option<String>,
    pub screenshot_path: Option<String>,
    pub text_path: Option<String>,
}

/// True when `id` can be used verbatim as a single path component.
pub fn is_directory_safe(id: &str) -> bool {
    !id.is_empty()
        && id != "."
        && id != ".."
        && id
            .bytes()
            .all(|b| b.is_ascii_alphanumeric() || matches!(b, b'.' | b'_' | b'-'))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn directory_safe_ids() {
        assert!(is_directory_safe("site_0001"));
        assert!(is_directory_safe("example.com"));
        assert!(!is_directory_safe(".."));
        assert!(!is_directory_safe("a/b"));
        assert!(!is_directory_safe(""));
    }

    #[test]
    fn split_parse() {
        assert_eq!("validation".parse::<Split>().unwrap(), Split::Validation);
        assert!("dev".parse::<Split>().is_err());
    }
}
