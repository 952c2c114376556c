use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::error::CoreError;

/// A class with its 0-based column index.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ClassLabel {
    pub index: usize,
    pub name: String,
}

impl fmt::Display for ClassLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

/// Ordered set of class names. The order is the column order of every score
/// matrix evaluated against it.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct LabelSet {
    names: Vec<String>,
}

impl LabelSet {
    pub fn new<I, S>(names: I) -> Result<Self, CoreError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let names: Vec<String> = names.into_iter().map(Into::into).collect();
        if names.len() < 2 {
            return Err(CoreError::InvalidLabelSet(
                "at least two labels are required".to_string(),
            ));
        }
        for (i, name) in names.iter().enumerate() {
            if name.trim().is_empty() {
                return Err(CoreError::InvalidLabelSet(alloc::format!(
                    "label {} is empty",
                    i + 1
                )));
            }
            if names[..i].contains(name) {
                return Err(CoreError::InvalidLabelSet(alloc::format!(
                    "duplicate label {name:?}"
                )));
            }
        }
        Ok(Self { names })
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    /// Always false; a label set holds at least two labels.
    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn get(&self, index: usize) -> Option<ClassLabel> {
        self.names.get(index).map(|name| ClassLabel {
            index,
            name: name.clone(),
        })
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn label(&self, name: &str) -> Result<ClassLabel, CoreError> {
        self.index_of(name)
            .map(|index| ClassLabel {
                index,
                name: name.to_string(),
            })
            .ok_or_else(|| CoreError::UnknownLabel(name.to_string()))
    }

    pub fn iter(&self) -> impl Iterator<Item = ClassLabel> + '_ {
        self.names.iter().enumerate().map(|(index, name)| ClassLabel {
            index,
            name: name.clone(),
        })
    }
}

impl TryFrom<Vec<String>> for LabelSet {
    type Error = CoreError;

    fn try_from(names: Vec<String>) -> Result<Self, Self::Error> {
        Self::new(names)
    }
}

impl From<LabelSet> for Vec<String> {
    fn from(set: LabelSet) -> Self {
        set.names
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_degenerate_sets() {
        assert!(LabelSet::new(["only"]).is_err());
        assert!(LabelSet::new(["a", "a"]).is_err());
        assert!(LabelSet::new(["a", " "]).is_err());
    }

    #[test]
    fn indices_follow_order() {
        let set = LabelSet::new(["machinery", "music", "sport", "tourism"]).unwrap();
        assert_eq!(set.index_of("sport"), Some(2));
        assert_eq!(set.get(3).unwrap().name, "tourism");
        assert!(matches!(set.label("news"), Err(CoreError::UnknownLabel(_))));
    }
}
