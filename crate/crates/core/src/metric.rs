use alloc::string::{String, ToString};
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::CoreError;

/// Fusion family. Declaration order is the report order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Family {
    /// Summation of raw scores.
    S,
    /// Summation of one-hot rows.
    H,
    /// Summation of raw scores after reordering by the dominant column.
    A,
}

impl Family {
    pub const ALL: [Family; 3] = [Family::S, Family::H, Family::A];

    pub fn letter(self) -> char {
        match self {
            Family::S => 'S',
            Family::H => 'H',
            Family::A => 'A',
        }
    }
}

/// Truncation level: how many leading rows a fusion sums.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Level {
    K5,
    K10,
    K15,
    K20,
}

impl Level {
    pub const ALL: [Level; 4] = [Level::K5, Level::K10, Level::K15, Level::K20];

    pub fn k(self) -> usize {
        match self {
            Level::K5 => 5,
            Level::K10 => 10,
            Level::K15 => 15,
            Level::K20 => 20,
        }
    }

    pub fn from_k(k: usize) -> Option<Self> {
        Self::ALL.into_iter().find(|l| l.k() == k)
    }

    /// Smallest level whose truncation keeps all `rows` rows.
    pub fn covering(rows: usize) -> Self {
        Self::ALL
            .into_iter()
            .find(|l| l.k() >= rows)
            .unwrap_or(Level::K20)
    }
}

/// One of the thirteen reported accuracy metrics.
///
/// The derived ordering is the fixed enumeration order: S before H before A,
/// ascending `k` within a family, per-image accuracy last.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MetricId {
    Fusion(Family, Level),
    PerImage,
}

impl MetricId {
    pub const FUSION: [MetricId; 12] = {
        let mut out = [MetricId::PerImage; 12];
        let families = [Family::S, Family::H, Family::A];
        let levels = [Level::K5, Level::K10, Level::K15, Level::K20];
        let mut i = 0;
        while i < 12 {
            out[i] = MetricId::Fusion(families[i / 4], levels[i % 4]);
            i += 1;
        }
        out
    };

    pub const ALL: [MetricId; 13] = {
        let mut out = [MetricId::PerImage; 13];
        let mut i = 0;
        while i < 12 {
            out[i] = Self::FUSION[i];
            i += 1;
        }
        out
    };

    pub const fn new(family: Family, level: Level) -> Self {
        MetricId::Fusion(family, level)
    }

    pub fn family(self) -> Option<Family> {
        match self {
            MetricId::Fusion(f, _) => Some(f),
            MetricId::PerImage => None,
        }
    }

    pub fn k(self) -> Option<usize> {
        match self {
            MetricId::Fusion(_, l) => Some(l.k()),
            MetricId::PerImage => None,
        }
    }

    /// Position in [`MetricId::ALL`].
    pub fn position(self) -> usize {
        match self {
            MetricId::Fusion(f, l) => (f as usize) * 4 + l as usize,
            MetricId::PerImage => 12,
        }
    }
}

impl fmt::Display for MetricId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MetricId::Fusion(family, level) => write!(f, "{}{:02}", family.letter(), level.k()),
            MetricId::PerImage => f.write_str("PerImage"),
        }
    }
}

impl FromStr for MetricId {
    type Err = CoreError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let unknown = || CoreError::UnknownMetric(s.to_string());
        if s.eq_ignore_ascii_case("perimage") || s.eq_ignore_ascii_case("per-image") {
            return Ok(MetricId::PerImage);
        }
        let mut chars = s.chars();
        let family = match chars.next().map(|c| c.to_ascii_uppercase()) {
            Some('S') => Family::S,
            Some('H') => Family::H,
            Some('A') => Family::A,
            _ => return Err(unknown()),
        };
        let k: usize = chars.as_str().parse().map_err(|_| unknown())?;
        let level = Level::from_k(k).ok_or_else(unknown)?;
        Ok(MetricId::Fusion(family, level))
    }
}

impl Serialize for MetricId {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for MetricId {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
