use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Workpiece profile class, identified by a snake_case id.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum ProfileClass {
    Smooth,
    HorizontalWavy,
    VerticalWavy,
    Other(String),
}

impl ProfileClass {
    pub const BUILTIN: [ProfileClass; 3] = [ProfileClass::Smooth, ProfileClass::HorizontalWavy, ProfileClass::VerticalWavy];

    pub fn id(&self) -> &str {
        match self {
            Self::Smooth => "smooth",
            Self::HorizontalWavy => "horizontal_wavy",
            Self::VerticalWavy => "vertical_wavy",
            Self::Other(s) => s,
        }
    }
}

impl PartialOrd for ProfileClass {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

/// Lexicographic by id.
impl Ord for ProfileClass {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.id().cmp(other.id())
    }
}

impl fmt::Display for ProfileClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid class label {0:?}: expected a non-empty snake_case id")]
pub struct InvalidLabel(pub String);

impl FromStr for ProfileClass {
    type Err = InvalidLabel;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let ok = !s.is_empty()
            && s.starts_with(|c: char| c.is_ascii_lowercase())
            && s.chars().all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_');
        if !ok {
            return Err(InvalidLabel(s.to_string()));
        }
        Ok(match s {
            "smooth" => Self::Smooth,
            "horizontal_wavy" => Self::HorizontalWavy,
            "vertical_wavy" => Self::VerticalWavy,
            other => Self::Other(other.to_string()),
        })
    }
}

impl Serialize for ProfileClass {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.id())
    }
}

impl<'de> Deserialize<'de> for ProfileClass {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
