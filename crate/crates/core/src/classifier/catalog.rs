use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ClassifierError, ProfileClass};

/// Plate sizes `(id, length m, width m)` shared by every built-in class.
pub const STANDARD_SIZES: [(&str, f64, f64); 6] = [
    ("model_1", 0.800, 0.400),
    ("model_2", 0.600, 0.400),
    ("model_3", 0.615, 0.480),
    ("model_4", 0.755, 0.480),
    ("model_5", 0.560, 0.380),
    ("model_6", 0.550, 0.365),
];

pub const DEFAULT_MATCH_TOLERANCE: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CatalogEntry {
    pub model_id: String,
    pub class: ProfileClass,
    pub length: f64,
    pub width: f64,
}

impl CatalogEntry {
    /// Size key shared across classes: the id without its class prefix.
    pub fn size_key(&self) -> &str {
        let prefix = format!("{}_", self.class.id());
        self.model_id.strip_prefix(prefix.as_str()).unwrap_or(&self.model_id)
    }

    /// Largest relative deviation over `(length, width)`.
    pub fn relative_error(&self, length: f64, width: f64) -> f64 {
        ((length - self.length).abs() / self.length).max((width - self.width).abs() / self.width)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelCatalog {
    #[serde(default = "default_schema")]
    pub schema: u32,
    pub entries: Vec<CatalogEntry>,
    #[serde(default = "default_tolerance")]
    pub match_tolerance: f64,
}

fn default_schema() -> u32 {
    1
}

fn default_tolerance() -> f64 {
    DEFAULT_MATCH_TOLERANCE
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum MatchOutcome {
    Matched { model_id: String, relative_error: f64 },
    /// No entry within tolerance; carries the closest one, if the class has any.
    NoMatch { nearest: Option<String>, relative_error: Option<f64> },
}

impl MatchOutcome {
    pub fn model_id(&self) -> Option<&str> {
        match self {
            Self::Matched { model_id, .. } => Some(model_id),
            Self::NoMatch { .. } => None,
        }
    }
}

impl Default for ModelCatalog {
    /// Horizontal-wavy plates use the ids `model_1..model_6`; the other
    /// built-in classes share the sizes as `<class>_model_N`.
    fn default() -> Self {
        let mut entries = Vec::new();
        for class in ProfileClass::BUILTIN {
            for (id, length, width) in STANDARD_SIZES {
                let model_id = match class {
                    ProfileClass::HorizontalWavy => id.to_string(),
                    _ => format!("{}_{id}", class.id()),
                };
                entries.push(CatalogEntry {
                    model_id,
                    class: class.clone(),
                    length,
                    width,
                });
            }
        }
        Self {
            schema: 1,
            entries,
            match_tolerance: DEFAULT_MATCH_TOLERANCE,
        }
    }
}

impl ModelCatalog {
    pub fn new(entries: Vec<CatalogEntry>, match_tolerance: f64) -> Result<Self, ClassifierError> {
        let c = Self {
            schema: 1,
            entries,
            match_tolerance,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<(), ClassifierError> {
        let mut ids = BTreeSet::new();
        for e in &self.entries {
            if !(e.length > 0.0 && e.width > 0.0 && e.length.is_finite() && e.width.is_finite()) {
                return Err(ClassifierError::InvalidCatalog(format!("{}: dimensions must be positive", e.model_id)));
            }
            if !ids.insert(e.model_id.as_str()) {
                return Err(ClassifierError::InvalidCatalog(format!("duplicate id {}", e.model_id)));
            }
        }
        if !(self.match_tolerance > 0.0) {
            return Err(ClassifierError::InvalidCatalog("match_tolerance must be positive".into()));
        }
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ClassifierError> {
        let c: Self = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        c.validate()?;
        Ok(c)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), ClassifierError> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    pub fn get(&self, model_id: &str) -> Option<&CatalogEntry> {
        self.entries.iter().find(|e| e.model_id == model_id)
    }

    /// Entry of `class` whose size key is `size`, e.g. `model_3`.
    pub fn by_size(&self, class: &ProfileClass, size: &str) -> Option<&CatalogEntry> {
        self.entries.iter().find(|e| &e.class == class && e.size_key() == size)
    }

    pub fn size_keys(&self) -> Vec<String> {
        let mut keys: Vec<String> = Vec::new();
        for e in &self.entries {
            if !keys.iter().any(|k| k == e.size_key()) {
                keys.push(e.size_key().to_string());
            }
        }
        keys
    }

    pub fn classes(&self) -> Vec<ProfileClass> {
        self.entries
            .iter()
            .map(|e| e.class.clone())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect()
    }

    /// Entry of `class` minimizing the max relative error over
    /// `(length, width)`; ties go to the smaller id.
    pub fn match_model(&self, class: &ProfileClass, length: f64, width: f64) -> MatchOutcome {
        let best = self
            .entries
            .iter()
            .filter(|e| &e.class == class)
            .map(|e| (e.relative_error(length, width), e))
            .min_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.model_id.cmp(&b.1.model_id)));
        match best {
            Some((err, e)) if err <= self.match_tolerance => MatchOutcome::Matched {
                model_id: e.model_id.clone(),
                relative_error: err,
            },
            Some((err, e)) => MatchOutcome::NoMatch {
                nearest: Some(e.model_id.clone()),
                relative_error: Some(err),
            },
            None => MatchOutcome::NoMatch {
                nearest: None,
                relative_error: None,
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn hw() -> ProfileClass {
        ProfileClass::HorizontalWavy
    }

    #[test]
    fn table_sizes_match() {
        let c = ModelCatalog::default();
        assert_eq!(c.match_model(&hw(), 0.80, 0.40).model_id(), Some("model_1"));
        assert_eq!(c.match_model(&hw(), 0.56, 0.38).model_id(), Some("model_5"));
        assert_eq!(c.match_model(&hw(), 0.555, 0.365).model_id(), Some("model_6"));
        assert_eq!(c.match_model(&ProfileClass::Smooth, 0.6, 0.4).model_id(), Some("smooth_model_2"));
    }

    #[test]
    fn unknown_size_is_no_match_with_nearest() {
        let c = ModelCatalog::default();
        match c.match_model(&hw(), 1.2, 0.6) {
            MatchOutcome::NoMatch { nearest, .. } => assert_eq!(nearest.as_deref(), Some("model_1")),
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            c.match_model(&ProfileClass::Other("x".into()), 0.8, 0.4),
            MatchOutcome::NoMatch { nearest: None, .. }
        ));
    }

    #[test]
    fn size_keys_strip_class_prefix() {
        let c = ModelCatalog::default();
        assert_eq!(c.size_keys(), STANDARD_SIZES.iter().map(|s| s.0.to_string()).collect::<Vec<_>>());
        assert_eq!(c.by_size(&ProfileClass::VerticalWavy, "model_4").unwrap().model_id, "vertical_wavy_model_4");
    }

    #[test]
    fn validation_rejects_duplicates() {
        let mut c = ModelCatalog::default();
        c.entries.push(c.entries[0].clone());
        assert!(c.validate().is_err());
    }

    proptest! {
        #[test]
        fn agrees_with_exhaustive_oracle(l in 0.3f64..1.0, w in 0.2f64..0.6) {
            let c = ModelCatalog::default();
            let mut best: Option<(f64, &str)> = None;
            for (id, el, ew) in STANDARD_SIZES {
                let e = ((l - el) / el).abs().max(((w - ew) / ew).abs());
                if best.is_none_or(|(b, _)| e < b) {
                    best = Some((e, id));
                }
            }
            let (err, id) = best.unwrap();
            let expected = (err <= 0.05).then_some(id);
            let outcome = c.match_model(&hw(), l, w);
            prop_assert_eq!(outcome.model_id(), expected);
        }
    }
}
