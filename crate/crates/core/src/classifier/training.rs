//! Training-set file.
//!
//! ```json
//! {"schema": 1, "k": 3,
//!  "standardization": {"mean": [h, v], "std": [h, v]},
//!  "samples": [{"features": [h, v], "label": "smooth"}, ...]}
//! ```
//!
//! A bare list of samples is also accepted.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{ClassifierError, KnnClassifier, ProfileClass, Standardization, TrainingSample};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingSet {
    pub schema: u32,
    pub k: usize,
    pub standardization: Standardization,
    pub samples: Vec<TrainingSample>,
}

impl TrainingSet {
    pub fn from_classifier(clf: &KnnClassifier) -> Self {
        Self {
            schema: 1,
            k: clf.k(),
            standardization: *clf.standardization(),
            samples: clf.samples().to_vec(),
        }
    }

    pub fn classifier(&self) -> Result<KnnClassifier, ClassifierError> {
        KnnClassifier::from_samples(self.samples.clone(), self.k)
    }

    /// Parses a training file; `default_k` applies to bare sample lists.
    pub fn from_json(text: &str, default_k: usize) -> Result<Self, ClassifierError> {
        let value: Value = serde_json::from_str(text)?;
        let (records, k) = match &value {
            Value::Array(items) => (items.as_slice(), default_k),
            Value::Object(map) => {
                let items = map
                    .get("samples")
                    .and_then(Value::as_array)
                    .ok_or_else(|| ClassifierError::BadRecord {
                        index: 0,
                        reason: "missing `samples` list".into(),
                    })?;
                let k = map.get("k").and_then(Value::as_u64).map_or(default_k, |k| k as usize);
                (items.as_slice(), k)
            }
            _ => {
                return Err(ClassifierError::BadRecord {
                    index: 0,
                    reason: "expected a list or an object".into(),
                })
            }
        };
        let samples = records
            .iter()
            .enumerate()
            .map(|(index, r)| parse_record(r).map_err(|reason| ClassifierError::BadRecord { index, reason }))
            .collect::<Result<Vec<_>, _>>()?;
        let clf = KnnClassifier::from_samples(samples, k)?;
        Ok(Self::from_classifier(&clf))
    }

    pub fn load(path: impl AsRef<Path>, default_k: usize) -> Result<Self, ClassifierError> {
        Self::from_json(&std::fs::read_to_string(path)?, default_k)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), ClassifierError> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }
}

fn parse_record(r: &Value) -> Result<TrainingSample, String> {
    let label = r
        .get("label")
        .and_then(Value::as_str)
        .ok_or("missing string `label`")?
        .parse::<ProfileClass>()
        .map_err(|e| e.to_string())?;
    let features: [f64; 2] = r
        .get("features")
        .and_then(Value::as_array)
        .filter(|a| a.len() == 2)
        .and_then(|a| Some([a[0].as_f64()?, a[1].as_f64()?]))
        .ok_or("`features` must be a list of two numbers")?;
    if features.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(format!("features must be finite and non-negative, got {features:?}"));
    }
    Ok(TrainingSample::new(features, label))
}
