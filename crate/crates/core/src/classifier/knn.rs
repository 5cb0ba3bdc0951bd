use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{ClassifierError, ProfileClass};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingSample {
    pub features: [f64; 2],
    pub label: ProfileClass,
}

impl TrainingSample {
    pub fn new(features: [f64; 2], label: ProfileClass) -> Self {
        Self { features, label }
    }

    fn validate(&self) -> Result<(), ClassifierError> {
        if self.features.iter().all(|v| v.is_finite() && *v >= 0.0) {
            Ok(())
        } else {
            Err(ClassifierError::InvalidFeatures(self.features))
        }
    }
}

/// Per-feature mean and population standard deviation of the training set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Standardization {
    pub mean: [f64; 2],
    pub std: [f64; 2],
}

impl Standardization {
    fn identity() -> Self {
        Self {
            mean: [0.0; 2],
            std: [1.0; 2],
        }
    }

    fn of(samples: &[TrainingSample]) -> Self {
        if samples.is_empty() {
            return Self::identity();
        }
        let n = samples.len() as f64;
        let mut s = Self::identity();
        for f in 0..2 {
            let mean = samples.iter().map(|x| x.features[f]).sum::<f64>() / n;
            let var = samples.iter().map(|x| (x.features[f] - mean).powi(2)).sum::<f64>() / n;
            s.mean[f] = mean;
            s.std[f] = if var > 0.0 { var.sqrt() } else { 1.0 };
        }
        s
    }

    pub fn apply(&self, x: &[f64; 2]) -> [f64; 2] {
        [(x[0] - self.mean[0]) / self.std[0], (x[1] - self.mean[1]) / self.std[1]]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Neighbor {
    pub label: ProfileClass,
    pub features: [f64; 2],
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub class: ProfileClass,
    /// Fraction of the `k` neighbors voting for `class`.
    pub confidence: f64,
    pub neighbors: Vec<Neighbor>,
}

impl Classification {
    pub fn is_unanimous(&self) -> bool {
        self.confidence >= 1.0
    }
}

/// k-nearest-neighbor vote in z-scored feature space.
#[derive(Debug, Clone, PartialEq)]
pub struct KnnClassifier {
    samples: Vec<TrainingSample>,
    k: usize,
    standardization: Standardization,
}

impl KnnClassifier {
    /// Empty classifier; `k` must be odd.
    pub fn new(k: usize) -> Result<Self, ClassifierError> {
        if k == 0 || k.is_multiple_of(2) {
            return Err(ClassifierError::InvalidK(k));
        }
        Ok(Self {
            samples: Vec::new(),
            k,
            standardization: Standardization::identity(),
        })
    }

    pub fn from_samples(samples: Vec<TrainingSample>, k: usize) -> Result<Self, ClassifierError> {
        let mut clf = Self::new(k)?;
        for s in &samples {
            s.validate()?;
        }
        clf.standardization = Standardization::of(&samples);
        clf.samples = samples;
        Ok(clf)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn samples(&self) -> &[TrainingSample] {
        &self.samples
    }

    pub fn standardization(&self) -> &Standardization {
        &self.standardization
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// New classifier with `sample` appended and statistics recomputed.
    pub fn add_sample(&self, sample: TrainingSample) -> Result<Self, ClassifierError> {
        sample.validate()?;
        let mut samples = self.samples.clone();
        samples.push(sample);
        Self::from_samples(samples, self.k)
    }

    pub fn classify(&self, features: &[f64; 2]) -> Result<Classification, ClassifierError> {
        if self.samples.len() < self.k {
            return Err(ClassifierError::Untrained {
                samples: self.samples.len(),
                k: self.k,
            });
        }
        Ok(vote(&self.standardization, self.samples.iter(), features, self.k))
    }

    /// Leave-one-out accuracy. `k` is clamped to the number of remaining
    /// samples; a warning is produced when `k` exceeds the smallest class.
    pub fn leave_one_out(&self) -> Result<LeaveOneOut, ClassifierError> {
        let n = self.samples.len();
        if n < 2 {
            return Err(ClassifierError::TooFewSamples { got: n, need: 2 });
        }
        let k = self.k.min(n - 1);
        let mut per_class: BTreeMap<&ProfileClass, usize> = BTreeMap::new();
        for s in &self.samples {
            *per_class.entry(&s.label).or_default() += 1;
        }
        let smallest = per_class.values().copied().min().unwrap_or(0);
        let mut warnings = Vec::new();
        if self.k > smallest.saturating_sub(1) {
            warnings.push(format!(
                "k = {} exceeds the {} other samples of the smallest class; leave-one-out votes can be outnumbered",
                self.k,
                smallest.saturating_sub(1)
            ));
        }
        if k < self.k {
            warnings.push(format!("k clamped from {} to {k}", self.k));
        }
        let mut misclassified = Vec::new();
        for held in 0..n {
            let rest: Vec<TrainingSample> = self
                .samples
                .iter()
                .enumerate()
                .filter(|&(i, _)| i != held)
                .map(|(_, s)| s.clone())
                .collect();
            let st = Standardization::of(&rest);
            let c = vote(&st, rest.iter(), &self.samples[held].features, k);
            if c.class != self.samples[held].label {
                misclassified.push(held);
            }
        }
        Ok(LeaveOneOut {
            accuracy: (n - misclassified.len()) as f64 / n as f64,
            total: n,
            effective_k: k,
            misclassified,
            warnings,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeaveOneOut {
    pub accuracy: f64,
    pub total: usize,
    pub effective_k: usize,
    pub misclassified: Vec<usize>,
    pub warnings: Vec<String>,
}

fn vote<'a>(
    st: &Standardization,
    samples: impl Iterator<Item = &'a TrainingSample>,
    features: &[f64; 2],
    k: usize,
) -> Classification {
    let q = st.apply(features);
    let mut neighbors: Vec<Neighbor> = samples
        .map(|s| {
            let z = st.apply(&s.features);
            Neighbor {
                label: s.label.clone(),
                features: s.features,
                distance: ((z[0] - q[0]).powi(2) + (z[1] - q[1]).powi(2)).sqrt(),
            }
        })
        .collect();
    // Total order, so the result does not depend on sample order.
    neighbors.sort_by(|a, b| {
        a.distance
            .total_cmp(&b.distance)
            .then_with(|| a.label.cmp(&b.label))
            .then_with(|| a.features[0].total_cmp(&b.features[0]))
            .then_with(|| a.features[1].total_cmp(&b.features[1]))
    });
    neighbors.truncate(k);
    let mut tally: BTreeMap<&ProfileClass, (usize, f64)> = BTreeMap::new();
    for n in &neighbors {
        let e = tally.entry(&n.label).or_default();
        e.0 += 1;
        e.1 += n.distance;
    }
    let (class, (votes, _)) = tally
        .iter()
        .min_by(|(ca, (va, da)), (cb, (vb, db))| vb.cmp(va).then(da.total_cmp(db)).then(ca.cmp(cb)))
        .map(|(c, v)| ((*c).clone(), *v))
        .expect("k >= 1 neighbors");
    Classification {
        class,
        confidence: votes as f64 / neighbors.len() as f64,
        neighbors,
    }
}
