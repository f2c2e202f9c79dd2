//! Random forest and RBF-kernel SVM classifiers.
//!
//! Class labels are dense ids `0..n_classes`; every tie between classes is
//! broken in favour of the smallest id. Trained models are wrapped in a
//! [`TrainedModel`] that records the feature schema they were fitted on and
//! is stored as versioned JSON.

mod forest;
mod svm;

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use forest::{DecisionTree, MaxFeatures, RandomForest, RfParams, TreeNode};
pub use svm::{BinarySvm, SvmModel, SvmParams, SvmTrace};

/// Per-class sample weighting.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassWeights {
    #[default]
    None,
    /// `n_samples / (n_present_classes · class_count)`.
    Balanced,
    Explicit(Vec<f64>),
}

impl ClassWeights {
    /// Weight of each class id for labels `y`.
    pub fn resolve(&self, y: &[usize], n_classes: usize) -> Result<Vec<f64>> {
        match self {
            ClassWeights::None => Ok(vec![1.0; n_classes]),
            ClassWeights::Balanced => {
                let counts = class_counts(y, n_classes);
                let present = counts.iter().filter(|&&c| c > 0).count().max(1);
                Ok(counts
                    .iter()
                    .map(|&c| {
                        if c == 0 {
                            1.0
                        } else {
                            y.len() as f64 / (present * c) as f64
                        }
                    })
                    .collect())
            }
            ClassWeights::Explicit(w) => {
                if w.len() != n_classes {
                    return Err(Error::InvalidInput(format!(
                        "{} class weights for {n_classes} classes",
                        w.len()
                    )));
                }
                if w.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
                    return Err(Error::InvalidInput("class weights must be positive".into()));
                }
                Ok(w.clone())
            }
        }
    }
}

pub(crate) fn class_counts(y: &[usize], n_classes: usize) -> Vec<usize> {
    let mut counts = vec![0; n_classes];
    for &c in y {
        counts[c] += 1;
    }
    counts
}

/// Index of the largest value; ties go to the smallest index.
pub(crate) fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

pub(crate) fn check_training_data(x: &[Vec<f64>], y: &[usize], n_classes: usize) -> Result<usize> {
    if x.is_empty() {
        return Err(Error::InvalidInput("no training samples".into()));
    }
    if x.len() != y.len() {
        return Err(Error::InvalidInput(format!(
            "{} samples but {} labels",
            x.len(),
            y.len()
        )));
    }
    if let Some(&c) = y.iter().find(|&&c| c >= n_classes) {
        return Err(Error::InvalidInput(format!(
            "label {c} outside {n_classes} classes"
        )));
    }
    let dim = x[0].len();
    check_features(x, dim)?;
    Ok(dim)
}

pub(crate) fn check_features(x: &[Vec<f64>], dim: usize) -> Result<()> {
    for (i, row) in x.iter().enumerate() {
        if row.len() != dim {
            return Err(Error::InvalidInput(format!(
                "sample {i} has {} features, expected {dim}",
                row.len()
            )));
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "sample {i} has a non-finite feature"
            )));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Model {
    Rf(RandomForest),
    Svm(SvmModel),
}

impl Model {
    pub fn predict(&self, x: &[Vec<f64>]) -> Result<Vec<usize>> {
        match self {
            Model::Rf(m) => m.predict(x),
            Model::Svm(m) => m.predict(x),
        }
    }
}

/// Hyperparameters of either learner.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ClassifierParams {
    Rf(RfParams),
    Svm(SvmParams),
}

impl ClassifierParams {
    pub fn fit(&self, x: &[Vec<f64>], y: &[usize], n_classes: usize) -> Result<Model> {
        Ok(match self {
            ClassifierParams::Rf(p) => Model::Rf(RandomForest::fit(x, y, n_classes, p)?),
            ClassifierParams::Svm(p) => Model::Svm(SvmModel::fit(x, y, n_classes, p)?),
        })
    }
}

pub const MODEL_FORMAT_VERSION: u32 = 1;

/// A fitted model plus the feature schema and class names it was trained
/// with.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub format_version: u32,
    pub schema: String,
    pub classes: Vec<String>,
    pub model: Model,
}

impl TrainedModel {
    pub fn train(
        params: &ClassifierParams,
        schema: &str,
        classes: &[String],
        x: &[Vec<f64>],
        y: &[usize],
    ) -> Result<Self> {
        Ok(TrainedModel {
            format_version: MODEL_FORMAT_VERSION,
            schema: schema.to_string(),
            classes: classes.to_vec(),
            model: params.fit(x, y, classes.len())?,
        })
    }

    /// Predicts class ids; fails when `schema` differs from the training
    /// schema.
    pub fn predict(&self, schema: &str, x: &[Vec<f64>]) -> Result<Vec<usize>> {
        if schema != self.schema {
            return Err(Error::SchemaMismatch {
                expected: self.schema.clone(),
                found: schema.to_string(),
            });
        }
        self.model.predict(x)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        serde_json::to_writer(std::io::BufWriter::new(file), self)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let model: TrainedModel = serde_json::from_reader(std::io::BufReader::new(file))?;
        if model.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::Format(format!(
                "{}: model format version {} (expected {MODEL_FORMAT_VERSION})",
                path.display(),
                model.format_version
            )));
        }
        Ok(model)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn balanced_weights() {
        let y = [0, 0, 0, 1, 2, 2];
        let w = ClassWeights::Balanced.resolve(&y, 4).unwrap();
        assert_eq!(w[..3], [6.0 / 9.0, 2.0, 1.0]);
        assert!(ClassWeights::Explicit(vec![1.0, 2.0])
            .resolve(&y, 3)
            .is_err());
        assert!(ClassWeights::Explicit(vec![1.0, 0.0, 1.0])
            .resolve(&y, 3)
            .is_err());
    }

    #[test]
    fn argmax_ties_go_low() {
        assert_eq!(argmax(&[1.0, 3.0, 3.0]), 1);
        assert_eq!(argmax(&[2.0, 2.0]), 0);
    }

    #[test]
    fn weights_json() {
        let w: ClassWeights =
            serde_json::from_str("{\"explicit\":[0.25,0.25,0.166,0.166,0.166]}").unwrap();
        assert_eq!(
            w,
            ClassWeights::Explicit(vec![0.25, 0.25, 0.166, 0.166, 0.166])
        );
        assert_eq!(
            serde_json::to_string(&ClassWeights::Balanced).unwrap(),
            "\"balanced\""
        );
    }
}
