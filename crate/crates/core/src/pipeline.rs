//! End-to-end glue: feature extraction, training, evaluation and search
//! over a generated dataset.

use std::collections::HashMap;
use std::path::Path;
use std::sync::{Arc, Mutex};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::classifiers::{
    ClassWeights, ClassifierParams, MaxFeatures, RfParams, SvmParams, TrainedModel,
};
use crate::dataset::{read_manifest, read_pgm, ClassLabel, Split};
use crate::error::{Error, Result};
use crate::features::{FeatureExtractor, FeatureTable, GlcmParams, LbpParams, GLCM_ANGLES};
use crate::image::Image8;
use crate::rng;
use crate::search::{evaluate, Config, EvaluationReport};

/// Classes collapsed into "no diffraction" for the binary accuracy.
pub const NEGATIVE_CLASSES: [ClassLabel; 2] = [ClassLabel::Blank, ClassLabel::NoCrystal];

/// A feature extractor and a classifier configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineSpec {
    pub extractor: FeatureExtractor,
    pub classifier: ClassifierParams,
}

impl PipelineSpec {
    /// Random forest on GLCM features: distances 1, 2, 5, 8; angles 45°
    /// and 135°; depth 20; √features candidates; 100 trees; no class
    /// weights.
    pub fn rf_glcm_best(seed: u64) -> Self {
        PipelineSpec {
            extractor: FeatureExtractor::Glcm(GlcmParams::new(&[1, 2, 5, 8], &[45, 135])),
            classifier: ClassifierParams::Rf(RfParams {
                n_trees: 100,
                max_features: MaxFeatures::Sqrt,
                max_depth: Some(20),
                class_weights: ClassWeights::None,
                seed,
                ..Default::default()
            }),
        }
    }

    /// RBF SVM on GLCM features: distances 1, 5, 8; angles 0°, 90°, 135°;
    /// C = 32; γ = 0.5; weights favouring the two negative classes.
    pub fn svm_glcm_best() -> Self {
        PipelineSpec {
            extractor: FeatureExtractor::Glcm(GlcmParams::new(&[1, 5, 8], &[0, 90, 135])),
            classifier: ClassifierParams::Svm(SvmParams {
                c: 32.0,
                gamma: 0.5,
                class_weights: ClassWeights::Explicit(vec![0.25, 0.25, 0.166, 0.166, 0.166]),
                ..Default::default()
            }),
        }
    }

    /// Named preset: `rf-glcm` or `svm-glcm`.
    pub fn preset(name: &str, seed: u64) -> Result<Self> {
        match name {
            "rf-glcm" => Ok(Self::rf_glcm_best(seed)),
            "svm-glcm" => Ok(Self::svm_glcm_best()),
            other => Err(Error::Config(format!("unknown pipeline preset `{other}`"))),
        }
    }

    /// Builds a pipeline from a configuration sampled from
    /// [`SearchSpace::texture_classifiers`](crate::search::SearchSpace::texture_classifiers).
    pub fn from_search_config(config: &Config, seed: u64) -> Result<Self> {
        let bad = |key: &str| Error::Config(format!("search configuration has no valid `{key}`"));
        let get = |key: &str| config.get(key).ok_or_else(|| bad(key));
        let uints = |key: &str| -> Result<Vec<u32>> {
            get(key)?
                .as_array()
                .ok_or_else(|| bad(key))?
                .iter()
                .map(|v| v.as_u64().map(|u| u as u32).ok_or_else(|| bad(key)))
                .collect()
        };
        let num = |key: &str| get(key)?.as_f64().ok_or_else(|| bad(key));
        let weights = |key: &str| -> Result<ClassWeights> {
            match get(key)? {
                Value::String(s) if s == "none" => Ok(ClassWeights::None),
                Value::String(s) if s == "balanced" => Ok(ClassWeights::Balanced),
                Value::Array(a) => a
                    .iter()
                    .map(|v| v.as_f64().ok_or_else(|| bad(key)))
                    .collect::<Result<Vec<_>>>()
                    .map(ClassWeights::Explicit),
                _ => Err(bad(key)),
            }
        };
        let extractor = match get("extractor")?.as_str() {
            Some("glcm") => FeatureExtractor::Glcm(GlcmParams::new(
                &uints("glcm.distances")?,
                &uints("glcm.angles")?,
            )),
            Some("lbp") => FeatureExtractor::Lbp(LbpParams::new(
                num("lbp.points")? as usize,
                num("lbp.radius")?,
            )),
            _ => return Err(bad("extractor")),
        };
        let classifier = match get("classifier")?.as_str() {
            Some("rf") => ClassifierParams::Rf(RfParams {
                n_trees: num("rf.n_trees")? as usize,
                max_features: match get("rf.max_features")? {
                    Value::String(s) if s == "sqrt" => MaxFeatures::Sqrt,
                    v => MaxFeatures::Fraction(v.as_f64().ok_or_else(|| bad("rf.max_features"))?),
                },
                max_depth: match get("rf.max_depth")? {
                    Value::Null => None,
                    v => Some(v.as_u64().ok_or_else(|| bad("rf.max_depth"))? as usize),
                },
                class_weights: weights("rf.class_weights")?,
                seed,
                ..Default::default()
            }),
            Some("svm") => ClassifierParams::Svm(SvmParams {
                c: num("svm.c")?,
                gamma: num("svm.gamma")?,
                class_weights: weights("svm.class_weights")?,
                max_iterations: 200_000,
                ..Default::default()
            }),
            _ => return Err(bad("classifier")),
        };
        Ok(PipelineSpec {
            extractor,
            classifier,
        })
    }
}

/// Trains on the rows of `split`.
pub fn train_model(
    table: &FeatureTable,
    classifier: &ClassifierParams,
    split: Split,
) -> Result<TrainedModel> {
    let (x, y) = table.split(split);
    TrainedModel::train(classifier, &table.schema, &ClassLabel::names(), &x, &y)
}

/// Predicts the rows of `split` and reports the metrics.
pub fn evaluate_model(
    model: &TrainedModel,
    table: &FeatureTable,
    split: Split,
) -> Result<EvaluationReport> {
    let (x, y) = table.split(split);
    let pred = model.predict(&table.schema, &x)?;
    let negatives: Vec<usize> = NEGATIVE_CLASSES.iter().map(|c| c.index()).collect();
    evaluate(&y, &pred, &model.classes, &negatives)
}

/// Labelled images of one split, held in memory.
pub struct LabelledImages {
    pub images: Vec<Image8>,
    pub labels: Vec<usize>,
}

/// Loads the images of `split` listed in a manifest.
pub fn load_split(manifest: impl AsRef<Path>, split: Split) -> Result<LabelledImages> {
    let manifest = manifest.as_ref();
    let root = manifest.parent().unwrap_or(Path::new("."));
    let records: Vec<_> = read_manifest(manifest)?
        .into_iter()
        .filter(|r| r.split == split)
        .collect();
    let images = records
        .par_iter()
        .map(|r| read_pgm(root.join(&r.path)))
        .collect::<Result<Vec<_>>>()?;
    Ok(LabelledImages {
        images,
        labels: records.iter().map(|r| r.label.index()).collect(),
    })
}

type Matrix = Arc<Vec<Vec<f64>>>;

/// Search objective over in-memory training and validation images.
///
/// Features are cached per extractor. GLCM configurations share one
/// extraction over every distance and angle of the search space and select
/// their columns from it, which gives the same values as a direct
/// extraction.
pub struct SearchObjective {
    train: LabelledImages,
    val: LabelledImages,
    /// Training rows in a fixed pseudo-random order; budget `b` trains on
    /// the first `⌈b·n⌉`.
    order: Vec<usize>,
    seed: u64,
    cache: Mutex<HashMap<String, (Matrix, Matrix)>>,
}

const GLCM_DISTANCES: [u32; 5] = [1, 2, 4, 5, 8];

impl SearchObjective {
    pub fn new(train: LabelledImages, val: LabelledImages, seed: u64) -> Result<Self> {
        if train.images.is_empty() || val.images.is_empty() {
            return Err(Error::InvalidInput(
                "search needs training and validation images".into(),
            ));
        }
        let mut order: Vec<usize> = (0..train.images.len()).collect();
        order.sort_by_key(|&i| rng::derive_seed(seed, &[rng::tag::SPLIT, i as u64]));
        Ok(SearchObjective {
            train,
            val,
            order,
            seed,
            cache: Mutex::new(HashMap::new()),
        })
    }

    fn features(&self, extractor: &FeatureExtractor) -> Result<(Matrix, Matrix)> {
        let (key, full) = match extractor {
            FeatureExtractor::Glcm(p) => {
                let full = GlcmParams {
                    distances: GLCM_DISTANCES.to_vec(),
                    angles: GLCM_ANGLES.to_vec(),
                    ..p.clone()
                };
                let ex = FeatureExtractor::Glcm(full);
                (ex.schema_id(), ex)
            }
            other => (other.schema_id(), other.clone()),
        };
        let cached = self.cache.lock().unwrap().get(&key).cloned();
        let (train, val) = match cached {
            Some(m) => m,
            None => {
                let extract = |imgs: &[Image8]| -> Result<Matrix> {
                    Ok(Arc::new(
                        imgs.par_iter()
                            .map(|im| full.extract(im).map(|v| v.values))
                            .collect::<Result<Vec<_>>>()?,
                    ))
                };
                let pair = (extract(&self.train.images)?, extract(&self.val.images)?);
                self.cache.lock().unwrap().insert(key, pair.clone());
                pair
            }
        };
        let FeatureExtractor::Glcm(p) = extractor else {
            return Ok((train, val));
        };
        let mut columns = Vec::new();
        for d in &p.distances {
            for a in &p.angles {
                let (Some(di), Some(ai)) = (
                    GLCM_DISTANCES.iter().position(|x| x == d),
                    GLCM_ANGLES.iter().position(|x| x == a),
                ) else {
                    return Err(Error::Config(format!(
                        "GLCM pair d={d} a={a} is outside the search grid"
                    )));
                };
                let base = 6 * (di * GLCM_ANGLES.len() + ai);
                columns.extend(base..base + 6);
            }
        }
        let select = |m: &Matrix| -> Matrix {
            Arc::new(
                m.iter()
                    .map(|r| columns.iter().map(|&c| r[c]).collect())
                    .collect(),
            )
        };
        Ok((select(&train), select(&val)))
    }

    /// Validation accuracy of `spec` trained on the budget fraction of the
    /// training images.
    pub fn score(&self, spec: &PipelineSpec, budget: f64) -> Result<f64> {
        if !(budget > 0.0 && budget <= 1.0) {
            return Err(Error::InvalidInput(format!(
                "budget {budget} outside (0, 1]"
            )));
        }
        let (train, val) = self.features(&spec.extractor)?;
        let n = ((budget * self.order.len() as f64).ceil() as usize).clamp(1, self.order.len());
        let x: Vec<Vec<f64>> = self.order[..n].iter().map(|&i| train[i].clone()).collect();
        let y: Vec<usize> = self.order[..n]
            .iter()
            .map(|&i| self.train.labels[i])
            .collect();
        let model = spec.classifier.fit(&x, &y, ClassLabel::ALL.len())?;
        let pred = model.predict(&val)?;
        let correct = pred
            .iter()
            .zip(&self.val.labels)
            .filter(|(p, t)| p == t)
            .count();
        Ok(correct as f64 / pred.len() as f64)
    }

    /// Objective over search-space configurations.
    pub fn objective(&self) -> impl Fn(&Config, f64) -> Result<f64> + Sync + '_ {
        move |config, budget| {
            self.score(
                &PipelineSpec::from_search_config(config, self.seed)?,
                budget,
            )
        }
    }
}
