//! Hyperparameter search spaces.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};

/// One sampled configuration: dimension name to value.
pub type Config = BTreeMap<String, Value>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DimensionKind {
    /// Finite ordered set.
    Ordinal,
    /// Finite unordered set.
    Categorical,
    /// Any non-empty subset of the listed items, kept in listed order.
    Subset,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dimension {
    pub name: String,
    pub kind: DimensionKind,
    pub values: Vec<Value>,
    pub default: Value,
    /// Active only when the named dimension takes the given value.
    pub condition: Option<(String, Value)>,
}

impl Dimension {
    pub fn ordinal(name: &str, values: Vec<Value>, default: Value) -> Self {
        Self::new(name, DimensionKind::Ordinal, values, default)
    }

    pub fn categorical(name: &str, values: Vec<Value>, default: Value) -> Self {
        Self::new(name, DimensionKind::Categorical, values, default)
    }

    pub fn subset(name: &str, items: Vec<Value>, default: Vec<Value>) -> Self {
        Self::new(name, DimensionKind::Subset, items, Value::Array(default))
    }

    fn new(name: &str, kind: DimensionKind, values: Vec<Value>, default: Value) -> Self {
        Dimension {
            name: name.to_string(),
            kind,
            values,
            default,
            condition: None,
        }
    }

    pub fn when(mut self, dimension: &str, value: Value) -> Self {
        self.condition = Some((dimension.to_string(), value));
        self
    }

    fn sample<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> Value {
        match self.kind {
            DimensionKind::Ordinal | DimensionKind::Categorical => {
                self.values[rng.random_range(0..self.values.len())].clone()
            }
            DimensionKind::Subset => loop {
                let picked: Vec<Value> = self
                    .values
                    .iter()
                    .filter(|_| rng.random_bool(0.5))
                    .cloned()
                    .collect();
                if !picked.is_empty() {
                    break Value::Array(picked);
                }
            },
        }
    }

    pub fn contains(&self, v: &Value) -> bool {
        match self.kind {
            DimensionKind::Ordinal | DimensionKind::Categorical => self.values.contains(v),
            DimensionKind::Subset => {
                let Value::Array(items) = v else { return false };
                // non-empty, drawn from the items, in listed order, no repeats
                let mut pos = 0;
                !items.is_empty()
                    && items.iter().all(|item| {
                        match self.values[pos..].iter().position(|x| x == item) {
                            Some(p) => {
                                pos += p + 1;
                                true
                            }
                            None => false,
                        }
                    })
            }
        }
    }

    /// Number of distinct values.
    pub fn cardinality(&self) -> u128 {
        match self.kind {
            DimensionKind::Subset => (1u128 << self.values.len()) - 1,
            _ => self.values.len() as u128,
        }
    }
}

/// Ordered list of dimensions; conditions may only refer to earlier ones.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchSpace {
    pub dimensions: Vec<Dimension>,
}

impl SearchSpace {
    pub fn new(dimensions: Vec<Dimension>) -> Result<Self> {
        for (i, d) in dimensions.iter().enumerate() {
            if d.values.is_empty() {
                return Err(Error::Config(format!("dimension {} has no values", d.name)));
            }
            if !d.contains(&d.default) {
                return Err(Error::Config(format!(
                    "default of {} is outside its values",
                    d.name
                )));
            }
            if dimensions[..i].iter().any(|e| e.name == d.name) {
                return Err(Error::Config(format!("duplicate dimension {}", d.name)));
            }
            if let Some((dep, _)) = &d.condition {
                if !dimensions[..i].iter().any(|e| &e.name == dep) {
                    return Err(Error::Config(format!(
                        "{} depends on unknown or later {dep}",
                        d.name
                    )));
                }
            }
        }
        Ok(SearchSpace { dimensions })
    }

    fn active(d: &Dimension, config: &Config) -> bool {
        d.condition
            .as_ref()
            .is_none_or(|(dep, v)| config.get(dep) == Some(v))
    }

    /// Draws every active dimension uniformly, in declaration order.
    pub fn sample<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> Config {
        let mut config = Config::new();
        for d in &self.dimensions {
            if Self::active(d, &config) {
                let v = d.sample(rng);
                config.insert(d.name.clone(), v);
            }
        }
        config
    }

    /// Defaults of every active dimension.
    pub fn default_config(&self) -> Config {
        let mut config = Config::new();
        for d in &self.dimensions {
            if Self::active(d, &config) {
                config.insert(d.name.clone(), d.default.clone());
            }
        }
        config
    }

    /// True when `config` assigns exactly the active dimensions, each a
    /// declared value.
    pub fn contains(&self, config: &Config) -> bool {
        let mut seen = 0;
        for d in &self.dimensions {
            if Self::active(d, config) {
                match config.get(&d.name) {
                    Some(v) if d.contains(v) => seen += 1,
                    _ => return false,
                }
            }
        }
        seen == config.len()
    }

    pub fn validate_config(&self, config: &Config) -> Result<()> {
        if self.contains(config) {
            Ok(())
        } else {
            Err(Error::Config(format!(
                "configuration {} is outside the search space",
                serde_json::to_string(config).unwrap_or_default()
            )))
        }
    }

    /// Which extractor and classifier families the space offers.
    pub fn families(&self) -> (Vec<Value>, Vec<Value>) {
        let get = |name: &str| {
            self.dimensions
                .iter()
                .find(|d| d.name == name)
                .map(|d| d.values.clone())
                .unwrap_or_default()
        };
        (get("extractor"), get("classifier"))
    }

    /// Joint feature-extractor and classifier space: one extractor (GLCM or
    /// LBP) and one classifier (RF or SVM) with their tunable parameters.
    /// `classifier` restricts the space to `"rf"` or `"svm"`. The LBP radius
    /// excludes 0, which has no neighbourhood.
    pub fn texture_classifiers(classifier: Option<&str>) -> Result<Self> {
        let weights = vec![
            json!("none"),
            json!("balanced"),
            json!([0.35, 0.35, 0.1, 0.1, 0.1]),
            json!([0.3, 0.3, 0.133, 0.133, 0.133]),
            json!([0.25, 0.25, 0.166, 0.166, 0.166]),
        ];
        let classifiers: Vec<Value> = match classifier {
            None => vec![json!("rf"), json!("svm")],
            Some(c @ ("rf" | "svm")) => vec![json!(c)],
            Some(other) => {
                return Err(Error::Config(format!(
                    "unknown classifier family `{other}`"
                )))
            }
        };
        let c_values: Vec<Value> = std::iter::once(json!(1.0))
            .chain((-5..=15).step_by(2).map(|x| json!(2f64.powi(x))))
            .collect();
        let gamma_values: Vec<Value> = std::iter::once(json!(0.0))
            .chain((-15..=3).step_by(2).map(|x| json!(2f64.powi(x))))
            .collect();
        let default_classifier = classifiers[0].clone();
        SearchSpace::new(vec![
            Dimension::categorical(
                "extractor",
                vec![json!("glcm"), json!("lbp")],
                json!("glcm"),
            ),
            Dimension::subset(
                "glcm.distances",
                vec![json!(1), json!(2), json!(4), json!(5), json!(8)],
                vec![json!(5)],
            )
            .when("extractor", json!("glcm")),
            Dimension::subset(
                "glcm.angles",
                vec![json!(0), json!(45), json!(90), json!(135)],
                vec![json!(0)],
            )
            .when("extractor", json!("glcm")),
            Dimension::ordinal(
                "lbp.points",
                vec![json!(4), json!(8), json!(16), json!(24)],
                json!(24),
            )
            .when("extractor", json!("lbp")),
            Dimension::ordinal("lbp.radius", vec![json!(1), json!(2), json!(3)], json!(3))
                .when("extractor", json!("lbp")),
            Dimension::categorical("classifier", classifiers, default_classifier),
            Dimension::ordinal(
                "rf.n_trees",
                vec![json!(10), json!(100), json!(1000)],
                json!(10),
            )
            .when("classifier", json!("rf")),
            Dimension::ordinal(
                "rf.max_features",
                vec![json!("sqrt"), json!(0.25), json!(0.5), json!(0.75)],
                json!("sqrt"),
            )
            .when("classifier", json!("rf")),
            Dimension::ordinal(
                "rf.max_depth",
                vec![
                    Value::Null,
                    json!(2),
                    json!(4),
                    json!(6),
                    json!(8),
                    json!(10),
                    json!(20),
                ],
                Value::Null,
            )
            .when("classifier", json!("rf")),
            Dimension::categorical("rf.class_weights", weights.clone(), json!("none"))
                .when("classifier", json!("rf")),
            Dimension::ordinal("svm.c", c_values, json!(1.0)).when("classifier", json!("svm")),
            Dimension::ordinal("svm.gamma", gamma_values, json!(0.0))
                .when("classifier", json!("svm")),
            Dimension::categorical("svm.class_weights", weights, json!("none"))
                .when("classifier", json!("svm")),
        ])
    }
}
