//! CART trees with Gini splits and bootstrap-aggregated forests.

use rand::seq::index::sample;
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{argmax, check_features, check_training_data, class_counts, ClassWeights};
use crate::error::{Error, Result};
use crate::rng;

/// Candidate features examined at each split.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaxFeatures {
    #[default]
    Sqrt,
    /// Fraction of all features, at least one.
    Fraction(f64),
    All,
}

impl MaxFeatures {
    pub fn resolve(self, n_features: usize) -> usize {
        let k = match self {
            MaxFeatures::Sqrt => (n_features as f64).sqrt() as usize,
            MaxFeatures::Fraction(f) => (f * n_features as f64) as usize,
            MaxFeatures::All => n_features,
        };
        k.clamp(1, n_features.max(1))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RfParams {
    pub n_trees: usize,
    pub max_features: MaxFeatures,
    /// `None` grows trees until leaves are pure.
    pub max_depth: Option<usize>,
    pub class_weights: ClassWeights,
    pub bootstrap: bool,
    pub min_samples_split: usize,
    pub seed: u64,
}

impl Default for RfParams {
    fn default() -> Self {
        RfParams {
            n_trees: 10,
            max_features: MaxFeatures::Sqrt,
            max_depth: None,
            class_weights: ClassWeights::None,
            bootstrap: true,
            min_samples_split: 2,
            seed: 0,
        }
    }
}

impl RfParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_trees == 0 {
            return Err(Error::InvalidInput("forest needs at least one tree".into()));
        }
        if let MaxFeatures::Fraction(f) = self.max_features {
            if !(f > 0.0 && f <= 1.0) {
                return Err(Error::InvalidInput(format!(
                    "max_features fraction {f} outside (0, 1]"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TreeNode {
    Leaf {
        class: usize,
    },
    /// Samples with `x[feature] <= threshold` go left.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub nodes: Vec<TreeNode>,
}

impl DecisionTree {
    pub fn predict_one(&self, x: &[f64]) -> usize {
        let mut node = 0;
        loop {
            match self.nodes[node] {
                TreeNode::Leaf { class } => return class,
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => node = if x[feature] <= threshold { left } else { right },
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn go(t: &DecisionTree, n: usize) -> usize {
            match t.nodes[n] {
                TreeNode::Leaf { .. } => 0,
                TreeNode::Split { left, right, .. } => 1 + go(t, left).max(go(t, right)),
            }
        }
        go(self, 0)
    }
}

struct Builder<'a> {
    x: &'a [Vec<f64>],
    y: &'a [usize],
    /// Sample weight (class weight × bootstrap multiplicity).
    w: &'a [f64],
    n_classes: usize,
    n_candidates: usize,
    max_depth: usize,
    min_samples_split: usize,
    rng: rng::Rng,
    nodes: Vec<TreeNode>,
}

fn gini_sum(counts: &[f64], total: f64) -> f64 {
    if total <= 0.0 {
        return 0.0;
    }
    total - counts.iter().map(|c| c * c).sum::<f64>() / total
}

impl Builder<'_> {
    fn class_weights(&self, idx: &[usize]) -> Vec<f64> {
        let mut counts = vec![0.0; self.n_classes];
        for &i in idx {
            counts[self.y[i]] += self.w[i];
        }
        counts
    }

    fn build(&mut self, idx: &mut [usize], depth: usize) -> usize {
        let counts = self.class_weights(idx);
        let node = self.nodes.len();
        self.nodes.push(TreeNode::Leaf {
            class: argmax(&counts),
        });
        let pure = counts.iter().filter(|&&c| c > 0.0).count() <= 1;
        if pure || depth >= self.max_depth || idx.len() < self.min_samples_split {
            return node;
        }
        let Some((feature, threshold)) = self.best_split(idx, &counts) else {
            return node;
        };
        let mut split = 0;
        for k in 0..idx.len() {
            if self.x[idx[k]][feature] <= threshold {
                idx.swap(k, split);
                split += 1;
            }
        }
        let (l, r) = idx.split_at_mut(split);
        let left = self.build(l, depth + 1);
        let right = self.build(r, depth + 1);
        self.nodes[node] = TreeNode::Split {
            feature,
            threshold,
            left,
            right,
        };
        node
    }

    /// Lowest weighted Gini over a random subset of features; `None` when
    /// no threshold reduces impurity.
    fn best_split(&mut self, idx: &[usize], counts: &[f64]) -> Option<(usize, f64)> {
        let n_features = self.x[0].len();
        let total: f64 = counts.iter().sum();
        let parent = gini_sum(counts, total);
        let mut best: Option<(f64, usize, f64)> = None;
        let mut order: Vec<usize> = idx.to_vec();
        let mut left = vec![0.0; self.n_classes];
        let mut right = vec![0.0; self.n_classes];
        for feature in sample(&mut self.rng, n_features, self.n_candidates) {
            order.sort_by(|&a, &b| {
                self.x[a][feature]
                    .total_cmp(&self.x[b][feature])
                    .then(a.cmp(&b))
            });
            left.iter_mut().for_each(|v| *v = 0.0);
            right.copy_from_slice(counts);
            let mut w_left = 0.0;
            for k in 0..order.len() - 1 {
                let i = order[k];
                left[self.y[i]] += self.w[i];
                right[self.y[i]] -= self.w[i];
                w_left += self.w[i];
                let (v, next) = (self.x[i][feature], self.x[order[k + 1]][feature]);
                if v == next {
                    continue;
                }
                let score = gini_sum(&left, w_left) + gini_sum(&right, total - w_left);
                if score < parent - 1e-12 * total && best.is_none_or(|(s, _, _)| score < s) {
                    let mid = v + (next - v) / 2.0;
                    let threshold = if mid < next { mid } else { v };
                    best = Some((score, feature, threshold));
                }
            }
        }
        best.map(|(_, f, t)| (f, t))
    }
}

fn fit_tree(
    x: &[Vec<f64>],
    y: &[usize],
    class_w: &[f64],
    n_classes: usize,
    p: &RfParams,
    seed: u64,
) -> DecisionTree {
    let mut rng = rng::stream(seed, &[]);
    let n = x.len();
    let mut multiplicity = vec![0.0; n];
    if p.bootstrap {
        for _ in 0..n {
            multiplicity[rng.random_range(0..n)] += 1.0;
        }
    } else {
        multiplicity.iter_mut().for_each(|m| *m = 1.0);
    }
    let w: Vec<f64> = (0..n).map(|i| multiplicity[i] * class_w[y[i]]).collect();
    let mut idx: Vec<usize> = (0..n).filter(|&i| multiplicity[i] > 0.0).collect();
    let mut b = Builder {
        x,
        y,
        w: &w,
        n_classes,
        n_candidates: p.max_features.resolve(x[0].len()),
        max_depth: p.max_depth.unwrap_or(usize::MAX),
        min_samples_split: p.min_samples_split.max(2),
        rng,
        nodes: Vec::new(),
    };
    b.build(&mut idx, 0);
    DecisionTree { nodes: b.nodes }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomForest {
    pub n_classes: usize,
    pub n_features: usize,
    pub trees: Vec<DecisionTree>,
}

impl RandomForest {
    /// Fits `n_trees` trees in parallel; tree `t` draws its bootstrap sample
    /// and feature subsets from a stream derived from `(seed, t)`, so the
    /// forest does not depend on the thread count. Single-class input
    /// yields a constant forest.
    pub fn fit(x: &[Vec<f64>], y: &[usize], n_classes: usize, p: &RfParams) -> Result<Self> {
        p.validate()?;
        let n_features = check_training_data(x, y, n_classes)?;
        let class_w = p.class_weights.resolve(y, n_classes)?;
        let counts = class_counts(y, n_classes);
        if counts.iter().filter(|&&c| c > 0).count() < 2 {
            log::warn!("random forest trained on a single class; the model is constant");
        }
        let trees = (0..p.n_trees)
            .into_par_iter()
            .map(|t| {
                fit_tree(
                    x,
                    y,
                    &class_w,
                    n_classes,
                    p,
                    rng::derive_seed(p.seed, &[t as u64]),
                )
            })
            .collect();
        Ok(RandomForest {
            n_classes,
            n_features,
            trees,
        })
    }

    /// Majority vote over trees; ties go to the smallest class id.
    pub fn predict_one(&self, x: &[f64]) -> usize {
        let mut votes = vec![0.0; self.n_classes];
        for t in &self.trees {
            votes[t.predict_one(x)] += 1.0;
        }
        argmax(&votes)
    }

    pub fn predict(&self, x: &[Vec<f64>]) -> Result<Vec<usize>> {
        check_features(x, self.n_features)?;
        Ok(x.iter().map(|row| self.predict_one(row)).collect())
    }
}
