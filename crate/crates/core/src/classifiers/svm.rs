//! One-vs-rest RBF-kernel SVM trained by SMO.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{argmax, check_features, check_training_data, ClassWeights};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SvmParams {
    pub c: f64,
    /// RBF width; 0 selects `1 / n_features`.
    pub gamma: f64,
    pub class_weights: ClassWeights,
    /// Stopping tolerance on the maximal KKT violation.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Kernel rows kept per binary subproblem.
    pub cache_rows: usize,
    /// Standardise features to zero mean and unit variance before training.
    pub standardize: bool,
}

impl Default for SvmParams {
    fn default() -> Self {
        SvmParams {
            c: 1.0,
            gamma: 0.0,
            class_weights: ClassWeights::None,
            tolerance: 1e-3,
            max_iterations: 10_000_000,
            cache_rows: 4096,
            standardize: true,
        }
    }
}

impl SvmParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0) || !self.c.is_finite() {
            return Err(Error::InvalidInput(format!(
                "C = {} must be positive",
                self.c
            )));
        }
        if !(self.gamma >= 0.0) || !self.gamma.is_finite() {
            return Err(Error::InvalidInput(format!(
                "gamma = {} must be non-negative",
                self.gamma
            )));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::InvalidInput("tolerance must be positive".into()));
        }
        Ok(())
    }

    pub fn resolved_gamma(&self, n_features: usize) -> f64 {
        if self.gamma == 0.0 {
            1.0 / n_features.max(1) as f64
        } else {
            self.gamma
        }
    }
}

fn rbf(gamma: f64, a: &[f64], b: &[f64]) -> f64 {
    let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    (-gamma * d2).exp()
}

/// Bounded least-recently-used cache of kernel matrix rows.
struct KernelCache<'a> {
    x: &'a [Vec<f64>],
    gamma: f64,
    capacity: usize,
    rows: HashMap<usize, (u64, Vec<f64>)>,
    clock: u64,
}

impl<'a> KernelCache<'a> {
    fn new(x: &'a [Vec<f64>], gamma: f64, capacity: usize) -> Self {
        KernelCache {
            x,
            gamma,
            capacity: capacity.max(2),
            rows: HashMap::new(),
            clock: 0,
        }
    }

    fn ensure(&mut self, i: usize) {
        self.clock += 1;
        if let Some(entry) = self.rows.get_mut(&i) {
            entry.0 = self.clock;
            return;
        }
        if self.rows.len() >= self.capacity {
            let oldest = *self.rows.iter().min_by_key(|(_, (t, _))| *t).unwrap().0;
            self.rows.remove(&oldest);
        }
        let xi = &self.x[i];
        let row = self.x.iter().map(|xj| rbf(self.gamma, xi, xj)).collect();
        self.rows.insert(i, (self.clock, row));
    }

    /// Rows `i` and `j`, computing and caching them if needed.
    fn pair(&mut self, i: usize, j: usize) -> (&[f64], &[f64]) {
        self.ensure(i);
        self.ensure(j);
        (&self.rows[&i].1, &self.rows[&j].1)
    }
}

/// Dual objective `Σα − ½ αᵀQα` sampled every 100 SMO iterations.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SvmTrace {
    pub iterations: usize,
    pub objective: Vec<f64>,
}

/// One binary subproblem: `f(x) = Σ coef_i k(sv_i, x) − rho`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinarySvm {
    pub support: Vec<usize>,
    pub coef: Vec<f64>,
    pub rho: f64,
    /// All multipliers, indexed like the training set.
    #[serde(skip)]
    pub alpha: Vec<f64>,
    #[serde(skip)]
    pub trace: SvmTrace,
}

/// Solves `min ½ αᵀQα − Σα` s.t. `yᵀα = 0`, `0 ≤ α_i ≤ C_i` with
/// maximal-violating-pair working sets.
pub(crate) fn smo(
    x: &[Vec<f64>],
    y: &[f64],
    upper: &[f64],
    gamma: f64,
    tolerance: f64,
    max_iterations: usize,
    cache_rows: usize,
) -> Result<BinarySvm> {
    let n = x.len();
    let mut alpha = vec![0.0; n];
    let mut grad = vec![-1.0; n];
    let mut cache = KernelCache::new(x, gamma, cache_rows);
    let mut trace = SvmTrace::default();
    let objective = |alpha: &[f64], grad: &[f64]| {
        -0.5 * alpha
            .iter()
            .zip(grad)
            .map(|(a, g)| a * (g - 1.0))
            .sum::<f64>()
    };

    let mut iter = 0;
    loop {
        let (mut i, mut m) = (usize::MAX, f64::NEG_INFINITY);
        let (mut j, mut big_m) = (usize::MAX, f64::INFINITY);
        for t in 0..n {
            let v = -y[t] * grad[t];
            let up = if y[t] > 0.0 {
                alpha[t] < upper[t]
            } else {
                alpha[t] > 0.0
            };
            let low = if y[t] > 0.0 {
                alpha[t] > 0.0
            } else {
                alpha[t] < upper[t]
            };
            if up && v > m {
                (i, m) = (t, v);
            }
            if low && v < big_m {
                (j, big_m) = (t, v);
            }
        }
        if iter % 100 == 0 {
            trace.objective.push(objective(&alpha, &grad));
        }
        if i == usize::MAX || j == usize::MAX || m - big_m < tolerance {
            break;
        }
        if iter >= max_iterations {
            return Err(Error::NonConvergence { iterations: iter });
        }
        iter += 1;

        let (ki, kj) = cache.pair(i, j);
        let (ci, cj) = (upper[i], upper[j]);
        let (old_i, old_j) = (alpha[i], alpha[j]);
        if y[i] != y[j] {
            let quad = (ki[i] + kj[j] + 2.0 * ki[j]).max(1e-12);
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > ci - cj {
                if alpha[i] > ci {
                    alpha[i] = ci;
                    alpha[j] = ci - diff;
                }
            } else if alpha[j] > cj {
                alpha[j] = cj;
                alpha[i] = cj + diff;
            }
        } else {
            let quad = (ki[i] + kj[j] - 2.0 * ki[j]).max(1e-12);
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > ci {
                if alpha[i] > ci {
                    alpha[i] = ci;
                    alpha[j] = sum - ci;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > cj {
                if alpha[j] > cj {
                    alpha[j] = cj;
                    alpha[i] = sum - cj;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }
        let (di, dj) = ((alpha[i] - old_i) * y[i], (alpha[j] - old_j) * y[j]);
        for t in 0..n {
            grad[t] += y[t] * (ki[t] * di + kj[t] * dj);
        }
    }
    trace.iterations = iter;
    trace.objective.push(objective(&alpha, &grad));

    let (mut free_sum, mut n_free) = (0.0, 0usize);
    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    for t in 0..n {
        let yg = y[t] * grad[t];
        if alpha[t] >= upper[t] {
            if y[t] < 0.0 {
                ub = ub.min(yg)
            } else {
                lb = lb.max(yg)
            }
        } else if alpha[t] <= 0.0 {
            if y[t] > 0.0 {
                ub = ub.min(yg)
            } else {
                lb = lb.max(yg)
            }
        } else {
            free_sum += yg;
            n_free += 1;
        }
    }
    let rho = if n_free > 0 {
        free_sum / n_free as f64
    } else if ub.is_finite() && lb.is_finite() {
        (ub + lb) / 2.0
    } else if ub.is_finite() {
        ub
    } else {
        lb
    };
    let support: Vec<usize> = (0..n).filter(|&t| alpha[t] > 0.0).collect();
    let coef = support.iter().map(|&t| alpha[t] * y[t]).collect();
    Ok(BinarySvm {
        support,
        coef,
        rho,
        alpha,
        trace,
    })
}

/// One-vs-rest multi-class SVM. Support vectors are stored once, in the
/// standardised feature space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub n_features: usize,
    pub gamma: f64,
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
    pub machines: Vec<BinarySvm>,
}

impl SvmModel {
    /// Trains one binary machine per class in parallel. Sample `i` gets box
    /// constraint `C · weight[y_i]`.
    pub fn fit(x: &[Vec<f64>], y: &[usize], n_classes: usize, p: &SvmParams) -> Result<Self> {
        p.validate()?;
        let n_features = check_training_data(x, y, n_classes)?;
        let gamma = p.resolved_gamma(n_features);
        if p.gamma == 0.0 {
            log::info!("gamma = 0 resolved to 1/n_features = {gamma}");
        }
        let (mean, scale) = if p.standardize {
            standardizer(x)
        } else {
            (vec![0.0; n_features], vec![1.0; n_features])
        };
        let xs: Vec<Vec<f64>> = x.iter().map(|row| apply(row, &mean, &scale)).collect();
        let weights = p.class_weights.resolve(y, n_classes)?;
        let upper: Vec<f64> = y.iter().map(|&c| p.c * weights[c]).collect();

        let mut machines = (0..n_classes)
            .into_par_iter()
            .map(|k| {
                let yk: Vec<f64> = y.iter().map(|&c| if c == k { 1.0 } else { -1.0 }).collect();
                smo(
                    &xs,
                    &yk,
                    &upper,
                    gamma,
                    p.tolerance,
                    p.max_iterations,
                    p.cache_rows,
                )
            })
            .collect::<Result<Vec<_>>>()?;

        // keep only vectors that support some machine, and renumber
        let mut used: Vec<usize> = machines
            .iter()
            .flat_map(|m| m.support.iter().copied())
            .collect();
        used.sort_unstable();
        used.dedup();
        let position: HashMap<usize, usize> =
            used.iter().enumerate().map(|(p, &i)| (i, p)).collect();
        for m in &mut machines {
            m.support.iter_mut().for_each(|i| *i = position[i]);
        }
        Ok(SvmModel {
            n_features,
            gamma,
            mean,
            scale,
            vectors: used.iter().map(|&i| xs[i].clone()).collect(),
            machines,
        })
    }

    /// Per-class decision values of one sample.
    pub fn decision_values(&self, x: &[f64]) -> Vec<f64> {
        let xs = apply(x, &self.mean, &self.scale);
        let k: Vec<f64> = self
            .vectors
            .iter()
            .map(|v| rbf(self.gamma, v, &xs))
            .collect();
        self.machines
            .iter()
            .map(|m| {
                m.support
                    .iter()
                    .zip(&m.coef)
                    .map(|(&s, c)| c * k[s])
                    .sum::<f64>()
                    - m.rho
            })
            .collect()
    }

    /// Largest decision value; ties go to the smallest class id.
    pub fn predict(&self, x: &[Vec<f64>]) -> Result<Vec<usize>> {
        check_features(x, self.n_features)?;
        Ok(x.par_iter()
            .map(|row| argmax(&self.decision_values(row)))
            .collect())
    }
}

fn standardizer(x: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>) {
    let n = x.len() as f64;
    let d = x[0].len();
    let mut mean = vec![0.0; d];
    for row in x {
        for (m, v) in mean.iter_mut().zip(row) {
            *m += v / n;
        }
    }
    let mut var = vec![0.0; d];
    for row in x {
        for ((s, v), m) in var.iter_mut().zip(row).zip(&mean) {
            *s += (v - m) * (v - m) / n;
        }
    }
    let scale = var
        .iter()
        .map(|v| if v.sqrt() > 1e-12 { v.sqrt() } else { 1.0 })
        .collect();
    (mean, scale)
}

fn apply(row: &[f64], mean: &[f64], scale: &[f64]) -> Vec<f64> {
    row.iter()
        .zip(mean)
        .zip(scale)
        .map(|((v, m), s)| (v - m) / s)
        .collect()
}
