//! Random search and successive halving over a [`SearchSpace`].

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::space::{Config, SearchSpace};
use crate::error::{Error, Result};
use crate::rng;

/// One evaluated configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    /// Position in the trial log.
    pub trial: usize,
    /// Index of the sampled configuration this trial evaluates.
    pub config_id: usize,
    pub round: usize,
    pub config: Config,
    pub budget: f64,
    /// `None` when the objective failed.
    pub score: Option<f64>,
    pub error: Option<String>,
    /// Name of the sampler that proposed the configuration.
    pub sampler: String,
    /// Sampler-specific state; unused by the uniform sampler.
    pub sampler_state: Option<serde_json::Value>,
}

/// Full trial log and the selected trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    pub best: TrialRecord,
    pub trials: Vec<TrialRecord>,
}

impl SearchResult {
    pub fn write_json(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        let path = path.as_ref();
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HalvingSchedule {
    pub n_initial: usize,
    pub eta: usize,
    pub max_budget: f64,
    /// Budget of the first round; by default `max_budget / η^(R−1)` so the
    /// last of the `R` rounds runs at `max_budget`.
    pub min_budget: Option<f64>,
}

impl HalvingSchedule {
    pub fn new(n_initial: usize, eta: usize, max_budget: f64) -> Self {
        HalvingSchedule {
            n_initial,
            eta,
            max_budget,
            min_budget: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_initial == 0 {
            return Err(Error::Config(
                "successive halving needs at least one configuration".into(),
            ));
        }
        if self.eta < 2 {
            return Err(Error::Config(format!(
                "eta = {} must be at least 2",
                self.eta
            )));
        }
        if !(self.max_budget > 0.0) {
            return Err(Error::Config("max_budget must be positive".into()));
        }
        if let Some(b) = self.min_budget {
            if !(b > 0.0 && b <= self.max_budget) {
                return Err(Error::Config(format!(
                    "min_budget {b} outside (0, max_budget]"
                )));
            }
        }
        Ok(())
    }

    /// Number of rounds: one more than the largest `r` with `η^r ≤ n_initial`.
    pub fn n_rounds(&self) -> usize {
        let mut rounds = 1;
        let mut reach = self.eta as u128;
        while reach <= self.n_initial as u128 {
            rounds += 1;
            reach *= self.eta as u128;
        }
        rounds
    }

    /// Configurations evaluated in each round: `n`, `⌈n/η⌉`, `⌈n/η²⌉`, …
    pub fn round_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![self.n_initial];
        for _ in 1..self.n_rounds() {
            let prev = *sizes.last().unwrap();
            sizes.push(prev.div_ceil(self.eta));
        }
        sizes
    }

    pub fn first_budget(&self) -> f64 {
        self.min_budget
            .unwrap_or_else(|| self.max_budget / (self.eta as f64).powi(self.n_rounds() as i32 - 1))
    }

    /// `min(b₀·η^r, max_budget)`.
    pub fn budget_at(&self, round: usize) -> f64 {
        (self.first_budget() * (self.eta as f64).powi(round as i32)).min(self.max_budget)
    }

    pub fn budgets(&self) -> Vec<f64> {
        (0..self.n_rounds()).map(|r| self.budget_at(r)).collect()
    }
}

/// The first `n` configurations drawn from `seed`; identical for random
/// search and successive halving.
pub fn sample_configs(space: &SearchSpace, n: usize, seed: u64) -> Vec<Config> {
    let mut r = rng::stream(seed, &[]);
    (0..n).map(|_| space.sample(&mut r)).collect()
}

fn run_trials<F>(
    space: &SearchSpace,
    jobs: Vec<(usize, usize, Config, f64)>,
    objective: &F,
) -> Vec<TrialRecord>
where
    F: Fn(&Config, f64) -> Result<f64> + Sync,
{
    jobs.into_par_iter()
        .map(|(trial, config_id, config, budget)| {
            let outcome = space
                .validate_config(&config)
                .and_then(|_| objective(&config, budget));
            let (score, error) = match outcome {
                Ok(s) if s.is_finite() => (Some(s), None),
                Ok(s) => (None, Some(format!("objective returned {s}"))),
                Err(e) => (None, Some(e.to_string())),
            };
            if let Some(e) = &error {
                log::warn!("trial {trial} failed: {e}");
            }
            TrialRecord {
                trial,
                config_id,
                round: 0,
                config,
                budget,
                score,
                error,
                sampler: "uniform".into(),
                sampler_state: None,
            }
        })
        .collect()
}

/// Scored trials ordered best first; ties keep log order.
fn ranked(trials: &[TrialRecord]) -> Vec<&TrialRecord> {
    let mut ok: Vec<&TrialRecord> = trials.iter().filter(|t| t.score.is_some()).collect();
    ok.sort_by(|a, b| {
        b.score
            .unwrap()
            .total_cmp(&a.score.unwrap())
            .then(a.trial.cmp(&b.trial))
    });
    ok
}

/// Evaluates `n_iter` uniformly sampled configurations at full budget (1.0)
/// in parallel and returns the highest score; ties go to the earliest
/// trial. Failed trials are logged and skipped.
pub fn random_search<F>(
    space: &SearchSpace,
    objective: F,
    n_iter: usize,
    seed: u64,
) -> Result<SearchResult>
where
    F: Fn(&Config) -> Result<f64> + Sync,
{
    if n_iter == 0 {
        return Err(Error::Config(
            "random search needs at least one iteration".into(),
        ));
    }
    let jobs = sample_configs(space, n_iter, seed)
        .into_iter()
        .enumerate()
        .map(|(i, c)| (i, i, c, 1.0))
        .collect();
    let trials = run_trials(space, jobs, &|c: &Config, _| objective(c));
    let best = ranked(&trials)
        .first()
        .map(|t| (*t).clone())
        .ok_or_else(|| Error::Generation("every trial failed".into()))?;
    Ok(SearchResult { best, trials })
}

/// Successive halving: round `r` evaluates its configurations at
/// [`HalvingSchedule::budget_at`]`(r)` and keeps the best `⌈n_r/η⌉` for
/// the next round. Returns the best trial of the last round.
pub fn successive_halving<F>(
    space: &SearchSpace,
    objective: F,
    schedule: &HalvingSchedule,
    seed: u64,
) -> Result<SearchResult>
where
    F: Fn(&Config, f64) -> Result<f64> + Sync,
{
    schedule.validate()?;
    let configs = sample_configs(space, schedule.n_initial, seed);
    let mut survivors: Vec<usize> = (0..configs.len()).collect();
    let mut log: Vec<TrialRecord> = Vec::new();
    let n_rounds = schedule.n_rounds();
    for round in 0..n_rounds {
        let budget = schedule.budget_at(round);
        let jobs = survivors
            .iter()
            .enumerate()
            .map(|(k, &id)| (log.len() + k, id, configs[id].clone(), budget))
            .collect();
        let mut trials = run_trials(space, jobs, &objective);
        trials.iter_mut().for_each(|t| t.round = round);
        let keep = survivors.len().div_ceil(schedule.eta);
        let order = ranked(&trials);
        if order.is_empty() {
            log.extend(trials);
            return Err(Error::Generation(format!(
                "every trial of round {round} failed"
            )));
        }
        if round + 1 == n_rounds {
            let best = order[0].clone();
            log.extend(trials);
            return Ok(SearchResult { best, trials: log });
        }
        survivors = order.iter().take(keep).map(|t| t.config_id).collect();
        log.extend(trials);
    }
    unreachable!("schedule has at least one round")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schedule_arithmetic() {
        let s = HalvingSchedule {
            min_budget: Some(5.0),
            ..HalvingSchedule::new(27, 3, 50.0)
        };
        assert_eq!(s.n_rounds(), 4);
        assert_eq!(s.budgets(), vec![5.0, 15.0, 45.0, 50.0]);
        assert_eq!(s.round_sizes(), vec![27, 9, 3, 1]);
        let s = HalvingSchedule::new(9, 3, 1.0);
        assert_eq!(s.round_sizes(), vec![9, 3, 1]);
        assert_eq!(s.budgets(), vec![1.0 / 9.0, 1.0 / 3.0, 1.0]);
        assert_eq!(
            HalvingSchedule::new(10, 3, 1.0).round_sizes(),
            vec![10, 4, 2]
        );
        assert_eq!(HalvingSchedule::new(9, 1000, 1.0).n_rounds(), 1);
        assert!(HalvingSchedule::new(9, 1, 1.0).validate().is_err());
    }
}
