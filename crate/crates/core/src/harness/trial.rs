//! Single trials of the random and planted models and their records.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{derive_seed, stream};
use crate::sampler::{sample_planted_instance, sample_random_instance, Instance};
use crate::solver::{solve, SolutionSet};
use crate::spin::{mask, SpinConfig};

/// Outcome of one trial. Every successful trial of an experiment carries the
/// same observable keys; a failed trial has none and an `error`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: u64,
    pub seed: u64,
    pub instance_digest: String,
    pub observables: BTreeMap<String, f64>,
    pub rejected_for_emptiness: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl TrialRecord {
    pub fn new(trial: u64, seed: u64) -> Self {
        Self {
            trial,
            seed,
            instance_digest: String::new(),
            observables: BTreeMap::new(),
            rejected_for_emptiness: 0,
            error: None,
        }
    }

    pub fn failed(trial: u64, seed: u64, err: &Error) -> Self {
        Self { error: Some(err.to_string()), ..Self::new(trial, seed) }
    }

    pub fn set(&mut self, key: &str, value: f64) -> &mut Self {
        self.observables.insert(key.to_owned(), value);
        self
    }

    pub fn get(&self, key: &str) -> Option<f64> {
        self.observables.get(key).copied()
    }

    pub fn is_ok(&self) -> bool {
        self.error.is_none()
    }
}

/// CSV of `records` with columns `trial,seed,instance_digest,rejected_for_emptiness`,
/// the observable keys of the first successful record, and `error`.
pub fn records_csv(records: &[TrialRecord]) -> String {
    let keys: Vec<&String> = records
        .iter()
        .find(|r| r.is_ok())
        .map(|r| r.observables.keys().collect())
        .unwrap_or_default();
    let mut out = String::from("trial,seed,instance_digest,rejected_for_emptiness");
    for k in &keys {
        out.push(',');
        out.push_str(k);
    }
    out.push_str(",error\n");
    for r in records {
        let _ = write!(out, "{},{},{},{}", r.trial, r.seed, r.instance_digest, r.rejected_for_emptiness);
        for k in &keys {
            match r.observables.get(*k) {
                Some(v) => {
                    let _ = write!(out, ",{v}");
                }
                None => out.push(','),
            }
        }
        let err = r.error.as_deref().unwrap_or("").replace([',', '\n'], ";");
        let _ = writeln!(out, ",{err}");
    }
    out
}

/// Seed of trial `index` within the sub-experiment labelled `label`.
pub fn trial_seed(master: u64, label: u64, index: u64) -> u64 {
    derive_seed(derive_seed(master, label), index)
}

/// Runs `f` on trials `0..trials` in parallel; results are in trial order.
pub fn farm<T, F>(trials: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    (0..trials as u64).into_par_iter().map(f).collect()
}

fn uniform_member<R: Rng + ?Sized>(s: &SolutionSet, rng: &mut R) -> SpinConfig {
    s.get(rng.random_range(0..s.len()))
}

/// A conditioned random-model draw.
#[derive(Clone, Debug)]
pub struct RandomTrial {
    pub instance: Instance,
    pub solutions: SolutionSet,
    pub sigma: SpinConfig,
    pub rejections: u64,
    /// `|S|` of every draw including the rejected (empty) ones.
    pub draw_sizes: Vec<u64>,
}

/// Draws instances with seeds `derive_seed(seed, attempt)` until the solution
/// set is non-empty, then picks `sigma` uniformly from it using `stream(seed, 1)`.
/// Fails once more than `max_rejects` empty instances were drawn.
pub fn run_random_model_trial(n: usize, m: usize, kappa: f64, seed: u64, max_rejects: u64) -> Result<RandomTrial> {
    let mut draw_sizes = Vec::new();
    for attempt in 0..=max_rejects {
        let instance = sample_random_instance(n, m, kappa, derive_seed(seed, attempt))?;
        let solutions = solve(&instance)?;
        draw_sizes.push(solutions.len() as u64);
        if !solutions.is_empty() {
            let sigma = uniform_member(&solutions, &mut stream(seed, 1));
            return Ok(RandomTrial { instance, solutions, sigma, rejections: attempt, draw_sizes });
        }
    }
    Err(Error::Precondition(format!(
        "no non-empty instance within {max_rejects} rejections (n = {n}, m = {m}, kappa = {kappa})"
    )))
}

/// A planted-model draw.
#[derive(Clone, Debug)]
pub struct PlantedTrial {
    pub instance: Instance,
    pub solutions: SolutionSet,
    pub sigma: SpinConfig,
}

/// Uniform `sigma*` from `stream(seed, 1)`, constraints from `stream(seed, 0)`.
pub fn run_planted_trial(n: usize, m: usize, kappa: f64, seed: u64) -> Result<PlantedTrial> {
    if n == 0 || n > crate::spin::MAX_SPIN_DIM as usize {
        return Err(Error::Domain(format!("dimension {n} out of range")));
    }
    let code = stream(seed, 1).random::<u64>() & mask(n as u32);
    let sigma = SpinConfig::new(n as u32, code)?;
    let instance = sample_planted_instance(n, m, kappa, sigma, seed)?;
    let solutions = solve(&instance)?;
    Ok(PlantedTrial { instance, solutions, sigma })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_trial_without_constraints_is_uniform() {
        let n = 4;
        let draws = 100_000u64;
        let mut counts = [0u64; 16];
        for i in 0..draws {
            let t = run_random_model_trial(n, 0, 1.0, trial_seed(3, 0, i), 10).unwrap();
            assert_eq!(t.rejections, 0);
            assert_eq!(t.solutions.len(), 16);
            counts[t.sigma.code() as usize] += 1;
        }
        let e = draws as f64 / 16.0;
        let chi2: f64 = counts.iter().map(|&c| (c as f64 - e).powi(2) / e).sum();
        // 0.999 quantile of chi-square with 15 degrees of freedom.
        assert!(chi2 < 37.7, "chi2 = {chi2}");
    }

    #[test]
    fn sampled_sigma_is_a_solution() {
        for i in 0..50 {
            let t = run_random_model_trial(10, 8, 1.0, i, 1000).unwrap();
            assert!(t.solutions.contains(t.sigma));
            assert!(t.instance.is_solution(t.sigma));
            assert_eq!(t.draw_sizes.len() as u64, t.rejections + 1);
            let p = run_planted_trial(10, 8, 1.0, i).unwrap();
            assert!(p.solutions.contains(p.sigma));
        }
    }

    #[test]
    fn rejection_limit_is_reported() {
        // Far above capacity at n = 4.
        let err = run_random_model_trial(4, 60, 0.5, 1, 3).unwrap_err();
        assert!(matches!(err, Error::Precondition(_)));
    }

    #[test]
    fn csv_layout() {
        let mut a = TrialRecord::new(0, 5);
        a.set("x", 1.5).set("k", 2.0);
        let b = TrialRecord::failed(1, 6, &Error::Precondition("boom, bad".into()));
        let csv = records_csv(&[a, b]);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "trial,seed,instance_digest,rejected_for_emptiness,k,x,error");
        assert_eq!(lines[1], "0,5,,0,2,1.5,");
        assert!(lines[2].starts_with("1,6,,0,,,precondition violated: boom; bad"));
    }

    #[test]
    fn farm_preserves_order() {
        let v = farm(1000, |i| i * 2);
        assert!(v.iter().enumerate().all(|(i, &x)| x == 2 * i as u64));
    }
}
