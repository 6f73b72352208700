//! Planted versus reweighted random model.
//!
//! For an event `A` on `(sigma, S)` with `sigma in S`,
//!
//! ```text
//! P_planted[(sigma*, S) in A] = E_random[ sum_{sigma in S} 1_A(sigma, S) ] / E|S|
//! ```
//!
//! where the right side is over unconditioned random instances. The left
//! side is estimated from planted trials, the right side from random trials
//! with the sum over `S` taken exactly.

use serde::{Deserialize, Serialize};

use super::{alpha_tag, farm, label, nearest_distance, records_csv, run_planted_trial, trial_seed};
use super::{Estimate, Event, ExperimentConfig, OutputDir, TrialRecord};
use crate::error::Result;
use crate::process::log_expected_count;
use crate::sampler::sample_random_instance;
use crate::solver::{solve, SolutionSet};
use crate::spin::SpinConfig;
use crate::structure::frozen_count;

const TAG: u64 = 3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EventEstimate {
    pub event: Event,
    pub label: String,
    pub planted: Estimate,
    pub random: Estimate,
    pub z: Option<f64>,
    /// Both sides have zero sample variance, so no z-score exists.
    pub degenerate: bool,
}

impl EventEstimate {
    /// `|z| <= bound`, or a degenerate event whose two sides agree exactly.
    pub fn consistent(&self, bound: f64) -> bool {
        match self.z {
            Some(z) => z.abs() <= bound,
            None => self.planted.mean == self.random.mean,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContiguityPoint {
    pub n: usize,
    pub alpha: f64,
    pub m: usize,
    pub trials_per_side: usize,
    pub expected_count: f64,
    pub events: Vec<EventEstimate>,
    pub max_abs_z: f64,
    #[serde(skip)]
    pub planted_records: Vec<TrialRecord>,
    #[serde(skip)]
    pub random_records: Vec<TrialRecord>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContiguityReport {
    pub kappa: f64,
    pub points: Vec<ContiguityPoint>,
}

/// Whether `(sigma, s)` lies in `event`; `sigma` must be a member of `s`.
fn in_event(event: &Event, s: &SolutionSet, sigma: SpinConfig, frozen: u32, nearest: u32) -> bool {
    match *event {
        Event::Everything => true,
        Event::ContainsSigma => s.contains(sigma),
        Event::FullyFrozen => frozen == s.n(),
        Event::MaxSize { threshold } => s.len() as u64 <= threshold,
        Event::MinNearest { distance } => nearest >= distance,
    }
}

fn event_key(e: &Event) -> String {
    format!("event_{}", e.label())
}

/// Estimates both sides of the reweighting identity for every configured event.
pub fn run_contiguity(cfg: &ExperimentConfig) -> Result<ContiguityReport> {
    let events = if cfg.events.is_empty() { Event::defaults() } else { cfg.events.clone() };
    let mut points = Vec::new();
    for (n, alpha, m) in cfg.grid_points()? {
        let expected = log_expected_count(n, m, cfg.kappa)?.exp();

        let planted_label = label(&[TAG, n as u64, m as u64, 0]);
        let planted_records: Vec<TrialRecord> = farm(cfg.trials, |i| {
            let seed = trial_seed(cfg.seed, planted_label, i);
            let t = run_planted_trial(n, m, cfg.kappa, seed)?;
            let frozen = frozen_count(&t.solutions, t.sigma)?;
            let nearest = nearest_distance(&t.solutions, t.sigma, frozen)?;
            let mut r = TrialRecord::new(i, seed);
            r.instance_digest = t.instance.digest();
            r.set("solutions", t.solutions.len() as f64).set("frozen", frozen as f64).set("nearest", nearest as f64);
            for e in &events {
                r.set(&event_key(e), in_event(e, &t.solutions, t.sigma, frozen, nearest) as u8 as f64);
            }
            Ok(r)
        })
        .into_iter()
        .collect::<Result<_>>()?;

        let random_label = label(&[TAG, n as u64, m as u64, 1]);
        let random_records: Vec<TrialRecord> = farm(cfg.trials, |i| {
            let seed = trial_seed(cfg.seed, random_label, i);
            let inst = sample_random_instance(n, m, cfg.kappa, seed)?;
            let s = solve(&inst)?;
            let mut hits = vec![0u64; events.len()];
            for sigma in s.iter() {
                let frozen = frozen_count(&s, sigma)?;
                let nearest = nearest_distance(&s, sigma, frozen)?;
                for (h, e) in hits.iter_mut().zip(&events) {
                    *h += in_event(e, &s, sigma, frozen, nearest) as u64;
                }
            }
            let mut r = TrialRecord::new(i, seed);
            r.instance_digest = inst.digest();
            r.set("solutions", s.len() as f64);
            for (h, e) in hits.iter().zip(&events) {
                r.set(&event_key(e), *h as f64 / expected);
            }
            Ok(r)
        })
        .into_iter()
        .collect::<Result<_>>()?;

        let column = |records: &[TrialRecord], key: &str| Estimate::of(records.iter().map(|r| r.get(key).expect("fixed keys")));
        let estimates: Vec<EventEstimate> = events
            .iter()
            .map(|e| {
                let key = event_key(e);
                let planted = column(&planted_records, &key);
                let random = column(&random_records, &key);
                let z = planted.z_against(&random);
                EventEstimate { event: *e, label: e.label(), planted, random, z, degenerate: z.is_none() }
            })
            .collect();
        let max_abs_z = estimates.iter().filter_map(|e| e.z).fold(0.0, |a: f64, z| a.max(z.abs()));
        points.push(ContiguityPoint {
            n,
            alpha,
            m,
            trials_per_side: cfg.trials,
            expected_count: expected,
            events: estimates,
            max_abs_z,
            planted_records,
            random_records,
        });
    }
    Ok(ContiguityReport { kappa: cfg.kappa, points })
}

impl ContiguityReport {
    pub fn write(&self, out: &mut OutputDir, per_trial: bool) -> Result<()> {
        let mut summary = String::from("n,m,event,planted,planted_se,random,random_se,z,degenerate\n");
        for p in &self.points {
            for e in &p.events {
                let z = e.z.map(|z| z.to_string()).unwrap_or_default();
                summary.push_str(&format!(
                    "{},{},{},{},{},{},{},{},{}\n",
                    p.n, p.m, e.label, e.planted.mean, e.planted.standard_error, e.random.mean, e.random.standard_error, z, e.degenerate
                ));
                if e.degenerate {
                    out.warn(format!("n = {}, m = {}: event {} has zero variance on both sides", p.n, p.m, e.label));
                }
            }
            if per_trial {
                let stem = format!("contiguity_n{}_alpha{}", p.n, alpha_tag(p.alpha));
                out.write(&format!("{stem}_planted.csv"), records_csv(&p.planted_records).as_bytes())?;
                out.write(&format!("{stem}_random.csv"), records_csv(&p.random_records).as_bytes())?;
            }
        }
        out.write("contiguity_summary.csv", summary.as_bytes())?;
        out.write_json("contiguity.json", self)
    }
}
