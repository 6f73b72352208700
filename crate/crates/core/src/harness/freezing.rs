//! Freezing of the planted solution and of a uniformly sampled solution.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{alpha_tag, farm, label, nearest_distance, records_csv, trial_seed, Estimate};
use super::{run_planted_trial, run_random_model_trial, ExperimentConfig, OutputDir, TrialRecord};
use crate::analytic::{beta_c, ModelParams};
use crate::error::{Error, Result};
use crate::sampler::Instance;
use crate::solver::SolutionSet;
use crate::spin::SpinConfig;
use crate::structure::frozen_count;

const TAG: u64 = 2;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FreezingSide {
    pub model: String,
    pub trials: usize,
    pub failed_trials: usize,
    pub total_rejections: u64,
    /// Fraction of trials whose `sigma` has all coordinates frozen.
    pub fully_frozen: Estimate,
    /// Fraction with no other solution within the freezing radius.
    pub radius_isolated: Estimate,
    pub frozen_coordinates: Estimate,
    pub nearest_other: Estimate,
    pub nearest_histogram: BTreeMap<u32, u64>,
    pub solution_count: Estimate,
    #[serde(skip)]
    pub records: Vec<TrialRecord>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FreezingPoint {
    pub n: usize,
    pub alpha: f64,
    pub m: usize,
    pub beta_c: f64,
    pub delta: f64,
    /// `max(0, floor((beta_c - delta) n))`.
    pub radius: u32,
    pub beta_c_n: f64,
    pub planted: FreezingSide,
    pub random: FreezingSide,
    /// z-score of planted minus random fully-frozen fractions.
    pub fully_frozen_z: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FreezingReport {
    pub kappa: f64,
    pub points: Vec<FreezingPoint>,
}

fn observe(
    trial: u64,
    seed: u64,
    inst: &Instance,
    s: &SolutionSet,
    sigma: SpinConfig,
    radius: u32,
) -> Result<TrialRecord> {
    let frozen = frozen_count(s, sigma)?;
    let nearest = nearest_distance(s, sigma, frozen)?;
    let mut r = TrialRecord::new(trial, seed);
    r.instance_digest = inst.digest();
    r.set("solutions", s.len() as f64)
        .set("frozen", frozen as f64)
        .set("fully_frozen", (frozen == s.n()) as u8 as f64)
        .set("radius_isolated", (nearest > radius) as u8 as f64)
        .set("nearest", nearest as f64);
    Ok(r)
}

fn summarize(model: &str, records: Vec<TrialRecord>) -> FreezingSide {
    let ok: Vec<&TrialRecord> = records.iter().filter(|r| r.is_ok()).collect();
    let col = |k: &str| Estimate::of(ok.iter().map(|r| r.get(k).expect("fixed keys")));
    let mut nearest_histogram = BTreeMap::new();
    for r in &ok {
        *nearest_histogram.entry(r.get("nearest").expect("fixed keys") as u32).or_insert(0) += 1;
    }
    FreezingSide {
        model: model.to_owned(),
        trials: records.len(),
        failed_trials: records.len() - ok.len(),
        total_rejections: records.iter().map(|r| r.rejected_for_emptiness).sum(),
        fully_frozen: col("fully_frozen"),
        radius_isolated: col("radius_isolated"),
        frozen_coordinates: col("frozen"),
        nearest_other: col("nearest"),
        nearest_histogram,
        solution_count: col("solutions"),
        records,
    }
}

/// Planted and conditioned-random trials at every grid point.
pub fn run_freezing(cfg: &ExperimentConfig) -> Result<FreezingReport> {
    let mut points = Vec::new();
    for (n, alpha, m) in cfg.grid_points()? {
        let bc = beta_c(ModelParams::new(cfg.kappa, alpha)?)?;
        let radius = ((bc - cfg.delta) * n as f64).floor().max(0.0) as u32;

        let planted_label = label(&[TAG, n as u64, m as u64, 0]);
        let planted: Vec<TrialRecord> = farm(cfg.trials, |i| {
            let seed = trial_seed(cfg.seed, planted_label, i);
            let t = run_planted_trial(n, m, cfg.kappa, seed)?;
            observe(i, seed, &t.instance, &t.solutions, t.sigma, radius)
        })
        .into_iter()
        .collect::<Result<_>>()?;

        let random_label = label(&[TAG, n as u64, m as u64, 1]);
        let random: Vec<TrialRecord> = farm(cfg.trials, |i| {
            let seed = trial_seed(cfg.seed, random_label, i);
            match run_random_model_trial(n, m, cfg.kappa, seed, cfg.max_rejects) {
                Ok(t) => {
                    let mut r = observe(i, seed, &t.instance, &t.solutions, t.sigma, radius)?;
                    r.rejected_for_emptiness = t.rejections;
                    Ok(r)
                }
                Err(e @ Error::Precondition(_)) => Ok(TrialRecord {
                    rejected_for_emptiness: cfg.max_rejects + 1,
                    ..TrialRecord::failed(i, seed, &e)
                }),
                Err(e) => Err(e),
            }
        })
        .into_iter()
        .collect::<Result<_>>()?;

        let planted = summarize("planted", planted);
        let random = summarize("random", random);
        points.push(FreezingPoint {
            n,
            alpha,
            m,
            beta_c: bc,
            delta: cfg.delta,
            radius,
            beta_c_n: bc * n as f64,
            fully_frozen_z: planted.fully_frozen.z_against(&random.fully_frozen),
            planted,
            random,
        });
    }
    Ok(FreezingReport { kappa: cfg.kappa, points })
}

impl FreezingReport {
    pub fn write(&self, out: &mut OutputDir, per_trial: bool) -> Result<()> {
        let mut summary = String::from(
            "n,alpha,m,model,fully_frozen,fully_frozen_se,radius,radius_isolated,mean_nearest,beta_c_n,failed_trials\n",
        );
        for p in &self.points {
            for side in [&p.planted, &p.random] {
                summary.push_str(&format!(
                    "{},{},{},{},{},{},{},{},{},{},{}\n",
                    p.n,
                    p.alpha,
                    p.m,
                    side.model,
                    side.fully_frozen.mean,
                    side.fully_frozen.standard_error,
                    p.radius,
                    side.radius_isolated.mean,
                    side.nearest_other.mean,
                    p.beta_c_n,
                    side.failed_trials
                ));
                if per_trial {
                    let name = format!("freezing_n{}_alpha{}_{}.csv", p.n, alpha_tag(p.alpha), side.model);
                    out.write(&name, records_csv(&side.records).as_bytes())?;
                }
                if side.failed_trials > 0 {
                    out.warn(format!(
                        "n = {}, alpha = {}: {} {} trials exceeded max_rejects",
                        p.n, p.alpha, side.failed_trials, side.model
                    ));
                }
            }
            if p.radius == 0 {
                out.warn(format!(
                    "n = {}, alpha = {}: freezing radius is 0 (beta_c = {:.4}, delta = {}); radius isolation is vacuous",
                    p.n, p.alpha, p.beta_c, p.delta
                ));
            }
        }
        out.write("freezing_summary.csv", summary.as_bytes())?;
        out.write_json("freezing.json", self)
    }
}
