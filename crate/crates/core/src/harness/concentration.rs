//! Fluctuations of `ln |S|` around `ln E|S|` for the conditioned random model.

use serde::{Deserialize, Serialize};

use super::{alpha_tag, farm, label, records_csv, run_random_model_trial, trial_seed, Estimate};
use super::{ExperimentConfig, OutputDir, TrialRecord};
use crate::error::{Error, Result};
use crate::process::log_expected_count;
use crate::stats::{iqr, linear_fit, median, LinearFit};

const TAG: u64 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationPoint {
    pub n: usize,
    pub alpha: f64,
    pub m: usize,
    pub trials: usize,
    pub failed_trials: usize,
    pub total_rejections: u64,
    pub ln_expected_count: f64,
    pub median_q: f64,
    pub median_abs_q: f64,
    pub iqr_q: f64,
    pub max_abs_q: f64,
    pub median_abs_q_over_ln_n: f64,
    /// `|median Q| <= IQR`.
    pub centered: bool,
    /// `|S|` of the first draw of every trial, i.e. of unconditioned instances.
    pub unconditioned_count: Estimate,
    /// `|S|` of the accepted (non-empty) instances.
    pub conditioned_count: Estimate,
    #[serde(skip)]
    pub records: Vec<TrialRecord>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationReport {
    pub kappa: f64,
    pub points: Vec<ConcentrationPoint>,
    /// Least-squares fit of `median |Q|` against `ln n`, per alpha with at
    /// least two dimensions.
    pub scaling_fits: Vec<(f64, LinearFit)>,
}

/// `Q_m = ln|S| - ln E|S|` over conditioned random instances at every grid point.
pub fn run_concentration(cfg: &ExperimentConfig) -> Result<ConcentrationReport> {
    let mut points = Vec::new();
    for (n, alpha, m) in cfg.grid_points()? {
        let ln_e = log_expected_count(n, m, cfg.kappa)?;
        let lbl = label(&[TAG, n as u64, m as u64]);
        let outcomes = farm(cfg.trials, |i| {
            let seed = trial_seed(cfg.seed, lbl, i);
            (seed, run_random_model_trial(n, m, cfg.kappa, seed, cfg.max_rejects))
        });
        let mut records = Vec::with_capacity(cfg.trials);
        let mut first_draws = Vec::new();
        let mut accepted = Vec::new();
        let mut qs = Vec::new();
        let mut total_rejections = 0;
        for (i, (seed, outcome)) in outcomes.into_iter().enumerate() {
            match outcome {
                Ok(t) => {
                    let size = t.solutions.len() as f64;
                    let q = size.ln() - ln_e;
                    first_draws.push(t.draw_sizes[0] as f64);
                    accepted.push(size);
                    qs.push(q);
                    total_rejections += t.rejections;
                    let mut r = TrialRecord::new(i as u64, seed);
                    r.instance_digest = t.instance.digest();
                    r.rejected_for_emptiness = t.rejections;
                    r.set("cardinality", size).set("q", q).set("abs_q", q.abs());
                    records.push(r);
                }
                Err(e @ Error::Precondition(_)) => {
                    total_rejections += cfg.max_rejects + 1;
                    // Every draw of a failed trial was empty.
                    first_draws.push(0.0);
                    records.push(TrialRecord { rejected_for_emptiness: cfg.max_rejects + 1, ..TrialRecord::failed(i as u64, seed, &e) });
                }
                Err(e) => return Err(e),
            }
        }
        let abs: Vec<f64> = qs.iter().map(|q| q.abs()).collect();
        let (median_q, median_abs_q, iqr_q, max_abs_q) = if qs.is_empty() {
            (f64::NAN, f64::NAN, f64::NAN, f64::NAN)
        } else {
            (median(&qs), median(&abs), iqr(&qs), abs.iter().copied().fold(0.0, f64::max))
        };
        points.push(ConcentrationPoint {
            n,
            alpha,
            m,
            trials: cfg.trials,
            failed_trials: cfg.trials - qs.len(),
            total_rejections,
            ln_expected_count: ln_e,
            median_q,
            median_abs_q,
            iqr_q,
            max_abs_q,
            median_abs_q_over_ln_n: median_abs_q / (n as f64).ln(),
            centered: median_q.abs() <= iqr_q,
            unconditioned_count: Estimate::of(first_draws),
            conditioned_count: Estimate::of(accepted),
            records,
        });
    }

    let mut alphas: Vec<f64> = points.iter().map(|p| p.alpha).collect();
    alphas.dedup();
    let scaling_fits = alphas
        .into_iter()
        .filter_map(|a| {
            let (xs, ys): (Vec<f64>, Vec<f64>) = points
                .iter()
                .filter(|p| p.alpha == a && p.median_abs_q.is_finite())
                .map(|p| ((p.n as f64).ln(), p.median_abs_q))
                .unzip();
            linear_fit(&xs, &ys).map(|f| (a, f))
        })
        .collect();
    Ok(ConcentrationReport { kappa: cfg.kappa, points, scaling_fits })
}

impl ConcentrationReport {
    pub fn write(&self, out: &mut OutputDir, per_trial: bool) -> Result<()> {
        if per_trial {
            for p in &self.points {
                let name = format!("concentration_n{}_alpha{}.csv", p.n, alpha_tag(p.alpha));
                out.write(&name, records_csv(&p.records).as_bytes())?;
            }
        }
        let mut summary = String::from("n,alpha,m,median_abs_q,iqr_q,max_abs_q,median_abs_q_over_ln_n,failed_trials\n");
        for p in &self.points {
            summary.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                p.n, p.alpha, p.m, p.median_abs_q, p.iqr_q, p.max_abs_q, p.median_abs_q_over_ln_n, p.failed_trials
            ));
        }
        out.write("concentration_summary.csv", summary.as_bytes())?;
        for p in self.points.iter().filter(|p| p.failed_trials > 0) {
            out.warn(format!("n = {}, alpha = {}: {} trials exceeded max_rejects", p.n, p.alpha, p.failed_trials));
        }
        out.write_json("concentration.json", self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_run_is_reproducible() {
        let cfg = ExperimentConfig { n_grid: Some(vec![8, 10]), alpha: Some(0.5), trials: 40, seed: 9, ..Default::default() };
        let a = run_concentration(&cfg).unwrap();
        let b = run_concentration(&cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.points.len(), 2);
        assert_eq!(a.scaling_fits.len(), 1);
        let p = &a.points[1];
        assert_eq!(p.m, 5);
        assert_eq!(p.records.len(), 40);
        assert!(p.records.iter().all(|r| r.get("cardinality").unwrap() >= 2.0));
        assert!(p.conditioned_count.mean >= p.unconditioned_count.mean);
    }
}
