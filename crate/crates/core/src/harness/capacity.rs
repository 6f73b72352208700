//! Empirical probability that `S` is non-empty as a function of alpha.
//!
//! Each trial samples one instance with the largest constraint count of the
//! alpha grid; the smaller densities use its prefixes, so emptiness is
//! monotone in alpha within every trial.

use serde::{Deserialize, Serialize};

use super::{farm, label, records_csv, trial_seed, Estimate, ExperimentConfig, OutputDir, TrialRecord};
use crate::analytic::alpha_c;
use crate::error::{Error, Result};
use crate::sampler::sample_random_instance;
use crate::solver::enumerate_filtration;

const TAG: u64 = 4;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CapacityCell {
    pub alpha: f64,
    pub m: usize,
    pub nonempty: Estimate,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CapacityRow {
    pub n: usize,
    pub trials: usize,
    pub cells: Vec<CapacityCell>,
    /// Alpha where the curve first drops to 1/2, linearly interpolated.
    pub crossing: Option<f64>,
    #[serde(skip)]
    pub records: Vec<TrialRecord>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CapacityReport {
    pub kappa: f64,
    pub alpha_c: f64,
    pub rows: Vec<CapacityRow>,
}

fn crossing(cells: &[CapacityCell]) -> Option<f64> {
    let k = cells.iter().position(|c| c.nonempty.mean <= 0.5)?;
    if k == 0 {
        return Some(cells[0].alpha);
    }
    let (a, b) = (&cells[k - 1], &cells[k]);
    let (fa, fb) = (a.nonempty.mean, b.nonempty.mean);
    if fa == fb {
        return Some(b.alpha);
    }
    Some(a.alpha + (fa - 0.5) / (fa - fb) * (b.alpha - a.alpha))
}

/// `P(S != empty)` on the alpha grid for each `n`. The `m` override is ignored.
pub fn run_capacity_scan(cfg: &ExperimentConfig) -> Result<CapacityReport> {
    let mut alphas = cfg.alpha_values()?;
    alphas.sort_by(f64::total_cmp);
    alphas.dedup();
    let mut rows = Vec::new();
    for n in cfg.n_values()? {
        let ms: Vec<usize> = alphas.iter().map(|a| (a * n as f64).floor() as usize).collect();
        let m_max = *ms.last().ok_or_else(|| Error::Config("empty alpha grid".into()))?;
        let lbl = label(&[TAG, n as u64, m_max as u64]);
        let records: Vec<TrialRecord> = farm(cfg.trials, |i| {
            let seed = trial_seed(cfg.seed, lbl, i);
            let inst = sample_random_instance(n, m_max, cfg.kappa, seed)?;
            let f = enumerate_filtration(&inst, &[])?;
            let mut r = TrialRecord::new(i, seed);
            r.instance_digest = inst.digest();
            // m_max + 1 when S never empties within the scan.
            let first_empty = f.first_empty_step().unwrap_or(m_max + 1);
            r.set("first_empty_step", first_empty as f64);
            r.set("final_cardinality", f.final_count() as f64);
            Ok(r)
        })
        .into_iter()
        .collect::<Result<_>>()?;
        let cells: Vec<CapacityCell> = alphas
            .iter()
            .zip(&ms)
            .map(|(&alpha, &m)| CapacityCell {
                alpha,
                m,
                nonempty: Estimate::of(
                    records.iter().map(|r| (r.get("first_empty_step").expect("fixed keys") > m as f64) as u8 as f64),
                ),
            })
            .collect();
        rows.push(CapacityRow { n, trials: cfg.trials, crossing: crossing(&cells), cells, records });
    }
    Ok(CapacityReport { kappa: cfg.kappa, alpha_c: alpha_c(cfg.kappa)?, rows })
}

impl CapacityReport {
    pub fn write(&self, out: &mut OutputDir, per_trial: bool) -> Result<()> {
        let mut csv = String::from("n,alpha,m,nonempty_fraction,standard_error,alpha_c\n");
        for row in &self.rows {
            for c in &row.cells {
                csv.push_str(&format!(
                    "{},{},{},{},{},{}\n",
                    row.n, c.alpha, c.m, c.nonempty.mean, c.nonempty.standard_error, self.alpha_c
                ));
            }
            if per_trial {
                out.write(&format!("capacity_n{}_trials.csv", row.n), records_csv(&row.records).as_bytes())?;
            }
        }
        out.write("capacity_scan.csv", csv.as_bytes())?;
        out.write_json("capacity_scan.json", self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::ExperimentKind;

    #[test]
    fn curve_is_monotone_and_crosses() {
        let cfg = ExperimentConfig { n: Some(10), trials: 200, seed: 2, ..Default::default() }
            .resolved(ExperimentKind::CapacityScan)
            .unwrap();
        let r = run_capacity_scan(&cfg).unwrap();
        let row = &r.rows[0];
        assert_eq!(row.cells.len(), 12);
        assert!(row.cells.windows(2).all(|w| w[1].nonempty.mean <= w[0].nonempty.mean));
        assert_eq!(row.cells[0].nonempty.mean, 1.0);
        let c = row.crossing.unwrap();
        assert!(c > 0.5 * r.alpha_c && c < 1.5 * r.alpha_c, "crossing {c}");
    }
}
