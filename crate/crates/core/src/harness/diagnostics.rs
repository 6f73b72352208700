//! Traces of the log-count process with martingale, tail and overlap checks.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{alpha_tag, farm, label, trial_seed, Estimate, ExperimentConfig, OutputDir};
use crate::error::{Error, Result};
use crate::process::{
    martingale_samples, regularity_ratio, tail_diagnostic, trace_from_filtration, ProcessTrace, TailReport,
    MIN_TAIL_TRACES,
};
use crate::rng::stream;
use crate::sampler::sample_random_instance;
use crate::solver::enumerate_filtration;
use crate::stats::median;

const TAG: u64 = 5;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MartingaleStep {
    pub t: usize,
    /// Traces with `S_t` non-empty.
    pub traces_used: usize,
    pub estimate: Estimate,
    /// `mean / se`; the exact conditional mean is 0.
    pub z: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegularityStep {
    pub t: usize,
    pub count: usize,
    pub median: f64,
    pub max: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsPoint {
    pub n: usize,
    pub alpha: f64,
    pub m: usize,
    pub trials: usize,
    pub traces_reaching_m: usize,
    /// Largest `|Q_t - sum ln(1 + Y_i)|` over all traces and steps.
    pub max_telescoping_error: f64,
    pub martingale: Vec<MartingaleStep>,
    pub regularity: Vec<RegularityStep>,
    pub tail: Option<TailReport>,
    #[serde(skip)]
    pub traces: Vec<ProcessTrace>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsReport {
    pub kappa: f64,
    pub points: Vec<DiagnosticsPoint>,
}

struct TraceOutcome {
    trace: ProcessTrace,
    martingale: Vec<Option<Vec<f64>>>,
}

fn telescoping_error(tr: &ProcessTrace) -> f64 {
    let mut sum = 0.0;
    let mut worst: f64 = 0.0;
    for r in tr.records.iter().skip(1) {
        sum += r.y.ln_1p();
        worst = worst.max((r.q - sum).abs());
    }
    worst
}

fn check_steps(steps: &[usize], m: usize, what: &str) -> Result<()> {
    match steps.iter().find(|&&t| t > m) {
        Some(t) => Err(Error::Config(format!("{what} step {t} exceeds m = {m}"))),
        None => Ok(()),
    }
}

/// Unconditioned random traces at every grid point.
pub fn run_process_diagnostics(cfg: &ExperimentConfig) -> Result<DiagnosticsReport> {
    let mut points = Vec::new();
    for (n, alpha, m) in cfg.grid_points()? {
        let mart_steps = cfg.martingale_steps.clone().unwrap_or_else(|| vec![m / 4, m / 2, 3 * m / 4]);
        let reg_steps = cfg.regularity_steps.clone().unwrap_or_else(|| vec![m / 2, m]);
        check_steps(&mart_steps, m, "martingale")?;
        check_steps(&reg_steps, m, "regularity")?;
        let snapshot_steps: Vec<usize> = mart_steps.iter().chain(&reg_steps).copied().collect();
        let per_trace = cfg.fresh_constraints.div_ceil(cfg.trials);

        let lbl = label(&[TAG, n as u64, m as u64]);
        let outcomes: Vec<TraceOutcome> = farm(cfg.trials, |i| {
            let seed = trial_seed(cfg.seed, lbl, i);
            let inst = sample_random_instance(n, m, cfg.kappa, seed)?;
            let f = enumerate_filtration(&inst, &snapshot_steps)?;
            let mut trace = trace_from_filtration(&inst, &f)?;
            let mut rng = stream(seed, 1);
            for &t in &reg_steps {
                let s = &f.snapshots[&t];
                if let Some(rec) = trace.records.get_mut(t) {
                    if s.len() >= 2 {
                        rec.regularity_ratio = Some(regularity_ratio(s, rec.q, cfg.pair_budget, &mut rng)?);
                    }
                }
            }
            let martingale = mart_steps
                .iter()
                .map(|t| {
                    let s = &f.snapshots[t];
                    if s.is_empty() {
                        Ok(None)
                    } else {
                        martingale_samples(s, cfg.kappa, per_trace, &mut rng).map(Some)
                    }
                })
                .collect::<Result<_>>()?;
            Ok(TraceOutcome { trace, martingale })
        })
        .into_iter()
        .collect::<Result<_>>()?;

        let martingale = mart_steps
            .iter()
            .enumerate()
            .map(|(k, &t)| {
                let used: Vec<&Vec<f64>> = outcomes.iter().filter_map(|o| o.martingale[k].as_ref()).collect();
                let estimate = Estimate::of(used.iter().flat_map(|v| v.iter().copied()));
                let z = (estimate.standard_error > 0.0 && estimate.standard_error.is_finite())
                    .then(|| estimate.mean / estimate.standard_error);
                MartingaleStep { t, traces_used: used.len(), estimate, z }
            })
            .collect();
        let traces: Vec<ProcessTrace> = outcomes.into_iter().map(|o| o.trace).collect();
        let regularity = reg_steps
            .iter()
            .map(|&t| {
                let ratios: Vec<f64> =
                    traces.iter().filter_map(|tr| tr.records.get(t).and_then(|r| r.regularity_ratio)).collect();
                RegularityStep {
                    t,
                    count: ratios.len(),
                    median: if ratios.is_empty() { f64::NAN } else { median(&ratios) },
                    max: ratios.iter().copied().fold(f64::NAN, f64::max),
                }
            })
            .collect();
        let tail = if traces.len() >= MIN_TAIL_TRACES { Some(tail_diagnostic(&traces, cfg.c3)?) } else { None };
        points.push(DiagnosticsPoint {
            n,
            alpha,
            m,
            trials: cfg.trials,
            traces_reaching_m: traces.iter().filter(|t| t.first_empty_step.is_none()).count(),
            max_telescoping_error: traces.iter().map(telescoping_error).fold(0.0, f64::max),
            martingale,
            regularity,
            tail,
            traces,
        });
    }
    Ok(DiagnosticsReport { kappa: cfg.kappa, points })
}

impl DiagnosticsReport {
    pub fn write(&self, out: &mut OutputDir, per_trial: bool) -> Result<()> {
        for p in &self.points {
            let stem = format!("process_n{}_alpha{}", p.n, alpha_tag(p.alpha));
            if per_trial {
                let mut csv = String::from("trial,t,cardinality,Q,Y,regularity_ratio\n");
                for (i, tr) in p.traces.iter().enumerate() {
                    for line in tr.to_csv().lines().skip(1) {
                        let _ = writeln!(csv, "{i},{line}");
                    }
                }
                out.write(&format!("{stem}_traces.csv"), csv.as_bytes())?;
            }
            if let Some(tail) = &p.tail {
                let mut csv = String::from("x,survival\n");
                for (x, s) in &tail.survival {
                    let _ = writeln!(csv, "{x},{s}");
                }
                out.write(&format!("{stem}_tail.csv"), csv.as_bytes())?;
            } else {
                out.warn(format!(
                    "n = {}, alpha = {}: tail diagnostic needs at least {MIN_TAIL_TRACES} traces",
                    p.n, p.alpha
                ));
            }
        }
        out.write_json("process_diagnostics.json", self)
    }
}
