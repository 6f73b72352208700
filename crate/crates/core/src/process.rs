//! The log-count process along the constraint sequence.
//!
//! With `S_t` the solutions of the first `t` constraints and
//! `E|S_t| = 2^n p^t`,
//!
//! ```text
//! Q_t = ln(|S_t| / E|S_t|),   Y_t = (|S_t| / |S_{t-1}| - p) / p,
//! Q_t = sum_{i <= t} ln(1 + Y_i).
//! ```
//!
//! Traces stop at the first empty `S_t`; statistics are conditional on survival.

use std::f64::consts::LN_2;
use std::fmt::Write as _;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::analytic::gauss_p;
use crate::error::{Error, Result};
use crate::rng::PolarNormal;
use crate::sampler::Instance;
use crate::solver::{count_satisfying, enumerate_filtration, Filtration, SolutionSet};
use crate::stats::{linear_fit, quantile_sorted, LinearFit, Moments};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub t: usize,
    pub cardinality: u64,
    pub q: f64,
    /// `Y_0` is defined as 0.
    pub y: f64,
    pub regularity_ratio: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProcessTrace {
    pub n: usize,
    pub kappa: f64,
    pub records: Vec<TraceRecord>,
    pub first_empty_step: Option<usize>,
}

impl ProcessTrace {
    /// CSV with header `t,cardinality,Q,Y,regularity_ratio`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,cardinality,Q,Y,regularity_ratio\n");
        for r in &self.records {
            let ratio = r.regularity_ratio.map(|x| x.to_string()).unwrap_or_default();
            let _ = writeln!(out, "{},{},{},{},{}", r.t, r.cardinality, r.q, r.y, ratio);
        }
        out
    }

    /// `Q` at the last recorded step.
    pub fn final_q(&self) -> f64 {
        self.records.last().map_or(0.0, |r| r.q)
    }
}

/// `ln E|S_t| = n ln 2 + t ln p(kappa)`.
pub fn log_expected_count(n: usize, t: usize, kappa: f64) -> Result<f64> {
    Ok(n as f64 * LN_2 + t as f64 * gauss_p(kappa)?.ln())
}

fn build_trace(inst: &Instance, cardinalities: &[u64]) -> Result<ProcessTrace> {
    let p = gauss_p(inst.kappa())?;
    let ln_p = p.ln();
    let base = inst.n() as f64 * LN_2;
    let mut records = Vec::with_capacity(cardinalities.len());
    let mut first_empty_step = None;
    for (t, &c) in cardinalities.iter().enumerate() {
        if c == 0 {
            first_empty_step = Some(t);
            break;
        }
        let q = if t == 0 { 0.0 } else { (c as f64).ln() - (base + t as f64 * ln_p) };
        let y = if t == 0 { 0.0 } else { (c as f64 / cardinalities[t - 1] as f64 - p) / p };
        records.push(TraceRecord { t, cardinality: c, q, y, regularity_ratio: None });
    }
    Ok(ProcessTrace { n: inst.n(), kappa: inst.kappa(), records, first_empty_step })
}

/// `|S_t|`, `Q_t` and `Y_t` for every `t` up to the first empty set.
pub fn trace(inst: &Instance) -> Result<ProcessTrace> {
    let f = enumerate_filtration(inst, &[])?;
    build_trace(inst, &f.cardinalities)
}

/// [`trace`] with the regularity ratio filled in at `steps` (skipped where
/// `|S_t| < 2` or the trace has already stopped).
pub fn trace_with_regularity<R: Rng + ?Sized>(
    inst: &Instance,
    steps: &[usize],
    pair_budget: usize,
    rng: &mut R,
) -> Result<ProcessTrace> {
    let steps: Vec<usize> = steps.iter().copied().filter(|&t| t <= inst.m()).collect();
    let f = enumerate_filtration(inst, &steps)?;
    let mut tr = trace_from_filtration(inst, &f)?;
    add_regularity(&mut tr, &f, pair_budget, rng)?;
    Ok(tr)
}

/// The trace of `inst` from an already computed filtration of it.
pub fn trace_from_filtration(inst: &Instance, f: &Filtration) -> Result<ProcessTrace> {
    if f.cardinalities.len() != inst.m() + 1 || f.n as usize != inst.n() {
        return Err(Error::Precondition("filtration does not belong to the instance".into()));
    }
    build_trace(inst, &f.cardinalities)
}

/// Fills the regularity ratio at every snapshot step of `f`.
pub fn add_regularity<R: Rng + ?Sized>(
    tr: &mut ProcessTrace,
    f: &Filtration,
    pair_budget: usize,
    rng: &mut R,
) -> Result<()> {
    for (t, snap) in &f.snapshots {
        if let Some(rec) = tr.records.get_mut(*t) {
            if snap.len() >= 2 {
                rec.regularity_ratio = Some(regularity_ratio(snap, rec.q, pair_budget, rng)?);
            }
        }
    }
    Ok(())
}

/// Level of the overlap quantile used by [`regularity_ratio`].
pub const REGULARITY_LEVEL: f64 = 1.0 - 1e-3;

/// Empirical `1 - 10^-3` quantile of `|<sigma1, sigma2>|` over distinct pairs
/// of `s`, divided by `sqrt(n) sqrt(|q| + ln n)`.
///
/// All unordered pairs are used when `|s|^2 <= pair_budget`, otherwise
/// `pair_budget` uniformly drawn pairs of distinct members.
pub fn regularity_ratio<R: Rng + ?Sized>(s: &SolutionSet, q: f64, pair_budget: usize, rng: &mut R) -> Result<f64> {
    let len = s.len();
    if len < 2 {
        return Err(Error::Precondition("regularity needs at least two solutions".into()));
    }
    let n = s.n() as i64;
    let codes = s.codes();
    let overlap = |a: u32, b: u32| (n - 2 * (a ^ b).count_ones() as i64).unsigned_abs() as f64;
    let mut values: Vec<f64> = if len.saturating_mul(len) <= pair_budget {
        let mut v = Vec::with_capacity(len * (len - 1) / 2);
        for i in 0..len {
            for j in i + 1..len {
                v.push(overlap(codes[i], codes[j]));
            }
        }
        v
    } else {
        (0..pair_budget.max(1))
            .map(|_| {
                let i = rng.random_range(0..len);
                let mut j = rng.random_range(0..len - 1);
                if j >= i {
                    j += 1;
                }
                overlap(codes[i], codes[j])
            })
            .collect()
    };
    values.sort_by(f64::total_cmp);
    let nf = n as f64;
    Ok(quantile_sorted(&values, REGULARITY_LEVEL) / (nf.sqrt() * (q.abs() + nf.ln()).sqrt()))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MartingaleEstimate {
    pub mean: f64,
    pub standard_error: f64,
    pub variance: f64,
    pub samples: u64,
    pub set_size: u64,
}

/// Holds `S_t` of `prefix` fixed and averages `Y_{t+1}` over fresh Gaussian
/// constraints. The exact conditional mean is 0.
pub fn martingale_check<R: Rng + ?Sized>(
    prefix: &Instance,
    fresh_constraints: usize,
    rng: &mut R,
) -> Result<MartingaleEstimate> {
    let f = enumerate_filtration(prefix, &[prefix.m()])?;
    let s = &f.snapshots[&prefix.m()];
    let samples = martingale_samples(s, prefix.kappa(), fresh_constraints, rng)?;
    let m = Moments::from_iter(samples);
    Ok(MartingaleEstimate {
        mean: m.mean,
        standard_error: m.std_error(),
        variance: m.variance(),
        samples: m.count,
        set_size: s.len() as u64,
    })
}

/// `Y_{t+1}` for `count` fresh constraints applied to the fixed set `s`.
pub fn martingale_samples<R: Rng + ?Sized>(
    s: &SolutionSet,
    kappa: f64,
    count: usize,
    rng: &mut R,
) -> Result<Vec<f64>> {
    if s.is_empty() {
        return Err(Error::Precondition("S_t is empty".into()));
    }
    let p = gauss_p(kappa)?;
    let n = s.n() as usize;
    let mut gen = PolarNormal::new();
    let mut row = vec![0.0; n];
    let size = s.len() as f64;
    (0..count)
        .map(|_| {
            row.iter_mut().for_each(|x| *x = gen.sample(rng));
            let kept = count_satisfying(s, &row, kappa)? as f64;
            Ok((kept / size - p) / p)
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailReport {
    pub traces: usize,
    pub pooled_values: usize,
    /// `(x, Pr[X > x])` at evenly spaced ranks of the pooled sample.
    pub survival: Vec<(f64, f64)>,
    /// Least-squares fit of `ln Pr[X > x]` against `x` over the bulk.
    pub log_survival_fit: Option<LinearFit>,
    /// `-slope` of the fit.
    pub tail_rate: Option<f64>,
    pub c3: f64,
    pub tau_y: Vec<Option<usize>>,
    pub tau_q: Vec<Option<usize>>,
    pub fraction_tau_y_hit: f64,
    pub fraction_tau_q_hit: f64,
}

/// Minimum number of traces for [`tail_diagnostic`].
pub const MIN_TAIL_TRACES: usize = 100;

/// Pools `x_t = |Y_t| / sqrt((|Q_{t-1}| + ln n) / n)` over traces, reports its
/// survival function and an exponential tail fit, and the first crossings of
///
/// * `tau_Y`: `x_t >= c3 ln n`, and
/// * `tau_Q`: `|Q_t| >= (ln n)^2`.
///
/// Without an explicit `c3`, the 0.99 quantile of the pooled `x` divided by
/// `ln n` is used.
pub fn tail_diagnostic(traces: &[ProcessTrace], c3: Option<f64>) -> Result<TailReport> {
    if traces.len() < MIN_TAIL_TRACES {
        return Err(Error::Precondition(format!(
            "tail diagnostic needs at least {MIN_TAIL_TRACES} traces, got {}",
            traces.len()
        )));
    }
    let normalised = |tr: &ProcessTrace| -> Vec<(usize, f64)> {
        let n = tr.n as f64;
        tr.records
            .windows(2)
            .map(|w| (w[1].t, w[1].y.abs() / ((w[0].q.abs() + n.ln()) / n).sqrt()))
            .collect()
    };
    let mut pooled: Vec<f64> = traces.iter().flat_map(|t| normalised(t).into_iter().map(|(_, x)| x)).collect();
    pooled.sort_by(f64::total_cmp);
    let total = pooled.len();
    if total == 0 {
        return Err(Error::Precondition("traces contain no steps".into()));
    }
    let ln_n = (traces[0].n as f64).ln();

    // Survival at evenly spaced ranks.
    let points = 64.min(total);
    let survival: Vec<(f64, f64)> = (0..points)
        .map(|k| {
            let idx = k * (total - 1) / (points - 1).max(1);
            let x = pooled[idx];
            let above = total - pooled.partition_point(|&v| v <= x);
            (x, above as f64 / total as f64)
        })
        .collect();

    let lo = quantile_sorted(&pooled, 0.5);
    let hi = quantile_sorted(&pooled, 0.99);
    let (xs, ys): (Vec<f64>, Vec<f64>) = pooled
        .iter()
        .enumerate()
        .filter(|&(i, &x)| x >= lo && x <= hi && (i + 1 == total || pooled[i + 1] > x))
        .map(|(i, &x)| (x, ((total - i - 1) as f64 / total as f64).ln()))
        .filter(|(_, y)| y.is_finite())
        .unzip();
    let log_survival_fit = linear_fit(&xs, &ys);
    let tail_rate = log_survival_fit.map(|f| -f.slope);

    let c3 = c3.unwrap_or_else(|| quantile_sorted(&pooled, 0.99) / ln_n);
    let tau_y: Vec<Option<usize>> = traces
        .iter()
        .map(|tr| normalised(tr).into_iter().find(|&(_, x)| x >= c3 * ln_n).map(|(t, _)| t))
        .collect();
    let tau_q: Vec<Option<usize>> = traces
        .iter()
        .map(|tr| {
            let bar = (tr.n as f64).ln().powi(2);
            tr.records.iter().find(|r| r.q.abs() >= bar).map(|r| r.t)
        })
        .collect();
    let frac = |v: &[Option<usize>]| v.iter().filter(|x| x.is_some()).count() as f64 / v.len() as f64;
    Ok(TailReport {
        traces: traces.len(),
        pooled_values: total,
        survival,
        log_survival_fit,
        tail_rate,
        c3,
        fraction_tau_y_hit: frac(&tau_y),
        fraction_tau_q_hit: frac(&tau_q),
        tau_y,
        tau_q,
    })
}
