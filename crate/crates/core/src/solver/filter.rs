//! Constraint-by-constraint filtering of survivor lists.
//!
//! Coordinates are split into a low half of `L` bits and a high half. For
//! each constraint the partial sums over either half are tabulated once, so
//! `<X_i, sigma> = low_i[sigma_lo] + high_i[sigma_hi]`. For every high half
//! the survivor list of low halves is filtered by one constraint at a time,
//! which yields `|S_t|` for all `t` at a cost proportional to the survivors.

use std::collections::BTreeMap;

use rayon::prelude::*;

use super::{check_capability, Decider, Filtration, SolutionSet};
use crate::error::{Error, Result};
use crate::sampler::Instance;

const SEQUENTIAL_DIM: usize = 16;

/// Partial sums `sum_{j in half} sigma_j x_j` for every assignment of the half.
fn half_table(row: &[f64]) -> Vec<f64> {
    let mut table = vec![0.0; 1 << row.len()];
    table[0] = -row.iter().sum::<f64>();
    for c in 1..table.len() {
        let j = c.trailing_zeros() as usize;
        table[c] = table[c & (c - 1)] + 2.0 * row[j];
    }
    table
}

struct Tables {
    low_bits: usize,
    low: Vec<Vec<f64>>,
    high: Vec<Vec<f64>>,
}

impl Tables {
    fn new(inst: &Instance) -> Self {
        let low_bits = inst.n().div_ceil(2);
        let (low, high) = inst
            .rows()
            .map(|r| (half_table(&r[..low_bits]), half_table(&r[low_bits..])))
            .unzip();
        Self { low_bits, low, high }
    }
}

struct Partial {
    counts: Vec<u64>,
    snaps: Vec<Vec<u32>>,
}

/// `|S_t|` for every `t = 0..=m`, retaining the full sets at `snapshot_steps`.
pub fn enumerate_filtration(inst: &Instance, snapshot_steps: &[usize]) -> Result<Filtration> {
    check_capability(inst)?;
    let n = inst.n();
    let m = inst.m();
    if let Some(&bad) = snapshot_steps.iter().find(|&&t| t > m) {
        return Err(Error::Domain(format!("snapshot step {bad} exceeds m = {m}")));
    }
    let mut steps: Vec<usize> = snapshot_steps.to_vec();
    steps.sort_unstable();
    steps.dedup();

    let tables = Tables::new(inst);
    let decider = Decider::new(inst, n + 2);
    let high_count = 1usize << (n - tables.low_bits);

    let run = |high: usize| filter_high(inst, &tables, &decider, &steps, high);
    let partials: Vec<Partial> = if n > SEQUENTIAL_DIM {
        (0..high_count).into_par_iter().map(run).collect()
    } else {
        (0..high_count).map(run).collect()
    };

    let mut cardinalities = vec![0u64; m + 1];
    let mut snap_codes: Vec<Vec<u32>> = vec![Vec::new(); steps.len()];
    for part in partials {
        for (acc, c) in cardinalities.iter_mut().zip(&part.counts) {
            *acc += c;
        }
        for (acc, s) in snap_codes.iter_mut().zip(part.snaps) {
            acc.extend(s);
        }
    }
    let snapshots: BTreeMap<usize, SolutionSet> = steps
        .iter()
        .zip(snap_codes)
        .map(|(&t, codes)| (t, SolutionSet::from_sorted(n as u32, t, codes)))
        .collect();
    Ok(Filtration { n: n as u32, cardinalities, snapshots })
}

fn filter_high(inst: &Instance, tables: &Tables, decider: &Decider<'_>, steps: &[usize], high: usize) -> Partial {
    let m = inst.m();
    let low_bits = tables.low_bits;
    let prefix = (high as u64) << low_bits;
    let mut alive: Vec<u32> = (0..1u32 << low_bits).collect();
    let mut counts = vec![0u64; m + 1];
    let mut snaps = vec![Vec::new(); steps.len()];
    let mut next_snap = 0;

    let mut record = |t: usize, alive: &[u32], next_snap: &mut usize| {
        while *next_snap < steps.len() && steps[*next_snap] == t {
            snaps[*next_snap] = alive.iter().map(|&l| (prefix | l as u64) as u32).collect();
            *next_snap += 1;
        }
    };

    counts[0] = alive.len() as u64;
    record(0, &alive, &mut next_snap);
    for i in 0..m {
        let shift = tables.high[i][high];
        let low = &tables.low[i];
        let mut kept = 0;
        for r in 0..alive.len() {
            let l = alive[r];
            let keep = decider.holds(i, low[l as usize] + shift, prefix | l as u64);
            alive[kept] = l;
            kept += keep as usize;
        }
        alive.truncate(kept);
        counts[i + 1] = alive.len() as u64;
        record(i + 1, &alive, &mut next_snap);
        if alive.is_empty() {
            break;
        }
    }
    // Remaining snapshot requests see the empty list.
    Partial { counts, snaps }
}

/// How many members of `s` satisfy one extra constraint `row` at threshold
/// `kappa sqrt(n)`, evaluated exactly.
pub fn count_satisfying(s: &SolutionSet, row: &[f64], kappa: f64) -> Result<u64> {
    let n = s.n() as usize;
    if row.len() != n {
        return Err(Error::Domain(format!("row has dimension {}, set has {n}", row.len())));
    }
    let low_bits = n.div_ceil(2);
    let low = half_table(&row[..low_bits]);
    let high = half_table(&row[low_bits..]);
    let bound = crate::sampler::threshold(kappa, n);
    let band = 4.0 * (4 * n + 8) as f64 * f64::EPSILON * row.iter().map(|x| x.abs()).sum::<f64>();
    let (lo, hi) = (bound - band, bound + band);
    let mask = (1u32 << low_bits) - 1;
    let count = s
        .codes()
        .iter()
        .filter(|&&c| {
            let a = (low[(c & mask) as usize] + high[(c >> low_bits) as usize]).abs();
            if a <= lo {
                true
            } else if a > hi {
                false
            } else {
                crate::sampler::signed_dot(row, c as u64).abs() <= bound
            }
        })
        .count();
    Ok(count as u64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn count_satisfying_matches_filter() {
        let inst = crate::sampler::sample_random_instance(9, 4, 1.0, 5).unwrap();
        let f = enumerate_filtration(&inst, &[3, 4]).unwrap();
        let got = count_satisfying(&f.snapshots[&3], inst.row(3), 1.0).unwrap();
        assert_eq!(got, f.cardinalities[4]);
        assert!(count_satisfying(&f.snapshots[&3], &[0.0; 3], 1.0).is_err());
    }

    #[test]
    fn half_table_matches_direct_sums() {
        let row = [0.3, -1.2, 0.7];
        let t = half_table(&row);
        for c in 0..8u64 {
            let direct = crate::sampler::signed_dot(&row, c);
            assert!((t[c as usize] - direct).abs() < 1e-15);
        }
    }
}
