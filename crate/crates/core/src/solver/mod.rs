//! Exhaustive solution sets over the Hamming cube for `n <= 30`.
//!
//! Both kernels decide each constraint with a fast floating-point sum and
//! fall back to [`signed_dot`] whenever the fast value lies within its
//! rounding band of the threshold, so results are bit-identical to naive
//! per-configuration evaluation and independent of the worker count.

mod filter;
mod gray;

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sampler::{signed_dot, Instance};
use crate::spin::SpinConfig;

pub use filter::{count_satisfying, enumerate_filtration};
pub use gray::enumerate;

/// Solutions of all constraints of `inst`, using the faster kernel for its size.
pub fn solve(inst: &Instance) -> Result<SolutionSet> {
    if inst.n() <= 10 {
        return enumerate(inst);
    }
    let m = inst.m();
    let mut f = enumerate_filtration(inst, &[m])?;
    Ok(f.snapshots.remove(&m).expect("snapshot at m was requested"))
}

/// Largest dimension the exhaustive kernels accept.
pub const MAX_SOLVER_DIM: usize = 30;

pub(crate) fn check_capability(inst: &Instance) -> Result<()> {
    if inst.n() > MAX_SOLVER_DIM {
        return Err(Error::Capability(format!(
            "exhaustive enumeration supports n <= {MAX_SOLVER_DIM}, got n = {}",
            inst.n()
        )));
    }
    Ok(())
}

/// Per-constraint decision with a guard band around the threshold.
pub(crate) struct Decider<'a> {
    inst: &'a Instance,
    bound: f64,
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl<'a> Decider<'a> {
    /// `ops` bounds the number of rounded additions behind each fast value.
    pub(crate) fn new(inst: &'a Instance, ops: usize) -> Self {
        let bound = inst.threshold();
        let slack = 4.0 * (ops + 2 * inst.n() + 4) as f64 * f64::EPSILON;
        let (lo, hi) = inst
            .rows()
            .map(|r| {
                let band = slack * r.iter().map(|x| x.abs()).sum::<f64>();
                (bound - band, bound + band)
            })
            .unzip();
        Self { inst, bound, lo, hi }
    }

    #[inline(always)]
    pub(crate) fn holds(&self, i: usize, fast: f64, code: u64) -> bool {
        let a = fast.abs();
        if a <= self.lo[i] {
            true
        } else if a > self.hi[i] {
            false
        } else {
            signed_dot(self.inst.row(i), code).abs() <= self.bound
        }
    }
}

/// Sorted codewords of every configuration satisfying all constraints.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolutionSet {
    n: u32,
    m: usize,
    codes: Vec<u32>,
}

impl SolutionSet {
    pub fn new(n: u32, m: usize, codes: Vec<u32>) -> Result<Self> {
        if n == 0 || n as usize > MAX_SOLVER_DIM {
            return Err(Error::Capability(format!("solution sets need 1 <= n <= {MAX_SOLVER_DIM}")));
        }
        if codes.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Format("codewords are not strictly increasing".into()));
        }
        if codes.last().is_some_and(|&c| u64::from(c) >> n != 0) {
            return Err(Error::Format(format!("codeword exceeds {n} bits")));
        }
        Ok(Self { n, m, codes })
    }

    /// The whole cube `{-1, +1}^n`.
    pub fn full(n: u32) -> Result<Self> {
        if n == 0 || n as usize > MAX_SOLVER_DIM {
            return Err(Error::Capability(format!("solution sets need 1 <= n <= {MAX_SOLVER_DIM}")));
        }
        Ok(Self { n, m: 0, codes: (0..1u32 << n).collect() })
    }

    pub(crate) fn from_sorted(n: u32, m: usize, codes: Vec<u32>) -> Self {
        debug_assert!(codes.windows(2).all(|w| w[0] < w[1]));
        Self { n, m, codes }
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn len(&self) -> usize {
        self.codes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codes.is_empty()
    }

    pub fn codes(&self) -> &[u32] {
        &self.codes
    }

    pub fn get(&self, index: usize) -> SpinConfig {
        SpinConfig::new(self.n, self.codes[index] as u64).expect("stored codes fit")
    }

    pub fn iter(&self) -> impl Iterator<Item = SpinConfig> + '_ {
        self.codes.iter().map(|&c| SpinConfig::new(self.n, c as u64).expect("stored codes fit"))
    }

    #[inline]
    pub fn contains_code(&self, code: u64) -> bool {
        code <= u32::MAX as u64 && self.codes.binary_search(&(code as u32)).is_ok()
    }

    pub fn contains(&self, sigma: SpinConfig) -> bool {
        sigma.n() == self.n && self.contains_code(sigma.code())
    }

    pub fn index_of(&self, sigma: SpinConfig) -> Option<usize> {
        if sigma.n() != self.n || sigma.code() > u32::MAX as u64 {
            return None;
        }
        self.codes.binary_search(&(sigma.code() as u32)).ok()
    }

    /// Whether `sigma in S` implies `-sigma in S`.
    pub fn is_antipodally_closed(&self) -> bool {
        let mask = (1u64 << self.n) - 1;
        self.codes.iter().all(|&c| self.contains_code(!(c as u64) & mask))
    }

    /// Newline-delimited hex codewords preceded by a one-line JSON header.
    pub fn to_hex_text(&self) -> String {
        let header = serde_json::json!({ "n": self.n, "m": self.m, "count": self.codes.len() });
        let mut out = header.to_string();
        out.push('\n');
        for c in &self.codes {
            let _ = writeln!(out, "{c:x}");
        }
        out
    }

    pub fn from_hex_text(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct Header {
            n: u32,
            m: usize,
            count: usize,
        }
        let mut lines = text.lines();
        let header: Header = serde_json::from_str(
            lines.next().ok_or_else(|| Error::Format("empty solution file".into()))?,
        )?;
        let codes = lines
            .filter(|l| !l.is_empty())
            .map(|l| u32::from_str_radix(l.trim(), 16).map_err(|e| Error::Format(format!("bad codeword `{l}`: {e}"))))
            .collect::<Result<Vec<_>>>()?;
        if codes.len() != header.count {
            return Err(Error::Format(format!("header says {} codewords, found {}", header.count, codes.len())));
        }
        Self::new(header.n, header.m, codes)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_hex_text())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_hex_text(&std::fs::read_to_string(path)?)
    }
}

/// Cardinalities `|S_t|` for `t = 0..=m`, with selected snapshots.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Filtration {
    pub n: u32,
    pub cardinalities: Vec<u64>,
    pub snapshots: BTreeMap<usize, SolutionSet>,
}

impl Filtration {
    pub fn m(&self) -> usize {
        self.cardinalities.len() - 1
    }

    pub fn final_count(&self) -> u64 {
        *self.cardinalities.last().expect("t = 0 is always present")
    }

    /// First `t` with `|S_t| = 0`.
    pub fn first_empty_step(&self) -> Option<usize> {
        self.cardinalities.iter().position(|&c| c == 0)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,cardinality\n");
        for (t, c) in self.cardinalities.iter().enumerate() {
            let _ = writeln!(out, "{t},{c}");
        }
        out
    }
}

/// Number of solutions at each overlap with `reference`.
pub fn overlap_histogram(s: &SolutionSet, reference: SpinConfig) -> Result<BTreeMap<i64, u64>> {
    if reference.n() != s.n() {
        return Err(Error::Domain(format!("reference has dimension {}, set has {}", reference.n(), s.n())));
    }
    let mut hist = BTreeMap::new();
    for sigma in s.iter() {
        *hist.entry(sigma.overlap(&reference)).or_insert(0) += 1;
    }
    Ok(hist)
}

/// Smallest Hamming distance from `sigma` to another member of `s`, with the
/// smallest-codeword witness attaining it.
pub fn nearest_other(s: &SolutionSet, sigma: SpinConfig) -> Result<Option<(u32, SpinConfig)>> {
    let Some(own) = s.index_of(sigma) else {
        return Err(Error::Precondition("configuration is not in the solution set".into()));
    };
    let code = sigma.code() as u32;
    let best = s
        .codes()
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != own)
        .map(|(_, &c)| ((c ^ code).count_ones(), c))
        .min();
    Ok(best.map(|(d, c)| (d, SpinConfig::new(s.n(), c as u64).expect("stored codes fit"))))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampler::{sample_planted_instance, sample_random_instance, satisfies};

    fn naive(inst: &Instance) -> Vec<u32> {
        (0..1u64 << inst.n())
            .filter(|&c| {
                let s = SpinConfig::new(inst.n() as u32, c).unwrap();
                inst.rows().all(|r| satisfies(r, s, inst.kappa()).unwrap())
            })
            .map(|c| c as u32)
            .collect()
    }

    #[test]
    fn no_constraints_gives_whole_cube() {
        let inst = sample_random_instance(5, 0, 1.0, 3).unwrap();
        let s = enumerate(&inst).unwrap();
        assert_eq!(s.len(), 32);
        assert_eq!(s, SolutionSet::full(5).unwrap());
        let f = enumerate_filtration(&inst, &[0]).unwrap();
        assert_eq!(f.cardinalities, vec![32]);
    }

    #[test]
    fn hand_computed_two_spin_instance() {
        let inst = Instance::from_rows(2, 1.0, vec![0.1, -0.2], crate::Provenance::Random, 0).unwrap();
        assert_eq!(enumerate(&inst).unwrap().codes(), &[0, 1, 2, 3]);
    }

    #[test]
    fn kernels_match_naive_evaluation() {
        for seed in 0..30 {
            let n = 1 + (seed as usize % 13);
            let m = seed as usize % 9;
            let inst = sample_random_instance(n, m, 0.4 + 0.05 * seed as f64, seed).unwrap();
            let want = naive(&inst);
            let got = enumerate(&inst).unwrap();
            assert_eq!(got.codes(), &want[..], "gray n={n} m={m}");
            let f = enumerate_filtration(&inst, &[m]).unwrap();
            assert_eq!(f.snapshots[&m].codes(), &want[..], "filter n={n} m={m}");
            assert_eq!(f.final_count(), want.len() as u64);
        }
    }

    #[test]
    fn boundary_ties_are_satisfied() {
        // sigma = all plus gives exactly kappa sqrt(n) = 2.
        let inst = Instance::from_rows(4, 1.0, vec![0.5; 4], crate::Provenance::Random, 0).unwrap();
        let all_plus = 0b1111;
        assert!(enumerate(&inst).unwrap().contains_code(all_plus));
        let f = enumerate_filtration(&inst, &[1]).unwrap();
        assert!(f.snapshots[&1].contains_code(all_plus));
    }

    #[test]
    fn filtration_cardinalities() {
        let inst = sample_random_instance(11, 12, 1.0, 8).unwrap();
        let f = enumerate_filtration(&inst, &[0, 3, 12]).unwrap();
        assert_eq!(f.cardinalities[0], 1 << 11);
        assert!(f.cardinalities.windows(2).all(|w| w[0] >= w[1]));
        assert_eq!(f.snapshots[&0].len(), 1 << 11);
        for (&t, snap) in &f.snapshots {
            assert_eq!(snap.len() as u64, f.cardinalities[t]);
            assert_eq!(snap, &enumerate(&inst.prefix(t)).unwrap());
        }
        assert!(enumerate_filtration(&inst, &[13]).is_err());
    }

    #[test]
    fn capability_limit() {
        let inst = sample_random_instance(31, 1, 1.0, 0).unwrap();
        assert!(matches!(enumerate(&inst), Err(Error::Capability(_))));
        assert!(matches!(enumerate_filtration(&inst, &[]), Err(Error::Capability(_))));
    }

    #[test]
    fn histogram_and_nearest() {
        let star = SpinConfig::new(10, 0b1100110101).unwrap();
        let inst = sample_planted_instance(10, 8, 1.0, star, 4).unwrap();
        let s = enumerate(&inst).unwrap();
        assert!(s.is_antipodally_closed());
        let hist = overlap_histogram(&s, star).unwrap();
        assert_eq!(hist[&10], 1);
        assert_eq!(hist.values().sum::<u64>(), s.len() as u64);
        for (&k, &v) in &hist {
            assert_eq!(hist.get(&-k), Some(&v));
        }
        let (d, w) = nearest_other(&s, star).unwrap().unwrap();
        assert!((1..=10).contains(&d));
        assert!(s.contains(w) && w != star);
    }

    #[test]
    fn nearest_in_antipodal_pair() {
        let s = SolutionSet::new(6, 0, vec![0b000111, 0b111000]).unwrap();
        let (d, w) = nearest_other(&s, s.get(0)).unwrap().unwrap();
        assert_eq!(d, 6);
        assert_eq!(w, s.get(1));
        let missing = SpinConfig::new(6, 1).unwrap();
        assert!(matches!(nearest_other(&s, missing), Err(Error::Precondition(_))));
    }

    #[test]
    fn hex_file_round_trip() {
        let inst = sample_random_instance(9, 6, 1.0, 2).unwrap();
        let s = enumerate(&inst).unwrap();
        let text = s.to_hex_text();
        assert!(text.lines().next().unwrap().contains("\"count\""));
        assert_eq!(SolutionSet::from_hex_text(&text).unwrap(), s);
        assert!(SolutionSet::new(3, 0, vec![2, 1]).is_err());
        assert!(SolutionSet::new(3, 0, vec![1, 8]).is_err());
    }

    #[test]
    fn filtration_csv() {
        let inst = sample_random_instance(4, 2, 1.0, 2).unwrap();
        let f = enumerate_filtration(&inst, &[]).unwrap();
        let csv = f.to_csv();
        assert!(csv.starts_with("t,cardinality\n0,16\n"));
        assert_eq!(csv.lines().count(), 4);
    }
}
