//! Freezing and clustering observables of a solution set.
//!
//! A coordinate of `sigma in S` is free when flipping it lands in `S` and
//! frozen otherwise. Clusters are the connected components of `S` under
//! single-coordinate flips.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::solver::{nearest_other, SolutionSet};
use crate::spin::SpinConfig;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolutionStats {
    pub code: u32,
    pub frozen_coordinates: u32,
    /// `None` only for a single-element set.
    pub nearest_other_distance: Option<u32>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusterReport {
    pub n: u32,
    pub solution_count: usize,
    /// Component sizes in decreasing order.
    pub cluster_sizes: Vec<usize>,
    pub isolated_count: usize,
    pub per_solution: Vec<SolutionStats>,
}

impl ClusterReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// CSV with header `code,frozen,nearest` (codes in hex).
    pub fn per_solution_csv(&self) -> String {
        let mut out = String::from("code,frozen,nearest\n");
        for s in &self.per_solution {
            let nearest = s.nearest_other_distance.map(|d| d.to_string()).unwrap_or_default();
            let _ = writeln!(out, "{:x},{},{}", s.code, s.frozen_coordinates, nearest);
        }
        out
    }
}

fn require_member(s: &SolutionSet, sigma: SpinConfig) -> Result<()> {
    if s.contains(sigma) {
        Ok(())
    } else {
        Err(Error::Precondition("configuration is not in the solution set".into()))
    }
}

fn frozen_of_code(s: &SolutionSet, code: u64) -> u32 {
    (0..s.n()).filter(|&i| !s.contains_code(code ^ (1 << i))).count() as u32
}

/// Coordinates of `sigma` whose flip leaves `s`.
pub fn frozen_count(s: &SolutionSet, sigma: SpinConfig) -> Result<u32> {
    require_member(s, sigma)?;
    Ok(frozen_of_code(s, sigma.code()))
}

/// True when no other solution lies within Hamming distance `radius`.
pub fn isolation_verdict(s: &SolutionSet, sigma: SpinConfig, radius: u32) -> Result<bool> {
    require_member(s, sigma)?;
    if radius > s.n() {
        return Err(Error::Domain(format!("radius {radius} exceeds n = {}", s.n())));
    }
    Ok(match nearest_other(s, sigma)? {
        Some((d, _)) => d > radius,
        None => true,
    })
}

struct DisjointSets {
    parent: Vec<u32>,
    size: Vec<u32>,
}

impl DisjointSets {
    fn new(n: usize) -> Self {
        Self { parent: (0..n as u32).collect(), size: vec![1; n] }
    }

    fn find(&mut self, mut x: u32) -> u32 {
        while self.parent[x as usize] != x {
            let grand = self.parent[self.parent[x as usize] as usize];
            self.parent[x as usize] = grand;
            x = grand;
        }
        x
    }

    fn union(&mut self, a: u32, b: u32) {
        let (mut a, mut b) = (self.find(a), self.find(b));
        if a == b {
            return;
        }
        if self.size[a as usize] < self.size[b as usize] {
            std::mem::swap(&mut a, &mut b);
        }
        self.parent[b as usize] = a;
        self.size[a as usize] += self.size[b as usize];
    }
}

/// Connected components under single flips, plus per-solution freezing data.
pub fn clusters(s: &SolutionSet) -> ClusterReport {
    let codes = s.codes();
    let mut sets = DisjointSets::new(codes.len());
    for (i, &c) in codes.iter().enumerate() {
        for j in 0..s.n() {
            let nb = c ^ (1 << j);
            if nb > c {
                if let Ok(k) = codes.binary_search(&nb) {
                    sets.union(i as u32, k as u32);
                }
            }
        }
    }
    let roots: Vec<u32> = (0..codes.len() as u32).filter(|&i| sets.find(i) == i).collect();
    let mut cluster_sizes: Vec<usize> = roots.iter().map(|&i| sets.size[i as usize] as usize).collect();
    cluster_sizes.sort_unstable_by(|a, b| b.cmp(a));

    let per_solution: Vec<SolutionStats> = codes
        .par_iter()
        .map(|&c| {
            let frozen = frozen_of_code(s, c as u64);
            let nearest = if frozen < s.n() {
                Some(1)
            } else {
                codes.iter().filter(|&&o| o != c).map(|&o| (o ^ c).count_ones()).min()
            };
            SolutionStats { code: c, frozen_coordinates: frozen, nearest_other_distance: nearest }
        })
        .collect();
    let isolated_count = per_solution.iter().filter(|p| p.frozen_coordinates == s.n()).count();
    ClusterReport { n: s.n(), solution_count: codes.len(), cluster_sizes, isolated_count, per_solution }
}
