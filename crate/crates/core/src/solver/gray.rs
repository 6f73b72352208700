//! Gray-code walk over the cube with incrementally updated dot products.
//!
//! The cube is cut into blocks by the top `n - BLOCK_BITS` bits. Each block
//! initialises its `m` dot products from scratch, then walks its low bits in
//! reflected Gray order: flipping coordinate `j` changes every dot product by
//! `+-2 X_ij`. Restarting per block bounds the accumulated rounding.

use rayon::prelude::*;

use super::{check_capability, Decider, SolutionSet};
use crate::error::Result;
use crate::sampler::{signed_dot, Instance};

const BLOCK_BITS: usize = 14;

/// Every configuration satisfying all constraints of `inst`, sorted.
pub fn enumerate(inst: &Instance) -> Result<SolutionSet> {
    check_capability(inst)?;
    let n = inst.n();
    let m = inst.m();
    if m == 0 {
        return SolutionSet::full(n as u32);
    }
    let bits = n.min(BLOCK_BITS);
    let blocks = 1usize << (n - bits);
    let decider = Decider::new(inst, 1 << bits);

    // cols[j * m + i] = 2 X_ij
    let mut cols = vec![0.0; n * m];
    for (i, row) in inst.rows().enumerate() {
        for (j, &x) in row.iter().enumerate() {
            cols[j * m + i] = 2.0 * x;
        }
    }

    let walk = |block: usize| walk_block(inst, &decider, &cols, bits, block);
    let parts: Vec<Vec<u32>> = if blocks > 1 {
        (0..blocks).into_par_iter().map(walk).collect()
    } else {
        vec![walk(0)]
    };
    Ok(SolutionSet::from_sorted(n as u32, m, parts.concat()))
}

fn walk_block(inst: &Instance, decider: &Decider<'_>, cols: &[f64], bits: usize, block: usize) -> Vec<u32> {
    let m = inst.m();
    let mut code = (block as u64) << bits;
    let mut dots: Vec<f64> = inst.rows().map(|r| signed_dot(r, code)).collect();
    let mut found = Vec::new();

    let accept = |dots: &[f64], code: u64| dots.iter().enumerate().all(|(i, &d)| decider.holds(i, d, code));

    if accept(&dots, code) {
        found.push(code as u32);
    }
    for step in 1u64..1 << bits {
        let j = step.trailing_zeros() as usize;
        code ^= 1 << j;
        let sign = if code >> j & 1 == 1 { 1.0 } else { -1.0 };
        let col = &cols[j * m..(j + 1) * m];
        for (d, &c) in dots.iter_mut().zip(col) {
            *d += sign * c;
        }
        if accept(&dots, code) {
            found.push(code as u32);
        }
    }
    found.sort_unstable();
    found
}
