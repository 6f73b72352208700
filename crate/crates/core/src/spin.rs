use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

/// Largest dimension a bit-packed configuration can hold.
pub const MAX_SPIN_DIM: u32 = 63;

/// A configuration in `{-1, +1}^n`, bit-packed: bit `i` set means `sigma_i = +1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SpinConfig {
    n: u32,
    code: u64,
}

#[inline]
pub(crate) fn mask(n: u32) -> u64 {
    if n >= 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

impl SpinConfig {
    pub fn new(n: u32, code: u64) -> Result<Self> {
        if n == 0 || n > MAX_SPIN_DIM {
            return Err(domain(format!("spin dimension must be in 1..={MAX_SPIN_DIM}, got {n}")));
        }
        if code > mask(n) {
            return Err(domain(format!("codeword {code:#x} does not fit in {n} bits")));
        }
        Ok(Self { n, code })
    }

    /// Builds a configuration from explicit `+1` / `-1` entries.
    pub fn from_spins(spins: &[i8]) -> Result<Self> {
        let mut code = 0u64;
        for (i, &s) in spins.iter().enumerate() {
            match s {
                1 => code |= 1 << i,
                -1 => {}
                _ => return Err(domain(format!("spin {i} is {s}, expected +1 or -1"))),
            }
        }
        Self::new(spins.len() as u32, code)
    }

    pub fn all_plus(n: u32) -> Result<Self> {
        Self::new(n, mask(n.min(MAX_SPIN_DIM)))
    }

    #[inline]
    pub fn n(&self) -> u32 {
        self.n
    }

    #[inline]
    pub fn code(&self) -> u64 {
        self.code
    }

    /// `sigma_i` as `+1.0` or `-1.0`.
    #[inline]
    pub fn spin(&self, i: usize) -> f64 {
        if self.code >> i & 1 == 1 {
            1.0
        } else {
            -1.0
        }
    }

    pub fn spins(&self) -> Vec<i8> {
        (0..self.n as usize).map(|i| self.spin(i) as i8).collect()
    }

    pub fn flipped(&self, i: usize) -> Self {
        debug_assert!(i < self.n as usize);
        Self { n: self.n, code: self.code ^ (1 << i) }
    }

    /// The antipode `-sigma`.
    pub fn negated(&self) -> Self {
        Self { n: self.n, code: !self.code & mask(self.n) }
    }

    pub fn hamming(&self, other: &Self) -> u32 {
        (self.code ^ other.code).count_ones()
    }

    /// `<sigma, tau> = n - 2 dist(sigma, tau)`.
    pub fn overlap(&self, other: &Self) -> i64 {
        self.n as i64 - 2 * self.hamming(other) as i64
    }
}

impl fmt::Display for SpinConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:x}", self.code)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn construction_and_bounds() {
        assert!(SpinConfig::new(0, 0).is_err());
        assert!(SpinConfig::new(64, 0).is_err());
        assert!(SpinConfig::new(3, 8).is_err());
        let s = SpinConfig::from_spins(&[1, -1, 1]).unwrap();
        assert_eq!(s.code(), 0b101);
        assert_eq!(s.spins(), vec![1, -1, 1]);
        assert!(SpinConfig::from_spins(&[1, 0]).is_err());
        assert_eq!(SpinConfig::all_plus(63).unwrap().code(), mask(63));
    }

    #[test]
    fn overlap_and_antipode() {
        let s = SpinConfig::new(5, 0b10110).unwrap();
        let t = s.negated();
        assert_eq!(t.code(), 0b01001);
        assert_eq!(s.overlap(&t), -5);
        assert_eq!(s.overlap(&s), 5);
        assert_eq!(s.hamming(&s.flipped(2)), 1);
        assert_eq!(s.overlap(&s.flipped(2)), 3);
    }
}
