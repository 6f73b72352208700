//! Reproducible random streams and the frozen Gaussian generator.
//!
//! Every stream is a ChaCha8 generator keyed by a 64-bit seed, with the
//! ChaCha stream id selecting a disjoint sub-stream. Gaussian variates use
//! the Marsaglia polar method on 53-bit uniforms, so a seed produces the same
//! numbers on every platform and build.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
pub use rand_chacha::ChaCha8Rng;

/// Name recorded in instance metadata for the variate generator below.
pub const GAUSSIAN_ALGORITHM: &str = "chacha8-marsaglia-polar";

/// Sub-stream `index` of the master `seed`.
pub fn stream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Mixes a label into a seed so that unrelated uses of one master seed draw
/// from unrelated keys (SplitMix64 finaliser).
pub fn derive_seed(seed: u64, label: u64) -> u64 {
    let mut z = seed ^ label.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Marsaglia polar sampler. Keeps the second variate of each accepted pair.
#[derive(Clone, Debug, Default)]
pub struct PolarNormal {
    spare: Option<f64>,
}

impl PolarNormal {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn sample<R: Rng + ?Sized>(&mut self, rng: &mut R) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        loop {
            let u = 2.0 * rng.random::<f64>() - 1.0;
            let v = 2.0 * rng.random::<f64>() - 1.0;
            let s = u * u + v * v;
            if s > 0.0 && s < 1.0 {
                let scale = (-2.0 * s.ln() / s).sqrt();
                self.spare = Some(v * scale);
                return u * scale;
            }
        }
    }
}
