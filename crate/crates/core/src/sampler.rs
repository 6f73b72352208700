//! Random and planted perceptron instances.
//!
//! A random instance is `m` rows of i.i.d. standard normals drawn row-major
//! from the stream keyed by `seed`. A planted instance draws each row from the
//! standard Gaussian conditioned on `|<X, sigma*>| <= kappa sqrt(n)`, built as
//! `X = g sigma*/sqrt(n) + W_perp` with `g` a normal truncated to
//! `[-kappa, kappa]` and `W_perp` a Gaussian vector projected off `sigma*`.

use std::io::{Read, Write};
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::analytic::{check_kappa, gauss_p, normal};
use crate::error::{domain, Error, Result};
use crate::rng::{self, PolarNormal, GAUSSIAN_ALGORITHM};
use crate::spin::{SpinConfig, MAX_SPIN_DIM};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum Provenance {
    Random,
    Planted { sigma_star: SpinConfig },
}

/// `m` constraint rows of dimension `n`, stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Instance {
    n: usize,
    kappa: f64,
    rows: Vec<f64>,
    provenance: Provenance,
    seed: u64,
}

/// `kappa sqrt(n)`, the bound on `|<X, sigma>|`.
#[inline]
pub fn threshold(kappa: f64, n: usize) -> f64 {
    kappa * (n as f64).sqrt()
}

/// `<x, sigma>` summed in coordinate order. This is the reference evaluation
/// every fast path in the crate must agree with.
#[inline]
pub fn signed_dot(row: &[f64], code: u64) -> f64 {
    let mut acc = 0.0;
    for (i, &x) in row.iter().enumerate() {
        if code >> i & 1 == 1 {
            acc += x;
        } else {
            acc -= x;
        }
    }
    acc
}

/// Whether `|<x, sigma>| <= kappa sqrt(n)`; ties count as satisfied.
pub fn satisfies(row: &[f64], sigma: SpinConfig, kappa: f64) -> Result<bool> {
    if row.len() != sigma.n() as usize {
        return Err(domain(format!(
            "row has dimension {} but configuration has {}",
            row.len(),
            sigma.n()
        )));
    }
    Ok(signed_dot(row, sigma.code()).abs() <= threshold(kappa, row.len()))
}

/// One draw of `Z` given `|Z| <= kappa`.
///
/// Rejection from the normal when `p(kappa) >= 0.05`, otherwise the inverse
/// distribution function on `(Phi(-kappa), Phi(kappa))`.
pub fn truncated_normal<R: Rng + ?Sized>(kappa: f64, rng: &mut R, normal_gen: &mut PolarNormal) -> f64 {
    let p = libm::erf(kappa / std::f64::consts::SQRT_2);
    if p >= 0.05 {
        loop {
            let z = normal_gen.sample(rng);
            if z.abs() <= kappa {
                return z;
            }
        }
    }
    let lower = normal::cdf(-kappa);
    let u: f64 = rng.random();
    normal::inverse_cdf(lower + u * p).clamp(-kappa, kappa)
}

fn check_dims(n: usize) -> Result<()> {
    if n == 0 {
        return Err(domain("dimension n must be at least 1"));
    }
    Ok(())
}

/// `m` rows of i.i.d. standard normals from the stream keyed by `seed`.
pub fn sample_random_instance(n: usize, m: usize, kappa: f64, seed: u64) -> Result<Instance> {
    check_dims(n)?;
    check_kappa(kappa)?;
    let mut rng = rng::stream(seed, 0);
    let mut gen = PolarNormal::new();
    let rows = (0..n * m).map(|_| gen.sample(&mut rng)).collect();
    Ok(Instance { n, kappa, rows, provenance: Provenance::Random, seed })
}

/// `m` rows each conditioned on `sigma_star` satisfying them.
pub fn sample_planted_instance(
    n: usize,
    m: usize,
    kappa: f64,
    sigma_star: SpinConfig,
    seed: u64,
) -> Result<Instance> {
    check_dims(n)?;
    check_kappa(kappa)?;
    if sigma_star.n() as usize != n {
        return Err(domain(format!("planted configuration has dimension {}, expected {n}", sigma_star.n())));
    }
    let mut rng = rng::stream(seed, 0);
    let mut gen = PolarNormal::new();
    let root_n = (n as f64).sqrt();
    let bound = threshold(kappa, n);
    let unit: Vec<f64> = (0..n).map(|i| sigma_star.spin(i) / root_n).collect();
    let mut rows = Vec::with_capacity(n * m);
    let mut row = vec![0.0; n];
    for _ in 0..m {
        loop {
            let g = truncated_normal(kappa, &mut rng, &mut gen);
            for w in row.iter_mut() {
                *w = gen.sample(&mut rng);
            }
            let along: f64 = row.iter().zip(&unit).map(|(w, u)| w * u).sum();
            for (w, u) in row.iter_mut().zip(&unit) {
                *w += (g - along) * u;
            }
            // Rounding can push |g| ~ kappa just past the bound; redraw then.
            if signed_dot(&row, sigma_star.code()).abs() <= bound {
                break;
            }
        }
        rows.extend_from_slice(&row);
    }
    Ok(Instance { n, kappa, rows, provenance: Provenance::Planted { sigma_star }, seed })
}

const MAGIC: &[u8; 8] = b"ISPINST\0";
const FORMAT_VERSION: u32 = 1;
const GENERATOR_TAG: u8 = 1;

impl Instance {
    /// Assembles an instance from explicit rows, validating every invariant.
    pub fn from_rows(
        n: usize,
        kappa: f64,
        rows: Vec<f64>,
        provenance: Provenance,
        seed: u64,
    ) -> Result<Self> {
        check_dims(n)?;
        check_kappa(kappa)?;
        if !rows.len().is_multiple_of(n) {
            return Err(domain(format!("{} values do not form rows of length {n}", rows.len())));
        }
        if rows.iter().any(|x| !x.is_finite()) {
            return Err(domain("constraint entries must be finite"));
        }
        let inst = Self { n, kappa, rows, provenance, seed };
        if let Provenance::Planted { sigma_star } = provenance {
            if sigma_star.n() as usize != n {
                return Err(domain("planted configuration dimension mismatch"));
            }
            let bound = threshold(kappa, n);
            if let Some(i) = inst.rows().position(|r| signed_dot(r, sigma_star.code()).abs() > bound) {
                return Err(domain(format!("row {i} is violated by the planted configuration")));
            }
        }
        Ok(inst)
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn m(&self) -> usize {
        self.rows.len() / self.n
    }

    #[inline]
    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn sigma_star(&self) -> Option<SpinConfig> {
        match self.provenance {
            Provenance::Planted { sigma_star } => Some(sigma_star),
            Provenance::Random => None,
        }
    }

    pub fn gaussian_algorithm(&self) -> &'static str {
        GAUSSIAN_ALGORITHM
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.rows[i * self.n..(i + 1) * self.n]
    }

    pub fn rows(&self) -> std::slice::ChunksExact<'_, f64> {
        self.rows.chunks_exact(self.n)
    }

    pub fn values(&self) -> &[f64] {
        &self.rows
    }

    #[inline]
    pub fn threshold(&self) -> f64 {
        threshold(self.kappa, self.n)
    }

    /// The instance restricted to its first `t` constraints.
    pub fn prefix(&self, t: usize) -> Instance {
        let t = t.min(self.m());
        Instance { rows: self.rows[..t * self.n].to_vec(), ..self.clone() }
    }

    /// Appends a row; a planted instance keeps its invariant only if the caller
    /// supplies a row satisfied by the planted configuration.
    pub fn push_row(&mut self, row: &[f64]) -> Result<()> {
        if row.len() != self.n {
            return Err(domain("row dimension mismatch"));
        }
        if let Provenance::Planted { sigma_star } = self.provenance {
            if signed_dot(row, sigma_star.code()).abs() > self.threshold() {
                return Err(domain("row violates the planted configuration"));
            }
        }
        self.rows.extend_from_slice(row);
        Ok(())
    }

    /// Whether `sigma` satisfies every constraint.
    pub fn is_solution(&self, sigma: SpinConfig) -> bool {
        let bound = self.threshold();
        sigma.n() as usize == self.n && self.rows().all(|r| signed_dot(r, sigma.code()).abs() <= bound)
    }

    /// Per-constraint survival of a fixed configuration, `p(kappa)`.
    pub fn survival_probability(&self) -> f64 {
        gauss_p(self.kappa).expect("kappa validated at construction")
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(48 + 8 * self.rows.len());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        out.extend_from_slice(&(self.n as u32).to_le_bytes());
        out.extend_from_slice(&(self.m() as u32).to_le_bytes());
        out.extend_from_slice(&self.kappa.to_le_bytes());
        let (tag, code) = match self.provenance {
            Provenance::Random => (0u8, 0u64),
            Provenance::Planted { sigma_star } => (1u8, sigma_star.code()),
        };
        out.push(tag);
        out.extend_from_slice(&code.to_le_bytes());
        out.extend_from_slice(&self.seed.to_le_bytes());
        out.push(GENERATOR_TAG);
        for x in &self.rows {
            out.extend_from_slice(&x.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut cur = bytes;
        let mut take = |len: usize| -> Result<&[u8]> {
            if cur.len() < len {
                return Err(Error::Format("instance container is truncated".into()));
            }
            let (head, tail) = cur.split_at(len);
            cur = tail;
            Ok(head)
        };
        if take(8)? != MAGIC {
            return Err(Error::Format("not an instance container (bad magic)".into()));
        }
        let u32_at = |b: &[u8]| u32::from_le_bytes(b.try_into().expect("4 bytes"));
        let u64_at = |b: &[u8]| u64::from_le_bytes(b.try_into().expect("8 bytes"));
        let version = u32_at(take(4)?);
        if version != FORMAT_VERSION {
            return Err(Error::Format(format!("unsupported container version {version}")));
        }
        let n = u32_at(take(4)?) as usize;
        let m = u32_at(take(4)?) as usize;
        let kappa = f64::from_bits(u64_at(take(8)?));
        let tag = take(1)?[0];
        let code = u64_at(take(8)?);
        let seed = u64_at(take(8)?);
        let generator = take(1)?[0];
        if generator != GENERATOR_TAG {
            return Err(Error::Format(format!("unknown generator tag {generator}")));
        }
        let provenance = match tag {
            0 => Provenance::Random,
            1 => {
                if n as u32 > MAX_SPIN_DIM {
                    return Err(Error::Format("planted instance dimension exceeds 63".into()));
                }
                Provenance::Planted { sigma_star: SpinConfig::new(n as u32, code)? }
            }
            t => return Err(Error::Format(format!("unknown provenance tag {t}"))),
        };
        let payload = take(8 * n * m)?;
        if !cur.is_empty() {
            return Err(Error::Format("trailing bytes after payload".into()));
        }
        let rows = payload
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect();
        Self::from_rows(n, kappa, rows, provenance, seed)
    }

    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(&self.to_bytes())?;
        Ok(())
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<Self> {
        let mut buf = Vec::new();
        r.read_to_end(&mut buf)?;
        Self::from_bytes(&buf)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_bytes(&std::fs::read(path)?)
    }

    pub fn to_json(&self) -> Result<String> {
        let doc = InstanceJson {
            n: self.n,
            m: self.m(),
            kappa: self.kappa,
            provenance: self.provenance,
            seed: self.seed,
            gaussian_algorithm: GAUSSIAN_ALGORITHM.to_string(),
            rows: self.rows().map(<[f64]>::to_vec).collect(),
        };
        Ok(serde_json::to_string_pretty(&doc)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: InstanceJson = serde_json::from_str(text)?;
        if doc.rows.len() != doc.m || doc.rows.iter().any(|r| r.len() != doc.n) {
            return Err(Error::Format("row count or row length disagrees with header".into()));
        }
        if doc.gaussian_algorithm != GAUSSIAN_ALGORITHM {
            return Err(Error::Format(format!("unknown generator `{}`", doc.gaussian_algorithm)));
        }
        Self::from_rows(doc.n, doc.kappa, doc.rows.concat(), doc.provenance, doc.seed)
    }

    /// SHA-256 of the binary container, hex encoded.
    pub fn digest(&self) -> String {
        let hash = Sha256::digest(self.to_bytes());
        hash.iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[derive(Serialize, Deserialize)]
struct InstanceJson {
    n: usize,
    m: usize,
    kappa: f64,
    provenance: Provenance,
    seed: u64,
    gaussian_algorithm: String,
    rows: Vec<Vec<f64>>,
}
