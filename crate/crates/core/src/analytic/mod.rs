//! Closed-form quantities of the symmetric perceptron.
//!
//! Every function here is pure and thread-safe. Logarithms are natural.

mod curves;
pub mod normal;
pub mod quadrature;

use std::f64::consts::{LN_2, PI, SQRT_2};

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

pub use curves::{
    check_assumption1, first_moment_curve, gap_curve, Assumption1Report, CurveKind, CurveTable,
};

/// Threshold `kappa` and constraint density `alpha = m / n`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub kappa: f64,
    pub alpha: f64,
}

impl ModelParams {
    pub fn new(kappa: f64, alpha: f64) -> Result<Self> {
        check_kappa(kappa)?;
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(domain(format!("alpha must be positive and finite, got {alpha}")));
        }
        Ok(Self { kappa, alpha })
    }
}

pub(crate) fn check_kappa(kappa: f64) -> Result<()> {
    if kappa.is_finite() && kappa > 0.0 {
        Ok(())
    } else {
        Err(domain(format!("kappa must be positive and finite, got {kappa}")))
    }
}

fn check_beta(beta: f64) -> Result<()> {
    if (0.0..=1.0).contains(&beta) {
        Ok(())
    } else {
        Err(domain(format!("beta must lie in [0, 1], got {beta}")))
    }
}

/// Shannon entropy `-b ln b - (1-b) ln(1-b)`, zero at both endpoints.
pub fn entropy(beta: f64) -> Result<f64> {
    check_beta(beta)?;
    if beta == 0.0 || beta == 1.0 {
        return Ok(0.0);
    }
    Ok(-beta * beta.ln() - (1.0 - beta) * (-beta).ln_1p())
}

/// `p(kappa) = Pr[|Z| <= kappa]`.
pub fn gauss_p(kappa: f64) -> Result<f64> {
    check_kappa(kappa)?;
    Ok(libm::erf(kappa / SQRT_2))
}

/// `ln p(kappa)`, accurate also when `p` is within rounding of 1.
pub fn ln_gauss_p(kappa: f64) -> Result<f64> {
    check_kappa(kappa)?;
    Ok((-normal::two_sided_tail(kappa)).ln_1p())
}

/// Beyond this |rho| the pair is treated as perfectly (anti)correlated.
const Q_TOLERANCE: f64 = 1e-14;

/// `q_kappa(beta) = Pr[|Z1| <= kappa, |Z2| <= kappa]` for standard normals
/// with correlation `2 beta - 1`.
///
/// The box is sign-symmetric, so `q(rho) = q(-rho)` and only `|rho|` is used.
/// For `|rho| < 1/2` this is the one-dimensional integral of
/// `phi(z) Pr[|rho z + s W| <= kappa]` over `z` in `[-kappa, kappa]`;
/// otherwise `p(kappa) - `[`bivariate_gap`].
pub fn bivariate_q(kappa: f64, beta: f64) -> Result<f64> {
    check_kappa(kappa)?;
    check_beta(beta)?;
    let p = gauss_p(kappa)?;
    let rho = (2.0 * beta - 1.0).abs();
    if rho == 0.0 {
        return Ok(p * p);
    }
    if rho >= 0.5 {
        return Ok((p - bivariate_gap(kappa, beta)?).clamp(p * p, p));
    }
    let s = 2.0 * (beta * (1.0 - beta)).sqrt();
    let integrand = |u: f64| {
        let centre = rho * (kappa - u);
        normal::pdf(kappa - u) * normal::interval((-kappa - centre) / s, (kappa - centre) / s)
    };
    Ok((2.0 * layered_integral(integrand, kappa, s, Q_TOLERANCE)?).clamp(p * p, p))
}

/// `p(kappa) - q_kappa(beta) = Pr[|Z1| <= kappa, |Z2| > kappa]`.
///
/// Integrated directly rather than by subtraction, so it keeps its relative
/// precision as `beta` approaches 0 or 1, where it vanishes like `sqrt(beta (1 - beta))`.
pub fn bivariate_gap(kappa: f64, beta: f64) -> Result<f64> {
    check_kappa(kappa)?;
    check_beta(beta)?;
    let p = gauss_p(kappa)?;
    let rho = (2.0 * beta - 1.0).abs();
    if rho == 0.0 {
        return Ok(p * normal::two_sided_tail(kappa));
    }
    // sqrt(1 - rho^2) = 2 sqrt(beta (1 - beta)) and 1 - |rho| = 2 min(beta, 1 - beta),
    // both without cancellation near |rho| = 1.
    let s = 2.0 * (beta * (1.0 - beta)).sqrt();
    if s == 0.0 {
        return Ok(0.0);
    }
    let one_minus_rho = 2.0 * beta.min(1.0 - beta);
    // In u = kappa - z the upper exit point is (kappa (1 - rho) + rho u) / s.
    let integrand = |u: f64| {
        let upper = (kappa * one_minus_rho + rho * u) / s;
        let lower = (kappa * (1.0 + rho) - rho * u) / s;
        normal::pdf(kappa - u) * (normal::sf(upper) + normal::sf(lower))
    };
    let scale = (normal::pdf(kappa) * s).min(p * (1.0 - p));
    Ok((2.0 * layered_integral(integrand, kappa, s, GAP_TOLERANCE * scale)?).clamp(0.0, p - p * p))
}

/// Relative accuracy target of [`bivariate_gap`].
const GAP_TOLERANCE: f64 = 1e-12;

/// `int_0^kappa f(u) du` for an integrand with a layer of width `~s` at
/// `u = 0`; breakpoints at `s 2^j` keep the rule from stepping over it.
fn layered_integral<F: Fn(f64) -> f64>(f: F, kappa: f64, s: f64, abs_tol: f64) -> Result<f64> {
    let mut cuts = vec![0.0];
    let mut width = s;
    while width < kappa {
        cuts.push(width);
        width *= 2.0;
    }
    cuts.push(kappa);
    let tol = 0.5 * abs_tol / (cuts.len() - 1) as f64;
    let mut total = 0.0;
    for w in cuts.windows(2) {
        total += quadrature::integrate(&f, w[0], w[1], tol, 4000)?.0;
    }
    Ok(total)
}

/// `d q_kappa / d beta`, from Plackett's identity
/// `dq/drho = 2 [phi2(k, k; rho) - phi2(k, -k; rho)]` and `drho/dbeta = 2`.
pub fn bivariate_q_deriv(kappa: f64, beta: f64) -> Result<f64> {
    check_kappa(kappa)?;
    if !(beta > 0.0 && beta < 1.0) {
        return Err(domain(format!("derivative needs beta in (0, 1), got {beta}")));
    }
    let k2 = kappa * kappa;
    let near = (-k2 / (2.0 * beta)).exp();
    let far = (-k2 / (2.0 * (1.0 - beta))).exp();
    Ok((near - far) / (PI * (beta * (1.0 - beta)).sqrt()))
}

/// Annealed free energy `F(beta) = H(beta) + alpha ln q_kappa(beta)`.
///
/// At `beta` in `{0, 1}` this is the one-sided limit `alpha ln p(kappa)`.
pub fn free_energy(params: ModelParams, beta: f64) -> Result<f64> {
    check_beta(beta)?;
    if beta == 0.0 || beta == 1.0 {
        return Ok(params.alpha * ln_gauss_p(params.kappa)?);
    }
    Ok(entropy(beta)? + params.alpha * bivariate_q(params.kappa, beta)?.ln())
}

/// `G(beta) = F(beta) - alpha ln p(kappa)`; `G(0) = G(1) = 0` exactly.
pub fn free_energy_gap(params: ModelParams, beta: f64) -> Result<f64> {
    check_beta(beta)?;
    if beta == 0.0 || beta == 1.0 {
        return Ok(0.0);
    }
    let p = gauss_p(params.kappa)?;
    if beta == 0.5 {
        return Ok(LN_2 + params.alpha * p.ln());
    }
    let ln_ratio = if (2.0 * beta - 1.0).abs() >= 0.5 {
        (-bivariate_gap(params.kappa, beta)? / p).ln_1p()
    } else {
        (bivariate_q(params.kappa, beta)? / p).ln()
    };
    Ok(entropy(beta)? + params.alpha * ln_ratio)
}

/// `F'(beta) = ln((1 - beta) / beta) + alpha q'(beta) / q(beta)` on `(0, 1)`.
pub fn free_energy_deriv(params: ModelParams, beta: f64) -> Result<f64> {
    let dq = bivariate_q_deriv(params.kappa, beta)?;
    let q = bivariate_q(params.kappa, beta)?;
    Ok(((1.0 - beta) / beta).ln() + params.alpha * dq / q)
}

/// `F''(1/2) = -4 + alpha q''(1/2) / q(1/2)` with `q''(1/2) = 8 k^2 e^{-k^2} / pi`.
pub fn free_energy_curvature_at_half(params: ModelParams) -> Result<f64> {
    let p = gauss_p(params.kappa)?;
    let k2 = params.kappa * params.kappa;
    let q2 = 8.0 * k2 * (-k2).exp() / PI;
    Ok(-4.0 + params.alpha * q2 / (p * p))
}

/// Capacity `alpha_c(kappa) = -ln 2 / ln p(kappa)`.
pub fn alpha_c(kappa: f64) -> Result<f64> {
    Ok(-LN_2 / ln_gauss_p(kappa)?)
}

const BETA_C_SCAN: usize = 10_000;
const BETA_C_EDGE: f64 = 1e-6;
const BETA_C_TOL: f64 = 1e-13;

/// The unique zero `beta_c` of [`free_energy_gap`] in `(0, 1/2)`.
///
/// A uniform scan over `[1e-6, 1/2 - 1e-6]` brackets the first crossing from
/// negative to non-negative values, which is then bisected.
pub fn beta_c(params: ModelParams) -> Result<f64> {
    let cap = alpha_c(params.kappa)?;
    if params.alpha >= cap {
        return Err(Error::Precondition(format!(
            "alpha = {} is not below alpha_c({}) = {cap}",
            params.alpha, params.kappa
        )));
    }
    let gap = |b: f64| free_energy_gap(params, b);
    let lo_end = BETA_C_EDGE;
    let hi_end = 0.5 - BETA_C_EDGE;
    let step = (hi_end - lo_end) / (BETA_C_SCAN - 1) as f64;

    let mut prev_beta = lo_end;
    let mut prev = gap(lo_end)?;
    let mut bracket = None;
    for k in 1..BETA_C_SCAN {
        let beta = if k == BETA_C_SCAN - 1 { hi_end } else { lo_end + step * k as f64 };
        let value = gap(beta)?;
        if prev < 0.0 && value >= 0.0 {
            bracket = Some((prev_beta, beta));
            break;
        }
        prev_beta = beta;
        prev = value;
    }
    let Some((mut lo, mut hi)) = bracket else {
        let dump = (0..=10)
            .map(|i| {
                let b = lo_end + (hi_end - lo_end) * i as f64 / 10.0;
                format!("({b:.6}, {:.3e})", gap(b).unwrap_or(f64::NAN))
            })
            .collect::<Vec<_>>()
            .join(", ");
        return Err(Error::Numerical(format!(
            "no sign change of G for kappa={}, alpha={}; grid: {dump}",
            params.kappa, params.alpha
        )));
    };
    while hi - lo > BETA_C_TOL {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if gap(mid)? < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// `ln C(n, k)` through the log-gamma function.
pub fn ln_binomial(n: u64, k: u64) -> f64 {
    if k == 0 || k == n {
        return 0.0;
    }
    let n = n as f64;
    let k = k as f64;
    libm::lgamma(n + 1.0) - libm::lgamma(k + 1.0) - libm::lgamma(n - k + 1.0)
}

/// `(1/N) ln E_pl |{sigma in S : <sigma, sigma*> = overlap}|`, i.e.
/// `(1/N) [ln C(N, (N+overlap)/2) + alpha N ln(q(1/2 + overlap/2N) / p)]`.
pub fn first_moment_overlap(n: u64, overlap: i64, params: ModelParams) -> Result<f64> {
    if n == 0 {
        return Err(domain("N must be positive"));
    }
    if overlap.unsigned_abs() > n {
        return Err(domain(format!("|overlap| = {} exceeds N = {n}", overlap.abs())));
    }
    let shifted = n as i64 + overlap;
    if shifted % 2 != 0 {
        return Err(domain(format!("overlap {overlap} must have the parity of N = {n}")));
    }
    let agree = (shifted / 2) as u64;
    let beta = agree as f64 / n as f64;
    let p = gauss_p(params.kappa)?;
    let q = bivariate_q(params.kappa, beta)?;
    let nf = n as f64;
    Ok((ln_binomial(n, agree) + params.alpha * nf * (q / p).ln()) / nf)
}

/// `p(kappa) - q_kappa(1 - m_flip / 2N)`: the survival probability lost by
/// flipping `m_flip` of `N` coordinates.
pub fn boundary_gap(n: u64, m_flip: u64, kappa: f64) -> Result<f64> {
    if n == 0 || m_flip > n {
        return Err(domain(format!("need 0 <= m_flip <= N, got m_flip={m_flip}, N={n}")));
    }
    check_kappa(kappa)?;
    if m_flip == 0 {
        return Ok(0.0);
    }
    // q is symmetric about 1/2, so evaluate at the exactly representable small side.
    bivariate_gap(kappa, m_flip as f64 / (2 * n) as f64)
}
