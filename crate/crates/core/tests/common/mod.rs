//! Independent reference computations shared by the integration tests.

#![allow(dead_code)]

use std::f64::consts::PI;

use perceptron_core::Instance;

/// Gauss-Legendre nodes and weights on `[-1, 1]` by Newton iteration on `P_n`.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let step = p1 / dp;
            x -= step;
            if step.abs() < 1e-16 {
                break;
            }
        }
        out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    out
}

/// Composite 64-point Gauss-Legendre rule over `panels` equal pieces.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, panels: usize) -> f64 {
    let rule = gauss_legendre(64);
    let h = (b - a) / panels as f64;
    (0..panels)
        .map(|k| {
            let lo = a + k as f64 * h;
            let (mid, half) = (lo + h / 2.0, h / 2.0);
            rule.iter().map(|&(x, w)| w * f(mid + half * x)).sum::<f64>() * half
        })
        .sum()
}

pub fn phi(x: f64) -> f64 {
    (-x * x / 2.0).exp() / (2.0 * PI).sqrt()
}

/// `P(|Z| <= kappa)` by quadrature of the density.
pub fn p_oracle(kappa: f64) -> f64 {
    2.0 * integrate(phi, 0.0, kappa, 4)
}

/// `P(|X| <= kappa, |Y| <= kappa)` for unit normals with correlation
/// `2 beta - 1`, by a tensor Gauss-Legendre rule on the box. Accurate while
/// the correlation stays away from +-1.
pub fn q_oracle(kappa: f64, beta: f64) -> f64 {
    let rho = 2.0 * beta - 1.0;
    let det = 1.0 - rho * rho;
    let norm = 1.0 / (2.0 * PI * det.sqrt());
    let density = |x: f64, y: f64| norm * (-(x * x - 2.0 * rho * x * y + y * y) / (2.0 * det)).exp();
    integrate(|x| integrate(|y| density(x, y), -kappa, kappa, 4), -kappa, kappa, 4)
}

/// Sorted codes of all configurations satisfying every row, each evaluated
/// on its own as `sum_j sigma_j x_j` in coordinate order.
pub fn naive_solutions(inst: &Instance) -> Vec<u32> {
    let n = inst.n();
    let bound = inst.kappa() * (n as f64).sqrt();
    (0..1u32 << n)
        .filter(|&code| {
            let spins: Vec<f64> = (0..n).map(|j| if code >> j & 1 == 1 { 1.0 } else { -1.0 }).collect();
            inst.rows().all(|row| {
                let mut dot = 0.0;
                for (s, x) in spins.iter().zip(row) {
                    dot += s * x;
                }
                dot.abs() <= bound
            })
        })
        .collect()
}
