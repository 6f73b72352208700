//! Numerical laboratory for the symmetric Ising perceptron.
//!
//! A configuration `sigma` in `{-1, +1}^n` satisfies a constraint row `x` when
//! `|<x, sigma>| <= kappa * sqrt(n)`. The crate provides
//!
//! * [`analytic`]: closed-form curves (entropy, Gaussian box probabilities,
//!   annealed free energy, capacity, frozen-cluster radius `beta_c`);
//! * [`sampler`]: random and planted instances with reproducible seeding;
//! * [`solver`]: exhaustive enumeration of solution sets for `n <= 30`;
//! * [`structure`]: frozen coordinates, clusters, isolation;
//! * [`process`]: the constraint-by-constraint log-count process;
//! * [`harness`]: experiment farms writing CSV/JSON results.

pub mod analytic;
pub mod error;
pub mod harness;
pub mod process;
pub mod rng;
pub mod sampler;
pub mod solver;
pub mod spin;
pub mod stats;
pub mod structure;

pub use analytic::{
    alpha_c, beta_c, bivariate_gap, bivariate_q, boundary_gap, check_assumption1, entropy, first_moment_overlap,
    free_energy, free_energy_gap, gauss_p, Assumption1Report, CurveKind, CurveTable, ModelParams,
};
pub use error::{Error, Result};
pub use process::{ProcessTrace, TraceRecord};
pub use sampler::{Instance, Provenance};
pub use solver::{Filtration, SolutionSet};
pub use spin::SpinConfig;
pub use structure::ClusterReport;
