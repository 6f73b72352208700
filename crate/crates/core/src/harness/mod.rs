//! Experiment orchestration: configs, trial farms, result files.
//!
//! Every trial draws from its own RNG streams keyed by
//! `(master seed, sub-experiment label, trial index)`, trials run in
//! parallel and are collected in index order, so outputs are byte-identical
//! for a given config and seed regardless of the worker count.

mod capacity;
mod concentration;
mod config;
mod contiguity;
mod diagnostics;
mod figure1;
mod freezing;
mod output;
mod trial;

use std::path::Path;

use serde::{Deserialize, Serialize};

pub use capacity::{run_capacity_scan, CapacityCell, CapacityReport, CapacityRow};
pub use concentration::{run_concentration, ConcentrationPoint, ConcentrationReport};
pub use config::{Event, ExperimentConfig, ExperimentKind};
pub use contiguity::{run_contiguity, ContiguityPoint, ContiguityReport, EventEstimate};
pub use diagnostics::{
    run_process_diagnostics, DiagnosticsPoint, DiagnosticsReport, MartingaleStep, RegularityStep,
};
pub use figure1::{run_figure1, Figure1Report, GapCurveSummary, SkippedAlpha};
pub use freezing::{run_freezing, FreezingPoint, FreezingReport, FreezingSide};
pub use output::{FileEntry, Manifest, OutputDir, MANIFEST_FILE, TOOL_NAME, TOOL_VERSION};
pub use trial::{
    farm, records_csv, run_planted_trial, run_random_model_trial, trial_seed, PlantedTrial,
    RandomTrial, TrialRecord,
};

use crate::error::Result;
use crate::rng::derive_seed;
use crate::solver::{nearest_other, SolutionSet};
use crate::spin::SpinConfig;
use crate::stats::Moments;

/// Sample mean with its standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub standard_error: f64,
    pub samples: u64,
}

impl Estimate {
    pub fn of<I: IntoIterator<Item = f64>>(values: I) -> Self {
        Self::from(Moments::from_iter(values))
    }

    /// `(self - other) / sqrt(se^2 + se_other^2)`; `None` when both standard
    /// errors vanish.
    pub fn z_against(&self, other: &Estimate) -> Option<f64> {
        let se = self.standard_error.hypot(other.standard_error);
        (se > 0.0 && se.is_finite()).then(|| (self.mean - other.mean) / se)
    }
}

impl From<Moments> for Estimate {
    fn from(m: Moments) -> Self {
        Self { mean: m.mean, standard_error: m.std_error(), samples: m.count }
    }
}

/// Folds a list of identifiers into a stream label.
pub(crate) fn label(parts: &[u64]) -> u64 {
    parts.iter().fold(0x5eed_1abe_u64, |acc, &p| derive_seed(acc, p))
}

/// Distance from `sigma` to the closest other member of `s` (`n + 1` if none).
pub(crate) fn nearest_distance(s: &SolutionSet, sigma: SpinConfig, frozen: u32) -> Result<u32> {
    if frozen < s.n() {
        return Ok(1);
    }
    Ok(nearest_other(s, sigma)?.map_or(s.n() + 1, |(d, _)| d))
}

/// `alpha` written for file names: `1.5` becomes `1p5`.
pub(crate) fn alpha_tag(alpha: f64) -> String {
    format!("{alpha}").replace('.', "p").replace('-', "m")
}

/// Runs `kind` with `config` and writes all outputs plus the manifest to `out`.
pub fn run(kind: ExperimentKind, config: ExperimentConfig, out: &Path) -> Result<Manifest> {
    let config = config.resolved(kind)?;
    let mut dir = OutputDir::create(out)?;
    match kind {
        ExperimentKind::Figure1 => run_figure1(&config)?.write(&mut dir)?,
        ExperimentKind::Concentration => run_concentration(&config)?.write(&mut dir, config.per_trial_output)?,
        ExperimentKind::Freezing => run_freezing(&config)?.write(&mut dir, config.per_trial_output)?,
        ExperimentKind::Contiguity => run_contiguity(&config)?.write(&mut dir, config.per_trial_output)?,
        ExperimentKind::CapacityScan => run_capacity_scan(&config)?.write(&mut dir, config.per_trial_output)?,
        ExperimentKind::ProcessDiagnostics => {
            run_process_diagnostics(&config)?.write(&mut dir, config.per_trial_output)?
        }
    }
    dir.finish(&config, kind)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn estimate_z() {
        let a = Estimate { mean: 1.0, standard_error: 0.3, samples: 10 };
        let b = Estimate { mean: 0.0, standard_error: 0.4, samples: 10 };
        assert!((a.z_against(&b).unwrap() - 2.0).abs() < 1e-12);
        let c = Estimate { mean: 1.0, standard_error: 0.0, samples: 10 };
        assert_eq!(c.z_against(&c), None);
    }

    #[test]
    fn tags() {
        assert_eq!(alpha_tag(1.5), "1p5");
        assert_eq!(alpha_tag(1.0), "1");
        assert_ne!(label(&[1, 2]), label(&[2, 1]));
    }
}
