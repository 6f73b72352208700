//! Experiment configuration as read from JSON.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::analytic::alpha_c;
use crate::error::{Error, Result};
use crate::solver::MAX_SOLVER_DIM;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Figure1,
    Concentration,
    Freezing,
    Contiguity,
    CapacityScan,
    ProcessDiagnostics,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 6] = [
        Self::Figure1,
        Self::Concentration,
        Self::Freezing,
        Self::Contiguity,
        Self::CapacityScan,
        Self::ProcessDiagnostics,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Figure1 => "figure1",
            Self::Concentration => "concentration",
            Self::Freezing => "freezing",
            Self::Contiguity => "contiguity",
            Self::CapacityScan => "capacity_scan",
            Self::ProcessDiagnostics => "process_diagnostics",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentKind {
    type Err = Error;

    /// Accepts `capacity_scan` as well as `capacity-scan`.
    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace('-', "_");
        Self::ALL
            .into_iter()
            .find(|k| k.name() == key)
            .ok_or_else(|| Error::Config(format!("unknown experiment {s:?}")))
    }
}

/// Events evaluated on `(sigma, S)` by the contiguity experiment.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Event {
    Everything,
    /// `sigma in S`.
    ContainsSigma,
    /// Every coordinate of `sigma` is frozen.
    FullyFrozen,
    /// `|S| <= threshold`.
    MaxSize { threshold: u64 },
    /// Every other solution is at Hamming distance at least `distance`.
    MinNearest { distance: u32 },
}

impl Event {
    pub fn label(&self) -> String {
        match self {
            Self::Everything => "everything".into(),
            Self::ContainsSigma => "contains_sigma".into(),
            Self::FullyFrozen => "fully_frozen".into(),
            Self::MaxSize { threshold } => format!("max_size_{threshold}"),
            Self::MinNearest { distance } => format!("min_nearest_{distance}"),
        }
    }

    /// The built-in event list.
    pub fn defaults() -> Vec<Event> {
        vec![
            Self::Everything,
            Self::ContainsSigma,
            Self::FullyFrozen,
            Self::MaxSize { threshold: 8 },
            Self::MinNearest { distance: 4 },
        ]
    }
}

fn default_kappa() -> f64 {
    1.0
}
fn default_trials() -> usize {
    100
}
fn default_delta() -> f64 {
    0.05
}
fn default_max_rejects() -> u64 {
    1000
}
fn default_curve_points() -> usize {
    2000
}
fn default_fresh() -> usize {
    10_000
}
fn default_pair_budget() -> usize {
    100_000
}

/// Parameters of one experiment. Only the fields an experiment reads matter
/// to it; everything except `alpha`/`alpha_grid` and `n`/`n_grid` has a default.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub experiment: Option<ExperimentKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_grid: Option<Vec<usize>>,
    #[serde(default = "default_kappa")]
    pub kappa: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha_grid: Option<Vec<f64>>,
    /// Overrides `floor(alpha n)` as the number of constraints.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    /// Freezing radius offset: radius `floor((beta_c - delta) n)`.
    #[serde(default = "default_delta")]
    pub delta: f64,
    /// Empty instances redrawn per random-model trial before it fails.
    #[serde(default = "default_max_rejects")]
    pub max_rejects: u64,
    #[serde(default = "Event::defaults")]
    pub events: Vec<Event>,
    #[serde(default = "default_curve_points")]
    pub curve_points: usize,
    /// Total fresh constraints per martingale step, split over the traces.
    #[serde(default = "default_fresh")]
    pub fresh_constraints: usize,
    /// Steps `t` at which `E[Y_{t+1} | S_t]` is estimated; default `m/4, m/2, 3m/4`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub martingale_steps: Option<Vec<usize>>,
    /// Steps at which the overlap regularity ratio is computed; default `m/2, m`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub regularity_steps: Option<Vec<usize>>,
    #[serde(default = "default_pair_budget")]
    pub pair_budget: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c3: Option<f64>,
    /// Write one CSV row per trial.
    #[serde(default = "default_true")]
    pub per_trial_output: bool,
    /// Default output directory when the CLI gets no `--out`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
}

fn default_true() -> bool {
    true
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("all fields have defaults")
    }
}

fn config_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| config_err(e.to_string()))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// SHA-256 (hex) of the compact JSON form.
    pub fn hash(&self) -> Result<String> {
        let bytes = serde_json::to_vec(self)?;
        Ok(format!("{:x}", Sha256::digest(bytes)))
    }

    /// `n_grid` if given, otherwise `[n]`.
    pub fn n_values(&self) -> Result<Vec<usize>> {
        match (&self.n_grid, self.n) {
            (Some(g), _) if !g.is_empty() => Ok(g.clone()),
            (_, Some(n)) => Ok(vec![n]),
            _ => Err(config_err("`n` or a non-empty `n_grid` is required")),
        }
    }

    /// `alpha_grid` if given, otherwise `[alpha]`.
    pub fn alpha_values(&self) -> Result<Vec<f64>> {
        match (&self.alpha_grid, self.alpha) {
            (Some(g), _) if !g.is_empty() => Ok(g.clone()),
            (_, Some(a)) => Ok(vec![a]),
            _ => Err(config_err("`alpha` or a non-empty `alpha_grid` is required")),
        }
    }

    /// Constraint count at dimension `n` and density `alpha`.
    pub fn constraints(&self, n: usize, alpha: f64) -> usize {
        self.m.unwrap_or((alpha * n as f64).floor() as usize)
    }

    /// `(n, alpha, m)` for every combination of `n_values` and `alpha_values`.
    /// With `m` set and no alpha given, alpha is `m / n`.
    pub fn grid_points(&self) -> Result<Vec<(usize, f64, usize)>> {
        if let (Some(m), None, None) = (self.m, self.alpha, &self.alpha_grid) {
            return Ok(self.n_values()?.into_iter().map(|n| (n, m as f64 / n as f64, m)).collect());
        }
        let alphas = self.alpha_values()?;
        Ok(self
            .n_values()?
            .into_iter()
            .flat_map(|n| alphas.iter().map(move |&a| (n, a, self.constraints(n, a))))
            .collect())
    }

    /// Fills experiment-specific defaults (grids the experiment can supply itself).
    pub fn resolved(mut self, kind: ExperimentKind) -> Result<Self> {
        if let Some(k) = self.experiment {
            if k != kind {
                return Err(config_err(format!("config is for experiment {k}, invoked as {kind}")));
            }
        }
        self.experiment = Some(kind);
        match kind {
            ExperimentKind::Figure1 => {
                if self.alpha.is_none() && self.alpha_grid.is_none() {
                    self.alpha_grid = Some(vec![1.69, 1.75, 1.81]);
                }
            }
            ExperimentKind::CapacityScan => {
                if self.alpha.is_none() && self.alpha_grid.is_none() {
                    check_positive("kappa", self.kappa)?;
                    let ac = alpha_c(self.kappa).map_err(|e| config_err(e.to_string()))?;
                    self.alpha_grid = Some((1..=12).map(|k| k as f64 * 0.125 * ac).collect());
                }
            }
            ExperimentKind::Contiguity if self.events.is_empty() => {
                self.events = Event::defaults();
            }
            _ => {}
        }
        self.validate(kind)?;
        Ok(self)
    }

    /// Config errors for malformed values, capability errors for `n > 30`.
    pub fn validate(&self, kind: ExperimentKind) -> Result<()> {
        check_positive("kappa", self.kappa)?;
        if self.trials == 0 {
            return Err(config_err("`trials` must be at least 1"));
        }
        let alphas = match (self.m, self.alpha_values()) {
            (Some(_), Err(_)) if kind != ExperimentKind::Figure1 && kind != ExperimentKind::CapacityScan => Vec::new(),
            (_, alphas) => alphas?,
        };
        if let Some(a) = alphas.iter().find(|a| !a.is_finite() || **a < 0.0) {
            return Err(config_err(format!("alpha must be finite and >= 0, got {a}")));
        }
        if kind == ExperimentKind::Figure1 {
            if self.curve_points < 2 {
                return Err(config_err("`curve_points` must be at least 2"));
            }
            return Ok(());
        }
        let ns = self.n_values()?;
        if let Some(&n) = ns.iter().find(|&&n| n == 0) {
            return Err(config_err(format!("n must be positive, got {n}")));
        }
        if let Some(&n) = ns.iter().find(|&&n| n > MAX_SOLVER_DIM) {
            return Err(Error::Capability(format!(
                "exhaustive enumeration supports n <= {MAX_SOLVER_DIM}, got n = {n}"
            )));
        }
        if !(self.delta > 0.0 && self.delta < 0.5) {
            return Err(config_err(format!("delta must lie in (0, 1/2), got {}", self.delta)));
        }
        if let Some(c3) = self.c3 {
            check_positive("c3", c3)?;
        }
        if kind == ExperimentKind::ProcessDiagnostics && self.fresh_constraints == 0 {
            return Err(config_err("`fresh_constraints` must be at least 1"));
        }
        Ok(())
    }
}

fn check_positive(name: &str, x: f64) -> Result<()> {
    if x.is_finite() && x > 0.0 {
        Ok(())
    } else {
        Err(config_err(format!("{name} must be finite and positive, got {x}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_and_round_trip() {
        let c = ExperimentConfig::from_json(r#"{"n": 12, "alpha": 0.5}"#).unwrap();
        assert_eq!(c.trials, 100);
        assert_eq!(c.delta, 0.05);
        assert_eq!(c.max_rejects, 1000);
        assert_eq!(c.curve_points, 2000);
        assert_eq!(c.events.len(), 5);
        assert_eq!(c.constraints(12, 0.5), 6);
        let back = ExperimentConfig::from_json(&c.to_json().unwrap()).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.hash().unwrap(), c.hash().unwrap());
    }

    #[test]
    fn rejects_bad_configs() {
        assert!(matches!(ExperimentConfig::from_json(r#"{"n": 12, "bogus": 1}"#), Err(Error::Config(_))));
        let c = ExperimentConfig::from_json(r#"{"n": 31, "alpha": 0.5}"#).unwrap();
        assert!(matches!(c.resolved(ExperimentKind::Freezing), Err(Error::Capability(_))));
        let c = ExperimentConfig::from_json(r#"{"n": 12, "alpha": 0.5, "trials": 0}"#).unwrap();
        assert!(matches!(c.resolved(ExperimentKind::Freezing), Err(Error::Config(_))));
        let c = ExperimentConfig::from_json(r#"{"alpha": 0.5}"#).unwrap();
        assert!(matches!(c.resolved(ExperimentKind::Concentration), Err(Error::Config(_))));
        let c = ExperimentConfig::from_json(r#"{"n": 12, "m": 10}"#).unwrap().resolved(ExperimentKind::Contiguity).unwrap();
        assert_eq!(c.grid_points().unwrap(), vec![(12, 10.0 / 12.0, 10)]);
        let c = ExperimentConfig::from_json(r#"{"experiment": "freezing", "n": 8, "alpha": 1}"#).unwrap();
        assert!(matches!(c.resolved(ExperimentKind::Contiguity), Err(Error::Config(_))));
    }

    #[test]
    fn experiment_names() {
        for k in ExperimentKind::ALL {
            assert_eq!(k.name().parse::<ExperimentKind>().unwrap(), k);
        }
        assert_eq!("capacity-scan".parse::<ExperimentKind>().unwrap(), ExperimentKind::CapacityScan);
        assert!("nope".parse::<ExperimentKind>().is_err());
    }

    #[test]
    fn figure1_defaults() {
        let c = ExperimentConfig::default().resolved(ExperimentKind::Figure1).unwrap();
        assert_eq!(c.alpha_grid.unwrap(), vec![1.69, 1.75, 1.81]);
    }

    #[test]
    fn event_json() {
        let e: Event = serde_json::from_str(r#"{"kind": "max_size", "threshold": 8}"#).unwrap();
        assert_eq!(e, Event::MaxSize { threshold: 8 });
        assert_eq!(e.label(), "max_size_8");
    }
}
