//! Free-energy gap curves with their roots.

use serde::{Deserialize, Serialize};

use super::{alpha_tag, ExperimentConfig, OutputDir};
use crate::analytic::{alpha_c, free_energy_gap, gap_curve, CurveTable, ModelParams};
use crate::error::Result;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapCurveSummary {
    pub alpha: f64,
    pub beta_c: f64,
    /// `|G(beta_c)|`.
    pub root_residual: f64,
    /// `(beta, G)` at the smallest grid point.
    pub first_point: (f64, f64),
    /// Smallest sampled value.
    pub minimum: (f64, f64),
    pub value_at_half: f64,
    pub grid_sign_changes: usize,
    pub critical_points: Vec<f64>,
    pub points_file: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SkippedAlpha {
    pub alpha: f64,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Figure1Report {
    pub kappa: f64,
    pub alpha_c: f64,
    pub curve_points: usize,
    pub curves: Vec<GapCurveSummary>,
    pub skipped: Vec<SkippedAlpha>,
    #[serde(skip)]
    pub tables: Vec<CurveTable>,
}

fn sign_changes(points: &[(f64, f64)]) -> usize {
    let signs: Vec<bool> = points.iter().filter(|p| p.1 != 0.0).map(|p| p.1 > 0.0).collect();
    signs.windows(2).filter(|w| w[0] != w[1]).count()
}

/// `G(beta)` on `curve_points` points of `(0, 1/2]` for every alpha below
/// capacity; alphas at or above `alpha_c` are skipped with a reason.
pub fn run_figure1(cfg: &ExperimentConfig) -> Result<Figure1Report> {
    let ac = alpha_c(cfg.kappa)?;
    let mut curves = Vec::new();
    let mut tables = Vec::new();
    let mut skipped = Vec::new();
    for alpha in cfg.alpha_values()? {
        if alpha >= ac {
            skipped.push(SkippedAlpha {
                alpha,
                reason: format!("alpha = {alpha} >= alpha_c = {ac}; beta_c is undefined"),
            });
            continue;
        }
        let params = ModelParams::new(cfg.kappa, alpha)?;
        let table = gap_curve(params, cfg.curve_points)?;
        let beta_c = table.roots[0];
        let first_point = table.points[0];
        let minimum = table
            .points
            .iter()
            .copied()
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("at least two points");
        curves.push(GapCurveSummary {
            alpha,
            beta_c,
            root_residual: free_energy_gap(params, beta_c)?.abs(),
            first_point,
            minimum,
            value_at_half: free_energy_gap(params, 0.5)?,
            grid_sign_changes: sign_changes(&table.points),
            critical_points: table.critical_points.clone(),
            points_file: format!("gap_alpha_{}.csv", alpha_tag(alpha)),
        });
        tables.push(table);
    }
    Ok(Figure1Report { kappa: cfg.kappa, alpha_c: ac, curve_points: cfg.curve_points, curves, skipped, tables })
}

impl Figure1Report {
    /// One `gap_alpha_<a>.csv` plus JSON sidecar per curve and `figure1.json`.
    pub fn write(&self, out: &mut OutputDir) -> Result<()> {
        for (summary, table) in self.curves.iter().zip(&self.tables) {
            let stem = summary.points_file.trim_end_matches(".csv");
            out.write(&summary.points_file, table.to_csv().as_bytes())?;
            out.write(&format!("{stem}.json"), table.sidecar_json(&summary.points_file)?.as_bytes())?;
        }
        for s in &self.skipped {
            out.warn(s.reason.clone());
        }
        out.write_json("figure1.json", self)
    }
}
