use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{
    beta_c, first_moment_overlap, free_energy_curvature_at_half, free_energy_deriv,
    free_energy_gap, ModelParams,
};
use crate::error::{domain, Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CurveKind {
    FreeEnergyGap,
    FirstMomentExponent,
}

/// Sampled `(beta, value)` pairs plus located roots and critical points.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurveTable {
    pub kind: CurveKind,
    pub params: ModelParams,
    #[serde(skip)]
    pub points: Vec<(f64, f64)>,
    pub roots: Vec<f64>,
    pub critical_points: Vec<f64>,
}

#[derive(Serialize)]
struct Sidecar<'a> {
    #[serde(flatten)]
    table: &'a CurveTable,
    points_file: &'a str,
    point_count: usize,
}

impl CurveTable {
    /// CSV body with header `beta,value`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("beta,value\n");
        for (b, v) in &self.points {
            let _ = writeln!(out, "{b},{v}");
        }
        out
    }

    /// Parses a CSV produced by [`CurveTable::to_csv`].
    pub fn points_from_csv(text: &str) -> Result<Vec<(f64, f64)>> {
        let mut lines = text.lines();
        if lines.next() != Some("beta,value") {
            return Err(Error::Format("missing `beta,value` header".into()));
        }
        lines
            .filter(|l| !l.is_empty())
            .map(|l| {
                let (b, v) = l
                    .split_once(',')
                    .ok_or_else(|| Error::Format(format!("bad row `{l}`")))?;
                let parse = |s: &str| {
                    s.parse::<f64>()
                        .map_err(|e| Error::Format(format!("bad number `{s}`: {e}")))
                };
                Ok((parse(b)?, parse(v)?))
            })
            .collect()
    }

    /// Writes `<stem>.csv` and `<stem>.json` into `dir`, returning both paths.
    pub fn write(&self, dir: &Path, stem: &str) -> Result<[std::path::PathBuf; 2]> {
        let csv_path = dir.join(format!("{stem}.csv"));
        let json_path = dir.join(format!("{stem}.json"));
        std::fs::write(&csv_path, self.to_csv())?;
        std::fs::write(&json_path, self.sidecar_json(&format!("{stem}.csv"))?)?;
        Ok([csv_path, json_path])
    }

    /// JSON sidecar pointing at the CSV file `points_file`.
    pub fn sidecar_json(&self, points_file: &str) -> Result<String> {
        let sidecar = Sidecar { table: self, points_file, point_count: self.points.len() };
        Ok(serde_json::to_string_pretty(&sidecar)? + "\n")
    }

    /// Reads a table back from its sidecar and CSV.
    pub fn read(json_path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(json_path)?;
        let value: serde_json::Value = serde_json::from_str(&text)?;
        let mut table: CurveTable = serde_json::from_value(value.clone())?;
        let file = value
            .get("points_file")
            .and_then(|v| v.as_str())
            .ok_or_else(|| Error::Format("sidecar lacks points_file".into()))?;
        let dir = json_path.parent().unwrap_or(Path::new("."));
        table.points = Self::points_from_csv(&std::fs::read_to_string(dir.join(file))?)?;
        if table.points.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(Error::Format("beta column is not strictly increasing".into()));
        }
        Ok(table)
    }
}

/// `G(beta)` on `beta_k = k / (2 grid)`, `k = 1..=grid`, with `beta_c` as the
/// root when `alpha < alpha_c` and the located minimum as critical point.
pub fn gap_curve(params: ModelParams, grid: usize) -> Result<CurveTable> {
    if grid < 2 {
        return Err(domain("curve grid needs at least two points"));
    }
    let points = (1..=grid)
        .map(|k| {
            let b = k as f64 / (2 * grid) as f64;
            free_energy_gap(params, b).map(|v| (b, v))
        })
        .collect::<Result<Vec<_>>>()?;
    let roots = match beta_c(params) {
        Ok(b) => vec![b],
        Err(Error::Precondition(_)) => Vec::new(),
        Err(e) => return Err(e),
    };
    let report = check_assumption1(params, grid.max(1000))?;
    Ok(CurveTable {
        kind: CurveKind::FreeEnergyGap,
        params,
        points,
        roots,
        critical_points: report.critical_points_in_open_interval,
    })
}

/// `first_moment_overlap(N, m)` for every admissible overlap, keyed by
/// `beta = 1/2 + m / 2N`.
pub fn first_moment_curve(n: u64, params: ModelParams) -> Result<CurveTable> {
    let points = (0..=n)
        .map(|agree| {
            let overlap = 2 * agree as i64 - n as i64;
            first_moment_overlap(n, overlap, params).map(|v| (agree as f64 / n as f64, v))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CurveTable {
        kind: CurveKind::FirstMomentExponent,
        params,
        points,
        roots: Vec::new(),
        critical_points: Vec::new(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Assumption1Report {
    pub params: ModelParams,
    pub second_deriv_at_half: f64,
    pub critical_points_in_open_interval: Vec<f64>,
    pub holds: bool,
    /// Grid actually used after any refinement.
    pub grid_size: usize,
    /// Set when the verdict is vacuous (`F''(1/2) >= 0`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
}

const MAX_REFINEMENTS: u32 = 4;

/// Counts sign changes of the closed-form `F'` on a uniform interior grid of
/// `(0, 1/2)` and bisects each one to locate the critical point. The open
/// left end contributes its limiting sign, `F'(0+) < 0`.
pub fn check_assumption1(params: ModelParams, grid_size: usize) -> Result<Assumption1Report> {
    if grid_size < 1000 {
        return Err(domain(format!("grid_size must be at least 1000, got {grid_size}")));
    }
    let curvature = free_energy_curvature_at_half(params)?;
    let deriv = |b: f64| free_energy_deriv(params, b);

    let mut grid = grid_size;
    for _ in 0..=MAX_REFINEMENTS {
        let h = 0.5 / (grid + 1) as f64;
        let mut changes: Vec<(usize, f64, f64)> = Vec::new();
        // F'(0+) = -inf: the -1/sqrt(beta) term of q'/q beats ln(1/beta). A
        // minimum left of the first grid point is bracketed by stepping down.
        let mut last: Option<(usize, f64, f64)> = None;
        if deriv(h)? > 0.0 {
            let mut b = h;
            while b > 1e-300 {
                b *= 0.1;
                if deriv(b)? < 0.0 {
                    last = Some((0, b, -1.0));
                    break;
                }
            }
            if last.is_none() {
                return Err(Error::Numerical(format!(
                    "F' stays positive down to beta = 1e-300 for kappa={}, alpha={}",
                    params.kappa, params.alpha
                )));
            }
        }
        for k in 1..=grid {
            let b = k as f64 * h;
            let v = deriv(b)?;
            if v == 0.0 {
                continue;
            }
            if let Some((j, pb, pv)) = last {
                if pv.signum() != v.signum() {
                    changes.push((j, pb, b));
                }
            }
            last = Some((k, b, v));
        }
        // Two crossings in neighbouring cells cannot be told apart reliably.
        let crowded = changes.windows(2).any(|w| {
            if w[0].0 == 0 {
                return false;
            }
            let (_, _, end) = w[0];
            let (_, start, _) = w[1];
            start <= end + 0.5 * h
        });
        if crowded {
            grid *= 4;
            continue;
        }
        let mut critical = Vec::with_capacity(changes.len());
        for (_, mut lo, mut hi) in changes {
            let lo_sign = deriv(lo)?.signum();
            while hi - lo > 1e-13 {
                let mid = 0.5 * (lo + hi);
                if deriv(mid)?.signum() == lo_sign {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            critical.push(0.5 * (lo + hi));
        }
        let (holds, warning) = if curvature > 0.0 {
            (true, Some("F''(1/2) > 0: the only critical point is 1/2".to_string()))
        } else if curvature == 0.0 {
            (true, Some("F''(1/2) = 0: boundary case not covered, treated as vacuous".to_string()))
        } else {
            (critical.len() == 1, None)
        };
        return Ok(Assumption1Report {
            params,
            second_deriv_at_half: curvature,
            critical_points_in_open_interval: critical,
            holds,
            grid_size: grid,
            warning,
        });
    }
    Err(Error::Numerical(format!(
        "critical points of F' for kappa={}, alpha={} remain unresolved at grid {grid}",
        params.kappa, params.alpha
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::free_energy;

    fn params(kappa: f64, alpha: f64) -> ModelParams {
        ModelParams::new(kappa, alpha).unwrap()
    }

    #[test]
    fn single_critical_point_at_alpha_1p75() {
        let r = check_assumption1(params(1.0, 1.75), 1000).unwrap();
        assert!(r.second_deriv_at_half < 0.0);
        assert_eq!(r.critical_points_in_open_interval.len(), 1);
        assert!(r.holds);
        assert!(r.warning.is_none());
        let c = r.critical_points_in_open_interval[0];
        assert!(c > 0.0 && c < beta_c(params(1.0, 1.75)).unwrap());
    }

    #[test]
    fn vacuous_when_curvature_positive() {
        // F''(1/2) >= 0 needs alpha >= pi p^2 / (2 k^2 e^{-k^2}), about 1.99 at k = 1.
        let r = check_assumption1(params(1.0, 2.5), 1000).unwrap();
        assert!(r.second_deriv_at_half > 0.0);
        assert!(r.holds);
        assert!(r.warning.is_some());
    }

    #[test]
    fn small_alpha_has_one_critical_point() {
        let r = check_assumption1(params(1.0, 0.05), 1000).unwrap();
        assert!(r.second_deriv_at_half < 0.0);
        assert_eq!(r.critical_points_in_open_interval.len(), 1);
        assert!(r.holds);
    }

    #[test]
    fn derivative_matches_finite_differences() {
        for &(k, a) in &[(1.0, 1.75), (0.5, 0.4), (2.0, 5.0)] {
            let pr = params(k, a);
            for i in 1..50 {
                let b = i as f64 / 100.0;
                let h = 1e-5;
                let fd = (free_energy(pr, b + h).unwrap() - free_energy(pr, b - h).unwrap()) / (2.0 * h);
                let exact = free_energy_deriv(pr, b).unwrap();
                assert!((fd - exact).abs() < 1e-6, "k={k} a={a} b={b}: {fd} vs {exact}");
            }
        }
    }

    #[test]
    fn rejects_coarse_grid() {
        assert!(check_assumption1(params(1.0, 1.0), 999).is_err());
    }

    #[test]
    fn gap_curve_shape() {
        let t = gap_curve(params(1.0, 1.75), 2000).unwrap();
        assert_eq!(t.points.len(), 2000);
        assert_eq!(t.points.last().unwrap().0, 0.5);
        assert!(t.points.windows(2).all(|w| w[0].0 < w[1].0));
        assert_eq!(t.roots.len(), 1);
        assert_eq!(t.critical_points.len(), 1);
        let no_root = gap_curve(params(1.0, 1.9), 100).unwrap();
        assert!(no_root.roots.is_empty());
    }

    #[test]
    fn csv_and_sidecar_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let t = gap_curve(params(1.0, 1.69), 50).unwrap();
        let [csv, json] = t.write(dir.path(), "g").unwrap();
        assert!(std::fs::read_to_string(csv).unwrap().starts_with("beta,value\n"));
        let back = CurveTable::read(&json).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn first_moment_curve_endpoints() {
        let t = first_moment_curve(30, params(1.0, 1.0)).unwrap();
        assert_eq!(t.points.len(), 31);
        assert_eq!(t.points[0], (0.0, 0.0));
        assert_eq!(t.points[30], (1.0, 0.0));
    }
}
