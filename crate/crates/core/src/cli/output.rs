//! Files written and read by the command-line tool.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::cone::ConeReport;
use crate::error::{Error, Result};
use crate::function_space::{Grid, GridFunction};
use crate::hypotheses::HypothesisReport;
use crate::nehari::AnnulusSpec;
use crate::solver::{DescentTrace, Solution};

fn io(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Config(format!("{}: {e}", path.display()))
}

/// 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_solution_csv(path: &Path, u: &GridFunction) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| io(path, e))?;
    w.write_record(["t", "u"]).map_err(|e| io(path, e))?;
    for (t, x) in u.grid().nodes().zip(u.values()) {
        w.write_record([fmt_f64(t), fmt_f64(*x)]).map_err(|e| io(path, e))?;
    }
    w.flush().map_err(|e| io(path, e))
}

#[derive(Deserialize)]
struct Row {
    t: f64,
    u: f64,
}

/// Reads a `t,u` profile; the rows must match the nodes of `grid`.
pub fn read_solution_csv(path: &Path, grid: Grid) -> Result<GridFunction> {
    let mut r = csv::Reader::from_path(path).map_err(|e| io(path, e))?;
    let rows = r
        .deserialize::<Row>()
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|e| io(path, e))?;
    if rows.len() != grid.len() {
        return Err(Error::GridMismatch {
            left: grid.cells(),
            right: rows.len().saturating_sub(1),
        });
    }
    for (i, row) in rows.iter().enumerate() {
        if (row.t - grid.node(i)).abs() > 1e-9 {
            return Err(io(path, format!("row {i}: t = {} does not match node {}", row.t, grid.node(i))));
        }
    }
    GridFunction::from_values(grid, rows.into_iter().map(|r| r.u).collect())
}

pub fn write_trace_csv(path: &Path, trace: &DescentTrace) -> Result<()> {
    std::fs::write(path, trace.to_csv()).map_err(|e| io(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| io(path, e))?;
    std::fs::write(path, text + "\n").map_err(|e| io(path, e))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionSummary {
    pub norm: f64,
    pub energy: f64,
    pub grad_norm: f64,
    pub grad_tol: f64,
    pub iterations: usize,
    pub residual: f64,
    /// `50·h²·max|g·f(u)|`.
    pub residual_bound: f64,
    pub manifold_residual: f64,
    pub cone: ConeReport,
    pub localized: bool,
    pub certified: bool,
    pub initial_slope: f64,
}

pub fn residual_bound(p: &crate::energy::Problem, u: &GridFunction) -> f64 {
    let h = u.grid().h();
    let g = p.g.samples().values();
    let max_source = u
        .values()
        .iter()
        .zip(g)
        .map(|(&x, &gi)| (gi * p.f.f(x)).abs())
        .fold(0.0, f64::max);
    50.0 * h * h * max_source
}

impl SolutionSummary {
    pub fn new(p: &crate::energy::Problem, s: &Solution, grad_tol: f64) -> Self {
        Self {
            norm: s.norm,
            energy: s.energy,
            grad_norm: s.grad_norm,
            grad_tol,
            iterations: s.iterations,
            residual: s.residual,
            residual_bound: residual_bound(p, &s.u),
            manifold_residual: s.manifold_residual,
            cone: s.cone_report,
            localized: s.localized,
            certified: s.certified(grad_tol),
            initial_slope: s.initial_slope(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Solved,
    /// Hypotheses failed; no solve attempted.
    Skipped,
    /// A solve ran but returned an error or an uncertified point.
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Files {
    pub solution: String,
    pub trace: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnulusRecord {
    pub index: usize,
    pub annulus: AnnulusSpec,
    pub status: Status,
    pub hypotheses: HypothesisReport,
    pub solution: Option<SolutionSummary>,
    pub error: Option<String>,
    pub files: Option<Files>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub results: Vec<AnnulusRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShootingAgreement {
    pub slope: f64,
    pub boundary_miss: f64,
    pub sup_distance: f64,
    /// `sup_distance / sup|u|`.
    #[serde(with = "crate::serde_f64")]
    pub relative_distance: f64,
    pub agrees: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub annulus: AnnulusSpec,
    pub norm: f64,
    pub residual: f64,
    pub residual_bound: f64,
    pub residual_ok: bool,
    pub cone: ConeReport,
    #[serde(with = "crate::serde_f64")]
    pub manifold_residual: f64,
    pub on_manifold: bool,
    pub localized: bool,
    pub shooting: Option<ShootingAgreement>,
    pub shooting_error: Option<String>,
    pub passes: bool,
}
