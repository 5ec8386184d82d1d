use thiserror::Error;

use crate::cone::ConeReport;
use crate::solver::{DescentTrace, Solution};

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("grid mismatch: {left} cells vs {right} cells")]
    GridMismatch { left: usize, right: usize },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    /// The fiber derivative does not change sign from + to - across the
    /// bracket `[r/|u|, R/|u|]`, so no Nehari scale exists there.
    #[error(
        "fiber sign pattern violated on [{lo:.6e}, {hi:.6e}]: α'(lo) = {at_lo:.6e}, α'(hi) = {at_hi:.6e}"
    )]
    SignPatternViolation {
        lo: f64,
        hi: f64,
        at_lo: f64,
        at_hi: f64,
    },

    #[error("degenerate Hessian: E''(u)(u,u) = {value:.6e} (|u|^2 = {norm_sq:.6e})")]
    DegenerateHessian { value: f64, norm_sq: f64 },

    #[error("point is not on the Nehari set: (E'(u),u) = {residual:.6e}")]
    NotOnManifold { residual: f64 },

    #[error("cone defect beyond tolerance: {0:?}")]
    ConeDefect(ConeReport),

    #[error("maximum iterations exceeded; best gradient norm {grad_norm:.6e}", grad_norm = .0.0.grad_norm)]
    MaxItersExceeded(Box<(Solution, DescentTrace)>),

    #[error("line search stalled at iteration {iteration}")]
    LineSearchStalled {
        iteration: usize,
        trace: Box<DescentTrace>,
    },

    #[error("annuli must satisfy R_i < r_(i+1); violated at index {index}")]
    OverlappingAnnuli { index: usize },

    #[error("no shooting root in slope range: {0}")]
    NoRootInRange(String),
}
