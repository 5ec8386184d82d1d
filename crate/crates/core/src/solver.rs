//! Descent on the Nehari set.
//!
//! Each step moves along `φ(t) = u − t·E′(u) = (1−t)u + t·N(u)`, which stays in
//! the cone for `t ∈ [0,1]`, and maps back to the Nehari set with
//! `ψ(t) = s(φ(t))·φ(t)`. The step length comes from Armijo backtracking on
//! `t ↦ E(ψ(t))`, whose right derivative at zero is `−|E′(u)|²`.

use std::f64::consts::PI;
use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cone::{cone_membership, sample_cone_element, ConeReport, DEFAULT_TOL_CONE};
use crate::energy::{energy, gradient, hessian_form, Problem};
use crate::error::{Error, Result};
use crate::function_space::{h01_inner, GridFunction};
use crate::hypotheses::{certify, HypothesisOptions, HypothesisReport};
use crate::nehari::{manifold_residual, nehari_scale, AnnulusSpec};
use crate::par::{self, Execution};
use crate::verify_oracle::residual;

const MIN_STEP: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverOptions {
    /// Stopping threshold on `|E′(u)|_{H₀¹}`; `None` means `1e-8·√(rR)`.
    pub grad_tol: Option<f64>,
    pub max_iters: usize,
    pub armijo_c: f64,
    pub backtrack_factor: f64,
    pub t_init: f64,
    /// `0` starts from `sin(πt)`; any other value from a random cone element.
    pub seed: u64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            grad_tol: None,
            max_iters: 10_000,
            armijo_c: 1e-4,
            backtrack_factor: 0.5,
            t_init: 1.0,
            seed: 0,
        }
    }
}

impl SolverOptions {
    pub fn grad_tol_for(&self, a: &AnnulusSpec) -> f64 {
        self.grad_tol.unwrap_or(1e-8 * a.geometric_mean())
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(tol) = self.grad_tol {
            if !(tol > 0.0) {
                return Err(Error::Config(format!("grad_tol must be positive, got {tol}")));
            }
        }
        if !(self.armijo_c > 0.0 && self.armijo_c < 1.0) {
            return Err(Error::Config(format!("armijo_c must lie in (0,1), got {}", self.armijo_c)));
        }
        if !(self.backtrack_factor > 0.0 && self.backtrack_factor < 1.0) {
            return Err(Error::Config(format!(
                "backtrack_factor must lie in (0,1), got {}",
                self.backtrack_factor
            )));
        }
        if !(self.t_init > 0.0 && self.t_init <= 1.0) {
            return Err(Error::Config(format!("t_init must lie in (0,1], got {}", self.t_init)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iter: usize,
    pub energy: f64,
    pub grad_norm: f64,
    /// Accepted step that produced this iterate (0 for the start).
    pub step: f64,
    /// Nehari scale `s(φ(t))` applied to produce this iterate.
    pub scale: f64,
    pub norm: f64,
    pub cone_defect: f64,
    /// Normalized Nehari residual `(E′(u),u)/|u|²`.
    pub manifold_residual: f64,
    /// Right derivative of `t ↦ s(φ(t))` at zero.
    pub z: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DescentTrace {
    pub records: Vec<IterationRecord>,
}

impl DescentTrace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// CSV with header `iter,energy,grad_norm,step,scale,norm`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("iter,energy,grad_norm,step,scale,norm\n");
        for r in &self.records {
            writeln!(
                out,
                "{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                r.iter, r.energy, r.grad_norm, r.step, r.scale, r.norm
            )
            .expect("writing to a String");
        }
        out
    }

    /// Iterations whose recorded `z` exceeds `(C₁/C₂)|u||E′| + |E′|²/C₂`.
    pub fn z_bound_violations(&self, c1: f64, c2: f64) -> Vec<usize> {
        self.records
            .iter()
            .filter(|r| r.z.abs() > c1 / c2 * r.norm * r.grad_norm + r.grad_norm * r.grad_norm / c2)
            .map(|r| r.iter)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub u: GridFunction,
    pub norm: f64,
    pub energy: f64,
    pub grad_norm: f64,
    pub iterations: usize,
    pub cone_report: ConeReport,
    /// `r < |u| < R`.
    pub localized: bool,
    /// Max-norm ODE residual of the discrete equation.
    pub residual: f64,
    pub manifold_residual: f64,
}

impl Solution {
    pub fn certified(&self, grad_tol: f64) -> bool {
        self.localized && self.cone_report.passes && self.grad_norm <= grad_tol
    }

    /// `s·u′(0) ≈ u_1/h`.
    pub fn initial_slope(&self) -> f64 {
        self.u.values()[1] / self.u.grid().h()
    }
}

/// `z = (E″(u)(u,−E′) − |E′|²) / E″(u)(u,u)`.
fn z_value(p: &Problem, u: &GridFunction, grad: &GridFunction, grad_norm: f64) -> Result<f64> {
    let curvature = hessian_form(p, u, u, u)?;
    let mixed = hessian_form(p, u, u, grad)?;
    Ok((-mixed - grad_norm * grad_norm) / curvature)
}

/// `ψ(t) = s(φ(t))·φ(t)` with `φ(t) = u − t·grad`, returning `(ψ, s)`.
fn step_from(p: &Problem, a: &AnnulusSpec, u: &GridFunction, grad: &GridFunction, t: f64) -> Result<(GridFunction, f64)> {
    let path = u.axpy(-t, grad)?;
    let report = cone_membership(&path, DEFAULT_TOL_CONE);
    if !report.passes {
        return Err(Error::ConeDefect(report));
    }
    let s = nehari_scale(p, &path, a)?.s_value;
    Ok((path.scale(s), s))
}

pub fn ekeland_step(p: &Problem, a: &AnnulusSpec, u: &GridFunction, t: f64) -> Result<GridFunction> {
    if !(t > 0.0 && t <= 1.0) {
        return Err(Error::Domain(format!("step must lie in (0,1], got {t}")));
    }
    let grad = gradient(p, u)?;
    Ok(step_from(p, a, u, &grad, t)?.0)
}

/// `c·sin(πt)` with `H₀¹` norm `√(rR)` for `seed == 0`, otherwise a random
/// cone element of that norm.
pub fn initial_guess(p: &Problem, a: &AnnulusSpec, seed: u64) -> GridFunction {
    let grid = p.grid();
    let base = if seed == 0 {
        GridFunction::dirichlet(grid, |t| (PI * t).sin())
    } else {
        sample_cone_element(grid, &mut ChaCha8Rng::seed_from_u64(seed))
    };
    base.scale(a.geometric_mean() / base.h01_norm())
}

pub fn certify_solution(p: &Problem, a: &AnnulusSpec, u: GridFunction, grad_norm: f64, iterations: usize) -> Result<Solution> {
    let norm = u.h01_norm();
    let (norm_sq, res) = manifold_residual(p, &u)?;
    Ok(Solution {
        norm,
        energy: energy(p, &u)?,
        grad_norm,
        iterations,
        cone_report: cone_membership(&u, DEFAULT_TOL_CONE),
        localized: a.r < norm && norm < a.big_r,
        residual: residual(p, &u)?,
        manifold_residual: res / norm_sq,
        u,
    })
}

pub fn solve(p: &Problem, a: &AnnulusSpec, opts: &SolverOptions) -> Result<(Solution, DescentTrace)> {
    solve_from(p, a, opts, &initial_guess(p, a, opts.seed))
}

/// Runs the descent from `project(start)`.
pub fn solve_from(p: &Problem, a: &AnnulusSpec, opts: &SolverOptions, start: &GridFunction) -> Result<(Solution, DescentTrace)> {
    opts.validate()?;
    let grad_tol = opts.grad_tol_for(a);
    let root = nehari_scale(p, start, a)?;
    let mut u = start.scale(root.s_value);
    let mut e = energy(p, &u)?;
    let mut step = 0.0;
    let mut scale = root.s_value;
    let mut trace = DescentTrace::default();

    for iter in 0..=opts.max_iters {
        let grad = gradient(p, &u)?;
        let grad_norm = grad.h01_norm();
        let norm_sq = h01_inner(&u, &u)?;
        trace.records.push(IterationRecord {
            iter,
            energy: e,
            grad_norm,
            step,
            scale,
            norm: norm_sq.sqrt(),
            cone_defect: cone_membership(&u, DEFAULT_TOL_CONE).max_defect(),
            manifold_residual: h01_inner(&grad, &u)? / norm_sq,
            z: z_value(p, &u, &grad, grad_norm)?,
        });
        if grad_norm <= grad_tol {
            return Ok((certify_solution(p, a, u, grad_norm, iter)?, trace));
        }
        if iter == opts.max_iters {
            let best = certify_solution(p, a, u, grad_norm, iter)?;
            return Err(Error::MaxItersExceeded(Box::new((best, trace))));
        }

        // Armijo backtracking; the slack absorbs rounding in E near convergence.
        let slack = 64.0 * f64::EPSILON * (e.abs() + norm_sq);
        let mut t = opts.t_init;
        let mut last_err = None;
        let accepted = loop {
            if t < MIN_STEP {
                break None;
            }
            match step_from(p, a, &u, &grad, t) {
                Ok((psi, s)) => {
                    let e_new = energy(p, &psi)?;
                    if e_new <= e - opts.armijo_c * t * grad_norm * grad_norm + slack {
                        break Some((psi, s, e_new, t));
                    }
                }
                Err(err @ (Error::SignPatternViolation { .. } | Error::ConeDefect(_) | Error::Domain(_))) => {
                    last_err = Some(err);
                }
                Err(err) => return Err(err),
            }
            t *= opts.backtrack_factor;
        };
        match accepted {
            Some((psi, s, e_new, t)) => {
                u = psi;
                e = e_new;
                step = t;
                scale = s;
            }
            None => {
                return Err(last_err.unwrap_or(Error::LineSearchStalled {
                    iteration: iter,
                    trace: Box::new(trace),
                }))
            }
        }
    }
    unreachable!("loop returns at iter == max_iters")
}

#[derive(Debug)]
pub enum AnnulusOutcome {
    Solved(Box<(Solution, DescentTrace)>),
    /// The hypothesis gate failed and the solve was not attempted.
    Skipped,
    Failed(Error),
}

#[derive(Debug)]
pub struct MultiResult {
    pub annulus: AnnulusSpec,
    pub report: HypothesisReport,
    pub outcome: AnnulusOutcome,
}

impl MultiResult {
    pub fn solution(&self) -> Option<&Solution> {
        match &self.outcome {
            AnnulusOutcome::Solved(s) => Some(&s.0),
            _ => None,
        }
    }
}

pub fn check_ordering(annuli: &[AnnulusSpec]) -> Result<()> {
    match annuli.windows(2).position(|w| !(w[0].big_r < w[1].r)) {
        Some(i) => Err(Error::OverlappingAnnuli { index: i + 1 }),
        None => Ok(()),
    }
}

/// Hypothesis check and, when it passes (or `force` is set), a solve for
/// every annulus. Annuli are processed concurrently.
pub fn solve_multi(
    p: &Problem,
    annuli: &[AnnulusSpec],
    opts: &SolverOptions,
    hyp: &HypothesisOptions,
    force: bool,
    exec: Execution,
) -> Result<Vec<MultiResult>> {
    check_ordering(annuli)?;
    par::map(exec, annuli, |a| {
        let report = certify(p, a, hyp, exec)?;
        let outcome = if report.passes || force {
            match solve(p, a, opts) {
                Ok(done) => AnnulusOutcome::Solved(Box::new(done)),
                Err(e) => AnnulusOutcome::Failed(e),
            }
        } else {
            AnnulusOutcome::Skipped
        };
        Ok(MultiResult {
            annulus: *a,
            report,
            outcome,
        })
    })
    .into_iter()
    .collect()
}
