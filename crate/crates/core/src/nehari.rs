//! Fiber maps `τ ↦ E(τu)`, the Nehari scale `s(u)` on the annulus
//! `r ≤ τ|u| ≤ R`, and the projection `u ↦ s(u)·u`.

use serde::{Deserialize, Serialize};

use crate::energy::{gradient, hessian_form, Problem};
use crate::error::{Error, Result};
use crate::function_space::{h01_inner, sup_norm, GridFunction};

const MAX_ROOT_ITERS: usize = 200;

/// Annular conical set `r ≤ |u| ≤ R` together with the Harnack parameter β.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnnulusSpec {
    pub r: f64,
    #[serde(rename = "R")]
    pub big_r: f64,
    pub beta: f64,
}

impl AnnulusSpec {
    pub fn new(r: f64, big_r: f64, beta: f64) -> Result<Self> {
        if !(r > 0.0 && r < big_r && big_r.is_finite()) {
            return Err(Error::Config(format!("annulus needs 0 < r < R < ∞, got r = {r}, R = {big_r}")));
        }
        if !(beta > 0.0 && beta < 0.25) {
            return Err(Error::Config(format!("beta must lie in (0, 1/4), got {beta}")));
        }
        Ok(Self { r, big_r, beta })
    }

    pub fn contains_norm(&self, norm: f64) -> bool {
        self.r <= norm && norm <= self.big_r
    }

    pub fn geometric_mean(&self) -> f64 {
        (self.r * self.big_r).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FiberRootResult {
    pub s_value: f64,
    pub bracket: (f64, f64),
    pub iterations: usize,
    pub residual: f64,
    /// The root sits within `1e-9` of a bracket end (relative to its width).
    pub near_endpoint: bool,
}

/// `α_u′(τ) = τ|u|² − ∫ g·f(τu)·u`.
pub fn fiber_derivative(p: &Problem, u: &GridFunction, tau: f64) -> Result<f64> {
    fiber_derivative_with(p, u, h01_inner(u, u)?, tau)
}

fn fiber_derivative_with(p: &Problem, u: &GridFunction, norm_sq: f64, tau: f64) -> Result<f64> {
    if !(tau > 0.0) {
        return Err(Error::Domain(format!("fiber parameter must be positive, got {tau}")));
    }
    if tau * sup_norm(u) > p.f.domain_max() {
        return Err(Error::Domain(format!(
            "τ·|u|_∞ = {:.6e} exceeds the certified range of f",
            tau * sup_norm(u)
        )));
    }
    if u.grid() != p.grid() {
        return Err(Error::GridMismatch {
            left: p.grid().cells(),
            right: u.grid().cells(),
        });
    }
    Ok(tau * norm_sq - p.weighted_integral(u, |_, x| p.f.f(tau * x) * x))
}

/// Unique sign change of `α_u′` in `(r/|u|, R/|u|)`, by bisection with
/// secant acceleration.
pub fn nehari_scale(p: &Problem, u: &GridFunction, a: &AnnulusSpec) -> Result<FiberRootResult> {
    let norm_sq = h01_inner(u, u)?;
    if !(norm_sq > 0.0) {
        return Err(Error::Domain("the Nehari scale is undefined for u = 0".into()));
    }
    let norm = norm_sq.sqrt();
    let (lo, hi) = (a.r / norm, a.big_r / norm);
    let eval = |tau: f64| fiber_derivative_with(p, u, norm_sq, tau);
    let (f_lo, f_hi) = (eval(lo)?, eval(hi)?);
    if !(f_lo > 0.0 && f_hi < 0.0) {
        return Err(Error::SignPatternViolation {
            lo,
            hi,
            at_lo: f_lo,
            at_hi: f_hi,
        });
    }
    let tol = 1e-12 * norm_sq;

    let (mut left, mut f_left, mut right, mut f_right) = (lo, f_lo, hi, f_hi);
    let mut best = if f_lo.abs() < f_hi.abs() { (lo, f_lo) } else { (hi, f_hi) };
    let mut prev_width = hi - lo;
    let mut bisect = false;
    let mut iterations = 0;
    while iterations < MAX_ROOT_ITERS {
        iterations += 1;
        let mid = 0.5 * (left + right);
        let x = if bisect {
            mid
        } else {
            let secant = right - f_right * (right - left) / (f_right - f_left);
            if secant > left && secant < right { secant } else { mid }
        };
        let fx = eval(x)?;
        if fx.abs() < best.1.abs() {
            best = (x, fx);
        }
        if fx.abs() <= tol {
            break;
        }
        if fx > 0.0 {
            left = x;
            f_left = fx;
        } else {
            right = x;
            f_right = fx;
        }
        let width = right - left;
        if width <= 4.0 * f64::EPSILON * right {
            break;
        }
        bisect = width > 0.5 * prev_width;
        prev_width = width;
    }
    let (s_value, residual) = best;
    let edge = 1e-9 * (hi - lo);
    Ok(FiberRootResult {
        s_value,
        bracket: (lo, hi),
        iterations,
        residual,
        near_endpoint: s_value - lo <= edge || hi - s_value <= edge,
    })
}

/// `s(u)·u`, the point of the Nehari set on the ray through `u`.
pub fn project(p: &Problem, u: &GridFunction, a: &AnnulusSpec) -> Result<GridFunction> {
    Ok(u.scale(nehari_scale(p, u, a)?.s_value))
}

/// Right derivative of `t ↦ s(u + t·v)` at `t = 0` for `u` on the Nehari set:
/// `−(E″(u)(u,v) + (E′(u),v)) / E″(u)(u,u)`.
pub fn scale_directional_derivative(p: &Problem, u: &GridFunction, v: &GridFunction) -> Result<f64> {
    let norm_sq = h01_inner(u, u)?;
    let grad = gradient(p, u)?;
    let residual = h01_inner(&grad, u)?;
    if residual.abs() > 1e-8 * norm_sq {
        return Err(Error::NotOnManifold { residual });
    }
    let curvature = hessian_form(p, u, u, u)?;
    if curvature.abs() < 1e-10 * norm_sq {
        return Err(Error::DegenerateHessian {
            value: curvature,
            norm_sq,
        });
    }
    Ok(-(hessian_form(p, u, u, v)? + h01_inner(&grad, v)?) / curvature)
}

/// `r ≤ |u| ≤ R` and `|(E′(u),u)| ≤ tol·|u|²`.
pub fn on_manifold(p: &Problem, u: &GridFunction, a: &AnnulusSpec, tol: f64) -> bool {
    manifold_residual(p, u)
        .map(|(norm_sq, res)| a.contains_norm(norm_sq.sqrt()) && res.abs() <= tol * norm_sq)
        .unwrap_or(false)
}

/// `(|u|², (E′(u),u))`.
pub fn manifold_residual(p: &Problem, u: &GridFunction) -> Result<(f64, f64)> {
    let grad = gradient(p, u)?;
    Ok((h01_inner(u, u)?, h01_inner(&grad, u)?))
}

/// Dense scan of `α_u′` over `[r/|u|, R/|u|]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FiberScan {
    pub positive_at_left: bool,
    pub negative_at_right: bool,
    pub sign_changes: usize,
}

impl FiberScan {
    /// The sampled form of the (h1) sign pattern: `+` at the left end, `−`
    /// at the right end, exactly one change in between.
    pub fn passes(&self) -> bool {
        self.positive_at_left && self.negative_at_right && self.sign_changes == 1
    }
}

pub fn fiber_sign_scan(p: &Problem, u: &GridFunction, a: &AnnulusSpec, points: usize) -> Result<FiberScan> {
    let norm_sq = h01_inner(u, u)?;
    let norm = norm_sq.sqrt();
    let (lo, hi) = (a.r / norm, a.big_r / norm);
    let points = points.max(2);
    let values = (0..points)
        .map(|k| fiber_derivative_with(p, u, norm_sq, lo + (hi - lo) * k as f64 / (points - 1) as f64))
        .collect::<Result<Vec<_>>>()?;
    let sign_changes = values
        .windows(2)
        .filter(|w| (w[0] > 0.0) != (w[1] > 0.0))
        .count();
    Ok(FiberScan {
        positive_at_left: values[0] > 0.0,
        negative_at_right: values[points - 1] < 0.0,
        sign_changes,
    })
}
