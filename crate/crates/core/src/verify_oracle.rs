//! Independent checks of computed solutions: the pointwise residual of the
//! discrete equation and a shooting method for `-u″ = g(t)f(u)`, `u(0) = 0`,
//! `u′(0) = σ`, solved by RK4 and matched at `u(1) = 0`.

use crate::energy::Problem;
use crate::error::{Error, Result};
use crate::function_space::{sup_norm, GridFunction};
use crate::nehari::AnnulusSpec;
use crate::par::{self, Execution};

/// RK4 substeps per grid cell.
const REFINE: usize = 4;
const BOUNDARY_TOL: f64 = 1e-10;

/// `max_i |(−u_{i−1} + 2u_i − u_{i+1})/h² − g_i f(u_i)|` over interior nodes.
pub fn residual(p: &Problem, u: &GridFunction) -> Result<f64> {
    p.check(u)?;
    let h = u.grid().h();
    let v = u.values();
    let g = p.g.samples().values();
    Ok((1..v.len() - 1)
        .map(|i| ((2.0 * v[i] - v[i - 1] - v[i + 1]) / (h * h) - g[i] * p.f.f(v[i])).abs())
        .fold(0.0, f64::max))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShootingResult {
    pub slope: f64,
    /// Trajectory at the grid nodes; the right endpoint is set to zero.
    pub u: GridFunction,
    /// `|u(1;σ)|` before the endpoint was pinned.
    pub boundary_miss: f64,
}

struct Trajectory {
    end: f64,
    nodes: Vec<f64>,
    valid: bool,
}

fn integrate(p: &Problem, slope: f64) -> Trajectory {
    let grid = p.grid();
    let steps = grid.cells() * REFINE;
    let h = 1.0 / steps as f64;
    let cap = p.f.domain_max();
    let rhs = |t: f64, u: f64| -p.g.eval(t) * p.f.f(u.clamp(-cap, cap));
    let (mut u, mut v) = (0.0f64, slope);
    let mut nodes = Vec::with_capacity(grid.len());
    nodes.push(0.0);
    let mut valid = true;
    for k in 0..steps {
        let t = k as f64 * h;
        let (k1u, k1v) = (v, rhs(t, u));
        let (k2u, k2v) = (v + 0.5 * h * k1v, rhs(t + 0.5 * h, u + 0.5 * h * k1u));
        let (k3u, k3v) = (v + 0.5 * h * k2v, rhs(t + 0.5 * h, u + 0.5 * h * k2u));
        let (k4u, k4v) = (v + h * k3v, rhs(t + h, u + h * k3u));
        u += h / 6.0 * (k1u + 2.0 * k2u + 2.0 * k3u + k4u);
        v += h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
        if !u.is_finite() || !v.is_finite() || u.abs() > cap {
            valid = false;
            break;
        }
        if (k + 1) % REFINE == 0 {
            nodes.push(u);
        }
    }
    Trajectory { end: u, nodes, valid }
}

/// Roots of `σ ↦ u(1;σ)` in `(lo, hi]`, found by a scan over `steps` equal
/// subintervals followed by bisection to `|u(1)| ≤ 1e-10`. Trajectories that
/// leave the domain of `f` are discarded.
pub fn shoot(p: &Problem, range: (f64, f64), steps: usize, exec: Execution) -> Result<Vec<ShootingResult>> {
    let (lo, hi) = range;
    if !(lo < hi) || steps == 0 {
        return Err(Error::Config(format!("empty slope range ({lo}, {hi}] with {steps} steps")));
    }
    let slopes: Vec<f64> = (1..=steps).map(|k| lo + (hi - lo) * k as f64 / steps as f64).collect();
    let ends: Vec<Option<f64>> = par::map(exec, &slopes, |&s| {
        let tr = integrate(p, s);
        tr.valid.then_some(tr.end)
    });

    let mut found = Vec::new();
    for k in 0..slopes.len() {
        let Some(e) = ends[k] else { continue };
        if e == 0.0 {
            found.push(slopes[k]);
            continue;
        }
        if k + 1 < slopes.len() {
            if let Some(next) = ends[k + 1] {
                if next != 0.0 && e.signum() != next.signum() {
                    found.push(bisect(p, (slopes[k], e), slopes[k + 1]));
                }
            }
        }
    }

    let results: Vec<ShootingResult> = found
        .into_iter()
        .filter_map(|slope| {
            let tr = integrate(p, slope);
            if !tr.valid || tr.end.abs() > BOUNDARY_TOL {
                return None;
            }
            let mut nodes = tr.nodes;
            *nodes.last_mut().expect("nonempty") = 0.0;
            Some(ShootingResult {
                slope,
                u: GridFunction::from_values(p.grid(), nodes).expect("one value per node"),
                boundary_miss: tr.end.abs(),
            })
        })
        .collect();
    if results.is_empty() {
        return Err(Error::NoRootInRange(format!("no shooting solution with slope in ({lo}, {hi}]")));
    }
    Ok(results)
}

fn bisect(p: &Problem, (mut a, mut fa): (f64, f64), mut b: f64) -> f64 {
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let tr = integrate(p, m);
        let fm = if tr.valid { tr.end } else { f64::NAN };
        if fm.abs() <= BOUNDARY_TOL {
            return m;
        }
        if fm.is_nan() || fm.signum() == fa.signum() {
            a = m;
            fa = if fm.is_nan() { fa } else { fm };
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// Default scan range `(0, 4R]`.
pub fn default_slope_range(a: &AnnulusSpec) -> (f64, f64) {
    (0.0, 4.0 * a.big_r)
}

pub const DEFAULT_SHOOTING_STEPS: usize = 2000;

/// Max-norm distance between two nodal profiles.
pub fn compare(u_a: &GridFunction, u_b: &GridFunction) -> Result<f64> {
    Ok(sup_norm(&u_a.sub(u_b)?))
}

/// Shooting solution closest in max norm to `u`, with its distance.
pub fn closest<'a>(results: &'a [ShootingResult], u: &GridFunction) -> Option<(&'a ShootingResult, f64)> {
    results
        .iter()
        .filter_map(|r| compare(&r.u, u).ok().map(|d| (r, d)))
        .min_by(|x, y| x.1.total_cmp(&y.1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::function_space::Grid;
    use crate::green_operator::{Nonlinearity, WeightFunction};
    use std::f64::consts::PI;

    fn problem(f: Nonlinearity, n: usize) -> Problem {
        Problem::new(f, WeightFunction::constant(Grid::new(n).unwrap(), 1.0).unwrap())
    }

    #[test]
    fn residual_of_exact_quadratic_vanishes() {
        let p = problem(Nonlinearity::constant(1.0), 100);
        let u = GridFunction::from_fn(p.grid(), |t| 0.5 * t * (1.0 - t));
        assert!(residual(&p, &u).unwrap() < 1e-9);
    }

    #[test]
    fn constant_source_shoots_to_one_half() {
        let p = problem(Nonlinearity::constant(1.0), 100);
        let found = shoot(&p, (0.0, 2.0), 40, Execution::default()).unwrap();
        assert_eq!(found.len(), 1);
        assert!((found[0].slope - 0.5).abs() < 1e-9);
        let exact = GridFunction::from_fn(p.grid(), |t| 0.5 * t * (1.0 - t));
        assert!(compare(&found[0].u, &exact).unwrap() < 1e-10);
    }

    #[test]
    fn linear_problem_below_first_eigenvalue_has_no_root() {
        let p = problem(Nonlinearity::power(1.0, 1.0).unwrap(), 100);
        let err = shoot(&p, (0.0, 10.0), 100, Execution::default()).unwrap_err();
        assert!(matches!(err, Error::NoRootInRange(_)));
    }

    #[test]
    fn empty_range_is_rejected() {
        let p = problem(Nonlinearity::constant(1.0), 10);
        assert!(matches!(shoot(&p, (1.0, 1.0), 10, Execution::default()), Err(Error::Config(_))));
    }

    #[test]
    fn sine_profile_for_critical_linear_problem() {
        // f(u) = π²u: every slope gives σ sin(πt)/π, and u(1) vanishes up to RK4 error
        let p = problem(Nonlinearity::power(PI * PI, 1.0).unwrap(), 200);
        let tr = integrate(&p, 1.0);
        assert!(tr.end.abs() < 1e-8);
        let exact = GridFunction::from_fn(p.grid(), |t| (PI * t).sin() / PI);
        let traj = GridFunction::from_values(p.grid(), tr.nodes).unwrap();
        assert!(compare(&traj, &exact).unwrap() < 1e-9);
    }

    #[test]
    fn sequential_and_parallel_scans_agree() {
        let p = problem(Nonlinearity::power(3.0, 3.0).unwrap(), 100);
        let a = AnnulusSpec::new(1.0, 60.0, 0.2).unwrap();
        let s = shoot(&p, default_slope_range(&a), 400, Execution::Sequential).unwrap();
        let q = shoot(&p, default_slope_range(&a), 400, Execution::default()).unwrap();
        assert_eq!(s, q);
    }
}
