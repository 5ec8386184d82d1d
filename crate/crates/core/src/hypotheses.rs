//! Certification of the sufficient conditions (H1)–(H4) for the Dirichlet
//! problem, plus sampled evidence for the abstract hypotheses: the (h1)
//! fiber sign pattern and the constants `C₁`, `C₂` of (h3), (h4).
//!
//! The continuum inequalities are verified on uniform sample grids and every
//! check reports its margin, so a pass close to zero is visible as such.

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cone::{phi, sample_cone_element};
use crate::energy::{hessian_form, Problem};
use crate::error::{Error, Result};
use crate::function_space::{integrate_range, quadrature, GridFunction};
use crate::green_operator::{apply_inverse_laplacian, WeightFunction};
use crate::nehari::{fiber_sign_scan, project, AnnulusSpec};
use crate::par::{self, Execution};

const CHECK_POINTS: usize = 2000;
const SLACK: f64 = 1e-12;

/// `Ã = |g|_{L²}`, `B̃ = ∫_0^β g`, `C̃ = ∫_β^{1/2} g`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Constants {
    pub a_tilde: f64,
    pub b_tilde: f64,
    pub c_tilde: f64,
}

pub fn compute_constants(g: &WeightFunction, beta: f64) -> Result<Constants> {
    if !(beta > 0.0 && beta < 0.25) {
        return Err(Error::Domain(format!("beta must lie in (0, 1/4), got {beta}")));
    }
    let samples = g.samples();
    Ok(Constants {
        a_tilde: quadrature(&samples.map(|x| x * x)).sqrt(),
        b_tilde: integrate_range(samples, 0.0, beta),
        c_tilde: integrate_range(samples, beta, 0.5),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct H1Check {
    pub pass: bool,
    /// `π/Ã − f(r)/r`
    #[serde(with = "crate::serde_f64")]
    pub left: f64,
    /// `f(Rφ(β))/R − 1/(2φ(β)C̃)`
    #[serde(with = "crate::serde_f64")]
    pub right: f64,
    pub reason: Option<String>,
}

pub fn check_h1(p: &Problem, a: &AnnulusSpec) -> Result<H1Check> {
    let k = compute_constants(&p.g, a.beta)?;
    let phi_b = phi(a.beta)?;
    if !(k.a_tilde > 0.0) || !(k.c_tilde > 0.0) {
        let reason = if k.c_tilde > 0.0 { "Ã = 0" } else { "C̃ = 0" };
        return Ok(H1Check {
            pass: false,
            left: f64::NAN,
            right: f64::NAN,
            reason: Some(reason.to_string()),
        });
    }
    let left = PI / k.a_tilde - p.f.f(a.r) / a.r;
    let right = p.f.f(a.big_r * phi_b) / a.big_r - 1.0 / (2.0 * phi_b * k.c_tilde);
    Ok(H1Check {
        pass: left > 0.0 && right > 0.0,
        left,
        right,
        reason: None,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct H2Check {
    pub pass: bool,
    /// `min (t f′(t) − f(t))` over `[R·1e-6, R]`.
    #[serde(with = "crate::serde_f64")]
    pub min_margin: f64,
}

/// (H2) with `θ(t) := t f′(t) − f(t)`, required positive on a 2000-point grid
/// of `(0, R]` from the floor `R·1e-6` upward.
pub fn check_h2(p: &Problem, a: &AnnulusSpec) -> H2Check {
    let floor = a.big_r * 1e-6;
    let min_margin = std::iter::once(floor)
        .chain((1..=CHECK_POINTS).map(|k| a.big_r * k as f64 / CHECK_POINTS as f64))
        .map(|t| t * p.f.f1(t) - p.f.f(t))
        .fold(f64::INFINITY, f64::min);
    H2Check {
        pass: min_margin > 0.0,
        min_margin,
    }
}

fn coronal_points(a: &AnnulusSpec) -> Vec<f64> {
    let lo = a.r * phi(a.beta).expect("beta validated");
    (0..CHECK_POINTS)
        .map(|k| lo + (a.big_r - lo) * k as f64 / (CHECK_POINTS - 1) as f64)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct H3Check {
    pub pass: bool,
    #[serde(with = "crate::serde_f64")]
    pub mu: f64,
    #[serde(with = "crate::serde_f64")]
    pub lambda: f64,
    /// `min (t f′ − μ f)` on `[rφ(β), R]`.
    #[serde(with = "crate::serde_f64")]
    pub ar_margin: f64,
    /// `min f′ − λ` on `[rφ(β), R]`.
    #[serde(with = "crate::serde_f64")]
    pub derivative_margin: f64,
    /// `λC̃(1 − 1/μ)rφ(β) − B̃ f(rφ(β))`.
    #[serde(with = "crate::serde_f64")]
    pub estimate_margin: f64,
    pub reason: Option<String>,
}

pub fn check_h3(p: &Problem, a: &AnnulusSpec, mu: f64, lambda: f64) -> Result<H3Check> {
    if !(mu > 1.0) || !(lambda > 0.0) {
        return Ok(H3Check {
            pass: false,
            mu,
            lambda,
            ar_margin: f64::NAN,
            derivative_margin: f64::NAN,
            estimate_margin: f64::NAN,
            reason: Some(format!("requires mu > 1 and lambda > 0, got mu = {mu}, lambda = {lambda}")),
        });
    }
    let k = compute_constants(&p.g, a.beta)?;
    let t0 = a.r * phi(a.beta)?;
    let mut ar_margin = f64::INFINITY;
    let mut ar_ok = true;
    let mut derivative_margin = f64::INFINITY;
    let mut derivative_ok = true;
    for t in coronal_points(a) {
        let (tf1, mf) = (t * p.f.f1(t), mu * p.f.f(t));
        ar_margin = ar_margin.min(tf1 - mf);
        ar_ok &= tf1 - mf >= -SLACK * (tf1.abs() + mf.abs());
        let d = p.f.f1(t) - lambda;
        derivative_margin = derivative_margin.min(d);
        derivative_ok &= d >= -SLACK * lambda;
    }
    let estimate_margin = lambda * k.c_tilde * (1.0 - 1.0 / mu) * t0 - k.b_tilde * p.f.f(t0);
    Ok(H3Check {
        pass: ar_ok && derivative_ok && estimate_margin > 0.0,
        mu,
        lambda,
        ar_margin,
        derivative_margin,
        estimate_margin,
        reason: None,
    })
}

/// Grid search over `μ ∈ (1, 10]` with `λ = min f′` on `[rφ(β), R]`; returns
/// the passing check with the largest `μ`, or the best-margin failure.
pub fn search_h3(p: &Problem, a: &AnnulusSpec) -> Result<H3Check> {
    let lambda = coronal_points(a)
        .into_iter()
        .map(|t| p.f.f1(t))
        .fold(f64::INFINITY, f64::min);
    let mut best: Option<H3Check> = None;
    for k in (1..=200).rev() {
        let mu = 1.0 + 9.0 * k as f64 / 200.0;
        let check = check_h3(p, a, mu, lambda)?;
        if check.pass {
            return Ok(check);
        }
        let score = check.ar_margin.min(check.estimate_margin);
        if best
            .as_ref()
            .is_none_or(|b| score > b.ar_margin.min(b.estimate_margin))
        {
            best = Some(check);
        }
    }
    Ok(best.expect("at least one mu evaluated"))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct H4Check {
    pub pass: bool,
    /// `max g(t_i)` over nodes with `t_i < β` (mirrored).
    pub support_defect: f64,
    /// `M = min f″` on `[rφ(β), R]`.
    #[serde(with = "crate::serde_f64")]
    pub min_f2: f64,
    /// `min θ̃ = min (t f′ − f)` on `[rφ(β), R]`.
    #[serde(with = "crate::serde_f64")]
    pub min_theta: f64,
}

pub fn check_h4(p: &Problem, a: &AnnulusSpec) -> H4Check {
    let grid = p.grid();
    let g = p.g.samples().values();
    let support_defect = (0..grid.len())
        .filter(|&i| grid.half_node(i) < a.beta)
        .map(|i| g[i].abs())
        .fold(0.0, f64::max);
    let points = coronal_points(a);
    let min_f2 = points.iter().map(|&t| p.f.f2(t)).fold(f64::INFINITY, f64::min);
    let min_theta = points
        .iter()
        .map(|&t| t * p.f.f1(t) - p.f.f(t))
        .fold(f64::INFINITY, f64::min);
    H4Check {
        pass: support_defect <= 1e-12 && min_f2 > 0.0 && min_theta > 0.0,
        support_defect,
        min_f2,
        min_theta,
    }
}

fn sample_rng(seed: u64, index: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ (index as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// Sampled bounds for (h3) and (h4) over random points of the Nehari set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AbstractConstants {
    /// Largest `|E″(u)(w₁,w₂)|` seen over unit directions.
    #[serde(with = "crate::serde_f64")]
    pub c1_estimate: f64,
    /// Smallest `|E″(u)(u,u)|` seen.
    #[serde(with = "crate::serde_f64")]
    pub c2_estimate: f64,
    /// Every sample had `E″(u)(u,u) < 0`.
    pub curvature_negative: bool,
    pub samples: usize,
}

impl AbstractConstants {
    pub fn sampled_h4(&self) -> bool {
        self.c2_estimate > 0.0 && self.curvature_negative
    }
}

/// Largest eigenvalue of `w ↦ J⁻¹(g f′(u) w)` in the H₀¹ metric by power
/// iteration, with its unit eigenvector.
fn top_potential_mode(p: &Problem, u: &GridFunction) -> Result<GridFunction> {
    let weight = p.g.samples().zip_map(u, |gi, ui| gi * p.f.f1(ui))?;
    let mut w = u.scale(1.0 / u.h01_norm());
    for _ in 0..100 {
        let next = apply_inverse_laplacian(&weight.mul(&w)?);
        let norm = next.h01_norm();
        if !(norm > 0.0) {
            break;
        }
        w = next.scale(1.0 / norm);
    }
    Ok(w)
}

fn unit(u: GridFunction) -> GridFunction {
    let n = u.h01_norm();
    u.scale(1.0 / n)
}

fn sample_constants(p: &Problem, a: &AnnulusSpec, seed: u64, index: usize) -> Result<(f64, f64)> {
    let grid = p.grid();
    let mut rng = sample_rng(seed, index);
    let start = sample_cone_element(grid, &mut rng).scale(a.geometric_mean());
    let u = project(p, &start, a)?;
    let curvature = hessian_form(p, &u, &u, &u)?;

    let mut directions = vec![unit(u.clone()), top_potential_mode(p, &u)?];
    // hat function on the first cell pair, where g·f′(u) is smallest
    let mut hat = GridFunction::zeros(grid);
    hat.values_mut()[1] = 1.0;
    directions.push(unit(hat));
    directions.extend((0..6).map(|_| unit(GridFunction::random_sine_series(grid, &mut rng))));

    let mut c1 = 0.0_f64;
    for (i, w1) in directions.iter().enumerate() {
        for w2 in &directions[i..] {
            c1 = c1.max(hessian_form(p, &u, w1, w2)?.abs());
        }
    }
    Ok((c1, curvature))
}

pub fn estimate_abstract_constants(
    p: &Problem,
    a: &AnnulusSpec,
    samples: usize,
    seed: u64,
    exec: Execution,
) -> Result<AbstractConstants> {
    if samples == 0 {
        return Err(Error::Config("need at least one sample".into()));
    }
    let indices: Vec<usize> = (0..samples).collect();
    let results = par::map(exec, &indices, |&i| sample_constants(p, a, seed, i))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    Ok(AbstractConstants {
        c1_estimate: results.iter().map(|r| r.0).fold(0.0, f64::max),
        c2_estimate: results.iter().map(|r| r.1.abs()).fold(f64::INFINITY, f64::min),
        curvature_negative: results.iter().all(|r| r.1 < 0.0),
        samples,
    })
}

/// Sampled (h1): dense fiber scans on random cone elements.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampledH1 {
    pub samples: usize,
    pub failures: usize,
    pub passes: bool,
}

pub fn sampled_h1(
    p: &Problem,
    a: &AnnulusSpec,
    samples: usize,
    points: usize,
    seed: u64,
    exec: Execution,
) -> SampledH1 {
    let indices: Vec<usize> = (0..samples).collect();
    let failures = par::map(exec, &indices, |&i| {
        let mut rng = sample_rng(seed.wrapping_add(1), i);
        let u = sample_cone_element(p.grid(), &mut rng);
        fiber_sign_scan(p, &u, a, points).is_ok_and(|scan| scan.passes())
    })
    .into_iter()
    .filter(|ok| !ok)
    .count();
    SampledH1 {
        samples,
        failures,
        passes: samples > 0 && failures == 0,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Condition {
    H2,
    H3,
    H4,
    #[serde(rename = "none")]
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisOptions {
    /// Restrict to one of (H2)/(H3)/(H4); `None` tries all three in order.
    pub mode: Option<Condition>,
    pub mu: Option<f64>,
    pub lambda: Option<f64>,
    /// Grid-search μ, λ for (H3) when they are not supplied.
    pub search: bool,
    pub samples: usize,
    pub scan_points: usize,
    pub seed: u64,
}

impl Default for HypothesisOptions {
    fn default() -> Self {
        Self {
            mode: None,
            mu: None,
            lambda: None,
            search: true,
            samples: 20,
            scan_points: 200,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisReport {
    pub annulus: AnnulusSpec,
    #[serde(flatten)]
    pub constants: Constants,
    pub h1: H1Check,
    pub h2: Option<H2Check>,
    pub h3: Option<H3Check>,
    pub h4: Option<H4Check>,
    pub which_of_h234: Condition,
    pub sampled_h1: SampledH1,
    pub abstract_constants: Option<AbstractConstants>,
    pub abstract_error: Option<String>,
    pub sampled_h4: bool,
    /// (H1) and one of (H2)/(H3)/(H4).
    pub analytic_passes: bool,
    /// Analytic conditions plus sampled (h1) and (h4) evidence.
    pub passes: bool,
}

impl HypothesisReport {
    pub fn h1_left_margin(&self) -> f64 {
        self.h1.left
    }

    pub fn h1_right_margin(&self) -> f64 {
        self.h1.right
    }
}

pub fn certify(p: &Problem, a: &AnnulusSpec, opts: &HypothesisOptions, exec: Execution) -> Result<HypothesisReport> {
    let constants = compute_constants(&p.g, a.beta)?;
    let h1 = check_h1(p, a)?;
    let wants = |c: Condition| opts.mode.is_none_or(|m| m == c);

    let h2 = wants(Condition::H2).then(|| check_h2(p, a));
    let h3 = if wants(Condition::H3) {
        Some(match (opts.mu, opts.lambda) {
            (Some(mu), Some(lambda)) => check_h3(p, a, mu, lambda)?,
            _ if opts.search || opts.mode == Some(Condition::H3) => search_h3(p, a)?,
            _ => check_h3(p, a, f64::NAN, f64::NAN)?,
        })
    } else {
        None
    };
    let h4 = wants(Condition::H4).then(|| check_h4(p, a));

    let which_of_h234 = if h2.as_ref().is_some_and(|c| c.pass) {
        Condition::H2
    } else if h3.as_ref().is_some_and(|c| c.pass) {
        Condition::H3
    } else if h4.as_ref().is_some_and(|c| c.pass) {
        Condition::H4
    } else {
        Condition::None
    };

    let sampled = sampled_h1(p, a, opts.samples, opts.scan_points, opts.seed, exec);
    let (abstract_constants, abstract_error) =
        match estimate_abstract_constants(p, a, opts.samples.max(1), opts.seed, exec) {
            Ok(c) => (Some(c), None),
            Err(e) => (None, Some(e.to_string())),
        };
    let sampled_h4 = abstract_constants.is_some_and(|c| c.sampled_h4());
    let analytic_passes = h1.pass && which_of_h234 != Condition::None;
    Ok(HypothesisReport {
        annulus: *a,
        constants,
        h1,
        h2,
        h3,
        h4,
        which_of_h234,
        sampled_h1: sampled,
        abstract_constants,
        abstract_error,
        sampled_h4,
        analytic_passes,
        passes: analytic_passes && sampled.passes && sampled_h4,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::function_space::Grid;
    use crate::green_operator::Nonlinearity;

    fn grid() -> Grid {
        Grid::new(400).unwrap()
    }

    fn problem(f: Nonlinearity, g: WeightFunction) -> Problem {
        Problem::new(f, g)
    }

    #[test]
    fn constants_examples() {
        let g = grid();
        let k = compute_constants(&WeightFunction::constant(g, 1.0).unwrap(), 0.2).unwrap();
        assert!((k.a_tilde - 1.0).abs() < 1e-14);
        assert!((k.b_tilde - 0.2).abs() < 1e-14);
        assert!((k.c_tilde - 0.3).abs() < 1e-14);

        let k = compute_constants(&WeightFunction::constant(g, 0.0).unwrap(), 0.2).unwrap();
        assert_eq!((k.a_tilde, k.b_tilde, k.c_tilde), (0.0, 0.0, 0.0));

        let h = g.h();
        let k = compute_constants(&WeightFunction::step(g, 0.2, 1.0).unwrap(), 0.2).unwrap();
        assert!((k.a_tilde - 0.6f64.sqrt()).abs() < 2.0 * h);
        assert!(k.b_tilde.abs() < 2.0 * h);
        assert!((k.c_tilde - 0.3).abs() < 2.0 * h);

        assert!(compute_constants(&WeightFunction::constant(g, 1.0).unwrap(), 0.3).is_err());
    }

    #[test]
    fn h1_examples() {
        let g = WeightFunction::constant(grid(), 1.0).unwrap();
        let p = problem(Nonlinearity::power(3.0, 3.0).unwrap(), g.clone());
        let a = AnnulusSpec::new(1.0, 60.0, 0.2).unwrap();
        let c = check_h1(&p, &a).unwrap();
        assert!(c.pass);
        assert!((c.left - (PI - 3.0)).abs() < 1e-12);
        let right = 3.0 * 60.0f64.powi(2) * 0.12f64.powi(3) - 1.0 / (2.0 * 0.12 * 0.3);
        assert!((c.right - right).abs() < 1e-9);
        assert!((c.right - 4.7735).abs() < 1e-3);

        let lin = problem(Nonlinearity::power(1.0, 1.0).unwrap(), g);
        let c = check_h1(&lin, &AnnulusSpec::new(10.0, 20.0, 0.2).unwrap()).unwrap();
        assert!(c.left > 0.0 && c.right < 0.0 && !c.pass);

        let none = problem(Nonlinearity::power(3.0, 3.0).unwrap(), WeightFunction::constant(grid(), 0.0).unwrap());
        let c = check_h1(&none, &a).unwrap();
        assert!(!c.pass);
        assert_eq!(c.reason.as_deref(), Some("C̃ = 0"));
    }

    #[test]
    fn h2_examples() {
        let g = WeightFunction::constant(grid(), 1.0).unwrap();
        let a = AnnulusSpec::new(1.0, 60.0, 0.2).unwrap();
        assert!(check_h2(&problem(Nonlinearity::power(3.0, 3.0).unwrap(), g.clone()), &a).pass);
        assert!(check_h2(&problem(Nonlinearity::power(0.5, 1.5).unwrap(), g.clone()), &a).pass);
        assert!(!check_h2(&problem(Nonlinearity::power(1.0, 1.0).unwrap(), g), &a).pass);
    }

    #[test]
    fn h3_examples() {
        let a = AnnulusSpec::new(1.0, 10.0, 0.2).unwrap();
        let t0 = 0.12;
        let p3 = Nonlinearity::power(1.0, 3.0).unwrap();
        let step = problem(p3.clone(), WeightFunction::step(grid(), 0.2, 1.0).unwrap());
        let c = check_h3(&step, &a, 3.0, 3.0 * t0 * t0).unwrap();
        assert!(c.pass, "{c:?}");

        let flat = problem(p3, WeightFunction::constant(grid(), 1.0).unwrap());
        let c = check_h3(&flat, &a, 3.0, 3.0 * t0 * t0).unwrap();
        assert!(c.pass);
        // reduces to 0.2 < 0.3 (p − 1): fails for p = 1.5
        let p15 = problem(Nonlinearity::power(1.0, 1.5).unwrap(), WeightFunction::constant(grid(), 1.0).unwrap());
        let c = check_h3(&p15, &a, 1.5, 1.5 * t0.sqrt()).unwrap();
        assert!(!c.pass && c.estimate_margin < 0.0);

        let c = check_h3(&flat, &a, 1.0, 0.1).unwrap();
        assert!(!c.pass && c.reason.is_some());
        assert!(search_h3(&flat, &a).unwrap().pass);
    }

    #[test]
    fn h4_examples() {
        let a = AnnulusSpec::new(1.0, 10.0, 0.2).unwrap();
        let step = WeightFunction::step(grid(), 0.2, 1.0).unwrap();
        let c = check_h4(&problem(Nonlinearity::power(1.0, 3.0).unwrap(), step.clone()), &a);
        assert!(c.pass, "{c:?}");
        assert!((c.min_f2 - 6.0 * 0.12).abs() < 1e-12);
        assert!(!check_h4(&problem(Nonlinearity::power(1.0, 3.0).unwrap(), WeightFunction::constant(grid(), 1.0).unwrap()), &a).pass);
        assert!(!check_h4(&problem(Nonlinearity::power(1.0, 1.0).unwrap(), step), &a).pass);
    }

    #[test]
    fn abstract_constants_for_power_law() {
        let p = problem(Nonlinearity::power(3.0, 3.0).unwrap(), WeightFunction::constant(grid(), 1.0).unwrap());
        let a = AnnulusSpec::new(1.0, 60.0, 0.2).unwrap();
        let k = estimate_abstract_constants(&p, &a, 8, 7, Execution::default()).unwrap();
        assert!(k.curvature_negative);
        assert!(k.c2_estimate >= 2.0 * a.r * a.r);
        assert!(k.c1_estimate >= 1.0 - 1e-6);
        assert!(k.sampled_h4());

        let zero = problem(Nonlinearity::constant(0.0), WeightFunction::constant(grid(), 1.0).unwrap());
        assert!(estimate_abstract_constants(&zero, &a, 2, 7, Execution::Sequential).is_err());
    }

    #[test]
    fn report_is_deterministic_and_consistent() {
        let p = problem(Nonlinearity::power(3.0, 3.0).unwrap(), WeightFunction::constant(grid(), 1.0).unwrap());
        let a = AnnulusSpec::new(1.0, 60.0, 0.2).unwrap();
        let opts = HypothesisOptions {
            samples: 10,
            ..Default::default()
        };
        let r1 = certify(&p, &a, &opts, Execution::Sequential).unwrap();
        let r2 = certify(&p, &a, &opts, Execution::default()).unwrap();
        assert_eq!(r1, r2);
        assert!(r1.analytic_passes && r1.passes);
        assert_eq!(r1.which_of_h234, Condition::H2);
    }

    #[test]
    fn right_margin_increases_with_outer_radius() {
        let p = problem(Nonlinearity::power(3.0, 3.0).unwrap(), WeightFunction::constant(grid(), 1.0).unwrap());
        let margins: Vec<f64> = (0..20)
            .map(|k| check_h1(&p, &AnnulusSpec::new(1.0, 10.0 + 5.0 * k as f64, 0.2).unwrap()).unwrap().right)
            .collect();
        assert!(margins.windows(2).all(|w| w[1] > w[0]));
    }
}
