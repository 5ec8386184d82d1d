//! The cone `K` of symmetric functions that are nondecreasing on `[0,½]` and
//! satisfy the Harnack bound `u(t) ≥ φ(t)|u|_{H₀¹}`, with `φ(t) = t(1−2t)`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::function_space::{sup_norm, Grid, GridFunction};
use crate::green_operator::apply_inverse_laplacian;

pub const DEFAULT_TOL_CONE: f64 = 1e-8;

pub fn phi(t: f64) -> Result<f64> {
    if !(0.0..=0.5).contains(&t) {
        return Err(Error::Domain(format!("φ is defined on [0, 1/2], got t = {t}")));
    }
    Ok(phi_unchecked(t))
}

fn phi_unchecked(t: f64) -> f64 {
    t * (1.0 - 2.0 * t)
}

/// Defects of the three cone conditions. `passes` compares each defect
/// against `tolerance·|u|_{H₀¹}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConeReport {
    pub symmetry_defect: f64,
    pub monotonicity_defect: f64,
    pub harnack_defect: f64,
    pub norm: f64,
    pub tolerance: f64,
    pub passes: bool,
}

impl ConeReport {
    pub fn max_defect(&self) -> f64 {
        self.symmetry_defect
            .max(self.monotonicity_defect)
            .max(self.harnack_defect)
    }
}

fn symmetry_defect(v: &[f64]) -> f64 {
    let n = v.len() - 1;
    (0..=n).map(|i| (v[i] - v[n - i]).abs()).fold(0.0, f64::max)
}

/// Largest decrease across a cell contained in `[0,½]`.
fn monotonicity_defect(v: &[f64]) -> f64 {
    let mid = (v.len() - 1) / 2;
    v[..=mid]
        .windows(2)
        .map(|w| (w[0] - w[1]).max(0.0))
        .fold(0.0, f64::max)
}

fn harnack_defect(grid: Grid, v: &[f64], norm: f64) -> f64 {
    (0..=grid.mid_index())
        .map(|i| (phi_unchecked(grid.node(i)) * norm - v[i]).max(0.0))
        .fold(0.0, f64::max)
}

pub fn cone_membership(u: &GridFunction, tol_cone: f64) -> ConeReport {
    let v = u.values();
    let norm = u.h01_norm();
    let symmetry_defect = symmetry_defect(v);
    let monotonicity_defect = monotonicity_defect(v);
    let harnack_defect = harnack_defect(u.grid(), v, norm);
    let threshold = tol_cone * norm;
    ConeReport {
        symmetry_defect,
        monotonicity_defect,
        harnack_defect,
        norm,
        tolerance: tol_cone,
        passes: symmetry_defect <= threshold
            && monotonicity_defect <= threshold
            && harnack_defect <= threshold,
    }
}

/// Outcome of checking the Harnack lemma on `u = J⁻¹w`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HarnackCheck {
    /// `w ≥ 0`, symmetric, and nondecreasing on `[0,½]`.
    pub premises_hold: bool,
    /// `u(t) ≥ φ(t)|u|` on `[0,½]` up to `1e-9·|u|`.
    pub conclusion_holds: bool,
    pub defect: f64,
    pub norm: f64,
}

pub fn harnack_lemma_check(source: &GridFunction) -> HarnackCheck {
    let w = source.values();
    let slack = 1e-12 * sup_norm(source).max(1.0);
    let premises_hold = w.iter().all(|&x| x >= -slack)
        && monotonicity_defect(w) <= slack
        && symmetry_defect(w) <= slack;
    let u = apply_inverse_laplacian(source);
    let norm = u.h01_norm();
    let defect = harnack_defect(u.grid(), u.values(), norm);
    HarnackCheck {
        premises_hold,
        conclusion_holds: defect <= 1e-9 * norm,
        defect,
        norm,
    }
}

/// Random nonnegative symmetric profile, nondecreasing on `[0,½]`: a
/// constant plus a few steps and linear ramps on the half interval,
/// mirrored about `½`.
pub fn random_harnack_source<R: Rng + ?Sized>(grid: Grid, rng: &mut R) -> GridFunction {
    let base = if rng.gen_bool(0.5) { rng.gen_range(0.0..1.0) } else { 0.0 };
    let pieces: Vec<(f64, f64, f64)> = (0..rng.gen_range(1..=5))
        .map(|_| {
            let start = rng.gen_range(0.0..0.5);
            let width = if rng.gen_bool(0.5) { 0.0 } else { rng.gen_range(0.0..0.5) };
            (start, width, rng.gen_range(0.05..2.0))
        })
        .collect();
    let profile = |t: f64| {
        base + pieces
            .iter()
            .map(|&(start, width, height)| {
                let rise = if width == 0.0 {
                    if t >= start { 1.0 } else { 0.0 }
                } else {
                    ((t - start) / width).clamp(0.0, 1.0)
                };
                height * rise
            })
            .sum::<f64>()
    };
    let scale = rng.gen_range(0.1..10.0);
    let values = (0..grid.len()).map(|i| scale * profile(grid.half_node(i))).collect();
    GridFunction::from_values(grid, values).expect("length matches grid")
}

/// Random unit-norm element of `K`: `J⁻¹` of a random Harnack source,
/// optionally blended with `sin(πt)` (both are cone members and `K + K ⊂ K`).
pub fn sample_cone_element<R: Rng + ?Sized>(grid: Grid, rng: &mut R) -> GridFunction {
    let u = apply_inverse_laplacian(&random_harnack_source(grid, rng));
    let u = u.scale(1.0 / u.h01_norm());
    let u = if rng.gen_bool(0.3) {
        let s = GridFunction::dirichlet(grid, |t| (std::f64::consts::PI * t).sin());
        let s = s.scale(rng.gen_range(0.0..2.0) / s.h01_norm());
        u.add(&s).expect("same grid")
    } else {
        u
    };
    let norm = u.h01_norm();
    u.scale(1.0 / norm)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn grid() -> Grid {
        Grid::new(400).unwrap()
    }

    #[test]
    fn phi_examples() {
        assert!((phi(0.2).unwrap() - 0.12).abs() < 1e-15);
        assert_eq!(phi(0.25).unwrap(), 0.125);
        assert_eq!(phi(0.0).unwrap(), 0.0);
        assert_eq!(phi(0.5).unwrap(), 0.0);
        assert!(phi(0.6).is_err());
        assert!(phi(-0.1).is_err());
    }

    #[test]
    fn membership_examples() {
        let g = grid();
        let s = GridFunction::dirichlet(g, |t| (PI * t).sin());
        // sin(πt) ≥ t(1−2t)·π/√2 on [0,½], checked on a dense mesh
        assert!((0..=10_000).all(|k| {
            let t = 0.5 * k as f64 / 10_000.0;
            (PI * t).sin() >= t * (1.0 - 2.0 * t) * PI / 2f64.sqrt()
        }));
        assert!(cone_membership(&s, 1e-9).passes);

        let q = GridFunction::dirichlet(g, |t| t * (1.0 - t));
        let report = cone_membership(&q, 1e-9);
        assert!(report.passes, "{report:?}");
        assert!((report.norm - 1.0 / 3f64.sqrt()).abs() < 1e-5);

        let anti = GridFunction::dirichlet(g, |t| (2.0 * PI * t).sin());
        let report = cone_membership(&anti, 1e-9);
        assert!(!report.passes);
        assert!((report.symmetry_defect - 2.0).abs() < 1e-4);
    }

    #[test]
    fn harnack_examples() {
        let g = grid();
        let check = harnack_lemma_check(&GridFunction::constant(g, 1.0));
        assert!(check.premises_hold && check.conclusion_holds);
        assert!((check.norm - 1.0 / (2.0 * 3f64.sqrt())).abs() < 1e-5);

        let check = harnack_lemma_check(&GridFunction::dirichlet(g, |t| (PI * t).sin()));
        assert!(check.premises_hold && check.conclusion_holds);

        let step = GridFunction::from_values(
            g,
            (0..g.len()).map(|i| if g.half_node(i) >= 0.2 { 1.0 } else { 0.0 }).collect(),
        )
        .unwrap();
        let check = harnack_lemma_check(&step);
        assert!(check.premises_hold && check.conclusion_holds);

        let decreasing = GridFunction::from_fn(g, |t| 1.0 - t);
        assert!(!harnack_lemma_check(&decreasing).premises_hold);
    }

    #[test]
    fn cone_is_closed_under_scaling_and_sums() {
        let g = grid();
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..50 {
            let a = sample_cone_element(g, &mut rng);
            let b = sample_cone_element(g, &mut rng);
            assert!(cone_membership(&a, DEFAULT_TOL_CONE).passes);
            assert!(cone_membership(&a.scale(rng.gen_range(0.01..100.0)), DEFAULT_TOL_CONE).passes);
            assert!(cone_membership(&a.add(&b).unwrap(), DEFAULT_TOL_CONE).passes);
        }
    }

    #[test]
    fn unit_cone_elements_dominate_phi_beta_on_inner_interval() {
        let g = grid();
        let beta = 0.2;
        let floor = phi(beta).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        for _ in 0..50 {
            let v = sample_cone_element(g, &mut rng);
            for i in 0..=g.mid_index() {
                if g.node(i) >= beta {
                    assert!(v.values()[i] >= floor - 1e-12);
                }
            }
        }
    }
}
