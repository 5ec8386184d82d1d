//! Energy functional `E(u) = ½|u|² − ∫ g·F(u)`, its H₀¹-gradient
//! `E′(u) = u − N(u)`, and the Hessian form `E″(u)(w₁,w₂)`.
//!
//! The discrete gradient is the exact gradient of the discrete energy: by
//! summation by parts `(J⁻¹w, v)_{H₀¹} = Σ_trap w·v` for zero-boundary `v`.

use crate::error::{Error, Result};
use crate::function_space::{h01_inner, trapezoid, Grid, GridFunction};
use crate::green_operator::{apply_n, check_domain, Nonlinearity, WeightFunction};

/// Problem data for `-u″ = g(t) f(u)` on a fixed grid.
#[derive(Debug, Clone)]
pub struct Problem {
    pub f: Nonlinearity,
    pub g: WeightFunction,
    grid: Grid,
}

impl Problem {
    pub fn new(f: Nonlinearity, g: WeightFunction) -> Self {
        let grid = g.grid();
        Self { f, g, grid }
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub(crate) fn check(&self, u: &GridFunction) -> Result<()> {
        if u.grid() != self.grid {
            return Err(Error::GridMismatch {
                left: self.grid.cells(),
                right: u.grid().cells(),
            });
        }
        check_domain(u, &self.f)
    }

    /// `Σ_trap g·φ(u)` for a pointwise map `φ` of the nodal values.
    pub(crate) fn weighted_integral(&self, u: &GridFunction, phi: impl Fn(usize, f64) -> f64) -> f64 {
        let g = self.g.samples().values();
        let v = u.values();
        trapezoid(self.grid, |i| g[i] * phi(i, v[i]))
    }
}

pub fn energy(p: &Problem, u: &GridFunction) -> Result<f64> {
    p.check(u)?;
    let potential = p.weighted_integral(u, |_, x| p.f.antiderivative(x));
    Ok(0.5 * h01_inner(u, u)? - potential)
}

pub fn gradient(p: &Problem, u: &GridFunction) -> Result<GridFunction> {
    p.check(u)?;
    u.sub(&apply_n(u, &p.f, &p.g)?)
}

pub fn hessian_form(p: &Problem, u: &GridFunction, w1: &GridFunction, w2: &GridFunction) -> Result<f64> {
    p.check(u)?;
    let (a, b) = (w1.values(), w2.values());
    if a.len() != u.values().len() || b.len() != a.len() {
        return Err(Error::GridMismatch {
            left: u.grid().cells(),
            right: w1.grid().cells().max(w2.grid().cells()),
        });
    }
    let potential = p.weighted_integral(u, |i, x| p.f.f1(x) * a[i] * b[i]);
    Ok(h01_inner(w1, w2)? - potential)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cone::sample_cone_element;
    use crate::function_space::l2_inner;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn problem(f: Nonlinearity) -> Problem {
        let grid = Grid::new(400).unwrap();
        Problem::new(f, WeightFunction::constant(grid, 1.0).unwrap())
    }

    fn sine(p: &Problem) -> GridFunction {
        GridFunction::dirichlet(p.grid(), |t| (PI * t).sin())
    }

    /// Independent trapezoid oracle for `∫ sin⁴(πt) dt` on a much finer grid.
    fn sin4_integral() -> f64 {
        let m = 200_000;
        let h = 1.0 / m as f64;
        (1..m).map(|i| (PI * i as f64 * h).sin().powi(4)).sum::<f64>() * h
    }

    #[test]
    fn energy_examples() {
        let lin = problem(Nonlinearity::power(1.0, 1.0).unwrap());
        assert_eq!(energy(&lin, &GridFunction::zeros(lin.grid())).unwrap(), 0.0);
        let e = energy(&lin, &sine(&lin)).unwrap();
        assert!((e - (PI * PI / 4.0 - 0.25)).abs() < 1e-4);

        let quartic = sin4_integral();
        assert!((quartic - 0.375).abs() < 1e-10);
        let cubic = problem(Nonlinearity::power(1.0, 3.0).unwrap());
        let e = energy(&cubic, &sine(&cubic)).unwrap();
        assert!((e - (PI * PI / 4.0 - 0.25 * quartic)).abs() < 1e-4);
    }

    #[test]
    fn gradient_examples() {
        let zero = problem(Nonlinearity::constant(0.0));
        let u = sine(&zero);
        assert_eq!(gradient(&zero, &u).unwrap(), u);

        let cubic = problem(Nonlinearity::power(1.0, 3.0).unwrap());
        let z = GridFunction::zeros(cubic.grid());
        assert_eq!(crate::function_space::sup_norm(&gradient(&cubic, &z).unwrap()), 0.0);
    }

    #[test]
    fn hessian_examples() {
        let zero = problem(Nonlinearity::constant(0.0));
        let w = sine(&zero);
        let u = w.scale(3.0);
        assert_eq!(hessian_form(&zero, &u, &w, &w).unwrap(), h01_inner(&w, &w).unwrap());

        let lin = problem(Nonlinearity::power(1.0, 1.0).unwrap());
        let val = hessian_form(&lin, &u, &w, &w).unwrap();
        assert!((val - (PI * PI / 2.0 - 0.5)).abs() < 1e-4);
        assert!((val - (h01_inner(&w, &w).unwrap() - l2_inner(&w, &w).unwrap())).abs() < 1e-12);
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let p = problem(Nonlinearity::power(3.0, 3.0).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..20 {
            let u = sample_cone_element(p.grid(), &mut rng).scale(rand::Rng::gen_range(&mut rng, 0.5..4.0));
            let v = sample_cone_element(p.grid(), &mut rng);
            let g = gradient(&p, &u).unwrap();
            let eps = 1e-5;
            let fd = (energy(&p, &u.axpy(eps, &v).unwrap()).unwrap()
                - energy(&p, &u.axpy(-eps, &v).unwrap()).unwrap())
                / (2.0 * eps);
            let exact = h01_inner(&g, &v).unwrap();
            assert!((fd - exact).abs() <= 1e-5 * exact.abs().max(1e-8), "{fd} vs {exact}");

            let eps = 1e-4;
            let e0 = energy(&p, &u).unwrap();
            let fd2 = (energy(&p, &u.axpy(eps, &v).unwrap()).unwrap() - 2.0 * e0
                + energy(&p, &u.axpy(-eps, &v).unwrap()).unwrap())
                / (eps * eps);
            let exact2 = hessian_form(&p, &u, &v, &v).unwrap();
            assert!((fd2 - exact2).abs() <= 1e-3 * exact2.abs(), "{fd2} vs {exact2}");

            let ab = hessian_form(&p, &u, &u, &v).unwrap();
            let ba = hessian_form(&p, &u, &v, &u).unwrap();
            assert!((ab - ba).abs() <= 1e-14 * ab.abs().max(1.0));
        }
    }
}
