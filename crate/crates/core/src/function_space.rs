//! Discretized H₀¹(0,1) on a uniform grid.
//!
//! Functions are stored by their nodal values and interpreted as piecewise
//! linear interpolants. The H₀¹ inner product is then exact on the
//! interpolant (cell-wise constant derivatives), while L² products and body
//! integrals use the composite trapezoid rule.

use std::f64::consts::PI;

use rand::Rng;

use crate::error::{Error, Result};

/// Uniform partition of [0,1] into `n` cells.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Grid {
    n: usize,
}

impl Grid {
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidGrid(format!("need at least 2 cells, got {n}")));
        }
        Ok(Self { n })
    }

    pub fn cells(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.n + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn h(&self) -> f64 {
        1.0 / self.n as f64
    }

    /// Node `t_i = i/n`; `t_0 = 0` and `t_n = 1` exactly.
    pub fn node(&self, i: usize) -> f64 {
        i as f64 / self.n as f64
    }

    /// Distance of node `i` to the nearer endpoint, computed from indices so
    /// that mirrored nodes map to bit-identical values.
    pub fn half_node(&self, i: usize) -> f64 {
        i.min(self.n - i) as f64 / self.n as f64
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..=self.n).map(|i| self.node(i))
    }

    /// Index of the last node with `t_i <= 1/2`.
    pub fn mid_index(&self) -> usize {
        self.n / 2
    }

    fn check_same(&self, other: &Grid) -> Result<()> {
        if self.n != other.n {
            Err(Error::GridMismatch {
                left: self.n,
                right: other.n,
            })
        } else {
            Ok(())
        }
    }
}

/// Nodal values `v_0..v_n` on a [`Grid`].
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    grid: Grid,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn zeros(grid: Grid) -> Self {
        Self {
            grid,
            values: vec![0.0; grid.len()],
        }
    }

    pub fn constant(grid: Grid, c: f64) -> Self {
        Self {
            grid,
            values: vec![c; grid.len()],
        }
    }

    pub fn from_values(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidGrid(format!(
                "expected {} nodal values, got {}",
                grid.len(),
                values.len()
            )));
        }
        Ok(Self { grid, values })
    }

    /// Samples `f` at every node, boundary included.
    pub fn from_fn(grid: Grid, f: impl Fn(f64) -> f64) -> Self {
        Self {
            grid,
            values: grid.nodes().map(f).collect(),
        }
    }

    /// Samples `f` at interior nodes and pins both boundary values to zero.
    pub fn dirichlet(grid: Grid, f: impl Fn(f64) -> f64) -> Self {
        let mut u = Self::from_fn(grid, f);
        u.values[0] = 0.0;
        u.values[grid.cells()] = 0.0;
        u
    }

    /// `Σ_k c_k sin(kπt)` with `coeffs[k-1] = c_k`.
    pub fn sine_series(grid: Grid, coeffs: &[f64]) -> Self {
        Self::dirichlet(grid, |t| {
            coeffs
                .iter()
                .enumerate()
                .map(|(k, c)| c * ((k + 1) as f64 * PI * t).sin())
                .sum()
        })
    }

    /// Random sine series with up to eight modes and coefficients in [-1,1].
    pub fn random_sine_series<R: Rng + ?Sized>(grid: Grid, rng: &mut R) -> Self {
        let coeffs: Vec<f64> = (0..8).map(|_| rng.gen_range(-1.0..=1.0)).collect();
        Self::sine_series(grid, &coeffs)
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn is_zero_boundary(&self) -> bool {
        self.values[0] == 0.0 && self.values[self.grid.cells()] == 0.0
    }

    pub fn scale(&self, k: f64) -> Self {
        self.map(|v| k * v)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.grid.check_same(&other.grid)?;
        Ok(Self {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_map(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_map(other, |a, b| a - b)
    }

    /// `self + k·other`.
    pub fn axpy(&self, k: f64, other: &Self) -> Result<Self> {
        self.zip_map(other, |a, b| a + k * b)
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.zip_map(other, |a, b| a * b)
    }

    pub fn h01_norm(&self) -> f64 {
        h01_inner(self, self).expect("same grid").sqrt()
    }
}

/// `∫ u′v′` of the piecewise-linear interpolants.
pub fn h01_inner(u: &GridFunction, v: &GridFunction) -> Result<f64> {
    u.grid.check_same(&v.grid)?;
    let inv_h = u.grid.cells() as f64;
    let sum: f64 = u
        .values
        .windows(2)
        .zip(v.values.windows(2))
        .map(|(a, b)| (a[1] - a[0]) * (b[1] - b[0]))
        .sum();
    Ok(sum * inv_h)
}

pub fn h01_norm(u: &GridFunction) -> f64 {
    u.h01_norm()
}

/// Trapezoid value of `∫ u·v`.
pub fn l2_inner(u: &GridFunction, v: &GridFunction) -> Result<f64> {
    u.grid.check_same(&v.grid)?;
    Ok(trapezoid(u.grid, |i| u.values[i] * v.values[i]))
}

pub fn sup_norm(u: &GridFunction) -> f64 {
    u.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
}

/// Composite trapezoid integral of nodal data over [0,1].
pub fn quadrature(w: &GridFunction) -> f64 {
    trapezoid(w.grid, |i| w.values[i])
}

/// Trapezoid rule over all nodes of `grid` for the nodal integrand `f(i)`.
pub(crate) fn trapezoid(grid: Grid, f: impl Fn(usize) -> f64) -> f64 {
    let n = grid.cells();
    let interior: f64 = (1..n).map(&f).sum();
    grid.h() * (interior + 0.5 * (f(0) + f(n)))
}

/// `∫_a^b` of the piecewise-linear interpolant of `w`, with cells clipped at
/// `a` and `b` and the integrand linearly interpolated at the cut points.
pub fn integrate_range(w: &GridFunction, a: f64, b: f64) -> f64 {
    let (a, b) = (a.clamp(0.0, 1.0), b.clamp(0.0, 1.0));
    if b <= a {
        return 0.0;
    }
    let grid = w.grid;
    let h = grid.h();
    let mut total = 0.0;
    for i in 0..grid.cells() {
        let (t0, t1) = (grid.node(i), grid.node(i + 1));
        let lo = t0.max(a);
        let hi = t1.min(b);
        if hi <= lo {
            continue;
        }
        let (w0, w1) = (w.values[i], w.values[i + 1]);
        let interp = |t: f64| w0 + (w1 - w0) * (t - t0) / h;
        total += 0.5 * (hi - lo) * (interp(lo) + interp(hi));
    }
    total
}
