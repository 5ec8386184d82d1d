//! The Dirichlet Laplacian `J = -d²/dt²`, its inverse through the Green's
//! function `G(t,s)`, and the superposition operator `N(u) = J⁻¹(g·f(u))`.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::function_space::{Grid, GridFunction};

/// `G(t,s) = s(1-t)` for `s <= t`, `t(1-s)` otherwise.
pub fn green_kernel(t: f64, s: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&t) || !(0.0..=1.0).contains(&s) {
        return Err(Error::Domain(format!(
            "Green's kernel arguments must lie in [0,1], got ({t}, {s})"
        )));
    }
    Ok(if s <= t { s * (1.0 - t) } else { t * (1.0 - s) })
}

/// Solves `(-u_{i-1} + 2u_i - u_{i+1})/h² = w_i` for `i = 1..n-1` with
/// `u_0 = u_n = 0`. Boundary values of `w` are ignored.
pub fn apply_inverse_laplacian(w: &GridFunction) -> GridFunction {
    let grid = w.grid();
    let n = grid.cells();
    let h2 = grid.h() * grid.h();
    let m = n - 1;
    let rhs: Vec<f64> = w.values()[1..n].iter().map(|v| v * h2).collect();

    // Thomas sweep for tridiag(-1, 2, -1).
    let mut c_prime = vec![0.0; m];
    let mut d_prime = vec![0.0; m];
    c_prime[0] = -0.5;
    d_prime[0] = rhs[0] / 2.0;
    for i in 1..m {
        let denom = 2.0 + c_prime[i - 1];
        c_prime[i] = -1.0 / denom;
        d_prime[i] = (rhs[i] + d_prime[i - 1]) / denom;
    }
    let mut values = vec![0.0; n + 1];
    values[m] = d_prime[m - 1];
    for i in (0..m - 1).rev() {
        values[i + 1] = d_prime[i] - c_prime[i] * values[i + 2];
    }
    GridFunction::from_values(grid, values).expect("length matches grid")
}

/// Trapezoid quadrature of `∫ G(t_i, s) w(s) ds` at every node. O(n²); kept
/// as an independent cross-check of [`apply_inverse_laplacian`].
pub fn apply_inverse_laplacian_kernel(w: &GridFunction) -> GridFunction {
    let grid = w.grid();
    let n = grid.cells();
    let h = grid.h();
    let vals = w.values();
    let values = (0..=n)
        .map(|i| {
            let t = grid.node(i);
            (0..=n)
                .map(|j| {
                    let weight = if j == 0 || j == n { 0.5 * h } else { h };
                    weight * green_kernel(t, grid.node(j)).expect("nodes in [0,1]") * vals[j]
                })
                .sum()
        })
        .collect();
    GridFunction::from_values(grid, values).expect("length matches grid")
}

pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Generating family of a [`Nonlinearity`].
#[derive(Clone)]
pub enum NonlinearityKind {
    Constant { c: f64 },
    /// `a·sign(x)|x|^p` for `p >= 1`, i.e. `a·x^p` on the half-line.
    Power { a: f64, p: f64 },
    /// `a·x^p + a2·x^p2`, each term odd-extended like [`NonlinearityKind::Power`].
    PowerSum { a: f64, p: f64, a2: f64, p2: f64 },
    Custom {
        f: ScalarFn,
        f1: ScalarFn,
        f2: ScalarFn,
        antiderivative: Option<ScalarFn>,
    },
}

impl fmt::Debug for NonlinearityKind {
    fn fmt(&self, fm: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Constant { c } => fm.debug_struct("Constant").field("c", c).finish(),
            Self::Power { a, p } => fm.debug_struct("Power").field("a", a).field("p", p).finish(),
            Self::PowerSum { a, p, a2, p2 } => fm
                .debug_struct("PowerSum")
                .field("a", a)
                .field("p", p)
                .field("a2", a2)
                .field("p2", p2)
                .finish(),
            Self::Custom { antiderivative, .. } => fm
                .debug_struct("Custom")
                .field("closed_form_antiderivative", &antiderivative.is_some())
                .finish(),
        }
    }
}

/// Scalar nonlinearity `f` with its first two derivatives.
#[derive(Debug, Clone)]
pub struct Nonlinearity {
    kind: NonlinearityKind,
    domain_max: f64,
}

fn pow_f(a: f64, p: f64, x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        a * x.signum() * x.abs().powf(p)
    }
}

fn pow_f1(a: f64, p: f64, x: f64) -> f64 {
    a * p * x.abs().powf(p - 1.0)
}

fn pow_f2(a: f64, p: f64, x: f64) -> f64 {
    if p == 1.0 || (x == 0.0 && p > 2.0) {
        0.0
    } else {
        a * p * (p - 1.0) * x.signum() * x.abs().powf(p - 2.0)
    }
}

fn pow_antiderivative(a: f64, p: f64, x: f64) -> f64 {
    a * x.abs().powf(p + 1.0) / (p + 1.0)
}

impl Nonlinearity {
    pub fn constant(c: f64) -> Self {
        Self {
            kind: NonlinearityKind::Constant { c },
            domain_max: f64::INFINITY,
        }
    }

    pub fn power(a: f64, p: f64) -> Result<Self> {
        if !(p >= 1.0 && p.is_finite()) || !a.is_finite() {
            return Err(Error::Config(format!(
                "power nonlinearity needs finite a and p >= 1, got a = {a}, p = {p}"
            )));
        }
        Ok(Self {
            kind: NonlinearityKind::Power { a, p },
            domain_max: f64::INFINITY,
        })
    }

    pub fn power_sum(a: f64, p: f64, a2: f64, p2: f64) -> Result<Self> {
        for (c, e) in [(a, p), (a2, p2)] {
            if !(e >= 1.0 && e.is_finite()) || !c.is_finite() {
                return Err(Error::Config(format!(
                    "power_sum terms need finite coefficients and exponents >= 1, got ({c}, {e})"
                )));
            }
        }
        Ok(Self {
            kind: NonlinearityKind::PowerSum { a, p, a2, p2 },
            domain_max: f64::INFINITY,
        })
    }

    /// User-supplied triple. Without a closed-form antiderivative, `F` is
    /// evaluated by adaptive Simpson quadrature.
    pub fn custom(
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
        f1: impl Fn(f64) -> f64 + Send + Sync + 'static,
        f2: impl Fn(f64) -> f64 + Send + Sync + 'static,
        domain_max: f64,
    ) -> Self {
        Self {
            kind: NonlinearityKind::Custom {
                f: Arc::new(f),
                f1: Arc::new(f1),
                f2: Arc::new(f2),
                antiderivative: None,
            },
            domain_max,
        }
    }

    pub fn with_antiderivative(mut self, big_f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        if let NonlinearityKind::Custom { antiderivative, .. } = &mut self.kind {
            *antiderivative = Some(Arc::new(big_f));
        }
        self
    }

    pub fn with_domain_max(mut self, domain_max: f64) -> Self {
        self.domain_max = domain_max;
        self
    }

    pub fn kind(&self) -> &NonlinearityKind {
        &self.kind
    }

    pub fn domain_max(&self) -> f64 {
        self.domain_max
    }

    pub fn f(&self, x: f64) -> f64 {
        match &self.kind {
            NonlinearityKind::Constant { c } => *c,
            NonlinearityKind::Power { a, p } => pow_f(*a, *p, x),
            NonlinearityKind::PowerSum { a, p, a2, p2 } => pow_f(*a, *p, x) + pow_f(*a2, *p2, x),
            NonlinearityKind::Custom { f, .. } => f(x),
        }
    }

    pub fn f1(&self, x: f64) -> f64 {
        match &self.kind {
            NonlinearityKind::Constant { .. } => 0.0,
            NonlinearityKind::Power { a, p } => pow_f1(*a, *p, x),
            NonlinearityKind::PowerSum { a, p, a2, p2 } => pow_f1(*a, *p, x) + pow_f1(*a2, *p2, x),
            NonlinearityKind::Custom { f1, .. } => f1(x),
        }
    }

    pub fn f2(&self, x: f64) -> f64 {
        match &self.kind {
            NonlinearityKind::Constant { .. } => 0.0,
            NonlinearityKind::Power { a, p } => pow_f2(*a, *p, x),
            NonlinearityKind::PowerSum { a, p, a2, p2 } => pow_f2(*a, *p, x) + pow_f2(*a2, *p2, x),
            NonlinearityKind::Custom { f2, .. } => f2(x),
        }
    }

    /// `F(ξ) = ∫_0^ξ f`.
    pub fn antiderivative(&self, xi: f64) -> f64 {
        match &self.kind {
            NonlinearityKind::Constant { c } => c * xi,
            NonlinearityKind::Power { a, p } => pow_antiderivative(*a, *p, xi),
            NonlinearityKind::PowerSum { a, p, a2, p2 } => {
                pow_antiderivative(*a, *p, xi) + pow_antiderivative(*a2, *p2, xi)
            }
            NonlinearityKind::Custom {
                antiderivative: Some(big_f),
                ..
            } => big_f(xi),
            NonlinearityKind::Custom { f, .. } => adaptive_simpson(|x| f(x), 0.0, xi, 1e-10),
        }
    }

    /// Sampled check of the problem-class requirements on `[0, upper]`:
    /// `f >= 0`, `f` nondecreasing, and `f′`, `f″` consistent with central
    /// differences at step 1e-5.
    pub fn validate(&self, upper: f64) -> Result<()> {
        let upper = upper.min(self.domain_max);
        if !(upper > 0.0 && upper.is_finite()) {
            return Err(Error::Config(format!("invalid validation range [0, {upper}]")));
        }
        const SAMPLES: usize = 400;
        let xs: Vec<f64> = (0..=SAMPLES).map(|k| upper * k as f64 / SAMPLES as f64).collect();
        let mut prev = f64::NEG_INFINITY;
        for &x in &xs {
            let fx = self.f(x);
            if !fx.is_finite() || fx < 0.0 {
                return Err(Error::Config(format!("f({x}) = {fx} is not nonnegative")));
            }
            if fx < prev - 1e-12 * prev.abs() {
                return Err(Error::Config(format!("f is decreasing near x = {x}")));
            }
            prev = fx;
        }
        let step = 1e-5;
        let f1_scale = xs.iter().map(|&x| self.f1(x).abs()).fold(0.0, f64::max);
        let f2_scale = xs.iter().map(|&x| self.f2(x).abs()).fold(0.0, f64::max);
        for &x in xs.iter().filter(|&&x| x >= step && x + step <= self.domain_max) {
            let fd1 = (self.f(x + step) - self.f(x - step)) / (2.0 * step);
            let d1 = self.f1(x);
            if (fd1 - d1).abs() > 1e-4 * d1.abs().max(1e-8 * f1_scale).max(1e-12) {
                return Err(Error::Config(format!(
                    "f' inconsistent with f at x = {x}: {d1} vs difference {fd1}"
                )));
            }
            let fd2 = (self.f1(x + step) - self.f1(x - step)) / (2.0 * step);
            let d2 = self.f2(x);
            if (fd2 - d2).abs() > 1e-4 * d2.abs().max(1e-8 * f2_scale).max(1e-12) {
                return Err(Error::Config(format!(
                    "f'' inconsistent with f' at x = {x}: {d2} vs difference {fd2}"
                )));
            }
        }
        Ok(())
    }
}

fn adaptive_simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    #[allow(clippy::too_many_arguments)]
    fn recurse(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
                + recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
        }
    }
    if a == b {
        return 0.0;
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    recurse(&f, a, b, fa, fm, fb, whole, tol, 48)
}

/// Generating family of a [`WeightFunction`]; every family is defined on
/// `[0, 1/2]` and mirrored about `t = 1/2`.
#[derive(Debug, Clone, PartialEq)]
pub enum WeightFamily {
    Constant { value: f64 },
    /// `value` on `[β, 1-β]`, zero elsewhere.
    Step { beta: f64, value: f64 },
    /// Piecewise-linear table `(t_k, g_k)` with `t_0 = 0` and `t_last = 1/2`.
    Table { t: Vec<f64>, g: Vec<f64> },
}

impl WeightFamily {
    pub fn eval(&self, t: f64) -> f64 {
        self.eval_half(t.min(1.0 - t))
    }

    fn eval_half(&self, half: f64) -> f64 {
        match self {
            Self::Constant { value } => *value,
            Self::Step { beta, value } => {
                if half >= beta - 1e-14 {
                    *value
                } else {
                    0.0
                }
            }
            Self::Table { t, g } => {
                let k = t.partition_point(|&tk| tk <= half).clamp(1, t.len() - 1);
                let (t0, t1) = (t[k - 1], t[k]);
                let lam = ((half - t0) / (t1 - t0)).clamp(0.0, 1.0);
                g[k - 1] + lam * (g[k] - g[k - 1])
            }
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            Self::Constant { value } if !(value.is_finite() && *value >= 0.0) => {
                Err(Error::Config(format!("constant weight must be >= 0, got {value}")))
            }
            Self::Step { beta, value } if !(*beta > 0.0 && *beta < 0.5 && value.is_finite() && *value >= 0.0) => {
                Err(Error::Config(format!(
                    "step weight needs beta in (0, 1/2) and value >= 0, got beta = {beta}, value = {value}"
                )))
            }
            Self::Table { t, g } => {
                if t.len() < 2 || t.len() != g.len() {
                    return Err(Error::Config("weight table needs >= 2 matching (t, g) entries".into()));
                }
                if t[0].abs() > 1e-12 || (t[t.len() - 1] - 0.5).abs() > 1e-12 {
                    return Err(Error::Config("weight table must span [0, 1/2]".into()));
                }
                if t.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(Error::Config("weight table abscissae must increase strictly".into()));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

/// Nodal samples of the coefficient `g` together with its generating family.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightFunction {
    family: WeightFamily,
    samples: GridFunction,
}

impl WeightFunction {
    pub fn new(grid: Grid, family: WeightFamily) -> Result<Self> {
        family.validate()?;
        let values = (0..grid.len()).map(|i| family.eval_half(grid.half_node(i))).collect();
        let samples = GridFunction::from_values(grid, values)?;
        let w = Self { family, samples };
        w.check_invariants()?;
        Ok(w)
    }

    pub fn constant(grid: Grid, value: f64) -> Result<Self> {
        Self::new(grid, WeightFamily::Constant { value })
    }

    pub fn step(grid: Grid, beta: f64, value: f64) -> Result<Self> {
        Self::new(grid, WeightFamily::Step { beta, value })
    }

    fn check_invariants(&self) -> Result<()> {
        let v = self.samples.values();
        let grid = self.samples.grid();
        let n = grid.cells();
        if let Some(i) = v.iter().position(|&x| !(x >= 0.0 && x.is_finite())) {
            return Err(Error::Config(format!("g(t_{i}) = {} is negative", v[i])));
        }
        if let Some(i) = (0..grid.mid_index()).find(|&i| v[i + 1] < v[i] - 1e-12) {
            return Err(Error::Config(format!("g is decreasing on [0,1/2] near t = {}", grid.node(i))));
        }
        if let Some(i) = (0..=n).find(|&i| (v[i] - v[n - i]).abs() > 1e-12) {
            return Err(Error::Config(format!("g is not symmetric at t = {}", grid.node(i))));
        }
        Ok(())
    }

    pub fn family(&self) -> &WeightFamily {
        &self.family
    }

    pub fn samples(&self) -> &GridFunction {
        &self.samples
    }

    pub fn grid(&self) -> Grid {
        self.samples.grid()
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.family.eval(t)
    }
}

/// `w_i = g(t_i)·f(u_i)` after checking `|u_i| <= f.domain_max`.
pub(crate) fn source_term(u: &GridFunction, f: &Nonlinearity, g: &WeightFunction) -> Result<GridFunction> {
    check_domain(u, f)?;
    g.samples().zip_map(u, |gi, ui| gi * f.f(ui))
}

pub(crate) fn check_domain(u: &GridFunction, f: &Nonlinearity) -> Result<()> {
    let max = crate::function_space::sup_norm(u);
    if max > f.domain_max() || !max.is_finite() {
        return Err(Error::Domain(format!(
            "iterate magnitude {max:.6e} exceeds the certified range {:.6e} of f",
            f.domain_max()
        )));
    }
    Ok(())
}

/// `N(u) = J⁻¹(g·f(u))`.
pub fn apply_n(u: &GridFunction, f: &Nonlinearity, g: &WeightFunction) -> Result<GridFunction> {
    Ok(apply_inverse_laplacian(&source_term(u, f, g)?))
}
