//! JSON problem configuration.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::energy::Problem;
use crate::error::{Error, Result};
use crate::function_space::Grid;
use crate::green_operator::{Nonlinearity, WeightFamily, WeightFunction};
use crate::hypotheses::{Condition, HypothesisOptions};
use crate::nehari::AnnulusSpec;
use crate::solver::{check_ordering, SolverOptions};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", content = "params", rename_all = "snake_case")]
pub enum NonlinearityConfig {
    Power { a: f64, p: f64 },
    PowerSum { a: f64, p: f64, a2: f64, p2: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", content = "params", rename_all = "snake_case")]
pub enum WeightConfig {
    Constant { value: f64 },
    /// `value` on `[β, 1−β]`, zero elsewhere.
    Step { beta: f64, value: f64 },
    /// Samples of `g` on `[0, ½]`, linearly interpolated and mirrored.
    Table { t: Vec<f64>, g: Vec<f64> },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnnulusConfig {
    pub r: f64,
    #[serde(rename = "R")]
    pub big_r: f64,
    pub beta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HypothesisConfig {
    pub mode: Option<Condition>,
    pub mu: Option<f64>,
    pub lambda: Option<f64>,
    pub search: bool,
    pub samples: usize,
    pub scan_points: usize,
}

impl Default for HypothesisConfig {
    fn default() -> Self {
        let d = HypothesisOptions::default();
        Self {
            mode: d.mode,
            mu: d.mu,
            lambda: d.lambda,
            search: d.search,
            samples: d.samples,
            scan_points: d.scan_points,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub nonlinearity: NonlinearityConfig,
    pub weight: WeightConfig,
    pub annuli: Vec<AnnulusConfig>,
    pub grid_n: usize,
    #[serde(default)]
    pub solver: SolverOptions,
    #[serde(default)]
    pub hypothesis: HypothesisConfig,
    #[serde(default)]
    pub seed: u64,
}

/// A validated configuration.
#[derive(Debug, Clone)]
pub struct Loaded {
    pub config: ProblemConfig,
    pub problem: Problem,
    pub annuli: Vec<AnnulusSpec>,
    pub solver: SolverOptions,
    pub hypothesis: HypothesisOptions,
}

fn field(path: &str, e: Error) -> Error {
    let msg = match e {
        Error::Config(m) | Error::Domain(m) | Error::InvalidGrid(m) => m,
        other => other.to_string(),
    };
    Error::Config(format!("{path}: {msg}"))
}

pub fn parse(text: &str) -> Result<ProblemConfig> {
    serde_json::from_str(text).map_err(|e| Error::Config(format!("line {}, column {}: {e}", e.line(), e.column())))
}

pub fn load(path: &Path) -> Result<ProblemConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    parse(&text)
}

impl NonlinearityConfig {
    pub fn build(&self) -> Result<Nonlinearity> {
        match *self {
            Self::Power { a, p } => Nonlinearity::power(a, p),
            Self::PowerSum { a, p, a2, p2 } => Nonlinearity::power_sum(a, p, a2, p2),
        }
    }

    pub fn set_a(&mut self, value: f64) {
        match self {
            Self::Power { a, .. } | Self::PowerSum { a, .. } => *a = value,
        }
    }

    pub fn set_p(&mut self, value: f64) {
        match self {
            Self::Power { p, .. } | Self::PowerSum { p, .. } => *p = value,
        }
    }
}

impl WeightConfig {
    pub fn build(&self, grid: Grid) -> Result<WeightFunction> {
        let family = match self {
            Self::Constant { value } => WeightFamily::Constant { value: *value },
            Self::Step { beta, value } => WeightFamily::Step {
                beta: *beta,
                value: *value,
            },
            Self::Table { t, g } => WeightFamily::Table {
                t: t.clone(),
                g: g.clone(),
            },
        };
        WeightFunction::new(grid, family)
    }
}

impl ProblemConfig {
    pub fn validate(&self, seed_override: Option<u64>) -> Result<Loaded> {
        let grid = Grid::new(self.grid_n).map_err(|e| field("grid_n", e))?;
        let f = self.nonlinearity.build().map_err(|e| field("nonlinearity.params", e))?;
        let g = self.weight.build(grid).map_err(|e| field("weight.params", e))?;
        if self.annuli.is_empty() {
            return Err(Error::Config("annuli: at least one annulus is required".into()));
        }
        let annuli = self
            .annuli
            .iter()
            .enumerate()
            .map(|(i, c)| AnnulusSpec::new(c.r, c.big_r, c.beta).map_err(|e| field(&format!("annuli[{i}]"), e)))
            .collect::<Result<Vec<_>>>()?;
        check_ordering(&annuli).map_err(|e| field("annuli", e))?;
        let upper = annuli.iter().map(|a| a.big_r).fold(0.0, f64::max);
        f.validate(upper).map_err(|e| field("nonlinearity", e))?;
        self.solver.validate().map_err(|e| field("solver", e))?;
        let h = &self.hypothesis;
        if h.samples == 0 {
            return Err(Error::Config("hypothesis.samples: must be at least 1".into()));
        }
        let hypothesis = HypothesisOptions {
            mode: h.mode,
            mu: h.mu,
            lambda: h.lambda,
            search: h.search,
            samples: h.samples,
            scan_points: h.scan_points,
            seed: seed_override.unwrap_or(self.seed),
        };
        Ok(Loaded {
            config: self.clone(),
            problem: Problem::new(f, g),
            annuli,
            solver: self.solver.clone(),
            hypothesis,
        })
    }
}
