//! Cartesian parameter sweeps over `a`, `p`, `r`, `R`, `β`.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::config::ProblemConfig;
use super::output::fmt_f64;
use crate::error::{Error, Result};
use crate::hypotheses::{certify, Condition};
use crate::par::{self, Execution};
use crate::solver::solve;

pub const AXES: [&str; 5] = ["a", "p", "r", "R", "beta"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Axis {
    Values { values: Vec<f64> },
    /// `steps` equally spaced points from `min` to `max` inclusive.
    Range { min: f64, max: f64, steps: usize },
}

impl Axis {
    pub fn points(&self) -> Vec<f64> {
        match self {
            Self::Values { values } => values.clone(),
            Self::Range { min, max, steps } => match *steps {
                0 => Vec::new(),
                _ if !(min <= max) => Vec::new(),
                1 => vec![*min],
                k => (0..k).map(|i| min + (max - min) * i as f64 / (k - 1) as f64).collect(),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub axes: BTreeMap<String, Axis>,
    /// Also run the solver at every point that passes the checks.
    #[serde(default)]
    pub solve: bool,
}

impl SweepSpec {
    pub fn parse(text: &str) -> Result<Self> {
        let spec: Self = serde_json::from_str(text)
            .map_err(|e| Error::Config(format!("sweep spec line {}, column {}: {e}", e.line(), e.column())))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.axes.is_empty() {
            return Err(Error::Config("sweep spec: no axes given".into()));
        }
        for (name, axis) in &self.axes {
            if !AXES.contains(&name.as_str()) {
                return Err(Error::Config(format!("sweep spec: unknown axis {name:?}, expected one of {AXES:?}")));
            }
            if axis.points().is_empty() {
                return Err(Error::Config(format!("sweep spec: axis {name:?} has an empty range")));
            }
        }
        Ok(())
    }

    /// Points in row-major order over `AXES`.
    pub fn points(&self) -> Vec<BTreeMap<&'static str, f64>> {
        let mut out = vec![BTreeMap::new()];
        for name in AXES {
            if let Some(axis) = self.axes.get(name) {
                out = out
                    .into_iter()
                    .flat_map(|pt| {
                        axis.points().into_iter().map(move |v| {
                            let mut next = pt.clone();
                            next.insert(name, v);
                            next
                        })
                    })
                    .collect();
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub a: f64,
    pub p: f64,
    pub r: f64,
    #[serde(rename = "R")]
    pub big_r: f64,
    pub beta: f64,
    #[serde(with = "crate::serde_f64")]
    pub h1_left: f64,
    #[serde(with = "crate::serde_f64")]
    pub h1_right: f64,
    pub h1_pass: bool,
    pub which_of_h234: Option<Condition>,
    pub analytic_passes: bool,
    pub passes: bool,
    pub norm: Option<f64>,
    pub energy: Option<f64>,
    pub grad_norm: Option<f64>,
    pub certified: Option<bool>,
    pub error: Option<String>,
}

fn evaluate(base: &ProblemConfig, point: &BTreeMap<&'static str, f64>, seed: Option<u64>, solve_points: bool) -> SweepRow {
    let mut cfg = base.clone();
    cfg.annuli.truncate(1);
    for (&name, &v) in point {
        match name {
            "a" => cfg.nonlinearity.set_a(v),
            "p" => cfg.nonlinearity.set_p(v),
            "r" => cfg.annuli[0].r = v,
            "R" => cfg.annuli[0].big_r = v,
            _ => cfg.annuli[0].beta = v,
        }
    }
    let (a, p) = match cfg.nonlinearity {
        super::config::NonlinearityConfig::Power { a, p } | super::config::NonlinearityConfig::PowerSum { a, p, .. } => (a, p),
    };
    let ann = cfg.annuli[0];
    let mut row = SweepRow {
        a,
        p,
        r: ann.r,
        big_r: ann.big_r,
        beta: ann.beta,
        h1_left: f64::NAN,
        h1_right: f64::NAN,
        h1_pass: false,
        which_of_h234: None,
        analytic_passes: false,
        passes: false,
        norm: None,
        energy: None,
        grad_norm: None,
        certified: None,
        error: None,
    };
    let mut run = || -> Result<()> {
        let loaded = cfg.validate(seed)?;
        let annulus = loaded.annuli[0];
        // rows already run concurrently
        let report = certify(&loaded.problem, &annulus, &loaded.hypothesis, Execution::Sequential)?;
        row.h1_left = report.h1.left;
        row.h1_right = report.h1.right;
        row.h1_pass = report.h1.pass;
        row.which_of_h234 = Some(report.which_of_h234);
        row.analytic_passes = report.analytic_passes;
        row.passes = report.passes;
        if solve_points && report.passes {
            let (sol, _) = solve(&loaded.problem, &annulus, &loaded.solver)?;
            row.norm = Some(sol.norm);
            row.energy = Some(sol.energy);
            row.grad_norm = Some(sol.grad_norm);
            row.certified = Some(sol.certified(loaded.solver.grad_tol_for(&annulus)));
        }
        Ok(())
    };
    if let Err(e) = run() {
        row.error = Some(e.to_string());
    }
    row
}

pub fn run_sweep(base: &ProblemConfig, spec: &SweepSpec, seed: Option<u64>, exec: Execution) -> Result<Vec<SweepRow>> {
    spec.validate()?;
    let points = spec.points();
    Ok(par::map(exec, &points, |pt| evaluate(base, pt, seed, spec.solve)))
}

pub const HEADER: &str =
    "a,p,r,R,beta,h1_left,h1_right,h1_pass,which_of_h234,analytic_passes,passes,norm,energy,grad_norm,certified,error";

pub fn to_csv(rows: &[SweepRow]) -> String {
    let num = |x: f64| if x.is_finite() { fmt_f64(x) } else { String::new() };
    let opt = |x: Option<f64>| x.map_or(String::new(), num);
    let mut out = String::from(HEADER);
    out.push('\n');
    for r in rows {
        let which = match r.which_of_h234 {
            Some(Condition::H2) => "H2",
            Some(Condition::H3) => "H3",
            Some(Condition::H4) => "H4",
            Some(Condition::None) => "none",
            None => "",
        };
        let error = r.error.as_deref().unwrap_or("").replace(['"', ',', '\n'], " ");
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            num(r.a),
            num(r.p),
            num(r.r),
            num(r.big_r),
            num(r.beta),
            num(r.h1_left),
            num(r.h1_right),
            r.h1_pass,
            which,
            r.analytic_passes,
            r.passes,
            opt(r.norm),
            opt(r.energy),
            opt(r.grad_norm),
            r.certified.map_or(String::new(), |c| c.to_string()),
            error
        )
        .expect("writing to a String");
    }
    out
}
