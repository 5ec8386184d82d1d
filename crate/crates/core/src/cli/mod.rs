//! The `nehari` command-line tool.
//!
//! Exit codes: 0 success, 1 failed checks, 2 configuration or usage error,
//! 3 solver failure.

pub mod config;
pub mod output;
pub mod sweep;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::cone::{cone_membership, DEFAULT_TOL_CONE};
use crate::error::{Error, Result};
use crate::function_space::sup_norm;
use crate::hypotheses::{certify, HypothesisReport};
use crate::nehari::{manifold_residual, on_manifold};
use crate::par::Execution;
use crate::solver::{solve_multi, AnnulusOutcome};
use crate::verify_oracle::{closest, default_slope_range, residual, shoot, DEFAULT_SHOOTING_STEPS};

use config::Loaded;
use output::{AnnulusRecord, Files, ShootingAgreement, SolutionSummary, SolveReport, Status, VerifyReport};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;

/// Relative sup-norm agreement required between the variational and the
/// shooting profile.
pub const SHOOTING_AGREEMENT: f64 = 1e-3;

#[derive(Debug, Parser)]
#[command(name = "nehari", version, about = "Positive solutions of -u'' = g(t) f(u) localized in cone annuli")]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// Problem configuration (JSON)
    #[arg(long)]
    config: PathBuf,
    /// Overrides the configuration seed
    #[arg(long)]
    seed: Option<u64>,
    /// Solve even when the hypothesis checks fail
    #[arg(long)]
    force: bool,
    /// Print machine-readable JSON to stdout
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evaluate the hypotheses for every annulus
    Check(Common),
    /// Check and solve every annulus; writes solution.csv, trace.csv, report.json
    Solve {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Like solve, with per-annulus files solution_<i>.csv and trace_<i>.csv
    Multi {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Recompute certificates for a stored profile and cross-check by shooting
    Verify {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        solution: PathBuf,
        /// Index of the annulus in the configuration
        #[arg(long, default_value_t = 0)]
        annulus: usize,
    },
    /// Cartesian sweep of hypothesis margins
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        sweep: PathBuf,
        /// Output CSV
        #[arg(long)]
        out: PathBuf,
    },
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let result = match cli.command {
        Command::Check(common) => cmd_check(&common),
        Command::Solve { common, out } => cmd_solve(&common, &out, false),
        Command::Multi { common, out } => cmd_solve(&common, &out, true),
        Command::Verify {
            common,
            solution,
            annulus,
        } => cmd_verify(&common, &solution, annulus),
        Command::Sweep { common, sweep, out } => cmd_sweep(&common, &sweep, &out),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_USAGE
        }
    }
}

fn load(common: &Common) -> Result<Loaded> {
    config::load(&common.config)?.validate(common.seed)
}

fn print_json<T: Serialize>(value: &T) {
    println!("{}", serde_json::to_string_pretty(value).expect("reports serialize"));
}

fn yes_no(b: bool) -> &'static str {
    if b {
        "pass"
    } else {
        "FAIL"
    }
}

fn print_report(i: usize, r: &HypothesisReport) {
    let a = &r.annulus;
    println!("annulus {i}: r = {}, R = {}, beta = {}", a.r, a.big_r, a.beta);
    println!(
        "  constants: A = {:.6e}, B = {:.6e}, C = {:.6e}",
        r.constants.a_tilde, r.constants.b_tilde, r.constants.c_tilde
    );
    println!(
        "  H1 {}: left margin {:.6e}, right margin {:.6e}{}",
        yes_no(r.h1.pass),
        r.h1.left,
        r.h1.right,
        r.h1.reason.as_deref().map(|s| format!(" ({s})")).unwrap_or_default()
    );
    if let Some(h2) = &r.h2 {
        println!("  H2 {}: min margin {:.6e}", yes_no(h2.pass), h2.min_margin);
    }
    if let Some(h3) = &r.h3 {
        println!(
            "  H3 {}: mu = {}, lambda = {:.6e}, margins {:.6e} / {:.6e} / {:.6e}",
            yes_no(h3.pass),
            h3.mu,
            h3.lambda,
            h3.ar_margin,
            h3.derivative_margin,
            h3.estimate_margin
        );
    }
    if let Some(h4) = &r.h4 {
        println!(
            "  H4 {}: support defect {:.3e}, min f'' {:.6e}, min theta {:.6e}",
            yes_no(h4.pass),
            h4.support_defect,
            h4.min_f2,
            h4.min_theta
        );
    }
    println!(
        "  sampled h1 {}: {} of {} fiber scans failed",
        yes_no(r.sampled_h1.passes),
        r.sampled_h1.failures,
        r.sampled_h1.samples
    );
    match (&r.abstract_constants, &r.abstract_error) {
        (Some(c), _) => println!(
            "  sampled h4 {}: C1 ~ {:.6e}, C2 ~ {:.6e}",
            yes_no(r.sampled_h4),
            c.c1_estimate,
            c.c2_estimate
        ),
        (None, Some(e)) => println!("  sampled h4 FAIL: {e}"),
        (None, None) => {}
    }
    println!("  overall {} (via {:?})", yes_no(r.passes), r.which_of_h234);
}

#[derive(Serialize)]
struct CheckOutput {
    results: Vec<HypothesisReport>,
}

fn cmd_check(common: &Common) -> Result<i32> {
    let loaded = load(common)?;
    let exec = Execution::default();
    let reports = loaded
        .annuli
        .iter()
        .map(|a| certify(&loaded.problem, a, &loaded.hypothesis, exec))
        .collect::<Result<Vec<_>>>()?;
    let ok = reports.iter().all(|r| r.passes);
    if common.json {
        print_json(&CheckOutput { results: reports });
    } else {
        for (i, r) in reports.iter().enumerate() {
            print_report(i, r);
        }
    }
    Ok(if ok { EXIT_OK } else { EXIT_FAILED })
}

fn file_names(indexed: bool, i: usize) -> (String, String) {
    if indexed {
        (format!("solution_{i}.csv"), format!("trace_{i}.csv"))
    } else {
        ("solution.csv".into(), "trace.csv".into())
    }
}

fn cmd_solve(common: &Common, out: &Path, always_indexed: bool) -> Result<i32> {
    let loaded = load(common)?;
    std::fs::create_dir_all(out).map_err(|e| Error::Config(format!("{}: {e}", out.display())))?;
    let p = &loaded.problem;
    let results = solve_multi(
        p,
        &loaded.annuli,
        &loaded.solver,
        &loaded.hypothesis,
        common.force,
        Execution::default(),
    )?;
    let indexed = always_indexed || results.len() > 1;

    let mut records = Vec::new();
    for (i, res) in results.into_iter().enumerate() {
        let grad_tol = loaded.solver.grad_tol_for(&res.annulus);
        let (status, solution, error, files) = match res.outcome {
            AnnulusOutcome::Skipped => (Status::Skipped, None, None, None),
            AnnulusOutcome::Failed(e) => (Status::Failed, None, Some(e.to_string()), None),
            AnnulusOutcome::Solved(done) => {
                let (sol, trace) = *done;
                let (sname, tname) = file_names(indexed, i);
                output::write_solution_csv(&out.join(&sname), &sol.u)?;
                output::write_trace_csv(&out.join(&tname), &trace)?;
                let summary = SolutionSummary::new(p, &sol, grad_tol);
                let (status, error) = if summary.certified {
                    (Status::Solved, None)
                } else {
                    (Status::Failed, Some("returned point failed certification".to_string()))
                };
                let files = Files {
                    solution: sname,
                    trace: tname,
                };
                (status, Some(summary), error, Some(files))
            }
        };
        records.push(AnnulusRecord {
            index: i,
            annulus: res.annulus,
            status,
            hypotheses: res.report,
            solution,
            error,
            files,
        });
    }
    let report = SolveReport { results: records };
    output::write_json(&out.join("report.json"), &report)?;

    if common.json {
        print_json(&report);
    } else {
        for r in &report.results {
            match (&r.status, &r.solution) {
                (Status::Solved, Some(s)) => println!(
                    "annulus {}: solved, |u| = {:.6e}, E = {:.6e}, |E'| = {:.3e}, {} iterations",
                    r.index, s.norm, s.energy, s.grad_norm, s.iterations
                ),
                (Status::Skipped, _) => println!("annulus {}: skipped, hypotheses failed", r.index),
                _ => println!(
                    "annulus {}: FAILED: {}",
                    r.index,
                    r.error.as_deref().unwrap_or("unknown error")
                ),
            }
        }
    }

    let failed = report.results.iter().any(|r| r.status == Status::Failed);
    let solved = report.results.iter().any(|r| r.status == Status::Solved);
    Ok(if failed {
        EXIT_SOLVER
    } else if solved {
        EXIT_OK
    } else {
        EXIT_FAILED
    })
}

fn cmd_verify(common: &Common, solution: &Path, index: usize) -> Result<i32> {
    let loaded = load(common)?;
    let p = &loaded.problem;
    let a = *loaded
        .annuli
        .get(index)
        .ok_or_else(|| Error::Config(format!("--annulus {index} out of range")))?;
    let u = output::read_solution_csv(solution, p.grid())?;
    if !u.is_zero_boundary() {
        return Err(Error::Config(format!("{}: profile must vanish at t = 0 and t = 1", solution.display())));
    }

    let res = residual(p, &u)?;
    let bound = output::residual_bound(p, &u);
    let cone = cone_membership(&u, DEFAULT_TOL_CONE);
    let (norm_sq, mres) = manifold_residual(p, &u)?;
    let norm = norm_sq.sqrt();
    let (shooting, shooting_error) = match shoot(p, default_slope_range(&a), DEFAULT_SHOOTING_STEPS, Execution::default()) {
        Ok(found) => {
            let (best, dist) = closest(&found, &u).expect("shoot returns at least one result");
            let scale = sup_norm(&u);
            let relative = if scale > 0.0 { dist / scale } else { f64::INFINITY };
            let agree = ShootingAgreement {
                slope: best.slope,
                boundary_miss: best.boundary_miss,
                sup_distance: dist,
                relative_distance: relative,
                agrees: relative <= SHOOTING_AGREEMENT,
            };
            (Some(agree), None)
        }
        Err(e) => (None, Some(e.to_string())),
    };
    let localized = a.r < norm && norm < a.big_r;
    let on_manifold = on_manifold(p, &u, &a, 1e-8);
    let residual_ok = res <= bound;
    let passes = residual_ok
        && cone.passes
        && on_manifold
        && localized
        && shooting.as_ref().is_some_and(|s| s.agrees);
    let report = VerifyReport {
        annulus: a,
        norm,
        residual: res,
        residual_bound: bound,
        residual_ok,
        cone,
        manifold_residual: mres / norm_sq,
        on_manifold,
        localized,
        shooting,
        shooting_error,
        passes,
    };
    if common.json {
        print_json(&report);
    } else {
        println!("norm {:.6e} (annulus [{}, {}]): {}", norm, a.r, a.big_r, yes_no(localized));
        println!("residual {:.6e} <= {:.6e}: {}", res, bound, yes_no(residual_ok));
        println!(
            "cone defects: symmetry {:.3e}, monotonicity {:.3e}, harnack {:.3e}: {}",
            cone.symmetry_defect,
            cone.monotonicity_defect,
            cone.harnack_defect,
            yes_no(cone.passes)
        );
        println!("nehari residual {:.3e}: {}", report.manifold_residual, yes_no(on_manifold));
        match (&report.shooting, &report.shooting_error) {
            (Some(s), _) => println!(
                "shooting slope {:.10e}, sup distance {:.3e} (relative {:.3e}): {}",
                s.slope,
                s.sup_distance,
                s.relative_distance,
                yes_no(s.agrees)
            ),
            (None, Some(e)) => println!("shooting FAIL: {e}"),
            (None, None) => {}
        }
        println!("overall {}", yes_no(passes));
    }
    Ok(if passes { EXIT_OK } else { EXIT_FAILED })
}

fn cmd_sweep(common: &Common, spec_path: &Path, out: &Path) -> Result<i32> {
    let cfg = config::load(&common.config)?;
    cfg.validate(common.seed)?;
    let text = std::fs::read_to_string(spec_path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", spec_path.display())))?;
    let spec = sweep::SweepSpec::parse(&text)?;
    let rows = sweep::run_sweep(&cfg, &spec, common.seed, Execution::default())?;
    std::fs::write(out, sweep::to_csv(&rows)).map_err(|e| Error::Config(format!("{}: {e}", out.display())))?;
    if common.json {
        print_json(&rows);
    } else {
        let passing = rows.iter().filter(|r| r.passes).count();
        println!("{} points, {} passing; table written to {}", rows.len(), passing, out.display());
    }
    Ok(EXIT_OK)
}
