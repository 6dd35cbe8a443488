//! Command-line front end: argument parsing, run orchestration and file
//! output. The `quenchlab` binary is a thin wrapper around [`main_with_args`].
//!
//! Exit codes: 0 success or certificate passed, 1 certificate failed,
//! 2 configuration error or certificate not applicable, 3 runtime error.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde_json::{json, Value};

use crate::certificates::{
    classify_case, quench_time_bound, rate_certificate, verify_quench_bound, TheoremCase,
};
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::evolution::{simulate, TerminalStatus, Trajectory};
use crate::grid::Grid;
use crate::model::{materialize_initial, validate_hypotheses, InitialContext, InitialData, PairField};
use crate::output::{to_value, write_csv, write_json, Cell};
use crate::problem::Problem;
use crate::spectra::{assemble_linearization, principal_eigenpair};
use crate::stationary::{
    analytic_nonexistence_bound, bisect_family, mass_bound_check, monotone_minimal_solution, second_solution_scan,
    trace_critical_curve, MembershipVerdict, StationarySolution,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_INAPPLICABLE: i32 = 2;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_ERROR: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "quenchlab", version, about = "Stationary solutions, critical curves, spectra and quenching for coupled MEMS-type systems")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// TOML configuration with [domain], [model] and [run] sections.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// Output directory (created if missing).
    #[arg(long, global = true, value_name = "DIR", default_value = ".")]
    pub out: PathBuf,

    /// Worker threads for parallel sweeps.
    #[arg(long, global = true, env = "QUENCHLAB_THREADS", value_name = "N")]
    pub threads: Option<usize>,

    /// Configuration override `section.key=value`; may be repeated and wins
    /// over the file.
    #[arg(long = "override", global = true, value_name = "KEY=VAL")]
    pub overrides: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Minimal stationary solution by monotone iteration.
    Stationary,
    /// Critical curve of the existence region.
    Curve,
    /// Principal eigenvalue of the linearization at the minimal solution.
    Eigen,
    /// Time integration with quench detection.
    Simulate,
    /// Convergence-rate certificate towards the minimal solution.
    Rate,
    /// Case classification plus the applicable certificate.
    Certify,
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    run(&cli)
}

pub fn run(cli: &Cli) -> i32 {
    let outcome = load_config(cli).and_then(|cfg| {
        fs::create_dir_all(&cli.out)?;
        let threads = cli.threads.unwrap_or(0);
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| Error::Config { key: "--threads".into(), message: e.to_string() })?;
        pool.install(|| run_command(cli.command, &cfg, &cli.out))
    });
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("quenchlab: {e}");
            let (code, key) = match &e {
                Error::Config { key, .. } => (EXIT_CONFIG, Some(key.clone())),
                _ => (EXIT_ERROR, None),
            };
            if fs::create_dir_all(&cli.out).is_ok() {
                let body = json!({ "error": e.to_string(), "key": key, "exit_code": code });
                let text = serde_json::to_string_pretty(&body).unwrap_or_default();
                let _ = fs::write(cli.out.join("error.json"), text + "\n");
            }
            code
        }
    }
}

fn load_config(cli: &Cli) -> Result<RunConfig> {
    let text = match &cli.config {
        Some(p) => fs::read_to_string(p).map_err(|e| Error::Config { key: "--config".into(), message: e.to_string() })?,
        None => String::new(),
    };
    RunConfig::from_toml_with_overrides(&text, &cli.overrides)
}

/// Runs one command against a resolved configuration, writing into `out`.
pub fn run_command(command: Command, cfg: &RunConfig, out: &Path) -> Result<i32> {
    match command {
        Command::Stationary => cmd_stationary(cfg, out),
        Command::Curve => cmd_curve(cfg, out),
        Command::Eigen => cmd_eigen(cfg, out),
        Command::Simulate => cmd_simulate(cfg, out),
        Command::Rate => cmd_rate(cfg, out),
        Command::Certify => cmd_certify(cfg, out),
    }
}

fn coord_header(grid: &Grid, rest: &[&'static str]) -> Vec<&'static str> {
    let mut h = if grid.dimension() == 1 { vec!["x"] } else { vec!["x", "y"] };
    h.extend_from_slice(rest);
    h
}

fn coord_cells(grid: &Grid, k: usize) -> Vec<Cell> {
    let [x, y] = grid.node(k);
    if grid.dimension() == 1 {
        vec![x.into()]
    } else {
        vec![x.into(), y.into()]
    }
}

fn field_rows(grid: &Grid, fields: &[&[f64]]) -> Vec<Vec<Cell>> {
    (0..grid.len())
        .map(|k| {
            let mut row = coord_cells(grid, k);
            row.extend(fields.iter().map(|f| Cell::Num(f[k])));
            row
        })
        .collect()
}

fn require_minimal(problem: &Problem, cfg: &RunConfig) -> Result<StationarySolution> {
    match monotone_minimal_solution(problem, &cfg.run.stationary)? {
        MembershipVerdict::InLambda(s) => Ok(s),
        other => Err(Error::Precondition(format!(
            "a minimal stationary solution is required, but the parameters are {}",
            other.label()
        ))),
    }
}

/// Initial data of the configuration with the stationary solutions it
/// refers to. The minimal solution is computed whenever it exists; a second
/// solution only when the recipe needs one.
pub fn resolve_initial(
    problem: &Problem,
    cfg: &RunConfig,
) -> Result<(PairField, Option<StationarySolution>, Option<StationarySolution>)> {
    let minimal = monotone_minimal_solution(problem, &cfg.run.stationary)?.into_solution();
    let needs_second = matches!(cfg.run.initial, InitialData::ConvexCombo { .. } | InitialData::AboveSecond { .. });
    let second = match (&minimal, needs_second) {
        (Some(m), true) => second_solution_scan(problem, m, &cfg.run.seed_amplitudes)?,
        _ => None,
    };
    if needs_second && second.is_none() {
        return Err(Error::Precondition("initial recipe needs a second stationary solution and none was found".into()));
    }
    let (mp, sp) = (minimal.as_ref().map(|s| s.pair()), second.as_ref().map(|s| s.pair()));
    let ctx = InitialContext { minimal: mp.as_ref(), second: sp.as_ref() };
    let initial = materialize_initial(&cfg.run.initial, problem.grid(), ctx)?;
    let report = validate_hypotheses(problem.model(), problem.grid(), Some(&initial));
    if let Some(v) = report.violation {
        return Err(Error::Precondition(format!("hypothesis violated: {v}")));
    }
    Ok((initial, minimal, second))
}

fn cmd_stationary(cfg: &RunConfig, out: &Path) -> Result<i32> {
    let problem = cfg.problem()?;
    let (lambda_bar, mu_bar) = analytic_nonexistence_bound(&problem)?;
    let verdict = monotone_minimal_solution(&problem, &cfg.run.stationary)?;
    let mut body = json!({
        "command": "stationary",
        "verdict": verdict.label(),
        "lambda_bar": lambda_bar,
        "mu_bar": mu_bar,
    });
    match &verdict {
        MembershipVerdict::InLambda(sol) => {
            let mass = mass_bound_check(&problem, &sol.w, &sol.z)?;
            body["iterations"] = json!(sol.iterations);
            body["residual"] = json!(sol.residual);
            body["final_change"] = json!(sol.final_change);
            body["max_w"] = json!(sol.w.max());
            body["max_z"] = json!(sol.z.max());
            body["mass_bound"] = to_value(&mass)?;
            let grid = problem.grid();
            write_csv(&out.join("stationary_fields.csv"), cfg, &coord_header(grid, &["w", "z"]), &field_rows(grid, &[&sol.w, &sol.z]))?;
        }
        MembershipVerdict::NotInLambda(ev) => body["evidence"] = to_value(ev)?,
        MembershipVerdict::Undetermined { iterations, last_change, max } => {
            body["iterations"] = json!(iterations);
            body["final_change"] = json!(last_change);
            body["max"] = json!(max);
        }
    }
    write_json(&out.join("stationary.json"), cfg, body)?;
    Ok(EXIT_OK)
}

fn cmd_curve(cfg: &RunConfig, out: &Path) -> Result<i32> {
    let problem = cfg.problem()?;
    let opts = cfg.curve_options();
    let samples = match &cfg.run.lambda_samples {
        Some(s) => s.clone(),
        None => {
            let (lambda_bar, _) = analytic_nonexistence_bound(&problem)?;
            let floor = opts.floor;
            let star = bisect_family(
                &problem,
                |l| crate::model::ParamPoint { lambda: l, mu: floor },
                floor,
                lambda_bar * (1.0 + 1e-9),
                &opts,
            )?;
            let m = cfg.run.samples;
            (1..=m).map(|k| star.lo * k as f64 / (m + 1) as f64).collect()
        }
    };
    let curve = trace_critical_curve(&problem, &samples, &opts)?;
    let rows: Vec<Vec<Cell>> = curve
        .samples
        .iter()
        .map(|s| match s.bracket {
            Some(b) => vec![s.lambda.into(), b.lo.into(), b.hi.into(), b.mid().into(), Cell::Text(format!("{:?}", b.status).to_lowercase())],
            None => vec![s.lambda.into(), f64::NAN.into(), f64::NAN.into(), f64::NAN.into(), "no_bracket".into()],
        })
        .collect();
    write_csv(&out.join("curve.csv"), cfg, &["lambda", "mu_lo", "mu_hi", "gamma", "status"], &rows)?;
    let body = json!({
        "command": "curve",
        "lambda_star": to_value(&curve.lambda_star)?,
        "mu_star": to_value(&curve.mu_star)?,
        "diagonal": to_value(&curve.diagonal)?,
        "diagonal_from_samples": curve.diagonal_crossing_from_samples(),
        "monotonicity_defect": curve.monotonicity_defect(),
        "samples": to_value(&curve.samples)?,
    });
    write_json(&out.join("curve.json"), cfg, body)?;
    Ok(EXIT_OK)
}

fn cmd_eigen(cfg: &RunConfig, out: &Path) -> Result<i32> {
    let problem = cfg.problem()?;
    let sol = require_minimal(&problem, cfg)?;
    let mut op = assemble_linearization(&problem, &sol)?;
    if cfg.run.decoupled {
        op = op.decoupled();
    }
    let eig = principal_eigenpair(&op, problem.grid())?;
    let lambda1 = problem.laplacian_eigenpair()?.lambda1;
    let grid = problem.grid();
    write_csv(&out.join("eigen.csv"), cfg, &coord_header(grid, &["phi1", "psi1"]), &field_rows(grid, &[&eig.phi1, &eig.psi1]))?;
    let body = json!({
        "command": "eigen",
        "nu1": eig.nu1,
        "residual": eig.residual,
        "iterations": eig.iterations,
        "lambda1": lambda1,
        "decoupled": cfg.run.decoupled,
    });
    write_json(&out.join("eigen.json"), cfg, body)?;
    Ok(EXIT_OK)
}

pub const TRAJECTORY_HEADER: [&str; 9] = ["t", "max_u", "max_v", "ut_l2", "vt_l2", "energy", "dist2_u", "dist2_v", "dt"];

fn write_trajectory(cfg: &RunConfig, grid: &Grid, traj: &Trajectory, out: &Path) -> Result<()> {
    let rows: Vec<Vec<Cell>> = traj
        .records
        .iter()
        .map(|r| [r.t, r.max_u, r.max_v, r.ut_l2, r.vt_l2, r.energy, r.dist2_u, r.dist2_v, r.dt].into_iter().map(Cell::Num).collect())
        .collect();
    write_csv(&out.join("trajectory.csv"), cfg, &TRAJECTORY_HEADER, &rows)?;
    let mut header = vec!["t"];
    header.extend(coord_header(grid, &["u", "v"]));
    let mut snap_rows = Vec::new();
    for s in &traj.snapshots {
        for mut row in field_rows(grid, &[&s.state.u, &s.state.v]) {
            row.insert(0, Cell::Num(s.t));
            snap_rows.push(row);
        }
    }
    write_csv(&out.join("snapshots.csv"), cfg, &header, &snap_rows)
}

fn status_json(traj: &Trajectory) -> Result<Value> {
    let mut v = to_value(&traj.status)?;
    v["steps"] = json!(traj.records.len() - 1);
    v["rejected_steps"] = json!(traj.rejected_steps);
    v["final_time"] = json!(traj.final_time());
    Ok(v)
}

fn cmd_simulate(cfg: &RunConfig, out: &Path) -> Result<i32> {
    let problem = cfg.problem()?;
    let (initial, minimal, _) = resolve_initial(&problem, cfg)?;
    let reference = minimal.as_ref().map(|s| s.pair());
    let traj = simulate(&problem, &initial, &cfg.run.stepper, cfg.run.horizon, reference.as_ref())?;
    write_trajectory(cfg, problem.grid(), &traj, out)?;
    let mut body = json!({ "command": "simulate", "result": status_json(&traj)? });
    if reference.is_some() {
        body["final_distance"] = json!(traj.final_distance());
    }
    write_json(&out.join("simulate.json"), cfg, body)?;
    Ok(EXIT_OK)
}

/// Runs the trajectory towards `minimal` and evaluates the rate certificate.
fn rate_report(problem: &Problem, cfg: &RunConfig, initial: &PairField, minimal: &StationarySolution, out: &Path) -> Result<(bool, Value)> {
    let reference = minimal.pair();
    let traj = simulate(problem, initial, &cfg.run.stepper, cfg.run.horizon, Some(&reference))?;
    write_trajectory(cfg, problem.grid(), &traj, out)?;
    let eig = principal_eigenpair(&assemble_linearization(problem, minimal)?, problem.grid())?;
    let lambda1 = problem.laplacian_eigenpair()?.lambda1;
    let run = status_json(&traj)?;
    if traj.status != TerminalStatus::ReachedHorizon {
        return Ok((false, json!({ "passed": false, "trajectory": run, "error": "trajectory did not reach the horizon" })));
    }
    match rate_certificate(&traj, lambda1, &eig) {
        Ok(cert) => Ok((cert.passed, json!({ "passed": cert.passed, "trajectory": run, "certificate": to_value(&cert)? }))),
        Err(e @ Error::InsufficientDecay(_)) => {
            Ok((false, json!({ "passed": false, "trajectory": run, "nu1": eig.nu1, "error": e.to_string() })))
        }
        Err(e) => Err(e),
    }
}

fn cmd_rate(cfg: &RunConfig, out: &Path) -> Result<i32> {
    let problem = cfg.problem()?;
    let (initial, minimal, _) = resolve_initial(&problem, cfg)?;
    let minimal = minimal.ok_or_else(|| Error::Precondition("rate certificate needs parameters inside the existence region".into()))?;
    let (passed, mut body) = rate_report(&problem, cfg, &initial, &minimal, out)?;
    body["command"] = json!("rate");
    write_json(&out.join("rate.json"), cfg, body)?;
    Ok(if passed { EXIT_OK } else { EXIT_FAIL })
}

fn cmd_certify(cfg: &RunConfig, out: &Path) -> Result<i32> {
    let problem = cfg.problem()?;
    let (initial, minimal, second) = resolve_initial(&problem, cfg)?;
    let report = classify_case(&problem, &initial, &cfg.run.stationary, second.as_ref())?;
    let mut body = json!({ "command": "certify", "case": to_value(&report)? });
    let code = match report.case {
        TheoremCase::C => {
            let bound = quench_time_bound(&problem, &initial)?;
            let traj = simulate(&problem, &initial, &cfg.run.stepper, cfg.run.horizon, None)?;
            write_trajectory(cfg, problem.grid(), &traj, out)?;
            let check = verify_quench_bound(&bound, &traj);
            body["verification"] = to_value(&check)?;
            body["trajectory"] = status_json(&traj)?;
            if check.passed { EXIT_OK } else { EXIT_FAIL }
        }
        TheoremCase::B => {
            let traj = simulate(&problem, &initial, &cfg.run.stepper, cfg.run.horizon, None)?;
            write_trajectory(cfg, problem.grid(), &traj, out)?;
            let quenched = matches!(traj.status, TerminalStatus::Quenched { .. });
            body["verification"] = json!({
                "passed": quenched,
                "note": if quenched { "quenched as predicted" } else { "no quench before the horizon" },
            });
            body["trajectory"] = status_json(&traj)?;
            if quenched { EXIT_OK } else { EXIT_FAIL }
        }
        TheoremCase::A1 | TheoremCase::A21 => {
            let minimal = minimal.ok_or_else(|| Error::Precondition("classification needs the minimal solution".into()))?;
            let (passed, rate) = rate_report(&problem, cfg, &initial, &minimal, out)?;
            body["verification"] = rate;
            if passed { EXIT_OK } else { EXIT_FAIL }
        }
        TheoremCase::A22 | TheoremCase::NoneEstablished => {
            body["verification"] = json!({ "passed": Value::Null, "note": "no quantitative certificate applies" });
            EXIT_INAPPLICABLE
        }
    };
    body["exit_code"] = json!(code);
    write_json(&out.join("certificate.json"), cfg, body)?;
    Ok(code)
}
