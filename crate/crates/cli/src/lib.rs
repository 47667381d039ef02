//! Command-line front end: reads a problem file, runs one computation and
//! prints a JSON report (or the demo table).
//!
//! Exit codes: 0 success, 1 input error, 2 refusal, 3 solver failure.

pub mod json;
pub mod problem;

use std::ffi::OsString;
use std::fmt;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand};
use orbit_locator::defaults::{BUDGET, PROBE_SEED, RANK_TOL, STAB_TOL, TOL};
use orbit_locator::demo::{demo_table, to_csv, to_text, DEFAULT_C_VALUES};
use orbit_locator::linalg::singular_values;
use orbit_locator::located_sets::ball_distance;
use orbit_locator::nested_limit::{locate_distance_partial, DistanceReport, LocateOptions, Verdict};
use orbit_locator::open_mapping::{greedy_decompose, open_map_radius, Decomposition, Outcome, RadiusResult};
use orbit_locator::operator_space::orbit;
use orbit_locator::projection::{build_projection_seeded, orbit_inner_radius, pipeline_distance};
use orbit_locator::{Error, OrbitBall};
use serde_json::{json, Value};

use crate::json::{matrix, real, render, vector};
use crate::problem::{Problem, ProblemFile};

/// Environment variable capping the worker thread count.
pub const THREADS_ENV: &str = "ORBIT_LOCATOR_THREADS";

#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    Input(String),
    Refused(String),
    Solver(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 1,
            CliError::Refused(_) => 2,
            CliError::Solver(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Input(m) => write!(f, "input error: {m}"),
            CliError::Refused(m) => write!(f, "refused: {m}"),
            CliError::Solver(m) => write!(f, "solver failure: {m}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let msg = e.to_string();
        match e {
            Error::Refused(_) | Error::RankDeficient { .. } => CliError::Refused(msg),
            Error::SolverFailure { .. } | Error::NoConvergence { .. } => CliError::Solver(msg),
            Error::DimensionMismatch { .. }
            | Error::InvalidInput(_)
            | Error::DependentBasis { .. }
            | Error::NetTooLarge { .. } => CliError::Input(msg),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "orbit-locator", version, about = "Distances to operator orbits, inner radii and orbit projections")]
struct Cli {
    /// Solver accuracy for distances, gauges and radii.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Equality threshold for the stabilization test.
    #[arg(long = "stab-tol", global = true)]
    stab_tol: Option<f64>,
    /// Number of nested-limit levels.
    #[arg(long, global = true)]
    budget: Option<usize>,
    /// Relative threshold for linear independence of the basis.
    #[arg(long = "rank-tol", global = true)]
    rank_tol: Option<f64>,
    /// Re-parse the emitted JSON and check its required fields.
    #[arg(long, global = true)]
    validate: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Nested-limit distance from y to the orbit.
    Distance {
        file: PathBuf,
        /// Solve all levels concurrently.
        #[arg(long)]
        parallel: bool,
    },
    /// Distance from y to the orbit ball of scale n.
    Balldist {
        file: PathBuf,
        #[arg(long)]
        n: Option<f64>,
    },
    /// Projector onto the orbit with its probe certificate.
    Project {
        file: PathBuf,
        /// Fall back to the nested-limit engine when truncation is refused.
        #[arg(long = "nested-fallback")]
        nested_fallback: bool,
    },
    /// Inner radius of the unit orbit ball within the orbit.
    Radius { file: PathBuf },
    /// Greedy halving decomposition of y against the orbit ball.
    Decompose {
        file: PathBuf,
        #[arg(long)]
        r: f64,
    },
    /// Open-mapping radius of the single basis matrix.
    Omt { file: PathBuf },
    /// Table for the diagonal algebra acting on (1, c).
    Demo {
        /// Also write the table as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Comma-separated values of c.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        c: Option<Vec<f64>>,
    },
}

/// Effective settings: flag, then problem file, then default.
#[derive(Debug, Clone, Copy)]
struct Settings {
    tol: f64,
    stab_tol: f64,
    budget: usize,
    rank_tol: f64,
    seed: u64,
}

impl Settings {
    fn resolve(cli: &Cli, file: Option<&ProblemFile>) -> Result<Self, CliError> {
        let s = Settings {
            tol: cli.tol.or(file.and_then(|f| f.tol)).unwrap_or(TOL),
            stab_tol: cli.stab_tol.unwrap_or(STAB_TOL),
            budget: cli.budget.or(file.and_then(|f| f.budget)).unwrap_or(BUDGET),
            rank_tol: cli.rank_tol.unwrap_or(RANK_TOL),
            seed: file.and_then(|f| f.seed).unwrap_or(PROBE_SEED),
        };
        for (name, v) in [("tol", s.tol), ("stab-tol", s.stab_tol), ("rank-tol", s.rank_tol)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(CliError::Input(format!("{name} must be positive, got {v}")));
            }
        }
        if s.budget == 0 {
            return Err(CliError::Input("budget must be at least 1".into()));
        }
        Ok(s)
    }
}

/// Runs the tool on `argv` (including the program name), writing to the
/// process's standard streams. Returns the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with(argv, &mut stdout.lock(), &mut stderr.lock())
}

/// [`run`] with explicit output streams.
pub fn run_with<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(out, "{e}");
                return 0;
            }
            let text = e.to_string();
            let line = text.lines().next().unwrap_or("invalid arguments");
            let _ = writeln!(err, "{line}");
            return 1;
        }
    };
    if let Err(e) = configure_threads() {
        let _ = writeln!(err, "error: {e}");
        return e.exit_code();
    }
    match execute(&cli) {
        Ok(Emitted { text, code, is_json }) => {
            if cli.validate && is_json {
                if let Err(msg) = json::validate(&text) {
                    let _ = writeln!(err, "error: validation failed: {msg}");
                    return 1;
                }
            }
            let _ = out.write_all(text.as_bytes());
            let _ = out.flush();
            code
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Input(format!("{THREADS_ENV} must be a positive integer, got {raw:?}")))?;
    // a pool configured earlier in the process keeps its size
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

struct Emitted {
    text: String,
    code: i32,
    is_json: bool,
}

fn emit(value: Value, code: i32) -> Result<Emitted, CliError> {
    Ok(Emitted {
        text: render(&value),
        code,
        is_json: true,
    })
}

fn load(file: &PathBuf) -> Result<Problem, CliError> {
    ProblemFile::load(file)?.validate()
}

fn execute(cli: &Cli) -> Result<Emitted, CliError> {
    match &cli.command {
        Command::Demo { csv, c } => {
            let settings = Settings::resolve(cli, None)?;
            let cs = c.clone().unwrap_or_else(|| DEFAULT_C_VALUES.to_vec());
            let rows = demo_table(&cs, settings.budget, settings.tol)?;
            if let Some(path) = csv {
                std::fs::write(path, to_csv(&rows)).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
            }
            Ok(Emitted {
                text: to_text(&rows),
                code: 0,
                is_json: false,
            })
        }
        Command::Distance { file, parallel } => {
            let p = load(file)?;
            let st = Settings::resolve(cli, Some(&p.file))?;
            distance(&p, &st, *parallel)
        }
        Command::Balldist { file, n } => {
            let p = load(file)?;
            let st = Settings::resolve(cli, Some(&p.file))?;
            let n = n
                .or(p.file.n)
                .ok_or_else(|| CliError::Input("balldist needs --n or an n field in the problem file".into()))?;
            if !(n > 0.0) || !n.is_finite() {
                return Err(CliError::Input(format!("n must be positive, got {n}")));
            }
            let s = p.subspace(st.rank_tol)?;
            let res = ball_distance(p.require_y()?, &s, &p.x, n, st.tol)?;
            emit(
                json!({
                    "command": "balldist",
                    "n": n,
                    "value": res.value,
                    "lower": res.lower,
                    "coeffs": vector(&res.coeffs),
                    "point": vector(&res.point),
                    "tol": res.tol,
                    "solver_iters": res.solver_iters,
                }),
                0,
            )
        }
        Command::Project { file, nested_fallback } => {
            let p = load(file)?;
            let st = Settings::resolve(cli, Some(&p.file))?;
            project(&p, &st, *nested_fallback)
        }
        Command::Radius { file } => {
            let p = load(file)?;
            let st = Settings::resolve(cli, Some(&p.file))?;
            let s = p.subspace(st.rank_tol)?;
            let res = orbit_inner_radius(&s, &p.x, st.tol)?;
            let mut v = radius_json(&res);
            v["command"] = json!("radius");
            emit(v, 0)
        }
        Command::Decompose { file, r } => {
            let p = load(file)?;
            let st = Settings::resolve(cli, Some(&p.file))?;
            let s = p.subspace(st.rank_tol)?;
            let n = p.file.n.unwrap_or(1.0);
            let body = OrbitBall::new(&s, &p.x, n)?;
            let dec = greedy_decompose(p.require_y()?, &body, *r, st.tol)?;
            let mut v = decomposition_json(&dec);
            v["command"] = json!("decompose");
            v["n"] = json!(n);
            v["tol"] = json!(st.tol);
            emit(v, 0)
        }
        Command::Omt { file } => {
            let p = load(file)?;
            let st = Settings::resolve(cli, Some(&p.file))?;
            if p.basis.len() != 1 {
                return Err(CliError::Input(format!(
                    "omt needs exactly one matrix in basis, found {}",
                    p.basis.len()
                )));
            }
            let t = &p.basis[0];
            let sigma_min = *singular_values(t, 1e-12)?.last().expect("nonempty matrix");
            let res = open_map_radius(t, st.tol)?;
            let mut v = radius_json(&res);
            v["command"] = json!("omt");
            v["sigma_min"] = json!(sigma_min);
            emit(v, 0)
        }
    }
}

fn verdict_json(v: &Verdict) -> Value {
    match v {
        Verdict::Located { d, y_inf } => json!({"kind": "Located", "d": d, "y_inf": vector(y_inf)}),
        Verdict::Stabilized { n, d } => json!({"kind": "Stabilized", "N": n, "d": d}),
        Verdict::Undecided { budget, lower, upper } => {
            json!({"kind": "Undecided", "budget": budget, "lower": lower, "upper": upper})
        }
        Verdict::SolverFailed { level, lower, upper } => {
            json!({"kind": "SolverFailed", "level": level, "lower": lower, "upper": upper})
        }
    }
}

fn report_json(report: &DistanceReport) -> Value {
    json!({
        "verdict": verdict_json(&report.verdict),
        "levels": report.levels.iter().map(|l| json!({
            "n": l.n,
            "d": l.d,
            "lower": l.lower,
            "tol": l.tol,
            "y_n": vector(&l.point),
        })).collect::<Vec<_>>(),
        "cauchy_bounds": report.cauchy_bounds.iter().map(|c| json!({
            "m": c.m,
            "n": c.n,
            "bound": c.bound,
            "observed": c.observed,
        })).collect::<Vec<_>>(),
        "tol": report.tol,
        "stab_tol": report.stab_tol,
    })
}

fn locate(p: &Problem, st: &Settings, parallel: bool) -> Result<(DistanceReport, f64), CliError> {
    let s = p.subspace(st.rank_tol)?;
    let y = p.require_y()?;
    let opts = LocateOptions {
        tol: st.tol,
        stab_tol: st.stab_tol,
        budget: st.budget,
        parallel,
    };
    let report = locate_distance_partial(y, &s, &p.x, &opts)?;
    let exact = y.dist(&orbit(&s, &p.x, RANK_TOL)?.project(y));
    Ok((report, exact))
}

fn distance(p: &Problem, st: &Settings, parallel: bool) -> Result<Emitted, CliError> {
    let (report, exact) = locate(p, st, parallel)?;
    let code = if matches!(report.verdict, Verdict::SolverFailed { .. }) { 3 } else { 0 };
    let mut v = report_json(&report);
    v["command"] = json!("distance");
    v["budget"] = json!(st.budget);
    v["exact_distance"] = json!(exact);
    emit(v, code)
}

fn project(p: &Problem, st: &Settings, nested_fallback: bool) -> Result<Emitted, CliError> {
    let s = p.subspace(st.rank_tol)?;
    let cert = build_projection_seeded(&s, &p.x, st.tol, st.seed)?;
    let mut v = json!({
        "command": "project",
        "P": matrix(&cert.p),
        "rank": cert.rank,
        "r": cert.r,
        "seed": cert.seed,
        "note": cert.note,
        "trace": cert.trace.iter().map(|e| json!({
            "y": vector(&e.y),
            "N": e.n,
            "d_pipeline": e.d_pipeline,
            "d_oracle": e.d_oracle,
        })).collect::<Vec<_>>(),
    });
    if let Some(y) = &p.y {
        v["distance"] = match pipeline_distance(y, &s, &p.x, st.tol) {
            Ok(res) => json!({"method": "truncation", "N": res.n, "d": res.d, "r": res.r, "d_oracle": res.oracle}),
            Err(Error::Refused(msg)) if nested_fallback => {
                let (report, exact) = locate(p, st, false)?;
                let mut d = report_json(&report);
                d["method"] = json!("nested_limit");
                d["refusal"] = json!(msg);
                d["d_oracle"] = json!(exact);
                d
            }
            Err(e) => return Err(e.into()),
        };
    }
    emit(v, 0)
}

fn radius_json(res: &RadiusResult) -> Value {
    let c = &res.certificate;
    json!({
        "r": res.r,
        "direction": vector(&res.direction),
        "method": res.method,
        "tol": res.tol,
        "certificate": {
            "directions_sampled": c.directions_sampled,
            "gauge_evaluations": c.gauge_evaluations,
            "max_gauge": real(c.max_gauge),
            "probe": c.probe.as_ref().map(|d| json!({
                "outcome": d.outcome.name(),
                "steps": d.steps.len(),
                "y": vector(&d.y),
            })),
        },
    })
}

fn decomposition_json(dec: &Decomposition) -> Value {
    let outcome = match &dec.outcome {
        Outcome::Member { xi } => json!({"kind": "Member", "xi": vector(xi)}),
        Outcome::Witness { z, dist } => json!({"kind": "Witness", "z": vector(z), "dist": dist}),
        Outcome::Undecided { steps, error } => json!({"kind": "Undecided", "steps": steps, "error": error}),
    };
    json!({
        "outcome": outcome,
        "steps": dec.steps.iter().map(|s| json!({
            "i": s.i,
            "x": vector(&s.x),
            "lambda": s.lambda,
            "residual": s.residual,
            "error": s.error,
        })).collect::<Vec<_>>(),
        "r": dec.r,
        "y": vector(&dec.y),
    })
}
