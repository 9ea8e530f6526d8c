//! `slcurv`: solves, curvature tables and property suites from the command
//! line.
//!
//! Exit codes: 0 success, 1 property failure, 2 invalid input, 3 solver
//! non-convergence, 4 I/O failure.

mod config;
mod output;

use clap::{Args, Parser, Subcommand};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use config::{RunConfig, SolverFlags};
use slcurv_core::grid::{read_graph_csv, write_graph_csv, GraphMeta};
use slcurv_core::solver::{continuity_solve, JacobianKind, Schedule};
use slcurv_core::suites::run_props;
use slcurv_core::{radial, shape, CurvatureQuery};

pub const EXIT_PROPERTY: u8 = 1;
pub const EXIT_INVALID: u8 = 2;
pub const EXIT_NO_CONVERGENCE: u8 = 3;
pub const EXIT_IO: u8 = 4;

/// A failed run: exit code plus a one-line diagnostic.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub msg: String,
}

impl Failure {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Self { code: EXIT_INVALID, msg: msg.into() }
    }
    pub fn io(msg: impl Into<String>) -> Self {
        Self { code: EXIT_IO, msg: msg.into() }
    }
}

#[derive(Parser, Debug)]
#[command(name = "slcurv", version, about = "Constant special Lagrangian curvature graphs in hyperbolic space")]
struct Cli {
    /// Worker threads for node loops (SLCURV_WORKERS takes precedence).
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Dirichlet solve by continuation in rhat.
    Solve(SolveArgs),
    /// Per-node curvature table of a graph file.
    Curvature(CurvatureArgs),
    /// Randomized property suites.
    Props(PropsArgs),
}

#[derive(Args, Debug, Default)]
struct QueryArgs {
    /// JSON file with default settings; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    n: Option<usize>,
    /// Angle in radians.
    #[arg(long)]
    theta: Option<f64>,
    /// Rescaled curvature level.
    #[arg(long)]
    rhat: Option<f64>,
    /// Unscaled curvature level, converted to rhat.
    #[arg(long)]
    r: Option<f64>,
}

#[derive(Args, Debug)]
struct SolveArgs {
    #[command(flatten)]
    query: QueryArgs,
    /// `disk:<rho>` or `star:<rho>:<k:a,...>`
    #[arg(long)]
    domain: Option<String>,
    /// `<Ns>x<Nalpha>`
    #[arg(long)]
    grid: Option<String>,
    /// Graph CSV output.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Report JSON output.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Optional OBJ mesh output.
    #[arg(long)]
    obj: Option<PathBuf>,
    /// Residual tolerance.
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    max_newton: Option<usize>,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    rhat_start: Option<f64>,
    #[arg(long, value_parser = parse_schedule)]
    schedule: Option<Schedule>,
    #[arg(long, value_parser = parse_jacobian)]
    jacobian: Option<JacobianKind>,
    #[arg(long)]
    fd_step: Option<f64>,
    /// Record wall time in the report (makes it run-dependent).
    #[arg(long)]
    timing: bool,
}

#[derive(Args, Debug)]
struct CurvatureArgs {
    #[command(flatten)]
    query: QueryArgs,
    /// Graph CSV to evaluate.
    #[arg(long)]
    graph: Option<PathBuf>,
    /// Table output; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct PropsArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Replaces every suite tolerance.
    #[arg(long)]
    tol: Option<f64>,
    /// Summary JSON output; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_schedule(s: &str) -> Result<Schedule, String> {
    match s {
        "linear" => Ok(Schedule::Linear),
        "geometric" => Ok(Schedule::Geometric),
        _ => Err(format!("unknown schedule '{s}' (linear|geometric)")),
    }
}

fn parse_jacobian(s: &str) -> Result<JacobianKind, String> {
    match s {
        "exact" => Ok(JacobianKind::Exact),
        "forward" => Ok(JacobianKind::Forward),
        _ => Err(format!("unknown Jacobian kind '{s}' (exact|forward)")),
    }
}

fn query_flags(q: &QueryArgs) -> RunConfig {
    RunConfig { n: q.n, theta: q.theta, rhat: q.rhat, r: q.r, ..Default::default() }
}

fn write_file(path: &Path, text: &str) -> Result<(), Failure> {
    std::fs::write(path, text).map_err(|e| Failure::io(format!("cannot write {}: {e}", path.display())))
}

/// Fails before any computation when an output directory is missing.
fn check_parent(path: &Path) -> Result<(), Failure> {
    match path.parent() {
        Some(dir) if !dir.as_os_str().is_empty() && !dir.is_dir() => {
            Err(Failure::io(format!("output directory {} does not exist", dir.display())))
        }
        _ => Ok(()),
    }
}

fn to_json<T: serde::Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable report");
    s.push('\n');
    s
}

fn setup_workers(cfg: &RunConfig) -> Result<(), Failure> {
    let workers = match std::env::var("SLCURV_WORKERS") {
        Ok(v) => Some(
            v.trim()
                .parse::<usize>()
                .ok()
                .filter(|&n| n > 0)
                .ok_or_else(|| Failure::invalid(format!("SLCURV_WORKERS must be a positive integer, got '{v}'")))?,
        ),
        Err(_) => cfg.workers,
    };
    match workers {
        Some(0) => Err(Failure::invalid("worker count must be positive")),
        Some(n) => {
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global()
                .map_err(|e| Failure::invalid(format!("cannot start {n} workers: {e}")))?;
            log::debug!("using {n} workers");
            Ok(())
        }
        None => Ok(()),
    }
}

fn cmd_solve(cfg: RunConfig) -> Result<(), Failure> {
    let q = cfg.query()?;
    let grid = cfg.grid()?;
    let solver = cfg.solver()?;
    let out = cfg.out.clone().ok_or_else(|| Failure::invalid("missing --out"))?;
    let report_path = cfg.report.clone().ok_or_else(|| Failure::invalid("missing --report"))?;
    for p in [Some(&out), Some(&report_path), cfg.obj.as_ref()].into_iter().flatten() {
        check_parent(p)?;
    }
    let outcome = continuity_solve(&grid, &q, &solver).map_err(|e| Failure::invalid(e.to_string()))?;
    let mut report = outcome.report;
    if !cfg.timing.unwrap_or(false) {
        report.runtime_s = None;
    }
    let final_rhat = report.levels.iter().rev().find(|l| l.failure.is_none()).map_or(q.rhat(), |l| l.rhat);
    let meta = GraphMeta { n: q.n(), theta: q.theta(), rhat: final_rhat };
    write_file(&out, &write_graph_csv(&meta, &outcome.f))?;
    write_file(&report_path, &to_json(&report))?;
    if let Some(obj) = &cfg.obj {
        write_file(obj, &output::obj_mesh(&outcome.f))?;
    }
    if report.converged {
        log::info!("converged through {} levels", report.levels.len());
        Ok(())
    } else {
        let why = report
            .levels
            .iter()
            .find_map(|l| l.failure.as_ref().map(|f| format!("level rhat = {}: {f}", l.rhat)))
            .unwrap_or_else(|| "continuation did not converge".into());
        Err(Failure { code: EXIT_NO_CONVERGENCE, msg: why })
    }
}

fn cmd_curvature(cfg: RunConfig) -> Result<(), Failure> {
    let path = cfg.graph.clone().ok_or_else(|| Failure::invalid("missing --graph"))?;
    let text = std::fs::read_to_string(&path).map_err(|e| Failure::io(format!("cannot read {}: {e}", path.display())))?;
    let (meta, f) = read_graph_csv(&text).map_err(|e| Failure::invalid(format!("{}: {e}", path.display())))?;
    let merged = RunConfig {
        n: cfg.n.or(Some(meta.n)),
        theta: cfg.theta.or(Some(meta.theta)),
        rhat: if cfg.r.is_some() { cfg.rhat } else { cfg.rhat.or(Some(meta.rhat)) },
        ..cfg.clone()
    };
    let q: CurvatureQuery = merged.query()?;
    let (field, ring_only) = if q.n() == 2 {
        (shape::shape_field(&f, &q), false)
    } else {
        (radial::profile_field(f.grid(), &radial::profile_of(&f), &q), true)
    };
    let field = field.map_err(|e| Failure::invalid(e.to_string()))?;
    let table = output::curvature_csv(&f, &field, ring_only);
    match &cfg.out {
        Some(p) => write_file(p, &table),
        None => write_stdout(&table),
    }
}

/// A closed pipe (`| head`) is not an error.
fn write_stdout(s: &str) -> Result<(), Failure> {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    match out.write_all(s.as_bytes()).and_then(|()| out.flush()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(Failure::io(format!("cannot write to stdout: {e}"))),
        _ => Ok(()),
    }
}

fn cmd_props(cfg: RunConfig) -> Result<(), Failure> {
    let props = cfg.props()?;
    let summary = run_props(&props).map_err(|e| Failure::invalid(e.to_string()))?;
    let json = to_json(&summary);
    match &cfg.out {
        Some(p) => write_file(p, &json)?,
        None => write_stdout(&json)?,
    }
    if summary.pass {
        return Ok(());
    }
    let failed: Vec<String> = summary
        .suites
        .iter()
        .filter(|s| !s.pass)
        .map(|s| match s.witnesses.first() {
            Some(w) => format!("{} (sample {}, slack {:e})", s.name, w.node, w.slack),
            None => s.name.clone(),
        })
        .collect();
    Err(Failure { code: EXIT_PROPERTY, msg: format!("property failures: {}", failed.join("; ")) })
}

fn run(cli: Cli) -> Result<(), Failure> {
    let workers = RunConfig { workers: cli.workers, ..Default::default() };
    match cli.cmd {
        Command::Solve(a) => {
            let flags = RunConfig {
                domain: a.domain,
                grid: a.grid,
                out: a.out,
                report: a.report,
                obj: a.obj,
                tol: a.tol,
                seed: a.seed,
                timing: a.timing.then_some(true),
                ..query_flags(&a.query)
            };
            let solver_flags = SolverFlags {
                max_newton: a.max_newton,
                steps: a.steps,
                rhat_start: a.rhat_start,
                schedule: a.schedule,
                jacobian: a.jacobian,
                fd_step: a.fd_step,
            };
            let mut cfg = RunConfig::load(a.query.config.as_ref())?.overlay(workers).overlay(flags);
            solver_flags.apply(&mut cfg);
            setup_workers(&cfg)?;
            cmd_solve(cfg)
        }
        Command::Curvature(a) => {
            let flags = RunConfig { graph: a.graph, out: a.out, ..query_flags(&a.query) };
            let cfg = RunConfig::load(a.query.config.as_ref())?.overlay(workers).overlay(flags);
            setup_workers(&cfg)?;
            cmd_curvature(cfg)
        }
        Command::Props(a) => {
            let flags = RunConfig { samples: a.samples, seed: a.seed, tol: a.tol, out: a.out, ..Default::default() };
            let cfg = RunConfig::load(a.config.as_ref())?.overlay(workers).overlay(flags);
            setup_workers(&cfg)?;
            cmd_props(cfg)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).format_timestamp(None).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("slcurv: {}", f.msg);
            ExitCode::from(f.code)
        }
    }
}
