//! Command-line front end. Exit codes: 0 success, 1 a numerical or
//! domain-level failure, 2 bad usage or unreadable input.

pub mod config;
pub mod svg;

use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::DVector;

use crate::continuation::continue_path;
use crate::domain::DomainModel;
use crate::dynamics::{integrate_to, invariants_along, validate_orbit, Tolerances, Trajectory};
use crate::equilibria::{
    make_pair, make_thomson, make_triangle, monodromy, normalize_period, residual_hs0, triangle_conditions, RelativeEquilibrium,
};
use crate::error::{Error, Result};
use crate::hamiltonian::Field;
use crate::io::write_atomic;
use crate::loops::LoopFrame;
use crate::orbit::OrbitFile;
use crate::reduction::SolverMode;
use crate::robin::find_critical_point_h;
use crate::system::{min_separation, Vec2};
use config::RunConfig;

/// Equilibria whose gradient residual exceeds this are reported as failures.
const RESIDUAL_LIMIT: f64 = 1e-10;
/// Fraction of the r-grid that must converge for `continue` to succeed.
const CONVERGED_FRACTION: f64 = 0.8;
const ROBIN_TOL: f64 = 1e-12;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "vortex-orbits", version, about = "Relative equilibria and small periodic orbits of point vortices")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build a relative equilibrium of the plane problem and optionally check it
    Equilibrium(EquilibriumArgs),
    /// Continue an equilibrium into a family of periodic orbits in a domain
    Continue(ContinueArgs),
    /// Integrate a stored orbit over one period and report its closure error
    Validate(ValidateArgs),
    /// Integrate the vortex system from a given configuration
    Simulate(SimulateArgs),
    /// Locate a critical point of the Robin function
    Robin(RobinArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum EquilibriumType {
    Pair,
    Triangle,
    Thomson,
}

#[derive(Debug, Args)]
struct EquilibriumArgs {
    #[arg(long = "type", value_enum)]
    kind: EquilibriumType,
    /// Comma-separated vorticities (one value for a Thomson polygon)
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
    gamma: Vec<f64>,
    /// Number of vortices of a Thomson polygon
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, default_value_t = 1.0)]
    sep: f64,
    #[arg(long, default_value_t = 1.0)]
    side: f64,
    #[arg(long, default_value_t = 1.0)]
    radius: f64,
    /// Compute Floquet multipliers and the nondegeneracy verdict
    #[arg(long)]
    check: bool,
}

#[derive(Debug, Args)]
struct ContinueArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    r_max: Option<f64>,
    #[arg(long)]
    r_min: Option<f64>,
    #[arg(long)]
    r_steps: Option<usize>,
    #[arg(long)]
    modes: Option<usize>,
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Print the resolved configuration and exit
    #[arg(long)]
    dump_config: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    Fixedpoint,
    Newton,
}

#[derive(Debug, Args)]
struct ValidateArgs {
    #[arg(long)]
    orbit: PathBuf,
    #[arg(long, default_value_t = 1e-10)]
    rtol: f64,
    /// Largest acceptable closure error
    #[arg(long, default_value_t = 1e-6)]
    threshold: f64,
    /// Samples per period
    #[arg(long, default_value_t = 64)]
    samples: usize,
    #[arg(long)]
    svg: Option<PathBuf>,
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[arg(long)]
    config: PathBuf,
    /// Initial positions x1,y1,x2,y2,...; defaults to the configured seed
    /// equilibrium
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    z0: Option<Vec<f64>>,
    #[arg(long, allow_hyphen_values = true)]
    time: f64,
    /// Integrate the plane problem instead of the one in the configured domain
    #[arg(long)]
    plane: bool,
    #[arg(long, default_value_t = 1e-10)]
    rtol: f64,
    #[arg(long, default_value_t = 1e-12)]
    atol: f64,
    /// Output points, evenly spaced in time
    #[arg(long, default_value_t = 200)]
    samples: usize,
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long)]
    svg: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum RobinDomain {
    Disk,
    Halfplane,
}

#[derive(Debug, Args)]
struct RobinArgs {
    #[arg(long, value_enum)]
    domain: RobinDomain,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_value = "0,0")]
    guess: Vec<f64>,
}

/// Failure of a command, carrying its exit code.
#[derive(Debug)]
struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self { code: EXIT_USAGE, message: message.into() }
    }

    fn domain(message: impl Into<String>) -> Self {
        Self { code: EXIT_FAILURE, message: message.into() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::InvalidParameter(_)
            | Error::DimensionMismatch { .. }
            | Error::ZeroTotalVorticity
            | Error::VorticityMismatch
            | Error::Io(_)
            | Error::Parse(_) => EXIT_USAGE,
            _ => EXIT_FAILURE,
        };
        Self { code, message: e.to_string() }
    }
}

type CmdResult = std::result::Result<i32, Failure>;

pub fn main_entry() -> i32 {
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run(std::env::args_os(), &mut stdout.lock(), &mut stderr.lock())
}

/// Parses `args` (program name first) and runs the command, writing the
/// report to `out` and diagnostics to `err`.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(err, "{}", e.render());
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let mut report = String::new();
    let result = match cli.command {
        Command::Equilibrium(a) => cmd_equilibrium(&a, &mut report),
        Command::Continue(a) => cmd_continue(&a, &mut report),
        Command::Validate(a) => cmd_validate(&a, &mut report),
        Command::Simulate(a) => cmd_simulate(&a, &mut report),
        Command::Robin(a) => cmd_robin(&a, &mut report),
    };
    let _ = out.write_all(report.as_bytes());
    match result {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}

fn fmt_vec(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:.12e}")).collect::<Vec<_>>().join(", ")
}

fn build_equilibrium(a: &EquilibriumArgs) -> Result<RelativeEquilibrium> {
    let g = &a.gamma;
    let count = |want: usize| {
        if g.len() == want {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("--gamma needs {want} values, found {}", g.len())))
        }
    };
    match a.kind {
        EquilibriumType::Pair => {
            count(2)?;
            make_pair(g[0], g[1], a.sep)
        }
        EquilibriumType::Triangle => {
            count(3)?;
            make_triangle(g[0], g[1], g[2], a.side)
        }
        EquilibriumType::Thomson => {
            count(1)?;
            let n = a.n.ok_or_else(|| Error::InvalidParameter("a Thomson polygon needs --n".into()))?;
            make_thomson(n, g[0], a.radius)
        }
    }
}

fn cmd_equilibrium(a: &EquilibriumArgs, out: &mut String) -> CmdResult {
    let eq = build_equilibrium(a)?;
    let residual = residual_hs0(&eq)?;
    let _ = writeln!(out, "gammas: {}", fmt_vec(eq.sys.gammas()));
    for k in 0..eq.sys.n() {
        let _ = writeln!(out, "z{}: ({:.15e}, {:.15e})", k + 1, eq.z[2 * k], eq.z[2 * k + 1]);
    }
    let _ = writeln!(out, "omega: {:.15e}", eq.omega);
    let _ = writeln!(out, "period: {:.15e}", eq.period());
    let _ = writeln!(out, "residual: {residual:.3e}");
    let mut code = EXIT_OK;
    if !(residual <= RESIDUAL_LIMIT) {
        let _ = writeln!(out, "residual above {RESIDUAL_LIMIT:.0e}");
        code = EXIT_FAILURE;
    }
    if !a.check {
        return Ok(code);
    }
    // the verdict is scale invariant; Floquet analysis runs at |ω| = 1
    let report = monodromy(&normalize_period(&eq))?;
    let _ = writeln!(out, "multipliers:");
    for m in &report.multipliers {
        let _ = writeln!(out, "  {:+.12e} {:+.12e}i  |{:.12e}|", m.re, m.im, m.norm());
    }
    let _ = writeln!(out, "kernel_dim: {}", report.kernel_dim);
    let _ = writeln!(out, "kernel_dim_svd: {}", report.kernel_dim_svd);
    let _ = writeln!(out, "unit_multiplier_count: {}", report.unit_multiplier_count);
    let _ = writeln!(out, "richardson_delta: {:.3e}", report.richardson_delta);
    if let EquilibriumType::Triangle = a.kind {
        let c = triangle_conditions(a.gamma[0], a.gamma[1], a.gamma[2]);
        let _ = writeln!(
            out,
            "triangle: total = {:.6}, L = {:.6}, sum of squares = {:.6}, predicted {}",
            c.total,
            c.angular_momentum,
            c.sum_squares,
            if c.predicted_nondegenerate { "nondegenerate" } else { "degenerate" }
        );
        if c.predicted_nondegenerate != report.nondegenerate {
            let _ = writeln!(out, "note: the vorticity conditions and the Floquet count disagree");
        }
    }
    let verdict = if report.nondegenerate { "nondegenerate" } else { "degenerate" };
    let _ = writeln!(out, "verdict: {verdict}");
    if !report.nondegenerate {
        code = EXIT_FAILURE;
    }
    Ok(code)
}

fn resolve_config(a: &ContinueArgs) -> Result<RunConfig> {
    let mut cfg = RunConfig::load(&a.config)?;
    if let Some(v) = a.r_max {
        cfg.solver.r_max = v;
    }
    if let Some(v) = a.r_min {
        cfg.solver.r_min = v;
    }
    if let Some(v) = a.r_steps {
        cfg.solver.r_steps = v;
    }
    if let Some(v) = a.modes {
        cfg.solver.modes = v;
    }
    if let Some(m) = a.mode {
        cfg.solver.mode = match m {
            ModeArg::Fixedpoint => SolverMode::FixedPoint,
            ModeArg::Newton => SolverMode::Newton,
        };
    }
    if let Some(dir) = &a.out {
        cfg.output.dir = dir.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

/// The anchor of the blow-up: any point works in the plane, otherwise a
/// nondegenerate critical point of the Robin function near the guess.
fn anchor(cfg: &RunConfig, domain: &DomainModel) -> std::result::Result<Vec2, Failure> {
    if domain.is_plane() {
        return Ok(cfg.guess());
    }
    let cp = find_critical_point_h(domain, cfg.guess(), ROBIN_TOL)?;
    if !cp.nondegenerate {
        return Err(Failure::domain(format!(
            "critical point ({:.6e}, {:.6e}) of the Robin function is degenerate",
            cp.a0.x, cp.a0.y
        )));
    }
    Ok(cp.a0)
}

fn cmd_continue(a: &ContinueArgs, out: &mut String) -> CmdResult {
    let cfg = resolve_config(a)?;
    if a.dump_config {
        out.push_str(&cfg.to_toml()?);
        return Ok(EXIT_OK);
    }
    let sys = cfg.system()?;
    if sys.gamma_total() == 0.0 {
        return Err(Failure::usage(
            "total vorticity is zero; periodic orbits near a critical point of the Robin function \
             are only constructed for a nonzero total vorticity",
        ));
    }
    let domain = cfg.domain_model()?;
    let a0 = anchor(&cfg, &domain)?;
    let seed = cfg.seed()?;
    let frame = LoopFrame::from_equilibrium(&seed, cfg.solver.modes)?;
    let path = continue_path(&sys, &domain, a0, &frame, &cfg.solver)?;

    let dir = &cfg.output.dir;
    std::fs::create_dir_all(dir).map_err(|e| Failure::usage(format!("{}: {e}", dir.display())))?;
    let mut table = String::from("r,vnorm,residual_grad,phase_defect,iterations,status\n");
    let mut solved = path.solutions.iter().peekable();
    let mut failed = path.failures.iter().peekable();
    for (i, &r) in path.grid.iter().enumerate() {
        if let Some(s) = solved.next_if(|s| s.r == r) {
            let file = OrbitFile::new(&sys, &domain, a0, seed.omega, s);
            file.save(&dir.join(format!("orbit_{i:03}.json")))?;
            let _ = writeln!(
                table,
                "{:.16e},{:.16e},{:.16e},{:.16e},{},converged",
                r, s.vnorm, s.residual_grad, s.phase_defect, s.iterations
            );
        } else if let Some(f) = failed.next_if(|f| f.r == r) {
            let reason = f.error.to_string().replace(',', ";");
            let _ = writeln!(table, "{r:.16e},,,,,failed: {reason}");
        }
    }
    write_atomic(&dir.join("summary.csv"), table.as_bytes())?;

    let total = path.grid.len();
    let converged = path.solutions.len();
    let _ = writeln!(out, "a0: ({:.15e}, {:.15e})", a0.x, a0.y);
    let _ = writeln!(out, "domain: {}", domain.name());
    out.push_str(&table);
    for f in &path.failures {
        let _ = writeln!(out, "r = {:.6e}: {}", f.r, f.error);
    }
    let _ = writeln!(out, "converged: {converged}/{total}");
    let _ = writeln!(out, "r0: {:.6e}", path.r0);
    if !path.probed.is_empty() {
        let _ = writeln!(out, "probed above r_max up to {:.6e}", path.probed[path.probed.len() - 1]);
    }
    let _ = writeln!(out, "output: {}", dir.display());
    if path.converged_fraction() >= CONVERGED_FRACTION {
        Ok(EXIT_OK)
    } else {
        let _ = writeln!(out, "fewer than {:.0}% of the grid converged", 100.0 * CONVERGED_FRACTION);
        Ok(EXIT_FAILURE)
    }
}

fn write_outputs(
    csv: Option<&Path>,
    svg_path: Option<&Path>,
    traj: &Trajectory,
    domain: &DomainModel,
) -> Result<()> {
    if let Some(p) = csv {
        write_atomic(p, traj.to_csv().as_bytes())?;
    }
    if let Some(p) = svg_path {
        write_atomic(p, svg::render(&traj.states, domain).as_bytes())?;
    }
    Ok(())
}

fn cmd_validate(a: &ValidateArgs, out: &mut String) -> CmdResult {
    if !(a.rtol > 0.0) || a.samples < 2 {
        return Err(Failure::usage("--rtol must be positive and --samples at least 2"));
    }
    let file = OrbitFile::load(&a.orbit).map_err(|e| match e {
        Error::Io(m) | Error::Parse(m) => Failure::usage(format!("{}: {m}", a.orbit.display())),
        other => Failure::from(other),
    })?;
    let orbit = file.physical(a.samples)?;
    let report = validate_orbit(&orbit, a.rtol)?;
    let traj = &report.trajectory;
    write_outputs(a.csv.as_deref(), a.svg.as_deref(), traj, &orbit.domain)?;
    let _ = writeln!(out, "r: {:.6e}", orbit.r);
    let _ = writeln!(out, "period: {:.15e}", orbit.period);
    let _ = writeln!(out, "closure_error: {:.3e}", report.closure_error);
    let _ = writeln!(out, "max_pointwise_defect: {:.3e}", report.max_pointwise_defect);
    let _ = writeln!(out, "min_separation: {:.6e}", orbit.min_separation().min(traj.min_separation));
    if report.closure_error <= a.threshold {
        let _ = writeln!(out, "closed: yes");
        Ok(EXIT_OK)
    } else {
        let _ = writeln!(out, "closed: no (threshold {:.1e})", a.threshold);
        Ok(EXIT_FAILURE)
    }
}

fn cmd_simulate(a: &SimulateArgs, out: &mut String) -> CmdResult {
    if !a.time.is_finite() || a.samples < 2 || !(a.rtol > 0.0) || !(a.atol > 0.0) {
        return Err(Failure::usage("--time must be finite, tolerances positive and --samples at least 2"));
    }
    let cfg = RunConfig::load(&a.config)?;
    cfg.validate()?;
    let sys = cfg.system()?;
    let domain = if a.plane { DomainModel::Plane } else { cfg.domain_model()? };
    let z0 = match &a.z0 {
        Some(v) => {
            if v.len() != sys.dim() {
                return Err(Error::DimensionMismatch { expected: sys.dim(), found: v.len() }.into());
            }
            DVector::from_vec(v.clone())
        }
        None => cfg.seed()?.z,
    };
    let field = if domain.is_plane() { Field::Plane } else { Field::Physical };
    let times: Vec<f64> = (0..a.samples).map(|i| a.time * i as f64 / (a.samples - 1) as f64).collect();
    let tol = Tolerances::new(a.rtol, a.atol);
    let states = integrate_to(&sys, &domain, field, &z0, &times[1..], tol)?;
    let mut all = Vec::with_capacity(a.samples);
    all.push(z0.clone());
    all.extend(states);
    let traj = Trajectory {
        field,
        min_separation: all.iter().map(min_separation).fold(f64::INFINITY, f64::min),
        times,
        states: all,
        rejected_steps: 0,
    };
    write_outputs(a.csv.as_deref(), a.svg.as_deref(), &traj, &domain)?;
    let inv = invariants_along(&sys, &domain, &traj)?;
    let _ = writeln!(out, "domain: {}", domain.name());
    let _ = writeln!(out, "time: {:.15e}", a.time);
    let _ = writeln!(out, "final: {}", fmt_vec(traj.last().as_slice()));
    let _ = writeln!(out, "closure: {:.3e}", (traj.last() - &z0).amax());
    let _ = writeln!(out, "min_separation: {:.6e}", traj.min_separation);
    let _ = writeln!(out, "energy_drift: {:.3e}", inv.energy_drift);
    if let Some(d) = inv.center_of_vorticity_drift {
        let _ = writeln!(out, "center_of_vorticity_drift: {d:.3e}");
    }
    if let Some(d) = inv.angular_impulse_drift {
        let _ = writeln!(out, "angular_impulse_drift: {d:.3e}");
    }
    Ok(EXIT_OK)
}

fn cmd_robin(a: &RobinArgs, out: &mut String) -> CmdResult {
    let [x, y] = a.guess[..] else {
        return Err(Failure::usage(format!("--guess needs 2 values, found {}", a.guess.len())));
    };
    let domain = match a.domain {
        RobinDomain::Disk => DomainModel::UnitDisk,
        RobinDomain::Halfplane => DomainModel::HalfPlane,
    };
    let guess = Vec2::new(x, y);
    domain.check(&guess).map_err(|e| Failure::usage(format!("--guess: {e}")))?;
    let cp = match find_critical_point_h(&domain, guess, ROBIN_TOL) {
        Ok(cp) => cp,
        Err(e @ (Error::NoConvergence { .. } | Error::LeftDomain { .. })) => {
            let _ = writeln!(out, "no critical point found: {e}");
            return Ok(EXIT_FAILURE);
        }
        Err(e) => return Err(e.into()),
    };
    let h = &cp.hessian;
    let _ = writeln!(out, "a0: ({:.15e}, {:.15e})", cp.a0.x, cp.a0.y);
    let _ = writeln!(out, "h(a0): {:.15e}", cp.value);
    let _ = writeln!(out, "hessian: [[{:.12e}, {:.12e}], [{:.12e}, {:.12e}]]", h[(0, 0)], h[(0, 1)], h[(1, 0)], h[(1, 1)]);
    let _ = writeln!(out, "eigenvalues: {}", fmt_vec(&cp.eigenvalues));
    let _ = writeln!(out, "iterations: {}", cp.iterations);
    let kind = match (cp.eigenvalues[0] > 0.0, cp.eigenvalues[1] > 0.0) {
        _ if !cp.nondegenerate => "degenerate",
        (true, true) => "nondegenerate minimum",
        (false, false) => "nondegenerate maximum",
        _ => "nondegenerate saddle",
    };
    let _ = writeln!(out, "verdict: {kind}");
    Ok(if cp.nondegenerate { EXIT_OK } else { EXIT_FAILURE })
}
