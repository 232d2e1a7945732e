//! Subcommand dispatch for the `drawdown` binary.
//!
//! Exit codes: 0 success, 1 I/O or configuration error, 2 validation failure,
//! 3 solver failure.

pub mod config;
pub mod report;
pub mod study;

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::adjustment::{
    compute_constants, rho_d_residual, rho_n_of_r_residual, rho_n_residual, solve_rho_d,
    solve_rho_n, solve_rho_n_of_r,
};
use crate::error::Error;
use crate::model::validate_market;
use crate::oracle::picard_solve;
use crate::retention::RetentionFn;
use crate::simulate::{mc_estimate, BarrierMode, Scheme, SimConfig};
use crate::valuefn::{bound_bundle, certify};
pub use config::{Config, RetentionSpec, StudySpec};
pub use report::run_report;
pub use study::run_convergence_study;

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "drawdown", version, about = "Minimum drawdown probability in the scaled Cramér–Lundberg model")]
pub struct Cli {
    /// JSON configuration document.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Write the result here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Overrides the seed of `simulate` and `converge`.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Drawdown,
    FixedRuin,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check admissibility of the market.
    Validate,
    /// ρ_D, ρ_n and ρ_n(R_D) with their residuals.
    SolveRho {
        #[arg(long, default_value_t = 1.0)]
        n: f64,
    },
    /// The explicit constants of the bounds.
    Constants,
    /// ψ_D and the bounds at one state.
    Bounds {
        #[arg(long)]
        n: f64,
        #[arg(long)]
        x: f64,
        #[arg(long)]
        m: f64,
    },
    /// Generator inequality certificates on the 20×20 grid.
    Certify {
        /// Defaults to N′.
        #[arg(long)]
        n: Option<f64>,
        #[arg(long, default_value_t = report::CERTIFICATE_TOL)]
        tol: f64,
    },
    /// Monte Carlo estimate under the configured retention.
    Simulate {
        #[arg(long, default_value_t = 1.0)]
        n: f64,
        #[arg(long, default_value_t = 100_000)]
        paths: u64,
        #[arg(long, value_enum, default_value_t = ModeArg::Drawdown)]
        mode: ModeArg,
        #[arg(long)]
        x0: f64,
        #[arg(long)]
        m0: f64,
        #[arg(long, default_value_t = config::DEFAULT_BARRIER_MULT)]
        barrier_mult: f64,
        /// Simulate the diffusion approximation with this Euler step.
        #[arg(long)]
        dt: Option<f64>,
        /// Overrides the configured retention (full, cap=d, proportional=q, ...).
        #[arg(long)]
        retention: Option<String>,
    },
    /// Picard oracle for the fixed-barrier probability; CSV x,psi.
    Oracle {
        #[arg(long)]
        m: f64,
        /// full, diffusion_optimal, max_adjust, cap=d or proportional=q.
        #[arg(long)]
        retention: Option<String>,
        #[arg(long, default_value_t = 1e-7)]
        tol: f64,
        /// Node spacing.
        #[arg(long, default_value_t = 0.02)]
        h: f64,
    },
    /// Convergence study; CSV.
    Converge {
        /// Overrides the paths of the study section.
        #[arg(long)]
        paths: Option<u64>,
    },
    /// Summary of every check as JSON.
    Report,
}

/// Failure of a subcommand with its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure {
            code: exit_code(&e),
            message: e.to_string(),
        }
    }
}

fn io_failure(message: String) -> Failure {
    Failure {
        code: EXIT_IO,
        message,
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::InvalidConfig(_) | Error::InvalidStudy(_) => EXIT_IO,
        Error::SolverNoBracket { .. }
        | Error::MaxIterations(_)
        | Error::ExponentBeyondRadius { .. }
        | Error::TailConditionFailed(_) => EXIT_SOLVER,
        Error::ThresholdBeyondSupport { .. }
        | Error::InvalidScale { .. }
        | Error::BranchMisuse { .. }
        | Error::NetProfitViolated { .. }
        | Error::StateOutsideDomain { .. }
        | Error::ScaleTooSmall { .. }
        | Error::DriftNonpositive { .. }
        | Error::InvalidMarket(_) => EXIT_VALIDATION,
    }
}

/// What a subcommand produced: text for the output and the exit code.
struct Output {
    text: String,
    code: i32,
}

fn json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serialisable");
    s.push('\n');
    s
}

fn ok(text: String) -> Output {
    Output { text, code: EXIT_OK }
}

fn checked(text: String, pass: bool) -> Output {
    Output {
        text,
        code: if pass { EXIT_OK } else { EXIT_VALIDATION },
    }
}

fn retention_of(cfg: &Config, arg: Option<&str>, n: f64) -> Result<RetentionFn, Failure> {
    let spec = match arg {
        Some(a) => RetentionSpec::parse(a)?,
        None => cfg.retention,
    };
    Ok(spec.resolve(&cfg.market, &cfg.severity, n)?)
}

#[derive(Serialize)]
struct RhoReport {
    n: f64,
    #[serde(rename = "rho_D")]
    rho_d: f64,
    rho_n: f64,
    #[serde(rename = "rho_n_of_RD")]
    rho_n_of_rd: f64,
    residuals: RhoResiduals,
}

#[derive(Serialize)]
struct RhoResiduals {
    #[serde(rename = "rho_D")]
    rho_d: f64,
    rho_n: f64,
    #[serde(rename = "rho_n_of_RD")]
    rho_n_of_rd: f64,
}

fn execute(cli: &Cli, cfg: &Config) -> Result<Output, Failure> {
    let p = &cfg.market;
    let s = &cfg.severity;
    Ok(match &cli.command {
        Command::Validate => {
            let v = validate_market(p, s);
            checked(json(&v), v.pass)
        }
        Command::SolveRho { n } => {
            let rho_d = solve_rho_d(p, s)?;
            let rho_n = solve_rho_n(*n, p, s)?;
            let rd = RetentionFn::diffusion_optimal(rho_d, p);
            let rho_n_of_rd = solve_rho_n_of_r(&rd, *n, p, s)?;
            ok(json(&RhoReport {
                n: *n,
                rho_d,
                rho_n,
                rho_n_of_rd,
                residuals: RhoResiduals {
                    rho_d: rho_d_residual(p, s, rho_d),
                    rho_n: rho_n_residual(*n, p, s, rho_n),
                    rho_n_of_rd: rho_n_of_r_residual(&rd, *n, p, s, rho_n_of_rd),
                },
            }))
        }
        Command::Constants => ok(json(&compute_constants(p, s, cfg.constants.epsilon_frac)?)),
        Command::Bounds { n, x, m } => {
            let cc = compute_constants(p, s, cfg.constants.epsilon_frac)?;
            ok(json(&bound_bundle(*x, *m, *n, p, s, &cc)?))
        }
        Command::Certify { n, tol } => {
            let cc = compute_constants(p, s, cfg.constants.epsilon_frac)?;
            let n = n.unwrap_or(cc.n_prime as f64);
            let certs = certify(n, p, s, &cc, *tol)?;
            let pass = certs.iter().all(|c| c.pass);
            checked(json(&certs), pass)
        }
        Command::Simulate {
            n,
            paths,
            mode,
            x0,
            m0,
            barrier_mult,
            dt,
            retention,
        } => {
            let sim = SimConfig {
                n: *n,
                retention: retention_of(cfg, retention.as_deref(), *n)?,
                x0: *x0,
                m0: *m0,
                barrier_mult: *barrier_mult,
                paths: *paths,
                seed: cli.seed.unwrap_or(cfg.study.seed),
                mode: match mode {
                    ModeArg::Drawdown => BarrierMode::Drawdown,
                    ModeArg::FixedRuin => BarrierMode::FixedRuin,
                },
                scheme: match dt {
                    Some(dt) => Scheme::DiffusionEuler { dt: *dt },
                    None => Scheme::JumpExact,
                },
            };
            ok(json(&mc_estimate(&sim, p, s)?))
        }
        Command::Oracle { m, retention, tol, h } => {
            let r = retention_of(cfg, retention.as_deref(), 1.0)?;
            let run = picard_solve(&r, p, s, *m, *tol, *h)?;
            let mut text = String::from("x,psi\n");
            for (x, v) in run.grid.x.iter().zip(&run.grid.values) {
                let _ = writeln!(text, "{x},{v}");
            }
            ok(text)
        }
        Command::Converge { paths } => {
            let mut cfg = cfg.clone();
            if let Some(seed) = cli.seed {
                cfg.study.seed = seed;
            }
            if let Some(paths) = paths {
                cfg.study.paths = *paths;
            }
            let rep = run_convergence_study(&cfg)?;
            if cli.out.is_none() {
                if let Some(dir) = &cfg.study.outputs {
                    rep.write_outputs(dir)
                        .map_err(|e| io_failure(format!("cannot write to {}: {e}", dir.display())))?;
                    return Ok(ok(json(&rep.slopes)));
                }
            }
            ok(rep.to_csv())
        }
        Command::Report => {
            let rep = run_report(cfg)?;
            checked(json(&rep), rep.pass)
        }
    })
}

/// Parses `args`, runs the subcommand and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_IO } else { EXIT_OK };
        }
    };
    match run_cli(&cli) {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}

pub fn run_cli(cli: &Cli) -> Result<i32, Failure> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| io_failure("--config <path> is required".into()))?;
    let cfg = Config::load(path)?;
    let out = execute(cli, &cfg)?;
    match &cli.out {
        Some(file) => std::fs::write(file, &out.text)
            .map_err(|e| io_failure(format!("cannot write {}: {e}", file.display())))?,
        None => print!("{}", out.text),
    }
    Ok(out.code)
}
