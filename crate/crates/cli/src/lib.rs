//! Command-line front end: reads a problem file, runs one analysis and
//! writes its report.
//!
//! Exit status is 0 on success, 2 when the analysis ran but its verdict is
//! inconclusive or infeasible, and 1 on errors.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use fracdelay::certificates::certify;
use fracdelay::format::round15;
use fracdelay::io::{dump_normalized, parse_problem};
use fracdelay::model::ValidatedProblem;
use fracdelay::solver::simulate;
use fracdelay::special::{verify_kernel_bounds, Kernels, MlEvalConfig};
use fracdelay::spectral::{spectral_certify, SpectralVerdict};
use fracdelay::Execution;
use nalgebra::DMatrix;
use serde::Serialize;
use serde_json::{json, Value};

/// Defaults for every overridable knob.
pub mod defaults {
    /// Simulation step Δt.
    pub const STEP: f64 = 1e-3;
    /// Simulation horizon in units of the largest delay.
    pub const HORIZON_DELAYS: f64 = 20.0;
    /// Simulation horizon when every delay is zero.
    pub const HORIZON_DELAY_FREE: f64 = 10.0;
    /// Certificate δ-grid: log-spaced `min,max,count`.
    pub const DELTA_GRID: (f64, f64, usize) = (1e-2, 1e2, 25);
    /// Kernel-bound check grid: linearly spaced `min,max,count`.
    pub const BOUNDS_GRID: (f64, f64, usize) = (0.1, 10.0, 50);
    /// Relative quadrature tolerance.
    pub const TOL: f64 = 1e-10;
}

#[derive(Debug, Parser)]
#[command(
    name = "fracdelay",
    version,
    about = "Kernels, simulation and stability certificates for fractional delay systems"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Mittag-Leffler matrix E_{α,β}(A t^α) and the fundamental matrices.
    Ml {
        #[command(flatten)]
        common: Common,
        /// Second Mittag-Leffler parameter.
        #[arg(long, default_value_t = 1.0)]
        beta: f64,
        /// Comma-separated evaluation times.
        #[arg(long, default_value = "1")]
        t_grid: String,
    },
    /// Trajectory CSV plus a summary.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = defaults::STEP)]
        step: f64,
        /// Defaults to 20 times the largest delay, or 10 without delays.
        #[arg(long)]
        horizon: Option<f64>,
    },
    /// Contraction certificates over a δ-grid.
    Certify {
        #[command(flatten)]
        common: Common,
        /// `min,max,count`, log-spaced.
        #[arg(long)]
        delta_grid: Option<String>,
        /// Comma-separated window starts for the windowed certificate.
        #[arg(long)]
        t_grid: Option<String>,
    },
    /// Delay-independent spectral test.
    Spectral {
        #[command(flatten)]
        common: Common,
    },
    /// Numerical check of the kernel norm bounds.
    VerifyBounds {
        #[command(flatten)]
        common: Common,
        /// Comma-separated check times; defaults to 50 points in [0.1, 10].
        #[arg(long)]
        t_grid: Option<String>,
    },
}

#[derive(Debug, Args)]
pub struct Common {
    /// Problem JSON file.
    #[arg(long)]
    pub problem: PathBuf,
    /// Directory for the output files; stdout only when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Relative quadrature tolerance.
    #[arg(long, default_value_t = defaults::TOL)]
    pub tol: f64,
    /// Print the validated problem in normalized form and stop.
    #[arg(long)]
    pub dump_normalized: bool,
    /// Run without the thread pool.
    #[arg(long)]
    pub sequential: bool,
}

impl Command {
    fn common(&self) -> &Common {
        match self {
            Command::Ml { common, .. }
            | Command::Simulate { common, .. }
            | Command::Certify { common, .. }
            | Command::Spectral { common }
            | Command::VerifyBounds { common, .. } => common,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    FileIo(String),
    Config(String),
    Library(fracdelay::Error),
}

impl From<fracdelay::Error> for CliError {
    fn from(e: fracdelay::Error) -> Self {
        match e {
            fracdelay::Error::ConfigParse(m) => CliError::Config(m),
            e => CliError::Library(e),
        }
    }
}

impl CliError {
    /// `{"error": {"kind", "message"}}` for the error stream.
    pub fn to_json(&self) -> String {
        let (kind, message) = match self {
            CliError::FileIo(m) => ("FileIO".to_string(), m.clone()),
            CliError::Config(m) => ("ConfigParse".to_string(), m.clone()),
            CliError::Library(e) => {
                let dbg = format!("{e:?}");
                let kind = dbg
                    .split(['(', ' ', '{'])
                    .next()
                    .unwrap_or("Error")
                    .to_string();
                (kind, e.to_string())
            }
        };
        json!({ "error": { "kind": kind, "message": message } }).to_string()
    }
}

/// Text produced by a run, written by the caller.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Output {
    pub stdout: String,
    /// (file name, contents) pairs for `--out`.
    pub files: Vec<(String, String)>,
    pub exit_code: i32,
}

fn read_problem(path: &Path) -> Result<ValidatedProblem, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::FileIo(format!("{}: {e}", path.display())))?;
    Ok(parse_problem(&text)?)
}

fn parse_list(s: &str, what: &str) -> Result<Vec<f64>, CliError> {
    s.split(',')
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .map_err(|_| CliError::Config(format!("{what}: cannot parse '{p}'")))
        })
        .collect()
}

/// Parses `min,max,count` into a log-spaced grid.
pub fn parse_delta_grid(s: &str) -> Result<Vec<f64>, CliError> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let bad = || CliError::Config(format!("delta-grid: expected min,max,count, got '{s}'"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let lo: f64 = parts[0].parse().map_err(|_| bad())?;
    let hi: f64 = parts[1].parse().map_err(|_| bad())?;
    let n: usize = parts[2].parse().map_err(|_| bad())?;
    if !(lo > 0.0 && hi >= lo && hi.is_finite()) || n == 0 {
        return Err(bad());
    }
    Ok(log_grid(lo, hi, n))
}

fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

fn lin_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect()
}

fn num(x: f64) -> Value {
    serde_json::Number::from_f64(round15(x)).map_or(Value::Null, Value::Number)
}

fn matrix(m: &DMatrix<f64>) -> Value {
    Value::Array(
        (0..m.nrows())
            .map(|i| Value::Array(m.row(i).iter().map(|&x| num(x)).collect()))
            .collect(),
    )
}

fn pretty<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("reports hold only JSON-safe values");
    s.push('\n');
    s
}

/// Runs one command and returns its outputs without touching the disk
/// beyond reading the problem file.
pub fn execute(command: &Command) -> Result<Output, CliError> {
    let common = command.common();
    if !(common.tol > 0.0) {
        return Err(CliError::Config("tol must be positive".into()));
    }
    let prob = read_problem(&common.problem)?;
    if common.dump_normalized {
        let mut text = dump_normalized(&prob);
        text.push('\n');
        return Ok(Output {
            stdout: text.clone(),
            files: vec![("problem.normalized.json".into(), text)],
            exit_code: 0,
        });
    }
    let cfg = MlEvalConfig {
        quad_tol: common.tol,
        exec: if common.sequential {
            Execution::Sequential
        } else {
            Execution::Parallel
        },
        ..MlEvalConfig::default()
    };
    match command {
        Command::Ml { beta, t_grid, .. } => {
            let ts = parse_list(t_grid, "t-grid")?;
            let kern = Kernels::for_system(&prob.sys, &cfg)?;
            let mut points = Vec::with_capacity(ts.len());
            for &t in &ts {
                if !(t >= 0.0) || !t.is_finite() {
                    return Err(CliError::Config(format!(
                        "t-grid: {t} is not a finite time >= 0"
                    )));
                }
                let phi_j = (0..kern.k())
                    .map(|j| kern.phi_j(j, t, &cfg).map(|m| matrix(&m)))
                    .collect::<Result<Vec<_>, _>>()?;
                let phi = match kern.phi(t, &cfg) {
                    Ok(m) => matrix(&m),
                    Err(fracdelay::Error::SingularAtZero) => Value::Null,
                    Err(e) => return Err(e.into()),
                };
                points.push(json!({
                    "t": num(t),
                    "E": matrix(&kern.ml(*beta, t, &cfg)?),
                    "Phi_j": phi_j,
                    "Phi": phi,
                }));
            }
            let report = json!({
                "alpha": num(prob.sys.alpha),
                "beta": num(*beta),
                "generator": matrix(kern.generator()),
                "points": points,
            });
            let text = pretty(&report);
            Ok(Output {
                stdout: text.clone(),
                files: vec![("ml.json".into(), text)],
                exit_code: 0,
            })
        }
        Command::Simulate { step, horizon, .. } => {
            let horizon = horizon.unwrap_or_else(|| {
                if prob.sys.is_delay_free() {
                    defaults::HORIZON_DELAY_FREE
                } else {
                    defaults::HORIZON_DELAYS * prob.sys.h()
                }
            });
            let traj = simulate(&prob, *step, horizon, &cfg)?;
            let final_state: Vec<Value> = traj.final_state().iter().map(|&x| num(x)).collect();
            let summary = json!({
                "step": num(traj.grid.step()),
                "horizon": num(traj.grid.horizon()),
                "nodes": traj.grid.node_count(),
                "sup_norm": num(traj.sup_norm()),
                "final_time": num(traj.grid.time(traj.grid.node_count() - 1)),
                "final_state": final_state,
            });
            let csv = traj.to_csv();
            let summary = pretty(&summary);
            if common.out.is_some() {
                Ok(Output {
                    stdout: summary.clone(),
                    files: vec![
                        ("trajectory.csv".into(), csv),
                        ("summary.json".into(), summary),
                    ],
                    exit_code: 0,
                })
            } else {
                Ok(Output {
                    stdout: csv,
                    files: Vec::new(),
                    exit_code: 0,
                })
            }
        }
        Command::Certify {
            delta_grid, t_grid, ..
        } => {
            let deltas = match delta_grid {
                Some(s) => parse_delta_grid(s)?,
                None => {
                    let (lo, hi, n) = defaults::DELTA_GRID;
                    log_grid(lo, hi, n)
                }
            };
            let ts = match t_grid {
                Some(s) => parse_list(s, "t-grid")?,
                None => Vec::new(),
            };
            let report = certify(&prob, None, &deltas, &ts, &cfg)?;
            let text = pretty(&report);
            Ok(Output {
                stdout: text.clone(),
                files: vec![("certificate.json".into(), text)],
                exit_code: if report.conclusive() { 0 } else { 2 },
            })
        }
        Command::Spectral { .. } => {
            let report = spectral_certify(&prob.sys, None)?;
            let text = pretty(&report);
            Ok(Output {
                stdout: text.clone(),
                files: vec![("spectral.json".into(), text)],
                exit_code: if report.verdict == SpectralVerdict::Inconclusive {
                    2
                } else {
                    0
                },
            })
        }
        Command::VerifyBounds { t_grid, .. } => {
            let ts = match t_grid {
                Some(s) => parse_list(s, "t-grid")?,
                None => {
                    let (lo, hi, n) = defaults::BOUNDS_GRID;
                    lin_grid(lo, hi, n)
                }
            };
            let report = verify_kernel_bounds(&prob.sys, &ts, &cfg)?;
            let text = pretty(&report);
            Ok(Output {
                stdout: text.clone(),
                files: vec![("bounds.json".into(), text)],
                exit_code: if report.passed { 0 } else { 2 },
            })
        }
    }
}

/// Executes the command and writes its files; returns the exit status.
pub fn run(cli: &Cli) -> i32 {
    let result = execute(&cli.command).and_then(|out| {
        if let Some(dir) = &cli.command.common().out {
            fs::create_dir_all(dir)
                .map_err(|e| CliError::FileIo(format!("{}: {e}", dir.display())))?;
            for (name, contents) in &out.files {
                let path = dir.join(name);
                fs::write(&path, contents)
                    .map_err(|e| CliError::FileIo(format!("{}: {e}", path.display())))?;
            }
        }
        Ok(out)
    });
    match result {
        Ok(out) => {
            print!("{}", out.stdout);
            out.exit_code
        }
        Err(e) => {
            eprintln!("{}", e.to_json());
            1
        }
    }
}
