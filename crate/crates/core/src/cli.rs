//! Command implementations behind the `admm` binary.
//!
//! Every command returns an exit code instead of exiting, so the binary stays
//! a thin argument parser and the commands can be driven from tests.
//!
//! | code | meaning |
//! |------|---------|
//! | 0 | success |
//! | 1 | validation failure, failed or unconverged solve, infeasible or unbounded problem |
//! | 2 | unreadable or malformed input, bad configuration |
//! | 3 | problem too large for the brute-force oracle |

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::certificates::CertificateRecord;
use crate::engine::{solve, CertificateMode, EngineError, SolveReport, SolveStatus, SolverConfig};
use crate::generate::{random_consensus, random_qp, random_qp_sampled, RandomQpParams};
use crate::numerics::Vector;
use crate::oracle::{solve_split_bruteforce, OracleError, ReferenceSolution};
use crate::problem::{validate, ProblemJsonError, SplitProblem};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_CAPACITY: i32 = 3;

/// Trace CSV header, in column order.
pub const TRACE_COLUMNS: [&str; 10] = [
    "k",
    "r_norm",
    "p_k",
    "dual_residual",
    "V_k",
    "ineq1_slack",
    "ineq2_slack",
    "lyap_slack",
    "inner_product",
    "dual_gap",
];

pub const TRACE_FILE: &str = "trace.csv";
pub const REPORT_FILE: &str = "report.json";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}: {source}")]
    Problem { path: PathBuf, source: ProblemJsonError },
    #[error("{0}")]
    Config(String),
    #[error("oracle: {0}")]
    Oracle(OracleError),
    #[error(transparent)]
    Engine(EngineError),
    #[error("trace: {0}")]
    Csv(#[from] csv::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io { .. } | CliError::Problem { .. } | CliError::Config(_) | CliError::Csv(_) => EXIT_INPUT,
            CliError::Oracle(OracleError::Capacity { .. }) => EXIT_CAPACITY,
            CliError::Engine(EngineError::Certificate(OracleError::Capacity { .. })) => EXIT_CAPACITY,
            CliError::Engine(EngineError::Config(_)) => EXIT_INPUT,
            CliError::Oracle(_) | CliError::Engine(_) => EXIT_FAILURE,
        }
    }
}

impl From<OracleError> for CliError {
    fn from(err: OracleError) -> Self {
        CliError::Oracle(err)
    }
}

impl From<EngineError> for CliError {
    fn from(err: EngineError) -> Self {
        CliError::Engine(err)
    }
}

fn io_error(path: &Path) -> impl FnOnce(io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.to_path_buf(), source }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ReferenceMode {
    #[default]
    None,
    Oracle,
}

impl FromStr for ReferenceMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "none" => Ok(Self::None),
            "oracle" => Ok(Self::Oracle),
            other => Err(format!("unknown reference mode '{other}'")),
        }
    }
}

/// Everything one `solve` invocation needs. `output_path` is a directory that
/// receives the trace and the report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub problem_path: PathBuf,
    pub config: SolverConfig,
    pub output_path: PathBuf,
    pub reference_mode: ReferenceMode,
    pub seed: u64,
}

pub fn read_problem(path: &Path) -> Result<SplitProblem, CliError> {
    let text = fs::read_to_string(path).map_err(io_error(path))?;
    SplitProblem::from_json_str(&text).map_err(|source| CliError::Problem { path: path.to_path_buf(), source })
}

/// Writes `contents` next to `path` under a temporary name, then renames it
/// into place so readers never see a partial file.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let name = path.file_name().ok_or_else(|| CliError::Config(format!("{} is not a file path", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    let result = fs::File::create(&tmp)
        .and_then(|mut file| {
            file.write_all(contents)?;
            file.sync_all()
        })
        .and_then(|_| fs::rename(&tmp, path));
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result.map_err(io_error(path))
}

/// Prints one line per assumption. Exit 0 iff no decidable check failed.
pub fn cmd_validate(path: &Path, out: &mut dyn Write) -> Result<i32, CliError> {
    let prob = read_problem(path)?;
    let report = validate(&prob);
    for line in report.summary_lines() {
        writeln!(out, "{line}").map_err(io_error(path))?;
    }
    Ok(if report.all_decidable_pass() { EXIT_OK } else { EXIT_FAILURE })
}

fn float_cell(x: f64) -> String {
    format!("{x:.16e}")
}

fn opt_cell(x: Option<f64>) -> String {
    x.map(float_cell).unwrap_or_default()
}

/// Trace as CSV text with the [`TRACE_COLUMNS`] header.
pub fn trace_csv(trace: &[CertificateRecord]) -> Result<Vec<u8>, CliError> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer.write_record(TRACE_COLUMNS)?;
    for rec in trace {
        writer.write_record([
            rec.k.to_string(),
            float_cell(rec.r_norm),
            float_cell(rec.p_k),
            float_cell(rec.dual_residual),
            opt_cell(rec.v_k),
            opt_cell(rec.ineq1_slack),
            opt_cell(rec.ineq2_slack),
            opt_cell(rec.lyapunov_descent_slack),
            float_cell(rec.inner_product),
            opt_cell(rec.dual_gap),
        ])?;
    }
    writer.into_inner().map_err(|e| CliError::Csv(e.into_error().into()))
}

fn to_vec(v: &Vector) -> Vec<f64> {
    v.iter().cloned().collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceJson {
    pub x_star: Vec<f64>,
    pub y_star: Vec<f64>,
    pub lambda_star: Vec<f64>,
    pub p_star: f64,
    pub mu_x: Vec<f64>,
    pub mu_y: Vec<f64>,
    pub unique: bool,
}

impl From<&ReferenceSolution> for ReferenceJson {
    fn from(r: &ReferenceSolution) -> Self {
        Self {
            x_star: to_vec(&r.x_star),
            y_star: to_vec(&r.y_star),
            lambda_star: to_vec(&r.lambda_star),
            p_star: r.p_star,
            mu_x: to_vec(&r.mu_x),
            mu_y: to_vec(&r.mu_y),
            unique: r.unique,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FinalIterate {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub lambda: Vec<f64>,
    pub r_norm: f64,
    pub p: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub reference: ReferenceJson,
    pub p_error: f64,
    pub x_error: f64,
    pub y_error: f64,
    pub lambda_error: f64,
}

/// Extremes of the certificate columns over the whole trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateSummary {
    pub max_inner_product: Option<f64>,
    pub min_ineq1_slack: Option<f64>,
    pub min_ineq2_slack: Option<f64>,
    pub min_lyap_slack: Option<f64>,
    pub initial_lyapunov: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReportJson {
    pub status: SolveStatus,
    pub iterations: usize,
    pub config: SolverConfig,
    pub seed: u64,
    #[serde(rename = "final")]
    pub final_iterate: FinalIterate,
    pub failure: Option<String>,
    pub certificates: CertificateSummary,
    pub comparison: Option<Comparison>,
}

fn fold_opt(values: impl Iterator<Item = f64>, pick: fn(f64, f64) -> f64) -> Option<f64> {
    values.reduce(pick)
}

fn summarize(report: &SolveReport) -> CertificateSummary {
    let trace = &report.trace;
    CertificateSummary {
        max_inner_product: fold_opt(trace.iter().filter(|r| r.prev_consistent).map(|r| r.inner_product), f64::max),
        min_ineq1_slack: fold_opt(trace.iter().filter_map(|r| r.ineq1_slack), f64::min),
        min_ineq2_slack: fold_opt(trace.iter().filter_map(|r| r.ineq2_slack), f64::min),
        min_lyap_slack: fold_opt(trace.iter().filter_map(|r| r.lyapunov_descent_slack), f64::min),
        initial_lyapunov: report.initial_lyapunov,
    }
}

pub fn report_json(manifest: &RunManifest, report: &SolveReport, reference: Option<&ReferenceSolution>) -> SolveReportJson {
    let s = &report.final_state;
    SolveReportJson {
        status: report.status,
        iterations: report.iterations,
        config: manifest.config,
        seed: manifest.seed,
        final_iterate: FinalIterate {
            x: to_vec(&s.x),
            y: to_vec(&s.y),
            lambda: to_vec(&s.lambda),
            r_norm: s.r.norm(),
            p: s.p,
        },
        failure: report.failure.as_ref().map(|(k, err)| format!("iteration {k}: {err}")),
        certificates: summarize(report),
        comparison: reference.map(|r| Comparison {
            reference: r.into(),
            p_error: (s.p - r.p_star).abs(),
            x_error: (&s.x - &r.x_star).amax(),
            y_error: (&s.y - &r.y_star).amax(),
            lambda_error: (&s.lambda - &r.lambda_star).amax(),
        }),
    }
}

/// Runs one solve and writes `trace.csv` and `report.json` into the output
/// directory. Exit 0 on convergence, 1 on a failed subproblem or when the
/// iteration budget runs out, 3 when the oracle reference is out of reach.
pub fn cmd_solve(manifest: &RunManifest, out: &mut dyn Write) -> Result<i32, CliError> {
    let prob = read_problem(&manifest.problem_path)?;
    let cfg = manifest.config;
    if cfg.certificate_mode == CertificateMode::Full && manifest.reference_mode == ReferenceMode::None {
        return Err(CliError::Config("full certificates need --reference oracle".into()));
    }
    let reference = match manifest.reference_mode {
        ReferenceMode::None => None,
        ReferenceMode::Oracle => Some(solve_split_bruteforce(&prob)?),
    };
    let report = solve(&prob, &cfg, None, reference.as_ref())?;

    fs::create_dir_all(&manifest.output_path).map_err(io_error(&manifest.output_path))?;
    write_atomic(&manifest.output_path.join(TRACE_FILE), &trace_csv(&report.trace)?)?;
    let json = report_json(manifest, &report, reference.as_ref());
    let text = serde_json::to_string_pretty(&json).expect("report data is always serializable");
    write_atomic(&manifest.output_path.join(REPORT_FILE), text.as_bytes())?;

    let path = &manifest.output_path;
    writeln!(out, "status: {} after {} iterations", report.status, report.iterations).map_err(io_error(path))?;
    writeln!(out, "p: {:.12e}", report.final_state.p).map_err(io_error(path))?;
    if let Some(cmp) = &json.comparison {
        writeln!(out, "|p - p*|: {:.3e}", cmp.p_error).map_err(io_error(path))?;
    }
    if let Some(failure) = &json.failure {
        writeln!(out, "failure: {failure}").map_err(io_error(path))?;
    }
    Ok(match report.status {
        SolveStatus::Converged => EXIT_OK,
        SolveStatus::MaxIters | SolveStatus::SubproblemError => EXIT_FAILURE,
    })
}

/// Prints the brute-force reference solution as JSON.
pub fn cmd_oracle(path: &Path, out: &mut dyn Write) -> Result<i32, CliError> {
    let prob = read_problem(path)?;
    let reference = solve_split_bruteforce(&prob)?;
    let text = serde_json::to_string_pretty(&ReferenceJson::from(&reference)).expect("plain data");
    writeln!(out, "{text}").map_err(io_error(path))?;
    Ok(EXIT_OK)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GenKind {
    /// Sizes sampled from the seed when `None`.
    RandomQp(Option<RandomQpParams>),
    Consensus { agents: usize, dim: usize, boxed: bool },
}

pub fn generate_problem(kind: GenKind, seed: u64) -> SplitProblem {
    match kind {
        GenKind::RandomQp(Some(params)) => random_qp(seed, &params),
        GenKind::RandomQp(None) => random_qp_sampled(seed).1,
        GenKind::Consensus { agents, dim, boxed } => random_consensus(seed, agents, dim, boxed),
    }
}

/// Writes a generated problem. The same kind and seed always give the same bytes.
pub fn cmd_gen(kind: GenKind, seed: u64, path: &Path) -> Result<i32, CliError> {
    if let GenKind::RandomQp(Some(p)) = kind {
        if p.n1 == 0 || p.n2 == 0 || p.m < p.n1.max(p.n2) {
            return Err(CliError::Config("random-qp needs 1 ≤ n1, n2 ≤ m".into()));
        }
    }
    if let GenKind::Consensus { agents, dim, .. } = kind {
        if agents == 0 || dim == 0 {
            return Err(CliError::Config("consensus needs at least one agent and dimension one".into()));
        }
    }
    let mut text = generate_problem(kind, seed).to_json_string();
    text.push('\n');
    write_atomic(path, text.as_bytes())?;
    Ok(EXIT_OK)
}
