//! The ADMM iteration: x-update, y-update, multiplier ascent.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::certificates::{self, CertificateRecord};
use crate::numerics::{solve_linear, DenseMatrix, Vector};
use crate::oracle::{OracleError, ReferenceSolution};
use crate::problem::{ProblemError, SplitProblem};
use crate::subsolver::{
    assemble_x_subproblem, assemble_y_subproblem, solve_qp, solve_qp_from, QpSubproblem, SubsolverError,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum CertificateMode {
    Off,
    /// Reference-free certificates only.
    #[default]
    Cheap,
    /// Everything; needs a reference solution.
    Full,
}

impl FromStr for CertificateMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "off" => Ok(Self::Off),
            "cheap" => Ok(Self::Cheap),
            "full" => Ok(Self::Full),
            other => Err(format!("unknown certificate mode '{other}'")),
        }
    }
}

/// How `(y^0, λ^0)` is chosen when no explicit start is given.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum StartRule {
    /// `y^0` is the point of `Y` nearest the origin and `λ^0` is chosen so
    /// that `y^0` minimizes `g(y) + (λ^0)ᵀBy` over `Y`, as every later
    /// iterate does.
    #[default]
    Consistent,
    /// `y^0 = 0`, `λ^0 = 0`.
    Zero,
}

impl FromStr for StartRule {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "consistent" => Ok(Self::Consistent),
            "zero" => Ok(Self::Zero),
            other => Err(format!("unknown start rule '{other}'")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub rho: f64,
    pub max_iters: usize,
    /// Threshold on `‖r^k‖`.
    pub eps_primal: f64,
    /// Threshold on `ρ‖B(y^k - y^{k-1})‖`.
    pub eps_dual: f64,
    pub certificate_mode: CertificateMode,
    #[serde(default)]
    pub start: StartRule,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            rho: 1.0,
            max_iters: 10_000,
            eps_primal: 1e-8,
            eps_dual: 1e-8,
            certificate_mode: CertificateMode::Cheap,
            start: StartRule::Consistent,
        }
    }
}

impl SolverConfig {
    pub fn with_rho(mut self, rho: f64) -> Self {
        self.rho = rho;
        self
    }

    pub fn with_mode(mut self, mode: CertificateMode) -> Self {
        self.certificate_mode = mode;
        self
    }

    pub fn with_start(mut self, start: StartRule) -> Self {
        self.start = start;
        self
    }

    pub fn check(&self) -> Result<(), EngineError> {
        if !(self.rho > 0.0) || !self.rho.is_finite() {
            return Err(EngineError::Config(format!("rho must be positive, got {}", self.rho)));
        }
        if !(self.eps_primal >= 0.0) || !(self.eps_dual >= 0.0) {
            return Err(EngineError::Config("stopping thresholds must be nonnegative".into()));
        }
        Ok(())
    }
}

/// `(x^k, y^k, λ^k)` with `y^{k-1}` and the derived `r^k`, `p^k`.
#[derive(Debug, Clone, PartialEq)]
pub struct IterateState {
    pub k: usize,
    pub x: Vector,
    pub y: Vector,
    pub lambda: Vector,
    pub y_prev: Vector,
    pub r: Vector,
    pub p: f64,
}

impl IterateState {
    /// Starting state from `(y^0, λ^0)`. The x-update never reads `x^0`, so
    /// it is set to zero and only feeds the derived `r^0` and `p^0`.
    pub fn initial(prob: &SplitProblem, y0: Vector, lambda0: Vector) -> Result<Self, EngineError> {
        if y0.len() != prob.n2() || lambda0.len() != prob.m() {
            return Err(EngineError::Config(format!(
                "initial point has dimensions ({}, {}), expected ({}, {})",
                y0.len(),
                lambda0.len(),
                prob.n2(),
                prob.m()
            )));
        }
        Self::assemble(prob, 0, Vector::zeros(prob.n1()), y0.clone(), lambda0, y0)
    }

    fn assemble(prob: &SplitProblem, k: usize, x: Vector, y: Vector, lambda: Vector, y_prev: Vector) -> Result<Self, EngineError> {
        let r = prob.primal_residual(&x, &y)?;
        let p = prob.evaluate_objective(&x, &y)?;
        Ok(Self { k, x, y, lambda, y_prev, r, p })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Converged,
    MaxIters,
    SubproblemError,
}

impl fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SolveStatus::Converged => "converged",
            SolveStatus::MaxIters => "max_iters",
            SolveStatus::SubproblemError => "subproblem_error",
        })
    }
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub status: SolveStatus,
    pub final_state: IterateState,
    /// One record per completed iteration (empty with certificates off).
    pub trace: Vec<CertificateRecord>,
    pub iterations: usize,
    /// `V^0` against the reference, when one was supplied.
    pub initial_lyapunov: Option<f64>,
    /// Every state from `k = 0` on, kept unless certificates are off.
    pub history: Vec<IterateState>,
    /// Iteration index and cause of a failed subproblem.
    pub failure: Option<(usize, SubsolverError)>,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EngineError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("subproblem failed at iteration {iteration}: {source}")]
    Subproblem { iteration: usize, source: SubsolverError },
    #[error("certificate evaluation failed: {0}")]
    Certificate(#[from] OracleError),
    #[error(transparent)]
    Problem(#[from] ProblemError),
}

/// Starting pair for `rule`. The consistent rule needs `BᵀB` invertible; when
/// it is not, `λ^0` falls back to zero.
pub fn starting_point(prob: &SplitProblem, rule: StartRule) -> Result<(Vector, Vector), EngineError> {
    let (n2, m) = (prob.n2(), prob.m());
    match rule {
        StartRule::Zero => Ok((Vector::zeros(n2), Vector::zeros(m))),
        StartRule::Consistent => {
            let y0 = if prob.y_set.contains(&Vector::zeros(n2), 0.0) {
                Vector::zeros(n2)
            } else {
                let projection = QpSubproblem::new(
                    DenseMatrix::identity(n2, n2),
                    Vector::zeros(n2),
                    prob.y_set.clone(),
                )
                .and_then(|sub| solve_qp(&sub));
                projection.map_err(|source| EngineError::Subproblem { iteration: 0, source })?.z
            };
            // Bᵀλ = -∇g(y0) makes y0 an unconstrained minimizer of g + λᵀBy
            let grad = prob.g.gradient(&y0);
            let lambda0 = match solve_linear(&(prob.b.transpose() * &prob.b), &grad) {
                Ok(w) => -(&prob.b * w),
                Err(_) => Vector::zeros(m),
            };
            Ok((y0, lambda0))
        }
    }
}

/// Whether `y0` minimizes `g(y) + λ0ᵀBy` over `Y`, tested as a fixed point of
/// the proximal map of that function.
pub fn is_consistent_start(prob: &SplitProblem, y0: &Vector, lambda0: &Vector) -> bool {
    let n2 = prob.n2();
    if y0.len() != n2 || lambda0.len() != prob.m() {
        return false;
    }
    let h = &prob.g.p + DenseMatrix::identity(n2, n2);
    let l = &prob.g.q + prob.b.transpose() * lambda0 - y0;
    let Ok(sub) = QpSubproblem::new(h, l, prob.y_set.clone()) else { return false };
    match solve_qp_from(&sub, Some(y0)) {
        Ok(sol) => (sol.z - y0).amax() <= 1e-9 * (1.0 + y0.amax()),
        Err(_) => false,
    }
}

/// `λ + ρr`.
pub fn dual_update(lambda: &Vector, rho: f64, r: &Vector) -> Vector {
    lambda + rho * r
}

/// One Gauss-Seidel sweep: x, then y, then the multiplier.
pub fn step(prob: &SplitProblem, cfg: &SolverConfig, state: &IterateState) -> Result<IterateState, EngineError> {
    let rho = cfg.rho;
    let fail = |source| EngineError::Subproblem { iteration: state.k, source };

    let x_sub = assemble_x_subproblem(prob, rho, &state.y, &state.lambda).map_err(fail)?;
    let x_hint = (state.k > 0).then_some(&state.x);
    let x = solve_qp_from(&x_sub, x_hint).map_err(fail)?.z;

    let y_sub = assemble_y_subproblem(prob, rho, &x, &state.lambda).map_err(fail)?;
    let y = solve_qp_from(&y_sub, Some(&state.y)).map_err(fail)?.z;

    let r = prob.primal_residual(&x, &y)?;
    let lambda = dual_update(&state.lambda, rho, &r);
    let p = prob.evaluate_objective(&x, &y)?;
    Ok(IterateState { k: state.k + 1, x, y, lambda, y_prev: state.y.clone(), r, p })
}

/// Runs [`step`] until `‖r^k‖ ≤ eps_primal` and `ρ‖B(y^k - y^{k-1})‖ ≤ eps_dual`,
/// or `max_iters` steps. `init` is `(y^0, λ^0)`; without it the configured
/// [`StartRule`] picks one.
pub fn solve(
    prob: &SplitProblem,
    cfg: &SolverConfig,
    init: Option<(Vector, Vector)>,
    reference: Option<&ReferenceSolution>,
) -> Result<SolveReport, EngineError> {
    cfg.check()?;
    if cfg.certificate_mode == CertificateMode::Full && reference.is_none() {
        return Err(EngineError::Config("full certificates need a reference solution".into()));
    }
    let reference = match cfg.certificate_mode {
        CertificateMode::Full => reference,
        _ => None,
    };
    let keep = cfg.certificate_mode != CertificateMode::Off;
    let (y0, lambda0) = match init {
        Some(pair) => pair,
        None => match starting_point(prob, cfg.start) {
            Ok(pair) => pair,
            Err(EngineError::Subproblem { iteration, source }) => {
                let state = IterateState::initial(prob, Vector::zeros(prob.n2()), Vector::zeros(prob.m()))?;
                return Ok(SolveReport {
                    status: SolveStatus::SubproblemError,
                    final_state: state,
                    trace: Vec::new(),
                    iterations: 0,
                    initial_lyapunov: None,
                    history: Vec::new(),
                    failure: Some((iteration, source)),
                });
            }
            Err(other) => return Err(other),
        },
    };
    let mut state = IterateState::initial(prob, y0, lambda0)?;
    let mut consistent = keep && is_consistent_start(prob, &state.y, &state.lambda);

    let mut report = SolveReport {
        status: SolveStatus::MaxIters,
        final_state: state.clone(),
        trace: Vec::new(),
        iterations: 0,
        initial_lyapunov: reference.map(|r| certificates::lyapunov(prob, cfg.rho, &state, r)),
        history: Vec::new(),
        failure: None,
    };
    if keep {
        report.history.push(state.clone());
    }

    for _ in 0..cfg.max_iters {
        let next = match step(prob, cfg, &state) {
            Ok(next) => next,
            Err(EngineError::Subproblem { iteration, source }) => {
                report.status = SolveStatus::SubproblemError;
                report.failure = Some((iteration, source));
                break;
            }
            Err(other) => return Err(other),
        };
        if keep {
            report.trace.push(certificates::record(prob, cfg.rho, &state, &next, consistent, reference)?);
            report.history.push(next.clone());
        }
        consistent = true;
        let dual_residual = cfg.rho * (&prob.b * (&next.y - &state.y)).norm();
        let converged = next.r.norm() <= cfg.eps_primal && dual_residual <= cfg.eps_dual;
        state = next;
        report.iterations = state.k;
        if converged {
            report.status = SolveStatus::Converged;
            break;
        }
    }
    report.final_state = state;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::solve_split_bruteforce;
    use crate::problem::{p1, p2, PolyhedralSet};

    fn v(x: f64) -> Vector {
        Vector::from_element(1, x)
    }

    #[test]
    fn first_p1_step_matches_hand_trace() {
        let prob = p1();
        let s0 = IterateState::initial(&prob, v(0.0), v(0.0)).unwrap();
        let s1 = step(&prob, &SolverConfig::default(), &s0).unwrap();
        assert!((s1.x[0] - 2.0 / 3.0).abs() < 1e-12);
        assert!((s1.y[0] - 14.0 / 9.0).abs() < 1e-12);
        assert!((s1.lambda[0] + 8.0 / 9.0).abs() < 1e-12);
        assert_eq!(s1.k, 1);
        assert_eq!(s1.y_prev, s0.y);
    }

    #[test]
    fn saddle_point_is_fixed() {
        let prob = p1();
        let star = IterateState::initial(&prob, v(1.5), v(-1.0)).unwrap();
        let next = step(&prob, &SolverConfig::default(), &star).unwrap();
        assert!((next.x[0] - 1.5).abs() < 1e-14);
        assert!((next.y[0] - 1.5).abs() < 1e-14);
        assert!((next.lambda[0] + 1.0).abs() < 1e-14);
    }

    #[test]
    fn dual_update_examples() {
        assert_eq!(dual_update(&v(0.0), 1.0, &v(0.0)), v(0.0));
        assert_eq!(dual_update(&v(0.0), 1.0, &v(-8.0 / 9.0)), v(-8.0 / 9.0));
        let out = dual_update(&Vector::from_row_slice(&[1., -1.]), 2.0, &Vector::from_row_slice(&[0.5, 0.5]));
        assert_eq!(out.as_slice(), &[2., 0.]);
    }

    #[test]
    fn solves_p1_and_p2() {
        let cfg = SolverConfig::default();
        let report = solve(&p1(), &cfg, None, None).unwrap();
        assert_eq!(report.status, SolveStatus::Converged);
        let s = &report.final_state;
        assert!((s.x[0] - 1.5).abs() < 1e-6 && (s.y[0] - 1.5).abs() < 1e-6);
        assert!((s.lambda[0] + 1.0).abs() < 1e-6);
        assert_eq!(report.trace.len(), report.iterations);

        let prob = p2();
        let reference = solve_split_bruteforce(&prob).unwrap();
        let report = solve(&prob, &cfg.with_mode(CertificateMode::Full), None, Some(&reference)).unwrap();
        assert_eq!(report.status, SolveStatus::Converged);
        assert!((report.final_state.p - 1.0).abs() < 1e-6);
    }

    #[test]
    fn infeasible_y_fails_at_first_iteration() {
        let mut prob = p1();
        prob.y_set = PolyhedralSet::boxed(&[1.0], &[0.0]).unwrap();
        let report = solve(&prob, &SolverConfig::default(), None, None).unwrap();
        assert_eq!(report.status, SolveStatus::SubproblemError);
        assert_eq!(report.failure, Some((0, SubsolverError::Infeasible)));
        assert_eq!(report.iterations, 0);
    }

    #[test]
    fn config_errors() {
        let prob = p1();
        assert!(solve(&prob, &SolverConfig::default().with_rho(0.0), None, None).is_err());
        let full = SolverConfig::default().with_mode(CertificateMode::Full);
        assert!(matches!(solve(&prob, &full, None, None), Err(EngineError::Config(_))));
        assert!(IterateState::initial(&prob, Vector::zeros(2), v(0.0)).is_err());
        assert_eq!("full".parse::<CertificateMode>(), Ok(CertificateMode::Full));
        assert!("loud".parse::<CertificateMode>().is_err());
        assert_eq!("zero".parse::<StartRule>(), Ok(StartRule::Zero));
        assert!("random".parse::<StartRule>().is_err());
    }

    #[test]
    fn consistent_start_on_p1() {
        let prob = p1();
        let (y0, lambda0) = starting_point(&prob, StartRule::Consistent).unwrap();
        assert_eq!(y0, v(0.0));
        assert!((lambda0[0] + 4.0).abs() < 1e-12);
        assert!(is_consistent_start(&prob, &y0, &lambda0));
        assert!(!is_consistent_start(&prob, &v(0.0), &v(0.0)));
        assert!(is_consistent_start(&prob, &v(1.5), &v(-1.0)));
    }

    #[test]
    fn consistent_start_projects_onto_y() {
        let mut prob = p1();
        prob.y_set = PolyhedralSet::boxed(&[1.0], &[3.0]).unwrap();
        let (y0, lambda0) = starting_point(&prob, StartRule::Consistent).unwrap();
        assert!((y0[0] - 1.0).abs() < 1e-9);
        // ∇g(1) = -2, so Bᵀλ = 2 and λ = -2
        assert!((lambda0[0] + 2.0).abs() < 1e-9);
        assert!(is_consistent_start(&prob, &y0, &lambda0));
    }

    #[test]
    fn first_pair_certificates_follow_the_start() {
        let prob = p1();
        let reference = solve_split_bruteforce(&prob).unwrap();
        let full = SolverConfig::default().with_mode(CertificateMode::Full);
        let report = solve(&prob, &full, None, Some(&reference)).unwrap();
        let first = &report.trace[0];
        assert!(first.prev_consistent);
        assert!(first.inner_product <= certificates::CERTIFICATE_TOL);
        assert!(first.lyapunov_descent_slack.unwrap() >= -certificates::CERTIFICATE_TOL);

        // from the zero start the first pair has a positive inner product
        let zero = solve(&prob, &full.with_start(StartRule::Zero), None, Some(&reference)).unwrap();
        let first = &zero.trace[0];
        assert!(!first.prev_consistent);
        assert!((first.inner_product - 112.0 / 81.0).abs() < 1e-12);
        assert!(zero.trace[1..].iter().all(|rec| rec.prev_consistent && rec.inner_product <= 1e-8));
    }

    #[test]
    fn random_instances_converge_for_three_penalties() {
        let mut rng = crate::generate::rng_from_seed(0);
        for seed in 0..20 {
            let params = crate::generate::RandomQpParams::sample(&mut rng);
            let prob = crate::generate::random_qp(seed, &params);
            for rho in [0.1, 1.0, 10.0] {
                let cfg = SolverConfig::default().with_rho(rho).with_mode(CertificateMode::Off);
                let report = solve(&prob, &cfg, None, None).unwrap();
                assert_eq!(report.status, SolveStatus::Converged, "seed {seed}, rho {rho}");
                assert!(report.final_state.r.norm() <= cfg.eps_primal);
            }
        }
    }

    #[test]
    fn off_mode_keeps_no_trace() {
        let cfg = SolverConfig::default().with_mode(CertificateMode::Off);
        let report = solve(&p1(), &cfg, None, None).unwrap();
        assert!(report.trace.is_empty() && report.history.is_empty());
        assert_eq!(report.status, SolveStatus::Converged);
    }
}
