//! Exact solver for the strictly convex polyhedral QPs produced by the x- and
//! y-updates.
//!
//! The method is a primal active-set iteration. A feasible starting point is
//! found with an elastic phase 1: minimize `t` (plus a tiny proximal term) over
//! `{(z, t) : Gz - t ≤ h, t ≥ 0, Ez = d}`, which is feasible at the least-norm
//! solution of `Ez = d` with `t` set to the worst violation.

use thiserror::Error;

use crate::numerics::{self, solve_linear, vstack, DenseMatrix, NumericsError, Vector, RANK_TOL};
use crate::problem::{PolyhedralSet, ProblemError, SplitProblem};

/// Feasibility tolerance for the active-set iteration, scaled by `1 + ‖h‖∞`.
const FEAS_TOL: f64 = 1e-9;
/// Phase-1 proximal weight.
const PHASE1_PROX: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SubsolverError {
    #[error("feasible set is empty")]
    Infeasible,
    #[error("active-set budget of {0} steps exhausted")]
    Budget(usize),
    #[error("dimension error: {0}")]
    Dimension(String),
    #[error("subproblem Hessian is not positive definite on the feasible directions")]
    NotStrictlyConvex,
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

impl From<ProblemError> for SubsolverError {
    fn from(e: ProblemError) -> Self {
        SubsolverError::Dimension(e.to_string())
    }
}

/// `minimize ½ zᵀHz + lᵀz` over `set`.
#[derive(Debug, Clone, PartialEq)]
pub struct QpSubproblem {
    pub h: DenseMatrix,
    pub l: Vector,
    pub set: PolyhedralSet,
}

impl QpSubproblem {
    pub fn new(h: DenseMatrix, l: Vector, set: PolyhedralSet) -> Result<Self, SubsolverError> {
        let n = l.len();
        if h.shape() != (n, n) || set.dim() != n {
            return Err(SubsolverError::Dimension(format!(
                "H is {:?}, l has length {n}, set lives in dimension {}",
                h.shape(),
                set.dim()
            )));
        }
        Ok(Self { h, l, set })
    }

    pub fn dim(&self) -> usize {
        self.l.len()
    }

    pub fn objective(&self, z: &Vector) -> f64 {
        0.5 * z.dot(&(&self.h * z)) + self.l.dot(z)
    }

    /// ∞-norm of the KKT residual for a candidate `(z, μ, ν)`: stationarity,
    /// primal feasibility, dual feasibility and complementarity.
    pub fn kkt_residual(&self, z: &Vector, mu: &Vector, nu: &Vector) -> f64 {
        let set = &self.set;
        let stat = &self.h * z + &self.l + set.g.transpose() * mu + set.e.transpose() * nu;
        let slack = &set.g * z - &set.h;
        let mut worst = stat.amax();
        for i in 0..slack.len() {
            worst = worst.max(slack[i].max(0.0)).max((-mu[i]).max(0.0)).max((mu[i] * slack[i]).abs());
        }
        if set.num_equalities() > 0 {
            worst = worst.max((&set.e * z - &set.d).amax());
        }
        worst
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QpSolution {
    pub z: Vector,
    /// Inequality rows held active at the solution, ascending.
    pub active: Vec<usize>,
    /// Inequality multipliers, one per row of `G` (zero off the active set).
    pub mu: Vector,
    /// Equality multipliers, one per row of `E`.
    pub nu: Vector,
}

fn check_conformal(prob: &SplitProblem, rho: f64, other: &Vector, other_dim: usize, lambda: &Vector) -> Result<(), SubsolverError> {
    if !(rho > 0.0) {
        return Err(SubsolverError::Dimension(format!("penalty must be positive, got {rho}")));
    }
    if other.len() != other_dim || lambda.len() != prob.m() {
        return Err(SubsolverError::Dimension(format!(
            "block of length {} and multiplier of length {} do not match the problem",
            other.len(),
            lambda.len()
        )));
    }
    Ok(())
}

/// x-update data: `H = P_f + ρAᵀA`, `l = q_f + Aᵀλ + ρAᵀ(By - c)`, set `X`.
pub fn assemble_x_subproblem(
    prob: &SplitProblem,
    rho: f64,
    y: &Vector,
    lambda: &Vector,
) -> Result<QpSubproblem, SubsolverError> {
    check_conformal(prob, rho, y, prob.n2(), lambda)?;
    let at = prob.a.transpose();
    let h = &prob.f.p + rho * &at * &prob.a;
    let l = &prob.f.q + &at * lambda + rho * &at * (&prob.b * y - &prob.c);
    QpSubproblem::new(h, l, prob.x_set.clone())
}

/// y-update data: `H = P_g + ρBᵀB`, `l = q_g + Bᵀλ + ρBᵀ(Ax - c)`, set `Y`.
pub fn assemble_y_subproblem(
    prob: &SplitProblem,
    rho: f64,
    x: &Vector,
    lambda: &Vector,
) -> Result<QpSubproblem, SubsolverError> {
    check_conformal(prob, rho, x, prob.n1(), lambda)?;
    let bt = prob.b.transpose();
    let h = &prob.g.p + rho * &bt * &prob.b;
    let l = &prob.g.q + &bt * lambda + rho * &bt * (&prob.a * x - &prob.c);
    QpSubproblem::new(h, l, prob.y_set.clone())
}

/// Solves a strictly convex QP exactly. See [`solve_qp_from`] for warm starts.
pub fn solve_qp(sub: &QpSubproblem) -> Result<QpSolution, SubsolverError> {
    solve_qp_from(sub, None)
}

/// Like [`solve_qp`], starting the active-set iteration at `hint` when it is
/// feasible. The hint only changes the path, never the minimizer.
pub fn solve_qp_from(sub: &QpSubproblem, hint: Option<&Vector>) -> Result<QpSolution, SubsolverError> {
    let set = &sub.set;
    let n = sub.dim();
    let tol = FEAS_TOL * (1.0 + set.h.amax().max(set.d.amax()));

    // independent equality rows; drop the newer one of any dependent pair
    let eq_rows = independent_rows(&set.e, &[]);
    let e = select_rows(&set.e, &eq_rows);
    let d = Vector::from_iterator(eq_rows.len(), eq_rows.iter().map(|&i| set.d[i]));
    if eq_rows.len() < set.num_equalities() && !rows_consistent(&set.e, &set.d, &e, &d) {
        return Err(SubsolverError::Infeasible);
    }

    let start = match hint {
        Some(z) if z.len() == n && set.contains(z, tol) => z.clone(),
        _ => feasible_point(&set.g, &set.h, &e, &d, tol)?,
    };

    let budget = 50 * (n + set.num_inequalities()).max(1);
    let (z, working, w) = active_set(&sub.h, &sub.l, &set.g, &set.h, &e, &d, start, tol, budget)?;

    let mut mu = Vector::zeros(set.num_inequalities());
    let mut nu = Vector::zeros(set.num_equalities());
    for (k, &row) in eq_rows.iter().enumerate() {
        nu[row] = w[k];
    }
    for (k, &row) in working.iter().enumerate() {
        mu[row] = w[eq_rows.len() + k];
    }
    let mut active = working;
    active.sort_unstable();
    Ok(QpSolution { z, active, mu, nu })
}

fn select_rows(m: &DenseMatrix, rows: &[usize]) -> DenseMatrix {
    DenseMatrix::from_fn(rows.len(), m.ncols(), |i, j| m[(rows[i], j)])
}

/// Greedy selection of rows of `candidates`, in index order, that are linearly
/// independent of `base` and of the rows already picked.
fn independent_rows(candidates: &DenseMatrix, base: &[&DenseMatrix]) -> Vec<usize> {
    let cols = candidates.ncols();
    let mut stacked = vstack(base, cols);
    let mut rank = if stacked.nrows() == 0 { 0 } else { numerics::numerical_rank(&stacked, RANK_TOL).unwrap_or(0) };
    let mut picked = Vec::new();
    for i in 0..candidates.nrows() {
        let row = candidates.rows(i, 1).into_owned();
        let trial = vstack(&[&stacked, &row], cols);
        let trial_rank = numerics::numerical_rank(&trial, RANK_TOL).unwrap_or(0);
        if trial_rank > rank {
            stacked = trial;
            rank = trial_rank;
            picked.push(i);
        }
    }
    picked
}

fn least_norm_solution(e: &DenseMatrix, d: &Vector) -> Vector {
    if e.nrows() == 0 {
        return Vector::zeros(e.ncols());
    }
    let svd = e.clone().svd(true, true);
    svd.solve(d, RANK_TOL * svd.singular_values.max()).expect("both factors were computed")
}

fn rows_consistent(e_full: &DenseMatrix, d_full: &Vector, e: &DenseMatrix, d: &Vector) -> bool {
    let z = least_norm_solution(e, d);
    (e_full * &z - d_full).amax() <= FEAS_TOL * (1.0 + d_full.amax())
}

/// Elastic phase 1.
fn feasible_point(
    g: &DenseMatrix,
    h: &Vector,
    e: &DenseMatrix,
    d: &Vector,
    tol: f64,
) -> Result<Vector, SubsolverError> {
    let n = g.ncols();
    let z0 = least_norm_solution(e, d);
    if e.nrows() > 0 && (e * &z0 - d).amax() > tol {
        return Err(SubsolverError::Infeasible);
    }
    let violation = (g * &z0 - h).iter().cloned().fold(0.0_f64, f64::max);
    if violation <= tol {
        return Ok(z0);
    }

    // variables (z, t)
    let p = g.nrows();
    let mut g1 = DenseMatrix::zeros(p + 1, n + 1);
    g1.view_mut((0, 0), (p, n)).copy_from(g);
    for i in 0..p {
        g1[(i, n)] = -1.0;
    }
    g1[(p, n)] = -1.0;
    let h1 = Vector::from_iterator(p + 1, h.iter().cloned().chain(std::iter::once(0.0)));
    let mut e1 = DenseMatrix::zeros(e.nrows(), n + 1);
    e1.view_mut((0, 0), (e.nrows(), n)).copy_from(e);

    let hess = DenseMatrix::identity(n + 1, n + 1) * PHASE1_PROX;
    let mut lin = Vector::zeros(n + 1);
    lin.rows_mut(0, n).copy_from(&(-PHASE1_PROX * &z0));
    lin[n] = 1.0;
    let start = Vector::from_iterator(n + 1, z0.iter().cloned().chain(std::iter::once(violation)));
    let budget = 50 * (n + 1 + p + 1);
    let (w, _, _) = active_set(&hess, &lin, &g1, &h1, &e1, d, start, tol, budget)?;
    if w[n] > tol {
        return Err(SubsolverError::Infeasible);
    }
    Ok(w.rows(0, n).into_owned())
}

/// Primal active-set iteration from a feasible `z`. Returns the minimizer, the
/// final working set (inequality row indices, in insertion order) and the
/// multipliers `[ν; μ_working]` in the convention `Hz + l + Eᵀν + G_Wᵀμ = 0`.
#[allow(clippy::too_many_arguments)]
fn active_set(
    hess: &DenseMatrix,
    lin: &Vector,
    g: &DenseMatrix,
    h: &Vector,
    e: &DenseMatrix,
    d: &Vector,
    mut z: Vector,
    tol: f64,
    budget: usize,
) -> Result<(Vector, Vec<usize>, Vector), SubsolverError> {
    let n = z.len();
    let n_eq = e.nrows();

    // inequalities active at the start, dropping dependent ones
    let touching: Vec<usize> = (0..g.nrows()).filter(|&i| (g.row(i) * &z)[0] - h[i] >= -tol).collect();
    let touching_rows = select_rows(g, &touching);
    let mut working: Vec<usize> = independent_rows(&touching_rows, &[e]).into_iter().map(|k| touching[k]).collect();

    // after an unblocked full step z already minimizes over the working set
    let mut at_subspace_min = false;
    for _ in 0..budget {
        let grad = hess * &z + lin;
        let constraints = vstack(&[e, &select_rows(g, &working)], n);
        let targets = Vector::from_iterator(
            constraints.nrows(),
            d.iter().cloned().chain(working.iter().map(|&i| h[i])),
        );
        let k = constraints.nrows();
        let mut kkt = DenseMatrix::zeros(n + k, n + k);
        kkt.view_mut((0, 0), (n, n)).copy_from(hess);
        kkt.view_mut((0, n), (n, k)).copy_from(&constraints.transpose());
        kkt.view_mut((n, 0), (k, n)).copy_from(&constraints);
        let mut rhs = Vector::zeros(n + k);
        rhs.rows_mut(0, n).copy_from(&(-&grad));
        // the step also removes any drift off the working constraints
        rhs.rows_mut(n, k).copy_from(&(targets - &constraints * &z));
        let sol = solve_linear(&kkt, &rhs).map_err(|err| match err {
            NumericsError::Singular => SubsolverError::NotStrictlyConvex,
            other => other.into(),
        })?;
        let step = sol.rows(0, n).into_owned();
        let w = sol.rows(n, k).into_owned();

        if at_subspace_min || step.amax() <= 1e-12 * (1.0 + z.amax()) {
            let mult_tol = 1e-12 * (1.0 + grad.amax());
            let mut leaving: Option<(usize, f64)> = None;
            for (pos, &row) in working.iter().enumerate() {
                let mu = w[n_eq + pos];
                let better = match leaving {
                    None => true,
                    Some((lpos, lmu)) => mu < lmu || (mu == lmu && row < working[lpos]),
                };
                if mu < -mult_tol && better {
                    leaving = Some((pos, mu));
                }
            }
            match leaving {
                None => return Ok((z, working, w)),
                Some((pos, _)) => {
                    working.remove(pos);
                    at_subspace_min = false;
                }
            }
            continue;
        }

        let mut alpha = 1.0;
        let mut blocking = None;
        for i in 0..g.nrows() {
            if working.contains(&i) {
                continue;
            }
            let gp = (g.row(i) * &step)[0];
            if gp > 1e-14 * (1.0 + step.amax()) {
                let ratio = ((h[i] - (g.row(i) * &z)[0]) / gp).max(0.0);
                if ratio < alpha {
                    alpha = ratio;
                    blocking = Some(i);
                }
            }
        }
        z += alpha * &step;
        match blocking {
            Some(i) => working.push(i),
            None => at_subspace_min = true,
        }
    }
    Err(SubsolverError::Budget(budget))
}
