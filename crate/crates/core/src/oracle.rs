//! Brute-force reference solver.
//!
//! Every subset of inequality rows is tried as the active set; for each one the
//! equality-constrained KKT system is solved with an SVD least-squares solve and
//! the candidate is kept if it is primal feasible with nonnegative multipliers.
//! This shares no code with the active-set [`crate::subsolver`] beyond the
//! problem types, so the two can check each other.

use std::cmp::Ordering;

use thiserror::Error;

use crate::numerics::{
    block_diag, null_space, numerical_rank, symmetric_least_squares, vconcat, vstack, DenseMatrix, Vector, RANK_TOL,
};
use crate::problem::{PolyhedralSet, SplitProblem};
use crate::subsolver::QpSubproblem;

/// Largest inequality count the enumeration accepts (`2^20` subsets).
pub const MAX_INEQUALITIES: usize = 20;
/// Largest `n1 + n2 + m` accepted by [`solve_split_bruteforce`].
pub const MAX_SPLIT_SIZE: usize = 40;
/// Multipliers down to this value still count as nonnegative.
pub const MULTIPLIER_SIGN_TOL: f64 = -1e-10;

const FEAS_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("{what} is {size}, enumeration cap is {cap}")]
    Capacity { what: &'static str, size: usize, cap: usize },
    #[error("no feasible KKT point: the feasible set is empty")]
    Infeasible,
    #[error("objective is unbounded below on the feasible set")]
    Unbounded,
}

/// Minimizer and multipliers of a QP found by enumeration.
#[derive(Debug, Clone, PartialEq)]
pub struct BruteForceSolution {
    pub z: Vector,
    pub mu: Vector,
    pub nu: Vector,
    pub objective: f64,
    /// Whether the reduced Hessian on the strongly active constraints is
    /// positive definite, which makes `z` the only minimizer.
    pub unique: bool,
}

/// Exact solution of a split problem plus the multiplier of `Ax + By = c`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceSolution {
    pub x_star: Vector,
    pub y_star: Vector,
    pub lambda_star: Vector,
    pub p_star: f64,
    pub mu_x: Vector,
    pub mu_y: Vector,
    pub unique: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Feasibility {
    Feasible(Vector),
    Infeasible,
    /// Too many inequalities to enumerate.
    Unknown,
}

struct Enumeration<'a> {
    h: &'a DenseMatrix,
    l: &'a Vector,
    g: &'a DenseMatrix,
    hv: &'a Vector,
    e: &'a DenseMatrix,
    d: &'a Vector,
}

impl Enumeration<'_> {
    fn objective(&self, z: &Vector) -> f64 {
        0.5 * z.dot(&(self.h * z)) + self.l.dot(z)
    }

    fn candidate(&self, subset: &[usize]) -> Option<(Vector, Vector, Vector)> {
        let n = self.l.len();
        let n_eq = self.e.nrows();
        let gs = DenseMatrix::from_fn(subset.len(), n, |i, j| self.g[(subset[i], j)]);
        let c = vstack(&[self.e, &gs], n);
        let k = c.nrows();
        let mut kkt = DenseMatrix::zeros(n + k, n + k);
        kkt.view_mut((0, 0), (n, n)).copy_from(self.h);
        kkt.view_mut((0, n), (n, k)).copy_from(&c.transpose());
        kkt.view_mut((n, 0), (k, n)).copy_from(&c);
        let hs = Vector::from_iterator(subset.len(), subset.iter().map(|&i| self.hv[i]));
        let rhs = vconcat(&[&(-self.l), self.d, &hs]);

        let sol = symmetric_least_squares(&kkt, &rhs, RANK_TOL).ok()?;
        if (&kkt * &sol - &rhs).amax() > 1e-9 * (1.0 + rhs.amax()) {
            return None;
        }
        let z = sol.rows(0, n).into_owned();
        let nu = sol.rows(n, n_eq).into_owned();
        let mut mu = Vector::zeros(self.g.nrows());
        for (pos, &i) in subset.iter().enumerate() {
            mu[i] = sol[n + n_eq + pos];
        }
        let tol = FEAS_TOL * (1.0 + self.hv.amax().max(self.d.amax()));
        let feasible = (self.g * &z - self.hv).iter().all(|&s| s <= tol);
        let scale = 1.0 + mu.amax();
        let signs_ok = subset.iter().all(|&i| mu[i] >= MULTIPLIER_SIGN_TOL * scale);
        (feasible && signs_ok).then_some((z, mu, nu))
    }

    fn run(&self) -> Result<BruteForceSolution, OracleError> {
        let p = self.g.nrows();
        if p > MAX_INEQUALITIES {
            return Err(OracleError::Capacity { what: "inequality count", size: p, cap: MAX_INEQUALITIES });
        }
        let n = self.l.len();
        let eq_rank = if self.e.nrows() == 0 { 0 } else { numerical_rank(self.e, RANK_TOL).unwrap_or(0) };

        let mut best: Option<(f64, Vector, Vector, Vector)> = None;
        for mask in 0u32..(1u32 << p) {
            let subset: Vec<usize> = (0..p).filter(|&i| mask & (1 << i) != 0).collect();
            if subset.len() + eq_rank > n {
                continue;
            }
            let Some((z, mu, nu)) = self.candidate(&subset) else { continue };
            let obj = self.objective(&z);
            let replace = match &best {
                None => true,
                Some((best_obj, best_z, _, _)) => {
                    let scale = 1e-12 * (1.0 + best_obj.abs());
                    if obj < best_obj - scale {
                        true
                    } else if obj <= best_obj + scale {
                        lexicographic(&z, best_z) == Ordering::Less
                    } else {
                        false
                    }
                }
            };
            if replace {
                best = Some((obj, z, mu, nu));
            }
        }

        let (objective, z, mu, nu) = best.ok_or(OracleError::Infeasible)?;
        let unique = self.reduced_hessian_is_pd(&mu);
        Ok(BruteForceSolution { z, mu, nu, objective, unique })
    }

    fn reduced_hessian_is_pd(&self, mu: &Vector) -> bool {
        let n = self.l.len();
        let scale = 1.0 + mu.amax();
        let strong: Vec<usize> = (0..mu.len()).filter(|&i| mu[i] > 1e-9 * scale).collect();
        let gs = DenseMatrix::from_fn(strong.len(), n, |i, j| self.g[(strong[i], j)]);
        let z = null_space(&vstack(&[self.e, &gs], n));
        if z.ncols() == 0 {
            return true;
        }
        let reduced = z.transpose() * self.h * &z;
        let reduced = (&reduced + reduced.transpose()) * 0.5;
        reduced.symmetric_eigenvalues().min() > RANK_TOL * self.h.amax().max(1.0)
    }
}

fn lexicographic(a: &Vector, b: &Vector) -> Ordering {
    for (x, y) in a.iter().zip(b.iter()) {
        match x.partial_cmp(y) {
            Some(Ordering::Equal) | None => continue,
            Some(o) => return o,
        }
    }
    Ordering::Equal
}

/// Global minimizer of a strictly convex polyhedral QP by exhaustive
/// active-set enumeration.
pub fn solve_qp_bruteforce(sub: &QpSubproblem) -> Result<BruteForceSolution, OracleError> {
    Enumeration { h: &sub.h, l: &sub.l, g: &sub.set.g, hv: &sub.set.h, e: &sub.set.e, d: &sub.set.d }.run()
}

/// Treats the split problem as one QP in `(x, y)` and enumerates it.
pub fn solve_split_bruteforce(prob: &SplitProblem) -> Result<ReferenceSolution, OracleError> {
    let (n1, n2, m) = (prob.n1(), prob.n2(), prob.m());
    if n1 + n2 + m > MAX_SPLIT_SIZE {
        return Err(OracleError::Capacity { what: "n1 + n2 + m", size: n1 + n2 + m, cap: MAX_SPLIT_SIZE });
    }
    let h = block_diag(&prob.f.p, &prob.g.p);
    let l = vconcat(&[&prob.f.q, &prob.g.q]);
    let mut coupling = DenseMatrix::zeros(m, n1 + n2);
    coupling.view_mut((0, 0), (m, n1)).copy_from(&prob.a);
    coupling.view_mut((0, n1), (m, n2)).copy_from(&prob.b);
    let e = vstack(&[&coupling, &block_diag(&prob.x_set.e, &prob.y_set.e)], n1 + n2);
    let d = vconcat(&[&prob.c, &prob.x_set.d, &prob.y_set.d]);
    let g = block_diag(&prob.x_set.g, &prob.y_set.g);
    let hv = vconcat(&[&prob.x_set.h, &prob.y_set.h]);

    let sol = Enumeration { h: &h, l: &l, g: &g, hv: &hv, e: &e, d: &d }.run()?;
    let x_star = sol.z.rows(0, n1).into_owned();
    let y_star = sol.z.rows(n1, n2).into_owned();
    let p_star = prob.f.eval(&x_star) + prob.g.eval(&y_star);
    let px = prob.x_set.num_inequalities();
    Ok(ReferenceSolution {
        lambda_star: sol.nu.rows(0, m).into_owned(),
        mu_x: sol.mu.rows(0, px).into_owned(),
        mu_y: sol.mu.rows(px, prob.y_set.num_inequalities()).into_owned(),
        x_star,
        y_star,
        p_star,
        unique: sol.unique,
    })
}

/// Phase-1 probe: projects the origin onto `set` by enumeration.
pub fn probe_feasibility(set: &PolyhedralSet) -> Feasibility {
    if set.num_inequalities() > MAX_INEQUALITIES {
        return Feasibility::Unknown;
    }
    let n = set.dim();
    let sub = QpSubproblem {
        h: DenseMatrix::identity(n, n),
        l: Vector::zeros(n),
        set: set.clone(),
    };
    match solve_qp_bruteforce(&sub) {
        Ok(sol) => Feasibility::Feasible(sol.z),
        Err(OracleError::Infeasible) => Feasibility::Infeasible,
        Err(_) => Feasibility::Unknown,
    }
}

/// `inf { ½zᵀPz + (q + Mᵀλ)ᵀz + r0 : z ∈ set }`, `-∞` when unbounded below.
fn partial_dual(
    p: &DenseMatrix,
    q: &Vector,
    r0: f64,
    coupling: &DenseMatrix,
    lambda: &Vector,
    set: &PolyhedralSet,
) -> Result<(f64, Option<Vector>), OracleError> {
    let sub = QpSubproblem { h: p.clone(), l: q + coupling.transpose() * lambda, set: set.clone() };
    match solve_qp_bruteforce(&sub) {
        Ok(sol) => Ok((sol.objective + r0, Some(sol.z))),
        // with a merely semidefinite P a feasible QP without a KKT point is unbounded below
        Err(OracleError::Infeasible) => match probe_feasibility(set) {
            Feasibility::Feasible(_) => Ok((f64::NEG_INFINITY, None)),
            Feasibility::Infeasible => Err(OracleError::Infeasible),
            Feasibility::Unknown => Err(OracleError::Capacity {
                what: "inequality count",
                size: set.num_inequalities(),
                cap: MAX_INEQUALITIES,
            }),
        },
        Err(err) => Err(err),
    }
}

/// Values of the two dual pieces at one multiplier.
#[derive(Debug, Clone, PartialEq)]
pub struct DualFunctionValue {
    /// `F(λ) = inf_{x ∈ X} f(x) + λᵀAx`.
    pub f_value: f64,
    /// `G(λ) = inf_{y ∈ Y} g(y) + λᵀBy`.
    pub g_value: f64,
    pub x_min: Option<Vector>,
    pub y_min: Option<Vector>,
}

impl DualFunctionValue {
    /// `F(λ) + G(λ) - λᵀc` when both pieces are evaluated at the same `λ`.
    pub fn dual_objective(&self, prob: &SplitProblem, lambda: &Vector) -> f64 {
        self.f_value + self.g_value - lambda.dot(&prob.c)
    }
}

pub fn dual_function_value(prob: &SplitProblem, lambda: &Vector) -> Result<DualFunctionValue, OracleError> {
    Ok(DualFunctionValue::from_pair(f_piece(prob, lambda)?, g_piece(prob, lambda)?))
}

impl DualFunctionValue {
    fn from_pair(f: (f64, Option<Vector>), g: (f64, Option<Vector>)) -> Self {
        Self { f_value: f.0, g_value: g.0, x_min: f.1, y_min: g.1 }
    }
}

/// `F(λ)` and its minimizer.
pub fn f_piece(prob: &SplitProblem, lambda: &Vector) -> Result<(f64, Option<Vector>), OracleError> {
    partial_dual(&prob.f.p, &prob.f.q, prob.f.r0, &prob.a, lambda, &prob.x_set)
}

/// `G(λ)` and its minimizer.
pub fn g_piece(prob: &SplitProblem, lambda: &Vector) -> Result<(f64, Option<Vector>), OracleError> {
    partial_dual(&prob.g.p, &prob.g.q, prob.g.r0, &prob.b, lambda, &prob.y_set)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{build_consensus, p1, p2, PolyhedralSet, QuadraticFunction};

    fn v(data: &[f64]) -> Vector {
        Vector::from_row_slice(data)
    }

    #[test]
    fn product_of_boxes_is_nonempty() {
        // eight coordinates, sixteen bounds, six active at the projection of 0
        let prob = crate::generate::random_consensus(3821, 4, 2, true);
        let Feasibility::Feasible(z) = probe_feasibility(&prob.x_set) else { panic!("box product reported empty") };
        assert!(prob.x_set.contains(&z, 1e-12));
    }

    #[test]
    fn clipped_scalar_matches_hand_kkt() {
        let set = PolyhedralSet::halfspaces(DenseMatrix::from_element(1, 1, 1.0), v(&[1.0])).unwrap();
        let sub = QpSubproblem::new(DenseMatrix::from_element(1, 1, 2.0), v(&[-4.0]), set).unwrap();
        let sol = solve_qp_bruteforce(&sub).unwrap();
        assert!((sol.z[0] - 1.0).abs() < 1e-12);
        assert!((sol.mu[0] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn unconstrained() {
        let sub = QpSubproblem::new(DenseMatrix::identity(2, 2), v(&[-2.0, -2.0]), PolyhedralSet::free(2)).unwrap();
        let sol = solve_qp_bruteforce(&sub).unwrap();
        assert!((&sol.z - v(&[2.0, 2.0])).amax() < 1e-12);
        assert!(sol.unique);
    }

    #[test]
    fn empty_interval_is_infeasible() {
        let set = PolyhedralSet::halfspaces(DenseMatrix::from_row_slice(2, 1, &[1.0, -1.0]), v(&[-1.0, -1.0])).unwrap();
        let sub = QpSubproblem::new(DenseMatrix::identity(1, 1), v(&[0.0]), set).unwrap();
        assert_eq!(solve_qp_bruteforce(&sub), Err(OracleError::Infeasible));
    }

    #[test]
    fn capacity_cap() {
        let set = PolyhedralSet::halfspaces(DenseMatrix::from_element(21, 1, 1.0), Vector::from_element(21, 1.0)).unwrap();
        let sub = QpSubproblem::new(DenseMatrix::identity(1, 1), v(&[0.0]), set.clone()).unwrap();
        assert!(matches!(solve_qp_bruteforce(&sub), Err(OracleError::Capacity { .. })));
        assert_eq!(probe_feasibility(&set), Feasibility::Unknown);
    }

    #[test]
    fn p1_reference() {
        let r = solve_split_bruteforce(&p1()).unwrap();
        assert!((r.x_star[0] - 1.5).abs() < 1e-12);
        assert!((r.y_star[0] - 1.5).abs() < 1e-12);
        assert!((r.lambda_star[0] + 1.0).abs() < 1e-12);
        assert!((r.p_star - 0.5).abs() < 1e-12);
        assert!(r.unique);
    }

    #[test]
    fn p2_reference() {
        let r = solve_split_bruteforce(&p2()).unwrap();
        assert!((r.x_star[0] - 1.0).abs() < 1e-12);
        assert!((r.y_star[0] - 1.0).abs() < 1e-12);
        assert!((r.lambda_star[0] + 2.0).abs() < 1e-12);
        assert!((r.p_star - 1.0).abs() < 1e-12);
        assert!((r.mu_x[0] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn consensus_reference() {
        let fs = vec![
            QuadraticFunction::weighted_distance(&[1.0], &[1.0]),
            QuadraticFunction::weighted_distance(&[1.0], &[3.0]),
        ];
        let free = vec![PolyhedralSet::free(1), PolyhedralSet::free(1)];
        let r = solve_split_bruteforce(&build_consensus(&fs, &free).unwrap()).unwrap();
        assert!((r.y_star[0] - 2.0).abs() < 1e-10);
        assert!(r.unique);

        let below_one = PolyhedralSet::halfspaces(DenseMatrix::from_element(1, 1, 1.0), v(&[1.0])).unwrap();
        let r = solve_split_bruteforce(&build_consensus(&fs, &[below_one.clone(), below_one]).unwrap()).unwrap();
        assert!((r.y_star[0] - 1.0).abs() < 1e-10);

        let single = build_consensus(&fs[..1], &free[..1]).unwrap();
        assert!((solve_split_bruteforce(&single).unwrap().y_star[0] - 1.0).abs() < 1e-10);
    }

    #[test]
    fn p1_dual_values() {
        let prob = p1();
        let dv = dual_function_value(&prob, &v(&[-1.0])).unwrap();
        assert!((dv.f_value + 1.25).abs() < 1e-12);
        assert!((dv.g_value - 1.75).abs() < 1e-12);
        assert!((dv.dual_objective(&prob, &v(&[-1.0])) - 0.5).abs() < 1e-12);

        let dv = dual_function_value(&prob, &v(&[0.0])).unwrap();
        assert!(dv.f_value.abs() < 1e-12 && dv.g_value.abs() < 1e-12);
    }

    #[test]
    fn semidefinite_piece_can_be_unbounded() {
        let prob = build_consensus(
            &[QuadraticFunction::weighted_distance(&[1.0], &[1.0])],
            &[PolyhedralSet::free(1)],
        )
        .unwrap();
        // g = 0, so G(λ) = inf -λy is -∞ unless λ = 0
        let dv = dual_function_value(&prob, &v(&[0.5])).unwrap();
        assert_eq!(dv.g_value, f64::NEG_INFINITY);
        assert!(dual_function_value(&prob, &v(&[0.0])).unwrap().g_value.abs() < 1e-12);
    }

    #[test]
    fn non_unique_flagged() {
        // min (x-1)² with a free y that only appears through x - y + 0·... = 0 and g = 0 on y ∈ ℝ²
        let prob = SplitProblem::new(
            QuadraticFunction::weighted_distance(&[1.0], &[1.0]),
            QuadraticFunction::zero(2),
            DenseMatrix::from_element(1, 1, 1.0),
            DenseMatrix::from_row_slice(1, 2, &[-1.0, -1.0]),
            v(&[0.0]),
            PolyhedralSet::free(1),
            PolyhedralSet::boxed(&[-5.0, -5.0], &[5.0, 5.0]).unwrap(),
        )
        .unwrap();
        let r = solve_split_bruteforce(&prob).unwrap();
        assert!(!r.unique);
        assert!((r.p_star).abs() < 1e-12);
    }
}
