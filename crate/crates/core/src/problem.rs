//! Problem data: convex quadratics, polyhedral sets and the two-block
//! instance `minimize f(x) + g(y) s.t. x in X, y in Y, Ax + By = c`.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numerics::{
    self, block_diag, check_symmetric, is_psd, numerical_rank, vconcat, vstack, DenseMatrix,
    NumericsError, Vector, RANK_TOL,
};
use crate::oracle::{self, Feasibility};

/// Absolute tolerance for set membership and symmetry of `P`.
pub const MEMBERSHIP_TOL: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProblemError {
    #[error("structural error: {0}")]
    Structure(String),
    #[error("penalty parameter must be positive, got {0}")]
    Penalty(f64),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

fn structure(msg: impl Into<String>) -> ProblemError {
    ProblemError::Structure(msg.into())
}

/// `½ xᵀPx + qᵀx + r0`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticFunction {
    pub p: DenseMatrix,
    pub q: Vector,
    pub r0: f64,
}

impl QuadraticFunction {
    /// Checks shapes and symmetry. Convexity is a validation concern, not a
    /// construction one, so an indefinite `P` is accepted here.
    pub fn new(p: DenseMatrix, q: Vector, r0: f64) -> Result<Self, ProblemError> {
        if p.nrows() != q.len() {
            return Err(structure(format!(
                "quadratic term is {}x{} but linear term has length {}",
                p.nrows(),
                p.ncols(),
                q.len()
            )));
        }
        check_symmetric(&p, MEMBERSHIP_TOL)?;
        numerics::ensure_finite_matrix(&p, "P")?;
        numerics::ensure_finite_vector(&q, "q")?;
        if !r0.is_finite() {
            return Err(NumericsError::NonFinite("r0").into());
        }
        Ok(Self { p, q, r0 })
    }

    pub fn zero(n: usize) -> Self {
        Self { p: DenseMatrix::zeros(n, n), q: Vector::zeros(n), r0: 0.0 }
    }

    /// `(x - center)ᵀ diag(weights) (x - center)`, handy for tests and examples.
    pub fn weighted_distance(weights: &[f64], center: &[f64]) -> Self {
        let n = weights.len();
        let p = DenseMatrix::from_diagonal(&Vector::from_iterator(n, weights.iter().map(|w| 2.0 * w)));
        let q = Vector::from_iterator(n, weights.iter().zip(center).map(|(w, c)| -2.0 * w * c));
        let r0 = weights.iter().zip(center).map(|(w, c)| w * c * c).sum();
        Self { p, q, r0 }
    }

    pub fn dim(&self) -> usize {
        self.q.len()
    }

    pub fn eval(&self, x: &Vector) -> f64 {
        0.5 * x.dot(&(&self.p * x)) + self.q.dot(x) + self.r0
    }

    pub fn gradient(&self, x: &Vector) -> Vector {
        &self.p * x + &self.q
    }
}

/// `{z : Gz ≤ h, Ez = d}`. No rows at all means the whole space.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyhedralSet {
    pub g: DenseMatrix,
    pub h: Vector,
    pub e: DenseMatrix,
    pub d: Vector,
}

impl PolyhedralSet {
    pub fn new(g: DenseMatrix, h: Vector, e: DenseMatrix, d: Vector) -> Result<Self, ProblemError> {
        if g.nrows() != h.len() {
            return Err(structure(format!("G has {} rows but h has length {}", g.nrows(), h.len())));
        }
        if e.nrows() != d.len() {
            return Err(structure(format!("E has {} rows but d has length {}", e.nrows(), d.len())));
        }
        if g.ncols() != e.ncols() {
            return Err(structure(format!(
                "G has {} columns but E has {} columns",
                g.ncols(),
                e.ncols()
            )));
        }
        numerics::ensure_finite_matrix(&g, "G")?;
        numerics::ensure_finite_vector(&h, "h")?;
        numerics::ensure_finite_matrix(&e, "E")?;
        numerics::ensure_finite_vector(&d, "d")?;
        Ok(Self { g, h, e, d })
    }

    pub fn free(n: usize) -> Self {
        Self {
            g: DenseMatrix::zeros(0, n),
            h: Vector::zeros(0),
            e: DenseMatrix::zeros(0, n),
            d: Vector::zeros(0),
        }
    }

    /// Only inequality rows.
    pub fn halfspaces(g: DenseMatrix, h: Vector) -> Result<Self, ProblemError> {
        let n = g.ncols();
        Self::new(g, h, DenseMatrix::zeros(0, n), Vector::zeros(0))
    }

    /// `lower ≤ z ≤ upper`, encoded as `2n` inequality rows.
    pub fn boxed(lower: &[f64], upper: &[f64]) -> Result<Self, ProblemError> {
        if lower.len() != upper.len() {
            return Err(structure("box bounds differ in length"));
        }
        let n = lower.len();
        let mut g = DenseMatrix::zeros(2 * n, n);
        let mut h = Vector::zeros(2 * n);
        for i in 0..n {
            g[(i, i)] = 1.0;
            h[i] = upper[i];
            g[(n + i, i)] = -1.0;
            h[n + i] = -lower[i];
        }
        Self::halfspaces(g, h)
    }

    pub fn dim(&self) -> usize {
        self.g.ncols()
    }

    pub fn num_inequalities(&self) -> usize {
        self.g.nrows()
    }

    pub fn num_equalities(&self) -> usize {
        self.e.nrows()
    }

    pub fn is_whole_space(&self) -> bool {
        self.g.nrows() == 0 && self.e.nrows() == 0
    }

    pub fn contains(&self, z: &Vector, tol: f64) -> bool {
        let ineq_ok = (&self.g * z - &self.h).iter().all(|&v| v <= tol);
        let eq_ok = (&self.e * z - &self.d).iter().all(|&v| v.abs() <= tol);
        ineq_ok && eq_ok
    }

    /// Cartesian product `self × other`.
    pub fn product(&self, other: &PolyhedralSet) -> PolyhedralSet {
        PolyhedralSet {
            g: block_diag(&self.g, &other.g),
            h: vconcat(&[&self.h, &other.h]),
            e: block_diag(&self.e, &other.e),
            d: vconcat(&[&self.d, &other.d]),
        }
    }
}

/// A two-block instance. Fields follow the usual ADMM naming; `x_set` and
/// `y_set` are the polyhedra the blocks live in.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitProblem {
    pub f: QuadraticFunction,
    pub g: QuadraticFunction,
    pub a: DenseMatrix,
    pub b: DenseMatrix,
    pub c: Vector,
    pub x_set: PolyhedralSet,
    pub y_set: PolyhedralSet,
}

impl SplitProblem {
    pub fn new(
        f: QuadraticFunction,
        g: QuadraticFunction,
        a: DenseMatrix,
        b: DenseMatrix,
        c: Vector,
        x_set: PolyhedralSet,
        y_set: PolyhedralSet,
    ) -> Result<Self, ProblemError> {
        let (n1, n2, m) = (f.dim(), g.dim(), c.len());
        if a.shape() != (m, n1) {
            return Err(structure(format!("A is {:?}, expected ({m}, {n1})", a.shape())));
        }
        if b.shape() != (m, n2) {
            return Err(structure(format!("B is {:?}, expected ({m}, {n2})", b.shape())));
        }
        if x_set.dim() != n1 {
            return Err(structure(format!("X lives in dimension {}, x has {n1}", x_set.dim())));
        }
        if y_set.dim() != n2 {
            return Err(structure(format!("Y lives in dimension {}, y has {n2}", y_set.dim())));
        }
        if n1 == 0 || n2 == 0 || m == 0 {
            return Err(structure("x, y and the coupling constraint must be nonempty"));
        }
        numerics::ensure_finite_matrix(&a, "A")?;
        numerics::ensure_finite_matrix(&b, "B")?;
        numerics::ensure_finite_vector(&c, "c")?;
        Ok(Self { f, g, a, b, c, x_set, y_set })
    }

    pub fn n1(&self) -> usize {
        self.f.dim()
    }

    pub fn n2(&self) -> usize {
        self.g.dim()
    }

    pub fn m(&self) -> usize {
        self.c.len()
    }

    fn check_point(&self, x: &Vector, y: &Vector) -> Result<(), ProblemError> {
        if x.len() != self.n1() || y.len() != self.n2() {
            return Err(structure(format!(
                "point has dimensions ({}, {}), problem expects ({}, {})",
                x.len(),
                y.len(),
                self.n1(),
                self.n2()
            )));
        }
        Ok(())
    }

    /// `f(x) + g(y)`.
    pub fn evaluate_objective(&self, x: &Vector, y: &Vector) -> Result<f64, ProblemError> {
        self.check_point(x, y)?;
        Ok(self.f.eval(x) + self.g.eval(y))
    }

    /// `Ax + By - c`.
    pub fn primal_residual(&self, x: &Vector, y: &Vector) -> Result<Vector, ProblemError> {
        self.check_point(x, y)?;
        Ok(&self.a * x + &self.b * y - &self.c)
    }

    /// `f(x) + g(y) + λᵀr + (ρ/2)‖r‖²` with `r = Ax + By - c`.
    pub fn augmented_lagrangian(
        &self,
        rho: f64,
        x: &Vector,
        y: &Vector,
        lambda: &Vector,
    ) -> Result<f64, ProblemError> {
        if !(rho > 0.0) {
            return Err(ProblemError::Penalty(rho));
        }
        if lambda.len() != self.m() {
            return Err(structure(format!("multiplier has length {}, expected {}", lambda.len(), self.m())));
        }
        let r = self.primal_residual(x, y)?;
        Ok(self.evaluate_objective(x, y)? + lambda.dot(&r) + 0.5 * rho * r.norm_squared())
    }

    pub fn total_inequalities(&self) -> usize {
        self.x_set.num_inequalities() + self.y_set.num_inequalities()
    }
}

/// Global-consensus form of `minimize Σ f_i(z)` over `z ∈ ∩ S_i`: each agent
/// keeps a local copy `x_i`, `y` is the shared value, `x_i - y = 0`.
pub fn build_consensus(
    local_fs: &[QuadraticFunction],
    local_sets: &[PolyhedralSet],
) -> Result<SplitProblem, ProblemError> {
    let count = local_fs.len();
    if count == 0 {
        return Err(structure("consensus needs at least one local function"));
    }
    if local_sets.len() != count {
        return Err(structure(format!(
            "{count} local functions but {} local sets",
            local_sets.len()
        )));
    }
    let n = local_fs[0].dim();
    if local_fs.iter().any(|f| f.dim() != n) || local_sets.iter().any(|s| s.dim() != n) {
        return Err(structure("local functions and sets must share one dimension"));
    }

    let mut p = DenseMatrix::zeros(0, 0);
    let mut x_set = PolyhedralSet::free(0);
    for (f, s) in local_fs.iter().zip(local_sets) {
        p = block_diag(&p, &f.p);
        x_set = x_set.product(s);
    }
    let q = vconcat(&local_fs.iter().map(|f| &f.q).collect::<Vec<_>>());
    let r0 = local_fs.iter().map(|f| f.r0).sum();
    let f = QuadraticFunction { p, q, r0 };

    let a = DenseMatrix::identity(count * n, count * n);
    let neg_eye = -DenseMatrix::identity(n, n);
    let b = vstack(&vec![&neg_eye; count], n);
    SplitProblem::new(
        f,
        QuadraticFunction::zero(n),
        a,
        b,
        Vector::zeros(count * n),
        x_set,
        PolyhedralSet::free(n),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckOutcome {
    Pass,
    Fail,
    /// The feasibility probe could not decide within its budget.
    Unknown,
    /// Not decidable from the data alone; surfaces at solve time.
    Deferred,
}

impl fmt::Display for CheckOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            CheckOutcome::Pass => "PASS",
            CheckOutcome::Fail => "FAIL",
            CheckOutcome::Unknown => "UNKNOWN",
            CheckOutcome::Deferred => "DEFERRED",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssumptionCheck {
    /// 1: convex objectives, 2: nonempty polyhedral sets, 3: solvable, 4: full column rank.
    pub assumption: u8,
    pub subject: String,
    pub outcome: CheckOutcome,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub checks: Vec<AssumptionCheck>,
}

impl ValidationReport {
    /// Combined outcome per assumption: any failure wins, then unknown, then deferred.
    pub fn assumption_outcome(&self, assumption: u8) -> CheckOutcome {
        let outcomes: Vec<_> = self
            .checks
            .iter()
            .filter(|c| c.assumption == assumption)
            .map(|c| c.outcome)
            .collect();
        for o in [CheckOutcome::Fail, CheckOutcome::Unknown, CheckOutcome::Deferred] {
            if outcomes.contains(&o) {
                return o;
            }
        }
        CheckOutcome::Pass
    }

    /// No decidable check failed. Unknown and deferred checks do not count against.
    pub fn all_decidable_pass(&self) -> bool {
        self.checks.iter().all(|c| c.outcome != CheckOutcome::Fail)
    }

    pub fn failures(&self) -> impl Iterator<Item = &AssumptionCheck> {
        self.checks.iter().filter(|c| c.outcome == CheckOutcome::Fail)
    }

    /// One line per assumption, e.g. `assumption 4: FAIL (B: rank 1 < 2 columns)`.
    pub fn summary_lines(&self) -> Vec<String> {
        (1..=4)
            .map(|a| {
                let details: Vec<String> = self
                    .checks
                    .iter()
                    .filter(|c| c.assumption == a)
                    .map(|c| format!("{}: {}", c.subject, c.detail))
                    .collect();
                format!("assumption {a}: {} ({})", self.assumption_outcome(a), details.join("; "))
            })
            .collect()
    }
}

fn convexity_check(name: &str, q: &QuadraticFunction) -> AssumptionCheck {
    let min_eig = numerics::min_eigenvalue(&q.p);
    let pass = is_psd(&q.p, RANK_TOL * q.p.amax().max(1.0)).unwrap_or(false);
    AssumptionCheck {
        assumption: 1,
        subject: name.into(),
        outcome: if pass { CheckOutcome::Pass } else { CheckOutcome::Fail },
        detail: if q.dim() == 0 {
            "convex".into()
        } else if pass {
            format!("convex, min eigenvalue {min_eig:.3e}")
        } else {
            format!("not convex, min eigenvalue {min_eig:.3e}")
        },
    }
}

fn nonempty_check(name: &str, set: &PolyhedralSet) -> AssumptionCheck {
    let (outcome, detail) = match oracle::probe_feasibility(set) {
        Feasibility::Feasible(_) => (CheckOutcome::Pass, "nonempty polyhedron".to_string()),
        Feasibility::Infeasible => (CheckOutcome::Fail, "empty polyhedron".to_string()),
        Feasibility::Unknown => (
            CheckOutcome::Unknown,
            format!("{} inequalities exceed the probe budget", set.num_inequalities()),
        ),
    };
    AssumptionCheck { assumption: 2, subject: name.into(), outcome, detail }
}

fn rank_check(name: &str, m: &DenseMatrix) -> AssumptionCheck {
    let rank = numerical_rank(m, RANK_TOL).unwrap_or(0);
    let cols = m.ncols();
    AssumptionCheck {
        assumption: 4,
        subject: name.into(),
        outcome: if rank == cols { CheckOutcome::Pass } else { CheckOutcome::Fail },
        detail: if rank == cols {
            format!("full column rank {rank}")
        } else {
            format!("rank {rank} < {cols} columns, not full column rank")
        },
    }
}

/// Checks the convergence hypotheses one by one. Solvability of the coupled
/// problem is reported as deferred.
pub fn validate(prob: &SplitProblem) -> ValidationReport {
    let checks = vec![
        convexity_check("f", &prob.f),
        convexity_check("g", &prob.g),
        nonempty_check("X", &prob.x_set),
        nonempty_check("Y", &prob.y_set),
        AssumptionCheck {
            assumption: 3,
            subject: "problem".into(),
            outcome: CheckOutcome::Deferred,
            detail: "checked at solve time".into(),
        },
        rank_check("A", &prob.a),
        rank_check("B", &prob.b),
    ];
    ValidationReport { checks }
}

// ---------------------------------------------------------------------------
// JSON schema

#[derive(Debug, Clone, Serialize, Deserialize)]
struct QuadraticJson {
    #[serde(rename = "P")]
    p: Vec<Vec<f64>>,
    q: Vec<f64>,
    #[serde(default)]
    r0: f64,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
struct SetJson {
    #[serde(rename = "G", default, skip_serializing_if = "Option::is_none")]
    g: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    h: Option<Vec<f64>>,
    #[serde(rename = "E", default, skip_serializing_if = "Option::is_none")]
    e: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    d: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProblemJson {
    f: QuadraticJson,
    g: QuadraticJson,
    #[serde(rename = "A")]
    a: Vec<Vec<f64>>,
    #[serde(rename = "B")]
    b: Vec<Vec<f64>>,
    c: Vec<f64>,
    #[serde(rename = "X", default)]
    x: SetJson,
    #[serde(rename = "Y", default)]
    y: SetJson,
}

fn matrix_from_rows(rows: &[Vec<f64>], cols: usize, what: &str) -> Result<DenseMatrix, ProblemError> {
    if let Some(bad) = rows.iter().find(|r| r.len() != cols) {
        return Err(structure(format!("{what}: row of length {} where {cols} expected", bad.len())));
    }
    Ok(DenseMatrix::from_row_iterator(rows.len(), cols, rows.iter().flatten().cloned()))
}

fn matrix_to_rows(m: &DenseMatrix) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().cloned().collect()).collect()
}

impl QuadraticJson {
    fn into_quadratic(self, what: &str) -> Result<QuadraticFunction, ProblemError> {
        let n = self.q.len();
        let p = matrix_from_rows(&self.p, n, &format!("{what}.P"))?;
        QuadraticFunction::new(p, Vector::from_vec(self.q), self.r0)
    }

    fn from_quadratic(q: &QuadraticFunction) -> Self {
        Self { p: matrix_to_rows(&q.p), q: q.q.iter().cloned().collect(), r0: q.r0 }
    }
}

impl SetJson {
    fn into_set(self, n: usize, what: &str) -> Result<PolyhedralSet, ProblemError> {
        let g = matrix_from_rows(self.g.as_deref().unwrap_or(&[]), n, &format!("{what}.G"))?;
        let e = matrix_from_rows(self.e.as_deref().unwrap_or(&[]), n, &format!("{what}.E"))?;
        let h = Vector::from_vec(self.h.unwrap_or_default());
        let d = Vector::from_vec(self.d.unwrap_or_default());
        PolyhedralSet::new(g, h, e, d)
    }

    fn from_set(s: &PolyhedralSet) -> Self {
        let mut out = SetJson::default();
        if s.num_inequalities() > 0 {
            out.g = Some(matrix_to_rows(&s.g));
            out.h = Some(s.h.iter().cloned().collect());
        }
        if s.num_equalities() > 0 {
            out.e = Some(matrix_to_rows(&s.e));
            out.d = Some(s.d.iter().cloned().collect());
        }
        out
    }
}

impl SplitProblem {
    pub fn from_json_str(text: &str) -> Result<Self, ProblemJsonError> {
        let raw: ProblemJson = serde_json::from_str(text)?;
        let (n1, n2) = (raw.f.q.len(), raw.g.q.len());
        let f = raw.f.into_quadratic("f")?;
        let g = raw.g.into_quadratic("g")?;
        let a = matrix_from_rows(&raw.a, n1, "A")?;
        let b = matrix_from_rows(&raw.b, n2, "B")?;
        let x_set = raw.x.into_set(n1, "X")?;
        let y_set = raw.y.into_set(n2, "Y")?;
        Ok(SplitProblem::new(f, g, a, b, Vector::from_vec(raw.c), x_set, y_set)?)
    }

    pub fn to_json_string(&self) -> String {
        let raw = ProblemJson {
            f: QuadraticJson::from_quadratic(&self.f),
            g: QuadraticJson::from_quadratic(&self.g),
            a: matrix_to_rows(&self.a),
            b: matrix_to_rows(&self.b),
            c: self.c.iter().cloned().collect(),
            x: SetJson::from_set(&self.x_set),
            y: SetJson::from_set(&self.y_set),
        };
        serde_json::to_string_pretty(&raw).expect("problem data is always serializable")
    }
}

#[derive(Debug, Error)]
pub enum ProblemJsonError {
    #[error("malformed problem JSON: {0}")]
    Parse(#[from] serde_json::Error),
    #[error(transparent)]
    Problem(#[from] ProblemError),
}

/// Scalar test instance: `f = (x-1)²`, `g = (y-2)²`, `x - y = 0`, free sets.
pub fn p1() -> SplitProblem {
    SplitProblem::new(
        QuadraticFunction::weighted_distance(&[1.0], &[1.0]),
        QuadraticFunction::weighted_distance(&[1.0], &[2.0]),
        DenseMatrix::from_element(1, 1, 1.0),
        DenseMatrix::from_element(1, 1, -1.0),
        Vector::zeros(1),
        PolyhedralSet::free(1),
        PolyhedralSet::free(1),
    )
    .expect("P1 is well formed")
}

/// [`p1`] with `X = {x ≤ 1}`.
pub fn p2() -> SplitProblem {
    let mut prob = p1();
    prob.x_set = PolyhedralSet::halfspaces(DenseMatrix::from_element(1, 1, 1.0), Vector::from_element(1, 1.0))
        .expect("well formed");
    prob
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(data: &[f64]) -> Vector {
        Vector::from_row_slice(data)
    }

    #[test]
    fn p1_validates() {
        let report = validate(&p1());
        assert!(report.all_decidable_pass());
        for a in [1, 2, 4] {
            assert_eq!(report.assumption_outcome(a), CheckOutcome::Pass);
        }
        assert_eq!(report.assumption_outcome(3), CheckOutcome::Deferred);
    }

    #[test]
    fn zero_b_fails_rank() {
        let mut prob = p1();
        prob.g = QuadraticFunction::weighted_distance(&[1.0, 1.0], &[0.0, 0.0]);
        prob.b = DenseMatrix::zeros(1, 2);
        prob.y_set = PolyhedralSet::free(2);
        let report = validate(&prob);
        assert_eq!(report.assumption_outcome(4), CheckOutcome::Fail);
        let failed: Vec<_> = report.failures().map(|c| c.subject.as_str()).collect();
        assert_eq!(failed, vec!["B"]);
    }

    #[test]
    fn indefinite_f_fails_convexity() {
        let mut prob = p1();
        prob.f = QuadraticFunction::new(
            DenseMatrix::from_row_slice(2, 2, &[1., 2., 2., 1.]),
            Vector::zeros(2),
            0.0,
        )
        .unwrap();
        prob.a = DenseMatrix::from_row_slice(1, 2, &[1., 0.]);
        prob.x_set = PolyhedralSet::free(2);
        let report = validate(&prob);
        assert_eq!(report.assumption_outcome(1), CheckOutcome::Fail);
        assert!(report.summary_lines()[0].starts_with("assumption 1: FAIL"));
    }

    #[test]
    fn empty_set_fails_nonemptiness() {
        let mut prob = p1();
        prob.y_set = PolyhedralSet::boxed(&[1.0], &[-1.0]).unwrap();
        assert_eq!(validate(&prob).assumption_outcome(2), CheckOutcome::Fail);
    }

    #[test]
    fn objective_examples() {
        let prob = p1();
        assert_eq!(prob.evaluate_objective(&v(&[1.]), &v(&[2.])).unwrap(), 0.0);
        assert_eq!(prob.evaluate_objective(&v(&[1.5]), &v(&[1.5])).unwrap(), 0.5);
        assert_eq!(prob.evaluate_objective(&v(&[0.]), &v(&[0.])).unwrap(), 5.0);
        assert!(prob.evaluate_objective(&v(&[0., 1.]), &v(&[0.])).is_err());
    }

    #[test]
    fn residual_examples() {
        let prob = p1();
        assert_eq!(prob.primal_residual(&v(&[1.5]), &v(&[1.5])).unwrap()[0], 0.0);
        let r = prob.primal_residual(&v(&[2. / 3.]), &v(&[14. / 9.])).unwrap()[0];
        assert!((r + 8. / 9.).abs() < 1e-15);
        assert_eq!(prob.primal_residual(&v(&[0.]), &v(&[0.])).unwrap()[0], 0.0);
    }

    #[test]
    fn augmented_lagrangian_examples() {
        let prob = p1();
        let al = |rho, x, y, l| prob.augmented_lagrangian(rho, &v(&[x]), &v(&[y]), &v(&[l])).unwrap();
        assert_eq!(al(1.0, 1.5, 1.5, -1.0), 0.5);
        assert_eq!(al(1.0, 0.0, 0.0, 0.0), 5.0);
        // f(1) = 0, g(0) = 4, r = 1: 0 + 4 + 1 + 1
        assert_eq!(al(2.0, 1.0, 0.0, 1.0), 6.0);
        assert_eq!(
            prob.augmented_lagrangian(0.0, &v(&[0.]), &v(&[0.]), &v(&[0.])),
            Err(ProblemError::Penalty(0.0))
        );
    }

    #[test]
    fn consensus_shapes() {
        let fs = vec![
            QuadraticFunction::weighted_distance(&[1.0], &[1.0]),
            QuadraticFunction::weighted_distance(&[1.0], &[3.0]),
        ];
        let sets = vec![PolyhedralSet::free(1), PolyhedralSet::free(1)];
        let prob = build_consensus(&fs, &sets).unwrap();
        assert_eq!((prob.n1(), prob.n2(), prob.m()), (2, 1, 2));
        assert_eq!(prob.b, DenseMatrix::from_row_slice(2, 1, &[-1., -1.]));
        assert_eq!(prob.a, DenseMatrix::identity(2, 2));
        assert!(validate(&prob).all_decidable_pass());

        let bad = build_consensus(&fs, &[PolyhedralSet::free(1), PolyhedralSet::free(2)]);
        assert!(matches!(bad, Err(ProblemError::Structure(_))));
    }

    #[test]
    fn structural_errors() {
        let prob = p1();
        let err = SplitProblem::new(
            prob.f.clone(),
            prob.g.clone(),
            DenseMatrix::zeros(2, 1),
            prob.b.clone(),
            prob.c.clone(),
            prob.x_set.clone(),
            prob.y_set.clone(),
        );
        assert!(matches!(err, Err(ProblemError::Structure(_))));
        assert!(QuadraticFunction::new(DenseMatrix::identity(2, 2), Vector::zeros(3), 0.0).is_err());
    }

    #[test]
    fn json_absent_rows_mean_whole_space() {
        let text = r#"{"f":{"P":[[2]],"q":[-2],"r0":1},"g":{"P":[[2]],"q":[-4],"r0":4},
                       "A":[[1]],"B":[[-1]],"c":[0],"X":{},"Y":{}}"#;
        let prob = SplitProblem::from_json_str(text).unwrap();
        assert_eq!(prob, p1());
        assert!(SplitProblem::from_json_str("{\"f\":").is_err());
    }

    #[test]
    fn membership_tolerance() {
        let set = PolyhedralSet::boxed(&[0.0], &[1.0]).unwrap();
        assert!(set.contains(&v(&[1.0 + 1e-9]), MEMBERSHIP_TOL));
        assert!(!set.contains(&v(&[1.0 + 1e-6]), MEMBERSHIP_TOL));
        assert!(PolyhedralSet::free(3).is_whole_space());
    }
}
