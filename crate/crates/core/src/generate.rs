//! Seeded random test instances.
//!
//! Quadratics are `LLᵀ + 0.1 I` with uniform `L`. Coupling matrices are
//! uniform and repaired to full column rank by adding to the diagonal. Sets
//! are built around a sampled point `(x̂, ŷ)` and `c = Ax̂ + Bŷ`, so every
//! generated instance is feasible and, with positive definite objectives,
//! solvable.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::numerics::{numerical_rank, thin_svd, DenseMatrix, Vector};
use crate::problem::{build_consensus, PolyhedralSet, QuadraticFunction, SplitProblem};
use crate::subsolver::QpSubproblem;

/// Rank tolerance the generator repairs against. It is looser than the
/// validation tolerance, so repaired matrices pass validation with margin.
pub const GENERATOR_RANK_TOL: f64 = 1e-6;

/// Smallest singular value of generated coupling matrices; the largest is 1. Badly conditioned couplings make ADMM crawl without teaching the
/// tests anything new.
pub const MIN_SINGULAR_RATIO: f64 = 0.3;

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RandomQpParams {
    pub n1: usize,
    pub n2: usize,
    pub m: usize,
    pub ineq_x: usize,
    pub ineq_y: usize,
    pub eq_x: usize,
    pub eq_y: usize,
    /// Duplicate a column of `B` so it loses full column rank.
    pub rank_deficient_b: bool,
}

impl Default for RandomQpParams {
    fn default() -> Self {
        Self { n1: 2, n2: 2, m: 2, ineq_x: 2, ineq_y: 2, eq_x: 0, eq_y: 0, rank_deficient_b: false }
    }
}

impl RandomQpParams {
    /// Random sizes with `n1, n2 ≤ m ≤ 4` and at most six inequalities per set.
    /// The affine part of the feasible set always keeps at least one degree of
    /// freedom: when `Ax + By = c` and the equalities pin a single point, the
    /// multipliers are arbitrary in size and ADMM spends its budget growing them.
    pub fn sample<R: Rng>(rng: &mut R) -> Self {
        loop {
            let m = rng.gen_range(1..=4);
            let n1 = rng.gen_range(1..=m);
            let n2 = rng.gen_range(1..=m);
            let eq_x = if n1 > 1 && rng.gen_bool(0.2) { 1 } else { 0 };
            let eq_y = if n2 > 1 && rng.gen_bool(0.2) { 1 } else { 0 };
            if n1 + n2 <= m + eq_x + eq_y {
                continue;
            }
            return Self {
                n1,
                n2,
                m,
                ineq_x: rng.gen_range(0..=6),
                ineq_y: rng.gen_range(0..=6),
                eq_x,
                eq_y,
                rank_deficient_b: false,
            };
        }
    }
}

fn uniform_matrix<R: Rng>(rng: &mut R, rows: usize, cols: usize, scale: f64) -> DenseMatrix {
    DenseMatrix::from_fn(rows, cols, |_, _| rng.gen_range(-scale..=scale))
}

fn uniform_vector<R: Rng>(rng: &mut R, n: usize, scale: f64) -> Vector {
    Vector::from_fn(n, |_, _| rng.gen_range(-scale..=scale))
}

pub fn random_pd_quadratic<R: Rng>(rng: &mut R, n: usize) -> QuadraticFunction {
    let l = uniform_matrix(rng, n, n, 1.0);
    let p = &l * l.transpose() + DenseMatrix::identity(n, n) * 0.1;
    let p = (&p + p.transpose()) * 0.5;
    QuadraticFunction { p, q: uniform_vector(rng, n, 2.0), r0: 0.0 }
}

/// Uniform `rows × cols` matrix with `rows ≥ cols`, nudged to full column rank
/// and then rescaled so its singular values lie in `[MIN_SINGULAR_RATIO, 1]`.
pub fn random_full_column_rank<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> DenseMatrix {
    let mut m = uniform_matrix(rng, rows, cols, 1.0);
    let mut i = 0;
    while numerical_rank(&m, GENERATOR_RANK_TOL).unwrap_or(0) < cols.min(rows) {
        m[(i % rows, i % cols)] += 1.0;
        i += 1;
    }
    let (u, mut sigma, v) = thin_svd(&m);
    let top = sigma.max();
    sigma.apply(|s| *s = (*s / top).max(MIN_SINGULAR_RATIO));
    u * DenseMatrix::from_diagonal(&sigma) * v.transpose()
}

/// Unit-norm inequalities `Gz ≤ h` that `center` satisfies, about one in five tightly,
/// plus equalities through `center`.
pub fn random_set_around<R: Rng>(rng: &mut R, center: &Vector, ineq: usize, eq: usize) -> PolyhedralSet {
    let n = center.len();
    let mut g = uniform_matrix(rng, ineq, n, 1.0);
    for mut row in g.row_iter_mut() {
        let norm = row.norm();
        if norm > 0.0 {
            row /= norm;
        }
    }
    let margins = Vector::from_fn(ineq, |_, _| if rng.gen_bool(0.2) { 0.0 } else { rng.gen_range(0.0..1.0) });
    let h = &g * center + margins;
    let e = uniform_matrix(rng, eq, n, 1.0);
    let d = &e * center;
    PolyhedralSet::new(g, h, e, d).expect("shapes agree by construction")
}

pub fn random_qp(seed: u64, params: &RandomQpParams) -> SplitProblem {
    let mut rng = rng_from_seed(seed);
    random_qp_with(&mut rng, params)
}

/// Sizes sampled from the seed's own stream, then the instance from the rest
/// of it, so a single seed pins everything.
pub fn random_qp_sampled(seed: u64) -> (RandomQpParams, SplitProblem) {
    let mut rng = rng_from_seed(seed);
    let params = RandomQpParams::sample(&mut rng);
    let prob = random_qp_with(&mut rng, &params);
    (params, prob)
}

pub fn random_qp_with<R: Rng>(rng: &mut R, params: &RandomQpParams) -> SplitProblem {
    let RandomQpParams { n1, n2, m, ineq_x, ineq_y, eq_x, eq_y, rank_deficient_b } = *params;
    let f = random_pd_quadratic(rng, n1);
    let g = random_pd_quadratic(rng, n2);
    let a = random_full_column_rank(rng, m, n1);
    let mut b = random_full_column_rank(rng, m, n2);
    if rank_deficient_b && n2 >= 2 {
        let first = b.column(0).into_owned();
        b.set_column(n2 - 1, &first);
    }
    let x_hat = uniform_vector(rng, n1, 1.0);
    let y_hat = uniform_vector(rng, n2, 1.0);
    let x_set = random_set_around(rng, &x_hat, ineq_x, eq_x);
    let y_set = random_set_around(rng, &y_hat, ineq_y, eq_y);
    let c = &a * &x_hat + &b * &y_hat;
    SplitProblem::new(f, g, a, b, c, x_set, y_set).expect("shapes agree by construction")
}

/// Consensus over `agents` local quadratics in dimension `dim`; with `boxed`
/// each agent also gets a random box containing a common point.
pub fn random_consensus(seed: u64, agents: usize, dim: usize, boxed: bool) -> SplitProblem {
    let mut rng = rng_from_seed(seed);
    let common = uniform_vector(&mut rng, dim, 1.0);
    let fs: Vec<_> = (0..agents).map(|_| random_pd_quadratic(&mut rng, dim)).collect();
    let sets: Vec<_> = (0..agents)
        .map(|_| {
            if boxed {
                let lower: Vec<f64> = common.iter().map(|c| c - rng.gen_range(0.0..1.0)).collect();
                let upper: Vec<f64> = common.iter().map(|c| c + rng.gen_range(0.0..1.0)).collect();
                PolyhedralSet::boxed(&lower, &upper).expect("bounds have equal length")
            } else {
                PolyhedralSet::free(dim)
            }
        })
        .collect();
    build_consensus(&fs, &sets).expect("agents share one dimension")
}

/// Strictly convex QP in dimension `n` with `p` inequalities (and an equality
/// one time in five when `n > 1`), feasible by construction.
pub fn random_strictly_convex_qp<R: Rng>(rng: &mut R, n: usize, p: usize) -> QpSubproblem {
    let quad = random_pd_quadratic(rng, n);
    let center = uniform_vector(rng, n, 1.0);
    let eq = if n > 1 && rng.gen_bool(0.2) { 1 } else { 0 };
    let set = random_set_around(rng, &center, p, eq);
    // push the unconstrained minimizer away from the feasible point so constraints bind
    let l = quad.q * 2.0;
    QpSubproblem::new(quad.p, l, set).expect("shapes agree by construction")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::validate;

    #[test]
    fn same_seed_same_problem() {
        let params = RandomQpParams::default();
        assert_eq!(random_qp(1, &params).to_json_string(), random_qp(1, &params).to_json_string());
        assert_ne!(random_qp(1, &params), random_qp(2, &params));
    }

    #[test]
    fn generated_instances_validate() {
        let mut rng = rng_from_seed(7);
        for seed in 0..100 {
            let params = RandomQpParams::sample(&mut rng);
            let prob = random_qp(seed, &params);
            let report = validate(&prob);
            assert!(report.all_decidable_pass(), "seed {seed}: {:?}", report.summary_lines());
        }
    }

    #[test]
    fn rank_deficient_b_fails_validation() {
        let params = RandomQpParams { n2: 2, m: 3, rank_deficient_b: true, ..Default::default() };
        let report = validate(&random_qp(3, &params));
        assert_eq!(report.failures().map(|c| c.subject.as_str()).collect::<Vec<_>>(), vec!["B"]);
    }

    #[test]
    fn consensus_b_is_stacked_negative_identity() {
        let prob = random_consensus(5, 2, 3, true);
        let neg = -DenseMatrix::identity(3, 3);
        assert_eq!(prob.b.rows(0, 3).into_owned(), neg);
        assert_eq!(prob.b.rows(3, 3).into_owned(), neg);
        assert!(validate(&prob).all_decidable_pass());
    }
}
