//! Global consensus: three agents each hold a private quadratic and a box,
//! and ADMM agrees on a shared point that minimizes the sum.

use admm_core::problem::build_consensus;
use admm_core::{solve, solve_split_bruteforce, PolyhedralSet, QuadraticFunction, SolverConfig};

fn main() {
    let centers = [[0.0, 0.0], [2.0, 1.0], [1.0, 3.0]];
    let local_fs: Vec<_> = centers.iter().map(|c| QuadraticFunction::weighted_distance(&[1.0, 1.0], c)).collect();
    let local_sets: Vec<_> = (0..3)
        .map(|i| PolyhedralSet::boxed(&[-1.0, -1.0], &[0.5 + 0.5 * i as f64, 1.0 + i as f64]).expect("well-formed box"))
        .collect();
    let prob = build_consensus(&local_fs, &local_sets).expect("matching dimensions");

    let report = solve(&prob, &SolverConfig::default(), None, None).expect("valid config");
    let reference = solve_split_bruteforce(&prob).expect("small enough to enumerate");
    let y = &report.final_state.y;
    println!("{} after {} iterations", report.status, report.iterations);
    println!("shared point  ({:.6}, {:.6})", y[0], y[1]);
    println!("exact         ({:.6}, {:.6})", reference.y_star[0], reference.y_star[1]);
    for (i, x) in report.final_state.x.as_slice().chunks(2).enumerate() {
        println!("agent {i} copy  ({:.6}, {:.6})", x[0], x[1]);
    }
}
