//! Checks the standing assumptions on a good problem and two broken ones.

use admm_core::problem::p1;
use admm_core::{validate, DenseMatrix, PolyhedralSet, QuadraticFunction, SplitProblem, Vector};

fn show(name: &str, prob: &SplitProblem) {
    println!("{name}:");
    for line in validate(prob).summary_lines() {
        println!("  {line}");
    }
}

fn main() {
    show("P1", &p1());

    let mut concave = p1();
    concave.f = QuadraticFunction::new(DenseMatrix::from_element(1, 1, -2.0), Vector::zeros(1), 0.0).expect("square");
    show("concave f", &concave);

    let mut empty = p1();
    empty.y_set = PolyhedralSet::halfspaces(DenseMatrix::from_row_slice(2, 1, &[1.0, -1.0]), Vector::from_row_slice(&[-1.0, -1.0]))
        .expect("well formed");
    show("empty Y", &empty);
}
