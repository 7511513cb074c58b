//! Writes a seeded random problem as JSON and reads it back.

use admm_core::generate::{random_qp, RandomQpParams};
use admm_core::SplitProblem;

fn main() {
    let params = RandomQpParams { n1: 3, n2: 2, m: 3, ..RandomQpParams::default() };
    let prob = random_qp(7, &params);
    let text = prob.to_json_string();
    println!("{text}");
    let back = SplitProblem::from_json_str(&text).expect("round trip");
    assert_eq!(back, prob);
    assert_eq!(random_qp(7, &params), prob, "same seed, same problem");
}
