//! Compares the active-set subsolver with exhaustive active-set enumeration on
//! a batch of random strictly convex QPs.

use admm_core::generate::{random_strictly_convex_qp, rng_from_seed};
use admm_core::oracle::solve_qp_bruteforce;
use admm_core::subsolver::solve_qp;

fn main() {
    let mut rng = rng_from_seed(11);
    let mut worst: f64 = 0.0;
    for i in 0..200 {
        let sub = random_strictly_convex_qp(&mut rng, 1 + i % 5, i % 7);
        let fast = solve_qp(&sub).expect("nonempty set");
        let exact = solve_qp_bruteforce(&sub).expect("nonempty set");
        worst = worst.max((&fast.z - &exact.z).amax());
    }
    println!("200 QPs, largest coordinate difference {worst:.2e}");
}
