//! The scalar instance `min (x-1)² + (y-2)²  s.t.  x = y`, solved from the
//! zero start so the first few iterates can be checked by hand.

use admm_core::engine::StartRule;
use admm_core::problem::p1;
use admm_core::{solve, solve_split_bruteforce, CertificateMode, SolverConfig};

fn main() {
    let prob = p1();
    let reference = solve_split_bruteforce(&prob).expect("P1 has an exact solution");
    let cfg = SolverConfig::default().with_mode(CertificateMode::Full).with_start(StartRule::Zero);
    let report = solve(&prob, &cfg, None, Some(&reference)).expect("valid config");

    println!("{:>3} {:>12} {:>12} {:>12} {:>12}", "k", "x", "y", "lambda", "V");
    for state in report.history.iter().take(6) {
        let v = admm_core::certificates::lyapunov(&prob, cfg.rho, state, &reference);
        println!("{:>3} {:>12.8} {:>12.8} {:>12.8} {:>12.3e}", state.k, state.x[0], state.y[0], state.lambda[0], v);
    }
    let last = &report.final_state;
    println!("{} after {} iterations: p = {:.10} (p* = {})", report.status, report.iterations, last.p, reference.p_star);
}
