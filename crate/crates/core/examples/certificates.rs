//! Runs a random QP with every certificate switched on and reports how close
//! each inequality came to being violated along the way.

use admm_core::certificates::posthoc_lyapunov;
use admm_core::generate::random_qp_sampled;
use admm_core::{solve, solve_split_bruteforce, CertificateMode, SolverConfig};

fn min_of(values: impl Iterator<Item = f64>) -> f64 {
    values.fold(f64::INFINITY, f64::min)
}

fn main() {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(3);
    let (params, prob) = random_qp_sampled(seed);
    println!("seed {seed}: n1 {} n2 {} m {}", params.n1, params.n2, params.m);

    let reference = solve_split_bruteforce(&prob).expect("oracle within capacity");
    let cfg = SolverConfig::default().with_mode(CertificateMode::Full);
    let report = solve(&prob, &cfg, None, Some(&reference)).expect("valid config");
    let trace = &report.trace;

    println!("{} after {} iterations, |p - p*| = {:.2e}", report.status, report.iterations, (report.final_state.p - reference.p_star).abs());
    println!("V^0 = {:.4e}", report.initial_lyapunov.unwrap_or(f64::NAN));
    println!("min Lyapunov descent slack  {:.3e}", min_of(trace.iter().filter_map(|r| r.lyapunov_descent_slack)));
    println!("min lower gap slack         {:.3e}", min_of(trace.iter().filter_map(|r| r.ineq1_slack)));
    println!("min upper gap slack         {:.3e}", min_of(trace.iter().filter_map(|r| r.ineq2_slack)));
    println!("max (B dy)^T r              {:.3e}", -min_of(trace.iter().map(|r| -r.inner_product)));
    if let Some(last) = trace.last() {
        println!("final dual gap              {:.3e}", last.dual_gap.unwrap_or(f64::NAN));
    }

    // The limit point stands in for the optimum when no oracle is available.
    let v = posthoc_lyapunov(&prob, cfg.rho, &report.history);
    println!("post-hoc V: first {:.3e}, last {:.3e}", v.first().unwrap_or(&f64::NAN), v.last().unwrap_or(&f64::NAN));
}
