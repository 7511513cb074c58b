//! ADMM for two-block problems with convex quadratic objectives over
//! polyhedral sets, instrumented with the quantities of its convergence proof.
//!
//! * [`problem`]: data model, validation of the convergence hypotheses, JSON I/O.
//! * [`subsolver`]: exact active-set QP solver for the x- and y-updates.
//! * [`oracle`]: brute-force KKT enumeration used as ground truth.
//! * [`engine`]: the iteration itself and its stopping rule.
//! * [`certificates`]: Lyapunov function, gap bounds, dual attainment.
//! * [`generate`]: seeded random instances.
//! * [`cli`]: the `admm` command-line front end.

pub mod certificates;
pub mod cli;
pub mod engine;
pub mod generate;
pub mod numerics;
pub mod oracle;
pub mod problem;
pub mod subsolver;

pub use certificates::CertificateRecord;
pub use engine::{solve, step, CertificateMode, IterateState, SolveReport, SolveStatus, SolverConfig};
pub use numerics::{DenseMatrix, Vector};
pub use oracle::{solve_split_bruteforce, ReferenceSolution};
pub use problem::{validate, PolyhedralSet, QuadraticFunction, SplitProblem, ValidationReport};
