use std::io;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use admm_core::cli::{self, GenKind, ReferenceMode, RunManifest};
use admm_core::generate::RandomQpParams;
use admm_core::{CertificateMode, SolverConfig};
use admm_core::engine::StartRule;

#[derive(Parser)]
#[command(name = "admm", version, about = "ADMM for polyhedral QPs with convergence certificates")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check the convergence assumptions for a problem file.
    Validate { problem: PathBuf },
    /// Run ADMM and write trace.csv and report.json.
    Solve(SolveArgs),
    /// Print the brute-force reference solution as JSON.
    Oracle { problem: PathBuf },
    /// Write a seeded random problem.
    Gen(GenArgs),
}

#[derive(Args)]
struct SolveArgs {
    problem: PathBuf,
    #[arg(long, default_value_t = 1.0)]
    rho: f64,
    #[arg(long, default_value_t = 10_000)]
    max_iters: usize,
    #[arg(long, default_value_t = 1e-8)]
    eps_primal: f64,
    #[arg(long, default_value_t = 1e-8)]
    eps_dual: f64,
    #[arg(long, value_enum, default_value_t = Certificates::Cheap)]
    certificates: Certificates,
    #[arg(long, value_enum, default_value_t = Reference::None)]
    reference: Reference,
    #[arg(long, value_enum, default_value_t = Start::Consistent)]
    start: Start,
    /// Recorded in the report; the solve itself is deterministic.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum Certificates {
    Off,
    Cheap,
    Full,
}

#[derive(Clone, Copy, ValueEnum)]
enum Reference {
    None,
    Oracle,
}

#[derive(Clone, Copy, ValueEnum)]
enum Start {
    Consistent,
    Zero,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    RandomQp,
    Consensus,
}

#[derive(Args)]
struct GenArgs {
    #[arg(value_enum)]
    kind: Kind,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Output file.
    #[arg(long)]
    out: PathBuf,
    /// random-qp sizes; any omitted size is sampled from the seed when all are omitted,
    /// and defaults otherwise.
    #[arg(long)]
    n1: Option<usize>,
    #[arg(long)]
    n2: Option<usize>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    ineq_x: Option<usize>,
    #[arg(long)]
    ineq_y: Option<usize>,
    #[arg(long)]
    eq_x: Option<usize>,
    #[arg(long)]
    eq_y: Option<usize>,
    /// Duplicate a column of B (violates the rank assumption).
    #[arg(long)]
    rank_deficient_b: bool,
    /// consensus: number of agents.
    #[arg(long, default_value_t = 2)]
    agents: usize,
    /// consensus: shared dimension.
    #[arg(long, default_value_t = 2)]
    dim: usize,
    /// consensus: give each agent a box.
    #[arg(long)]
    boxed: bool,
}

impl GenArgs {
    fn kind(&self) -> GenKind {
        match self.kind {
            Kind::Consensus => GenKind::Consensus { agents: self.agents, dim: self.dim, boxed: self.boxed },
            Kind::RandomQp => {
                let sizes = [self.n1, self.n2, self.m, self.ineq_x, self.ineq_y, self.eq_x, self.eq_y];
                if sizes.iter().all(Option::is_none) && !self.rank_deficient_b {
                    return GenKind::RandomQp(None);
                }
                let d = RandomQpParams::default();
                GenKind::RandomQp(Some(RandomQpParams {
                    n1: self.n1.unwrap_or(d.n1),
                    n2: self.n2.unwrap_or(d.n2),
                    m: self.m.unwrap_or(d.m),
                    ineq_x: self.ineq_x.unwrap_or(d.ineq_x),
                    ineq_y: self.ineq_y.unwrap_or(d.ineq_y),
                    eq_x: self.eq_x.unwrap_or(d.eq_x),
                    eq_y: self.eq_y.unwrap_or(d.eq_y),
                    rank_deficient_b: self.rank_deficient_b,
                }))
            }
        }
    }
}

impl SolveArgs {
    fn manifest(self) -> RunManifest {
        RunManifest {
            config: SolverConfig {
                rho: self.rho,
                max_iters: self.max_iters,
                eps_primal: self.eps_primal,
                eps_dual: self.eps_dual,
                certificate_mode: match self.certificates {
                    Certificates::Off => CertificateMode::Off,
                    Certificates::Cheap => CertificateMode::Cheap,
                    Certificates::Full => CertificateMode::Full,
                },
                start: match self.start {
                    Start::Consistent => StartRule::Consistent,
                    Start::Zero => StartRule::Zero,
                },
            },
            reference_mode: match self.reference {
                Reference::None => ReferenceMode::None,
                Reference::Oracle => ReferenceMode::Oracle,
            },
            problem_path: self.problem,
            output_path: self.out,
            seed: self.seed,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut stdout = io::stdout().lock();
    let result = match cli.command {
        Command::Validate { problem } => cli::cmd_validate(&problem, &mut stdout),
        Command::Solve(args) => cli::cmd_solve(&args.manifest(), &mut stdout),
        Command::Oracle { problem } => cli::cmd_oracle(&problem, &mut stdout),
        Command::Gen(args) => cli::cmd_gen(args.kind(), args.seed, &args.out),
    };
    let code = match result {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            err.exit_code()
        }
    };
    ExitCode::from(code as u8)
}
