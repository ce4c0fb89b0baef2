//! `dikernel`: batch front end to the dikernel library.

mod input;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use dikernel::dynamics::{consensus, stationary_density};
use dikernel::game::{epsilon_residual, solve_nash, GameSpecInput, Player, ProfileInput, ResidualOptions, SolverOptions};
use dikernel::kernel::analytic::catalog;
use dikernel::kernel::{iterate, LipschitzMeta};
use dikernel::metrics::{
    analytic_cut_distance, bound_discounted, bound_dynamic, bound_one_step, bound_partition, bound_two_kernel_discounted,
    cut_norm, min_partition_size, BoundKind, BoundReport, SignedBlockKernel, EXACT_CUT_LIMIT,
};
use dikernel::transform::{discretize_kernel, lift, reduce_dimension, Grouping};
use dikernel::{Error, OpinionFunction};
use serde::Serialize;

use input::{parse_list, parse_partition, read_json, read_kernel, read_model};
use output::{canonical_json, emit, trajectory_csv};

#[derive(Parser)]
#[command(name = "dikernel", version, about = "Continuous DeGroot dynamics, cut-norm bounds and the lobby game")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Output file; stdout when absent.
    #[arg(long, short)]
    output: Option<PathBuf>,
    /// Seed for every randomized routine.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Subcommand)]
enum Command {
    /// Iterate opinions under a kernel: trajectory CSV, optional consensus JSON.
    Simulate {
        #[arg(long)]
        kernel: PathBuf,
        /// Comma-separated initial opinions, one per kernel cell.
        #[arg(long)]
        opinions: String,
        #[arg(long, default_value_t = 10)]
        t: usize,
        /// Consensus report destination.
        #[arg(long)]
        report: Option<PathBuf>,
        /// Cells used for catalog kernels.
        #[arg(long, default_value_t = 64)]
        resolution: usize,
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
        #[arg(long, default_value_t = 100_000)]
        max_iter: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Block averages of a kernel over a partition.
    Discretize {
        #[arg(long)]
        kernel: PathBuf,
        /// `uniform:<n>` or breakpoints such as `0,0.25,0.75,1`.
        #[arg(long)]
        partition: String,
        #[arg(long, default_value_t = 256)]
        resolution: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Block kernel of a (weighted) DeGroot matrix.
    Lift {
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long)]
        partition: Option<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Group agents of a DeGroot model into a smaller weighted model.
    Reduce {
        #[arg(long)]
        model: PathBuf,
        /// Contiguous 0-based groups, e.g. `[[0],[1,2],[3,4,5]]`.
        #[arg(long)]
        groups: String,
        #[command(flatten)]
        common: Common,
    },
    /// Cut norm of `A − B`, or of `W − W_V` for a catalog kernel.
    Cutnorm {
        #[arg(long)]
        a: Option<PathBuf>,
        #[arg(long)]
        b: Option<PathBuf>,
        /// Analytic kernel name (e.g. `bands`, `bilinear:0.5`).
        #[arg(long, conflicts_with_all = ["a", "b"])]
        catalog: Option<String>,
        #[arg(long, requires = "catalog")]
        partition: Option<String>,
        /// Cells of the fine discretization standing in for an analytic kernel.
        #[arg(long, default_value_t = 64)]
        fine: usize,
        #[arg(long, default_value_t = 64)]
        resolution: usize,
        #[arg(long, default_value_t = 50)]
        restarts: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Evaluate an error bound.
    Bounds {
        #[command(subcommand)]
        which: BoundCommand,
        #[command(flatten)]
        common: Common,
    },
    /// Stationary density of a kernel.
    Stationary {
        #[arg(long)]
        kernel: PathBuf,
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
        #[arg(long, default_value_t = 100_000)]
        max_iter: usize,
        #[arg(long, default_value_t = 64)]
        resolution: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Damped best-response equilibrium of a lobby game.
    SolveGame {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long, default_value_t = 0.5)]
        damping: f64,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        #[arg(long, default_value_t = 10_000)]
        max_iter: usize,
        #[arg(long)]
        resolution: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
    /// ε-Nash residuals of a strategy profile.
    VerifyNash {
        #[arg(long)]
        spec: PathBuf,
        /// JSON with `s1` and `s2` (a solve-game report works).
        #[arg(long)]
        profile: PathBuf,
        #[arg(long)]
        resolution: Option<usize>,
        #[arg(long, default_value_t = 8)]
        starts: usize,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Subcommand)]
enum BoundCommand {
    /// `‖f − g‖₁ + 4 cut`.
    OneStep {
        #[arg(long, default_value_t = 0.0)]
        l1: f64,
        #[arg(long)]
        cut: f64,
    },
    /// `min(2, 4 t cut)`.
    Dynamic {
        #[arg(long)]
        t: usize,
        #[arg(long)]
        cut: f64,
    },
    /// `4αδ/(1−δ)² cut`, plus `αδ/(1−δ) l1` when `--l1` is given.
    Discounted {
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
        #[arg(long)]
        delta: f64,
        #[arg(long)]
        cut: f64,
        #[arg(long)]
        l1: Option<f64>,
    },
    /// `2θ/n + M K²/n²`.
    Partition {
        #[command(flatten)]
        meta: MetaArgs,
        #[arg(long)]
        n: usize,
    },
    /// Smallest `n₀` with `4·(2θ/n + M K²/n²) < η`.
    N0 {
        #[command(flatten)]
        meta: MetaArgs,
        #[arg(long)]
        eta: f64,
    },
}

#[derive(Args)]
struct MetaArgs {
    #[arg(long)]
    theta: f64,
    /// Number of pieces `K`.
    #[arg(long)]
    pieces: usize,
    /// Kernel bound `M`.
    #[arg(long = "bound")]
    bound: f64,
}

impl MetaArgs {
    fn meta(&self) -> Result<LipschitzMeta, Failure> {
        Ok(LipschitzMeta::new(self.theta, self.pieces, self.bound)?)
    }
}

/// Exit status with its single-line diagnostic.
enum Failure {
    Contract(String),
    /// Output was written but an iteration did not converge.
    NonConvergence(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Contract(e.to_string())
    }
}

impl From<&str> for Failure {
    fn from(e: &str) -> Self {
        Failure::Contract(e.to_string())
    }
}

impl From<String> for Failure {
    fn from(e: String) -> Self {
        Failure::Contract(e)
    }
}

fn write_json<T: Serialize>(value: &T, path: Option<&Path>) -> Result<(), Failure> {
    Ok(emit(&canonical_json(value)?, path)?)
}

#[derive(Serialize)]
struct CutReport {
    value: f64,
    exact: bool,
    cells: usize,
    rows: Vec<usize>,
    cols: Vec<usize>,
}

#[derive(Serialize)]
struct ResidualSummary {
    residuals: [f64; 2],
    utilities: [f64; 2],
    best_utilities: [f64; 2],
    exact: bool,
    converged: bool,
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Simulate {
            kernel,
            opinions,
            t,
            report,
            resolution,
            tol,
            max_iter,
            common,
        } => {
            let kernel = read_kernel(&kernel, resolution)?;
            let f0 = OpinionFunction::new(kernel.partition(), parse_list(&opinions)?)?;
            let trajectory: Vec<Vec<f64>> = iterate(&kernel, &f0, t)?.into_iter().map(|f| f.values().to_vec()).collect();
            emit(&trajectory_csv(&trajectory), common.output.as_deref())?;
            if let Some(path) = report {
                let r = consensus(&kernel, &f0, tol, max_iter)?;
                write_json(&r, Some(&path))?;
                if !r.converged {
                    return Err(Failure::NonConvergence(format!(
                        "consensus iteration did not settle within {max_iter} steps"
                    )));
                }
            }
        }
        Command::Discretize {
            kernel,
            partition,
            resolution,
            common,
        } => {
            let kernel = read_kernel(&kernel, resolution)?;
            let d = discretize_kernel(&kernel, &parse_partition(&partition)?)?;
            if d.snapped {
                eprintln!("note: breakpoints snapped to the kernel grid");
            }
            write_json(&dikernel::Kernel::from(d.kernel), common.output.as_deref())?;
        }
        Command::Lift {
            matrix,
            partition,
            common,
        } => {
            let partition = partition.as_deref().map(parse_partition).transpose()?;
            let model = read_model(&matrix, partition.as_ref().map(|p| p.weights()))?;
            let partition = match partition {
                Some(p) => p,
                None => model.natural_partition()?,
            };
            let (kernel, _) = lift(&model, &partition)?;
            write_json(&dikernel::Kernel::from(kernel), common.output.as_deref())?;
        }
        Command::Reduce { model, groups, common } => {
            let model = read_model(&model, None)?;
            let groups: Vec<Vec<usize>> =
                serde_json::from_str(&groups).map_err(|e| format!("malformed groups '{groups}': {e}"))?;
            write_json(&reduce_dimension(&model, &Grouping { groups })?, common.output.as_deref())?;
        }
        Command::Cutnorm {
            a,
            b,
            catalog: name,
            partition,
            fine,
            resolution,
            restarts,
            common,
        } => {
            if let Some(name) = name {
                let kernel = catalog(&name)?;
                let partition = parse_partition(partition.as_deref().ok_or("--partition is required with --catalog")?)?;
                let estimate = analytic_cut_distance(kernel.as_ref(), &partition, fine, restarts, common.seed)?;
                return write_json(&estimate, common.output.as_deref());
            }
            let (Some(a), Some(b)) = (a, b) else {
                return Err(Failure::Contract("cutnorm needs --a and --b, or --catalog".into()));
            };
            let (a, b) = (read_kernel(&a, resolution)?, read_kernel(&b, resolution)?);
            let diff = SignedBlockKernel::difference(&a.to_block(), &b.to_block());
            let c = cut_norm(&diff, restarts, common.seed);
            let report = CutReport {
                value: c.value,
                exact: diff.len() <= EXACT_CUT_LIMIT,
                cells: diff.len(),
                rows: c.rows,
                cols: c.cols,
            };
            write_json(&report, common.output.as_deref())?;
        }
        Command::Bounds { which, common } => {
            let report = match which {
                BoundCommand::OneStep { l1, cut } => {
                    BoundReport::new(BoundKind::OneStep, bound_one_step(l1, cut), &[("l1", l1), ("cut", cut)])
                }
                BoundCommand::Dynamic { t, cut } => {
                    BoundReport::new(BoundKind::Dynamic, bound_dynamic(t, cut), &[("t", t as f64), ("cut", cut)])
                }
                BoundCommand::Discounted { alpha, delta, cut, l1 } => match l1 {
                    None => BoundReport::new(
                        BoundKind::Discounted,
                        bound_discounted(alpha, delta, cut)?,
                        &[("alpha", alpha), ("delta", delta), ("cut", cut)],
                    ),
                    Some(l1) => BoundReport::new(
                        BoundKind::TwoKernelDiscounted,
                        bound_two_kernel_discounted(alpha, delta, l1, cut)?,
                        &[("alpha", alpha), ("delta", delta), ("cut", cut), ("l1", l1)],
                    ),
                },
                BoundCommand::Partition { meta, n } => BoundReport::new(
                    BoundKind::Partition,
                    bound_partition(&meta.meta()?, n)?,
                    &[("theta", meta.theta), ("pieces", meta.pieces as f64), ("bound", meta.bound), ("n", n as f64)],
                ),
                BoundCommand::N0 { meta, eta } => BoundReport::new(
                    BoundKind::MinPartitionSize,
                    min_partition_size(eta, &meta.meta()?)? as f64,
                    &[("theta", meta.theta), ("pieces", meta.pieces as f64), ("bound", meta.bound), ("eta", eta)],
                ),
            };
            write_json(&report, common.output.as_deref())?;
        }
        Command::Stationary {
            kernel,
            tol,
            max_iter,
            resolution,
            common,
        } => {
            let kernel = read_kernel(&kernel, resolution)?;
            let s = stationary_density(&kernel, tol, max_iter)?;
            write_json(&s, common.output.as_deref())?;
            if !s.converged {
                return Err(Failure::NonConvergence(format!(
                    "power iteration stopped at residual {:e} after {} steps",
                    s.residual, s.iterations
                )));
            }
        }
        Command::SolveGame {
            spec,
            damping,
            tol,
            max_iter,
            resolution,
            common,
        } => {
            let spec = read_json::<GameSpecInput>(&spec)?.build(resolution)?;
            let opts = SolverOptions {
                damping,
                max_iter,
                tol,
                seed: common.seed,
                ..SolverOptions::default()
            };
            let r = solve_nash(&spec, &opts)?;
            write_json(&r, common.output.as_deref())?;
            if !r.converged {
                return Err(Failure::NonConvergence(format!(
                    "best-response iteration did not converge in {} iterations (movement {:e})",
                    r.iterations, r.movement
                )));
            }
        }
        Command::VerifyNash {
            spec,
            profile,
            resolution,
            starts,
            common,
        } => {
            let spec = read_json::<GameSpecInput>(&spec)?.build(resolution)?;
            let (s1, s2) = read_json::<ProfileInput>(&profile)?.strategies(&spec)?;
            let opts = ResidualOptions {
                starts,
                seed: common.seed,
                ..ResidualOptions::default()
            };
            let r1 = epsilon_residual(&spec, &s1, &s2, Player::One, &opts)?;
            let r2 = epsilon_residual(&spec, &s1, &s2, Player::Two, &opts)?;
            let summary = ResidualSummary {
                residuals: [r1.epsilon, r2.epsilon],
                utilities: [r1.utility, r2.utility],
                best_utilities: [r1.best_utility, r2.best_utility],
                exact: r1.exact && r2.exact,
                converged: r1.converged && r2.converged,
            };
            write_json(&summary, common.output.as_deref())?;
            if !summary.converged {
                return Err(Failure::NonConvergence("best-response search did not converge".into()));
            }
        }
    }
    Ok(())
}

fn single_line(message: &str) -> String {
    message.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let text = e.to_string();
            let first = text.lines().next().unwrap_or("invalid arguments");
            eprintln!("{}", single_line(first));
            return ExitCode::from(1);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Contract(msg)) => {
            eprintln!("error: {}", single_line(&msg));
            ExitCode::from(1)
        }
        Err(Failure::NonConvergence(msg)) => {
            eprintln!("non-convergence: {}", single_line(&msg));
            ExitCode::from(2)
        }
    }
}
