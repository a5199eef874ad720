//! `pcp`: command-line front end for low-rank plus sparse decomposition experiments.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use pcp_core::harness::{
    bench_csv, phase_csv, run_bench_row, run_phase_grid, BenchPreset, PhaseGridSpec, PhaseMode,
    SolveReport,
};
use pcp_core::{certify, io, solver, synth};
use pcp_core::{PcpError, PcpSolution, ProblemSpec, RngState, SignModel, SolverConfig, SupportModel};

const EXIT_USAGE: u8 = 1;
const EXIT_NUMERICAL: u8 = 2;
const EXIT_NONCONVERGED: u8 = 3;

#[derive(Parser, Debug)]
#[command(name = "pcp", version, about = "Low-rank plus sparse matrix decomposition")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Split a matrix into low-rank and sparse parts.
    Decompose {
        #[arg(long)]
        input: PathBuf,
        #[command(flatten)]
        solver: SolverArgs,
        #[arg(long)]
        lambda: Option<Auto>,
        #[arg(long)]
        out_l: PathBuf,
        #[arg(long)]
        out_s: PathBuf,
        #[arg(long)]
        report: PathBuf,
    },
    /// Decomposition from the entries on a mask only.
    Complete {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        mask: PathBuf,
        #[command(flatten)]
        solver: SolverArgs,
        #[arg(long)]
        lambda: Option<Auto>,
        #[arg(long)]
        out_l: PathBuf,
        #[arg(long)]
        out_s: PathBuf,
        #[arg(long)]
        report: PathBuf,
    },
    /// Nuclear-norm matrix completion from the entries on a mask.
    Mc {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        mask: PathBuf,
        #[command(flatten)]
        solver: SolverArgs,
        #[arg(long)]
        out_l: PathBuf,
        #[arg(long)]
        report: PathBuf,
    },
    /// Generate a random instance with its ground truth.
    Synth {
        #[arg(long)]
        n1: usize,
        #[arg(long)]
        n2: usize,
        #[arg(long)]
        rank: usize,
        #[arg(long)]
        rho: f64,
        #[arg(long, value_enum, default_value = "random")]
        sign_model: SignArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Build a dual certificate for a random instance and report its margins.
    Certify {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        rank: usize,
        #[arg(long)]
        rho: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        report: PathBuf,
    },
    /// Recovery rates over a grid of ranks and densities.
    Phase {
        #[arg(long, default_value_t = 100)]
        n: usize,
        /// Ranks; with --rho-list omitted too, the coarse 8x8 desk grid is used.
        #[arg(long, value_delimiter = ',')]
        r_list: Option<Vec<usize>>,
        #[arg(long, value_delimiter = ',')]
        rho_list: Option<Vec<f64>>,
        #[arg(long, default_value_t = 10)]
        trials: usize,
        #[arg(long, default_value = "pcp-random")]
        mode: PhaseMode,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Recovery table on a preset family of instances.
    Bench {
        #[arg(long)]
        preset: BenchPreset,
        /// Override the preset's dimensions.
        #[arg(long, value_delimiter = ',')]
        sizes: Option<Vec<usize>>,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args, Debug)]
struct SolverArgs {
    #[arg(long)]
    beta: Option<Auto>,
    #[arg(long, default_value_t = 1e-7)]
    tol: f64,
    #[arg(long, default_value_t = 1000)]
    max_iters: usize,
}

#[derive(clap::ValueEnum, Clone, Copy, Debug)]
enum SignArg {
    Random,
    Coherent,
}

/// A positive number or `auto`.
#[derive(Clone, Copy, Debug)]
struct Auto(Option<f64>);

impl std::str::FromStr for Auto {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.eq_ignore_ascii_case("auto") {
            return Ok(Auto(None));
        }
        match s.parse::<f64>() {
            Ok(v) if v > 0.0 && v.is_finite() => Ok(Auto(Some(v))),
            _ => Err(format!("expected a positive number or `auto`, got `{s}`")),
        }
    }
}

fn config(args: &SolverArgs, lambda: Option<Auto>) -> SolverConfig {
    SolverConfig {
        lambda: lambda.and_then(|a| a.0),
        beta: args.beta.and_then(|a| a.0),
        tol: args.tol,
        max_iters: args.max_iters,
        ..SolverConfig::default()
    }
}

/// Failure of a subcommand, carrying its exit status.
struct Failure {
    code: u8,
    message: String,
}

impl From<PcpError> for Failure {
    fn from(e: PcpError) -> Self {
        let code = match e {
            PcpError::NumericalFailure(_) | PcpError::SeriesDiverges { .. } | PcpError::NonConvergence { .. } => {
                EXIT_NUMERICAL
            }
            _ => EXIT_USAGE,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn read_matrix(path: &Path) -> Result<pcp_core::DenseMatrix, Failure> {
    io::read_matrix(path).map_err(|e| with_path(e, path))
}

fn read_mask(path: &Path) -> Result<pcp_core::SupportMask, Failure> {
    io::read_mask(path).map_err(|e| with_path(e, path))
}

fn with_path(e: PcpError, path: &Path) -> Failure {
    let mut f = Failure::from(e);
    f.message = format!("{}: {}", path.display(), f.message);
    f
}

fn write_text(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| Failure {
        code: EXIT_USAGE,
        message: format!("cannot write {}: {e}", path.display()),
    })
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Failure {
        code: EXIT_USAGE,
        message: format!("cannot serialize report: {e}"),
    })?;
    write_text(path, &(text + "\n"))
}

/// Writes the report and maps non-convergence to its exit status when `strict`.
fn finish_solve(sol: &PcpSolution, report: &Path, strict: bool) -> Result<u8, Failure> {
    let rep = SolveReport::from_solution(sol);
    write_json(report, &rep)?;
    println!(
        "iterations {} svd {} residual {:.3e} rank {} card {} converged {}",
        rep.iterations, rep.svd_count, rep.final_residual, rep.rank_l, rep.card_s, rep.converged
    );
    Ok(if strict && !sol.converged { EXIT_NONCONVERGED } else { 0 })
}

fn run(cmd: Command) -> Result<u8, Failure> {
    match cmd {
        Command::Decompose { input, solver: s, lambda, out_l, out_s, report } => {
            let m = read_matrix(&input)?;
            let sol = solver::solve_pcp(&m, &config(&s, lambda))?;
            io::write_matrix(&out_l, &sol.l_hat)?;
            io::write_matrix(&out_s, &sol.s_hat)?;
            finish_solve(&sol, &report, true)
        }
        Command::Complete { input, mask, solver: s, lambda, out_l, out_s, report } => {
            let y = read_matrix(&input)?;
            let obs = read_mask(&mask)?;
            let sol = solver::solve_pcp_completion(&y, &obs, &config(&s, lambda))?;
            io::write_matrix(&out_l, &sol.l_hat)?;
            io::write_matrix(&out_s, &sol.s_hat)?;
            finish_solve(&sol, &report, true)
        }
        Command::Mc { input, mask, solver: s, out_l, report } => {
            let y = read_matrix(&input)?;
            let obs = read_mask(&mask)?;
            let sol = solver::solve_nuclear_completion(&y, &obs, &config(&s, None))?;
            io::write_matrix(&out_l, &sol.l_hat)?;
            finish_solve(&sol, &report, false)
        }
        Command::Synth { n1, n2, rank, rho, sign_model, seed, out_dir } => {
            let spec = ProblemSpec {
                n1,
                n2,
                r: rank,
                rho,
                sign_model: match sign_model {
                    SignArg::Random => SignModel::Random,
                    SignArg::Coherent => SignModel::Coherent,
                },
                support: SupportModel::Bernoulli,
                seed: RngState::new(seed),
            };
            let inst = synth::gen_problem(&spec)?;
            fs::create_dir_all(&out_dir).map_err(|e| Failure {
                code: EXIT_USAGE,
                message: format!("cannot create {}: {e}", out_dir.display()),
            })?;
            io::write_matrix(out_dir.join("l0.mat"), &inst.l0)?;
            io::write_matrix(out_dir.join("s0.mat"), &inst.s0)?;
            io::write_matrix(out_dir.join("m.mat"), &inst.m)?;
            io::write_mask(out_dir.join("omega.mask"), &inst.omega)?;
            write_json(&out_dir.join("spec.json"), &spec)?;
            println!("wrote {n1}x{n2} instance, rank {rank}, |omega| = {}", inst.omega.len());
            Ok(0)
        }
        Command::Certify { n, rank, rho, seed, report } => {
            let rep = certify::certify_instance(n, rank, rho, seed)?;
            write_json(&report, &rep)?;
            println!(
                "pass {} |omega| {} ||P_Omega P_T|| {:.4} margins: ||W|| {} frob {:.3e} linf {}",
                rep.pass,
                rep.omega_size,
                rep.pomega_pt_norm,
                fmt_margin(rep.norm_w),
                rep.frob_on_omega,
                fmt_margin(rep.linf_off_omega)
            );
            Ok(0)
        }
        Command::Phase { n, r_list, rho_list, trials, mode, seed, out } => {
            let mut spec = match (r_list, rho_list) {
                (None, None) => PhaseGridSpec::desk_preset(mode, seed),
                (Some(r), Some(rho)) => PhaseGridSpec::new(n, r, rho, mode, seed),
                _ => {
                    return Err(Failure {
                        code: EXIT_USAGE,
                        message: "--r-list and --rho-list must be given together".into(),
                    })
                }
            };
            spec.trials = trials;
            let res = run_phase_grid(&spec)?;
            write_text(&out, &phase_csv(&res.trials))?;
            for c in &res.cells {
                println!(
                    "r {:>3} rho {:.3}: {}/{} recovered, mean rel error {:.2e}",
                    c.r, c.rho, c.successes, c.trials, c.mean_rel_error
                );
            }
            Ok(0)
        }
        Command::Bench { preset, sizes, out } => {
            let sizes = sizes.unwrap_or_else(|| preset.dimensions().to_vec());
            let mut rows = Vec::with_capacity(sizes.len());
            for n in sizes {
                let row = run_bench_row(preset, n)?;
                println!(
                    "n {:>5}: rank {}/{} card {}/{} rel error {:.2e} svd {} time {:.2} s",
                    row.n, row.rank_l_hat, row.rank_l0, row.card_s_hat, row.card_s0, row.rel_error, row.svd_count, row.time_s
                );
                rows.push(row);
            }
            write_text(&out, &bench_csv(&rows))?;
            Ok(0)
        }
    }
}

fn fmt_margin(m: Option<f64>) -> String {
    m.map_or_else(|| "n/a".to_string(), |v| format!("{v:.4}"))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
