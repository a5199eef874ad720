//! Experiment engine: recovery tables, phase-transition grids and report formats.

use std::fmt::Write as _;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{PcpError, Result};
use crate::rng::mix64;
use crate::solver::{self, relative_error, PcpSolution, SolverConfig};
use crate::synth::{self, ProblemSpec, SignModel, SupportModel};

/// Solver summary written next to decomposition outputs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub n1: usize,
    pub n2: usize,
    /// `null` for plain matrix completion.
    pub lambda: Option<f64>,
    pub beta: f64,
    pub iterations: usize,
    pub svd_count: usize,
    pub final_residual: f64,
    pub rank_l: usize,
    pub card_s: usize,
    pub converged: bool,
    pub wall_time_ms: f64,
}

impl SolveReport {
    pub fn from_solution(sol: &PcpSolution) -> Self {
        Self {
            n1: sol.l_hat.rows(),
            n2: sol.l_hat.cols(),
            lambda: sol.lambda,
            beta: sol.beta,
            iterations: sol.iterations,
            svd_count: sol.svd_count,
            final_residual: sol.final_residual,
            rank_l: sol.rank_l,
            card_s: sol.card_s,
            converged: sol.converged,
            wall_time_ms: sol.wall_time.as_secs_f64() * 1e3,
        }
    }
}

/// Which recovery problem a phase grid runs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum PhaseMode {
    /// PCP with random signs; `rho` is the corruption density.
    PcpRandom,
    /// PCP with `S0 = P_Omega sgn(L0)`.
    PcpCoherent,
    /// Nuclear-norm completion; `rho` is the probability an entry is omitted.
    Mc,
}

impl PhaseMode {
    pub fn as_str(self) -> &'static str {
        match self {
            PhaseMode::PcpRandom => "pcp-random",
            PhaseMode::PcpCoherent => "pcp-coherent",
            PhaseMode::Mc => "mc",
        }
    }
}

impl FromStr for PhaseMode {
    type Err = PcpError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pcp-random" | "pcp_random" => Ok(PhaseMode::PcpRandom),
            "pcp-coherent" | "pcp_coherent" => Ok(PhaseMode::PcpCoherent),
            "mc" => Ok(PhaseMode::Mc),
            other => Err(PcpError::InvalidArgument(format!("unknown mode `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseGridSpec {
    pub n: usize,
    pub r_values: Vec<usize>,
    pub rho_values: Vec<f64>,
    pub trials: usize,
    pub mode: PhaseMode,
    pub success_tol: f64,
    pub base_seed: u64,
}

impl PhaseGridSpec {
    pub fn new(n: usize, r_values: Vec<usize>, rho_values: Vec<f64>, mode: PhaseMode, base_seed: u64) -> Self {
        Self {
            n,
            r_values,
            rho_values,
            trials: 10,
            mode,
            success_tol: 1e-3,
            base_seed,
        }
    }

    /// Coarse 8x8 grid at `n = 100`: `r/n` and `rho` both on `0.05, 0.10, ..., 0.40`.
    pub fn desk_preset(mode: PhaseMode, base_seed: u64) -> Self {
        let fractions: Vec<f64> = (1..=8).map(|k| 0.05 * k as f64).collect();
        let n = 100;
        Self::new(
            n,
            fractions.iter().map(|f| (f * n as f64).round() as usize).collect(),
            fractions,
            mode,
            base_seed,
        )
    }

    fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(PcpError::InvalidArgument("trials must be at least 1".into()));
        }
        if !(self.success_tol > 0.0) {
            return Err(PcpError::InvalidArgument("success_tol must be positive".into()));
        }
        if let Some(&r) = self.r_values.iter().find(|&&r| r > self.n) {
            return Err(PcpError::InvalidArgument(format!("rank {r} exceeds n = {}", self.n)));
        }
        if let Some(&rho) = self.rho_values.iter().find(|&&p| !(0.0..=1.0).contains(&p)) {
            return Err(PcpError::InvalidArgument(format!("rho {rho} outside [0, 1]")));
        }
        Ok(())
    }
}

/// One trial of a phase grid; one CSV row.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub mode: PhaseMode,
    pub n: usize,
    pub r: usize,
    pub rho: f64,
    pub trial: usize,
    pub seed: u64,
    /// `NaN` when the solver failed outright.
    pub rel_error: f64,
    pub success: bool,
    pub iters: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub r: usize,
    pub rho: f64,
    pub successes: usize,
    pub trials: usize,
    pub mean_rel_error: f64,
    pub mean_iters: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PhaseGridResult {
    pub trials: Vec<TrialRecord>,
    pub cells: Vec<CellResult>,
}

/// Seed of trial `trial` in cell `(r, rho)`: `base_seed + hash(r, rho, trial)`.
pub fn trial_seed(base_seed: u64, r: usize, rho: f64, trial: usize) -> u64 {
    let h = mix64(mix64(mix64(r as u64) ^ rho.to_bits()) ^ trial as u64);
    base_seed.wrapping_add(h)
}

/// Builds and solves one seeded instance. Returns the relative error on `L` and the iteration count.
pub fn solve_trial(mode: PhaseMode, n: usize, r: usize, rho: f64, seed: u64) -> Result<(f64, PcpSolution)> {
    let sign_model = match mode {
        PhaseMode::PcpCoherent => SignModel::Coherent,
        _ => SignModel::Random,
    };
    let inst = synth::gen_problem(&ProblemSpec::square(n, r, rho, sign_model, seed))?;
    let cfg = SolverConfig::default();
    let sol = match mode {
        PhaseMode::PcpRandom | PhaseMode::PcpCoherent => solver::solve_pcp(&inst.m, &cfg)?,
        PhaseMode::Mc => {
            let obs = inst.omega.complement();
            solver::solve_nuclear_completion(&inst.l0, &obs, &cfg)?
        }
    };
    Ok((relative_error(&sol.l_hat, &inst.l0), sol))
}

pub fn run_phase_grid(spec: &PhaseGridSpec) -> Result<PhaseGridResult> {
    spec.validate()?;
    let jobs: Vec<(usize, f64, usize)> = spec
        .r_values
        .iter()
        .flat_map(|&r| {
            spec.rho_values
                .iter()
                .flat_map(move |&rho| (0..spec.trials).map(move |t| (r, rho, t)))
        })
        .collect();
    let trials: Vec<TrialRecord> = jobs
        .par_iter()
        .map(|&(r, rho, trial)| {
            let seed = trial_seed(spec.base_seed, r, rho, trial);
            let (rel_error, iters) = match solve_trial(spec.mode, spec.n, r, rho, seed) {
                Ok((err, sol)) => (err, sol.iterations),
                Err(_) => (f64::NAN, 0),
            };
            TrialRecord {
                mode: spec.mode,
                n: spec.n,
                r,
                rho,
                trial,
                seed,
                rel_error,
                success: rel_error <= spec.success_tol,
                iters,
            }
        })
        .collect();

    let cells = trials
        .chunks(spec.trials)
        .map(|chunk| {
            let k = chunk.len() as f64;
            CellResult {
                r: chunk[0].r,
                rho: chunk[0].rho,
                successes: chunk.iter().filter(|t| t.success).count(),
                trials: chunk.len(),
                mean_rel_error: chunk.iter().map(|t| t.rel_error).sum::<f64>() / k,
                mean_iters: chunk.iter().map(|t| t.iters as f64).sum::<f64>() / k,
            }
        })
        .collect();
    Ok(PhaseGridResult { trials, cells })
}

pub fn phase_csv(trials: &[TrialRecord]) -> String {
    let mut out = String::from("mode,n,r,rho,trial,seed,rel_error,success,iters\n");
    for t in trials {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{:e},{},{}",
            t.mode.as_str(),
            t.n,
            t.r,
            t.rho,
            t.trial,
            t.seed,
            t.rel_error,
            t.success as u8,
            t.iters
        );
    }
    out
}

/// Recovery-table presets: rank `0.05 n` with `0.05 n^2` (a) or `0.10 n^2` (b) gross errors.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum BenchPreset {
    Table1aSmall,
    Table1bSmall,
    Table1aFull,
    Table1bFull,
}

impl BenchPreset {
    pub fn as_str(self) -> &'static str {
        match self {
            BenchPreset::Table1aSmall => "table1a_small",
            BenchPreset::Table1bSmall => "table1b_small",
            BenchPreset::Table1aFull => "table1a_full",
            BenchPreset::Table1bFull => "table1b_full",
        }
    }

    pub fn dimensions(self) -> &'static [usize] {
        match self {
            BenchPreset::Table1aSmall | BenchPreset::Table1bSmall => &[100, 200, 500],
            BenchPreset::Table1aFull | BenchPreset::Table1bFull => &[500, 1000, 2000, 3000],
        }
    }

    pub fn error_fraction(self) -> f64 {
        match self {
            BenchPreset::Table1aSmall | BenchPreset::Table1aFull => 0.05,
            BenchPreset::Table1bSmall | BenchPreset::Table1bFull => 0.10,
        }
    }

    /// Instance for dimension `n`: rank `n/20`, exactly `fraction * n^2` random-sign errors.
    pub fn problem(self, n: usize) -> ProblemSpec {
        let card = (self.error_fraction() * (n * n) as f64).round() as usize;
        ProblemSpec {
            support: SupportModel::FixedCount(card),
            ..ProblemSpec::square(n, n / 20, self.error_fraction(), SignModel::Random, 0x7ab1e + n as u64)
        }
    }
}

impl FromStr for BenchPreset {
    type Err = PcpError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "table1a_small" => Ok(BenchPreset::Table1aSmall),
            "table1b_small" => Ok(BenchPreset::Table1bSmall),
            "table1a_full" => Ok(BenchPreset::Table1aFull),
            "table1b_full" => Ok(BenchPreset::Table1bFull),
            other => Err(PcpError::InvalidArgument(format!("unknown preset `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub preset: BenchPreset,
    pub n: usize,
    pub rank_l0: usize,
    pub card_s0: usize,
    pub rank_l_hat: usize,
    pub card_s_hat: usize,
    pub rel_error: f64,
    pub svd_count: usize,
    pub time_s: f64,
    pub converged: bool,
}

/// Solves one row of a preset. Solver errors are recorded in the row (`NaN` error).
pub fn run_bench_row(preset: BenchPreset, n: usize) -> Result<BenchRow> {
    let spec = preset.problem(n);
    let inst = synth::gen_problem(&spec)?;
    let mut row = BenchRow {
        preset,
        n,
        rank_l0: spec.r,
        card_s0: inst.omega.len(),
        rank_l_hat: 0,
        card_s_hat: 0,
        rel_error: f64::NAN,
        svd_count: 0,
        time_s: 0.0,
        converged: false,
    };
    if let Ok(sol) = solver::solve_pcp(&inst.m, &SolverConfig::default()) {
        row.rank_l_hat = sol.rank_l;
        row.card_s_hat = sol.card_s;
        row.rel_error = relative_error(&sol.l_hat, &inst.l0);
        row.svd_count = sol.svd_count;
        row.time_s = sol.wall_time.as_secs_f64();
        row.converged = sol.converged;
    }
    Ok(row)
}

pub fn run_bench_table(preset: BenchPreset) -> Result<Vec<BenchRow>> {
    preset
        .dimensions()
        .iter()
        .map(|&n| run_bench_row(preset, n))
        .collect()
}

pub fn bench_csv(rows: &[BenchRow]) -> String {
    let mut out =
        String::from("preset,n,rank_l0,card_s0,rank_l_hat,card_s_hat,rel_error,svd_count,time_s\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{:e},{},{:.3}",
            r.preset.as_str(),
            r.n,
            r.rank_l0,
            r.card_s0,
            r.rank_l_hat,
            r.card_s_hat,
            r.rel_error,
            r.svd_count,
            r.time_s
        );
    }
    out
}
