//! Alternating-directions augmented Lagrangian solvers.
//!
//! All three problems share one loop over the augmented Lagrangian
//! `||L||_* + lambda ||S||_1 + <Y, M - L - S> + beta/2 ||M - L - S||_F^2`,
//! starting from `S = Y = 0`:
//!
//! ```text
//! L <- D_{1/beta}(M - S + Y/beta)
//! S <- S_{lambda/beta}(M - L + Y/beta)
//! Y <- Y + beta (M - L - S)
//! ```
//!
//! until `||M - L - S||_F <= tol ||M||_F`. The completion variants change only
//! the `S` step: off the observed set `S` absorbs the residual exactly, and in
//! plain matrix completion `S` is pinned to zero on the observed set.

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::error::{PcpError, Result};
use crate::matrix::{DenseMatrix, SupportMask};
use crate::prox::{self, RankSchedule};
use crate::svd;

/// Solver parameters. `None` selects the data-driven default.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Weight on `||S||_1`. Default `1/sqrt(max(n1, n2))`, or
    /// `1/sqrt(p_obs max(n1, n2))` for robust completion.
    pub lambda: Option<f64>,
    /// Quadratic penalty. Default `n1 n2 / (4 ||M||_1)` (observed entries only
    /// for the completion variants: `|obs| / (4 ||P_obs M||_1)`).
    pub beta: Option<f64>,
    pub tol: f64,
    pub max_iters: usize,
    /// Initial partial-SVD rank. Default `min(10, n2)`.
    pub rank_guess: Option<usize>,
    /// Above this fraction of the smaller dimension a full SVD is used.
    pub full_svd_threshold: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            lambda: None,
            beta: None,
            tol: 1e-7,
            max_iters: 1000,
            rank_guess: None,
            full_svd_threshold: 0.2,
        }
    }
}

impl SolverConfig {
    fn validate(&self, dmin: usize) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(PcpError::InvalidArgument(format!(
                "tol must be positive, got {}",
                self.tol
            )));
        }
        if let Some(k) = self.rank_guess {
            if k == 0 || k > dmin {
                return Err(PcpError::InvalidArgument(format!(
                    "rank_guess must lie in 1..={dmin}, got {k}"
                )));
            }
        }
        for (name, v) in [("lambda", self.lambda), ("beta", self.beta)] {
            if let Some(x) = v {
                if !(x > 0.0 && x.is_finite()) {
                    return Err(PcpError::InvalidArgument(format!(
                        "{name} must be positive, got {x}"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Result of a solve. `converged == false` is a reported outcome, not an error.
#[derive(Clone, Debug)]
pub struct PcpSolution {
    pub l_hat: DenseMatrix,
    pub s_hat: DenseMatrix,
    pub iterations: usize,
    pub svd_count: usize,
    /// `||M - L - S||_F / ||M||_F` at the last iterate.
    pub final_residual: f64,
    /// Numerical rank of `l_hat`.
    pub rank_l: usize,
    /// Entries of `s_hat` above `1e-6 ||M||_inf` in magnitude.
    pub card_s: usize,
    pub converged: bool,
    pub wall_time: Duration,
    /// `None` for plain matrix completion, which has no sparse term.
    pub lambda: Option<f64>,
    pub beta: f64,
}

/// One completed ALM iteration, handed to observers.
pub struct IterationEvent<'a> {
    pub iteration: usize,
    /// Argument of the singular value thresholding step.
    pub svt_input: &'a DenseMatrix,
    pub svt_threshold: f64,
    pub l: &'a DenseMatrix,
    pub s: &'a DenseMatrix,
    pub y: &'a DenseMatrix,
    pub residual: f64,
}

/// How the `S` update treats each entry.
enum SparseStep<'a> {
    /// Shrink everywhere.
    Everywhere,
    /// Shrink on the observed set, absorb the residual elsewhere.
    Observed(&'a SupportMask),
    /// Zero on the observed set, absorb the residual elsewhere.
    Pinned(&'a SupportMask),
}

/// Principal Component Pursuit on a fully observed matrix.
pub fn solve_pcp(m: &DenseMatrix, cfg: &SolverConfig) -> Result<PcpSolution> {
    solve_pcp_observed(m, cfg, |_| {})
}

pub fn solve_pcp_observed(
    m: &DenseMatrix,
    cfg: &SolverConfig,
    observer: impl FnMut(&IterationEvent<'_>),
) -> Result<PcpSolution> {
    m.ensure_finite()?;
    let n1 = m.rows().max(m.cols());
    let lambda = cfg.lambda.unwrap_or(1.0 / (n1 as f64).sqrt());
    let beta = cfg
        .beta
        .unwrap_or_else(|| (m.rows() * m.cols()) as f64 / (4.0 * m.l1_norm()));
    run_alm(m.clone(), Some(lambda), beta, SparseStep::Everywhere, cfg, observer)
}

fn observed_data(y_obs: &DenseMatrix, obs: &SupportMask) -> Result<DenseMatrix> {
    y_obs.ensure_finite()?;
    if obs.is_empty() {
        return Err(PcpError::InvalidArgument(
            "observation mask is empty; nothing to fit".into(),
        ));
    }
    prox::proj_support(y_obs, obs)
}

fn completion_beta(m0: &DenseMatrix, obs: &SupportMask, cfg: &SolverConfig) -> f64 {
    cfg.beta
        .unwrap_or_else(|| obs.len() as f64 / (4.0 * m0.l1_norm()))
}

/// `min ||L||_* + lambda ||S||_1  s.t.  P_obs(L + S) = P_obs(y_obs)`.
pub fn solve_pcp_completion(
    y_obs: &DenseMatrix,
    obs: &SupportMask,
    cfg: &SolverConfig,
) -> Result<PcpSolution> {
    solve_pcp_completion_observed(y_obs, obs, cfg, |_| {})
}

pub fn solve_pcp_completion_observed(
    y_obs: &DenseMatrix,
    obs: &SupportMask,
    cfg: &SolverConfig,
    observer: impl FnMut(&IterationEvent<'_>),
) -> Result<PcpSolution> {
    let m0 = observed_data(y_obs, obs)?;
    let n1 = m0.rows().max(m0.cols());
    let lambda = cfg
        .lambda
        .unwrap_or_else(|| 1.0 / (obs.density() * n1 as f64).sqrt());
    let beta = completion_beta(&m0, obs, cfg);
    run_alm(m0, Some(lambda), beta, SparseStep::Observed(obs), cfg, observer)
}

/// `min ||L||_*  s.t.  P_obs L = P_obs(y_obs)`; `s_hat` holds the slack on unobserved entries.
pub fn solve_nuclear_completion(
    y_obs: &DenseMatrix,
    obs: &SupportMask,
    cfg: &SolverConfig,
) -> Result<PcpSolution> {
    let m0 = observed_data(y_obs, obs)?;
    let beta = completion_beta(&m0, obs, cfg);
    run_alm(m0, None, beta, SparseStep::Pinned(obs), cfg, |_| {})
}

fn run_alm(
    m: DenseMatrix,
    lambda: Option<f64>,
    beta: f64,
    step: SparseStep<'_>,
    cfg: &SolverConfig,
    mut observer: impl FnMut(&IterationEvent<'_>),
) -> Result<PcpSolution> {
    let start = Instant::now();
    let (rows, cols) = m.shape();
    let dmin = rows.min(cols);
    cfg.validate(dmin)?;
    let m_norm = m.frobenius_norm();

    if m_norm == 0.0 || dmin == 0 {
        return Ok(PcpSolution {
            l_hat: DenseMatrix::zeros(rows, cols),
            s_hat: DenseMatrix::zeros(rows, cols),
            iterations: 1,
            svd_count: 0,
            final_residual: 0.0,
            rank_l: 0,
            card_s: 0,
            converged: true,
            wall_time: start.elapsed(),
            lambda,
            beta: cfg.beta.unwrap_or(0.0),
        });
    }
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(PcpError::NumericalFailure(format!("penalty beta = {beta}")));
    }

    let observed = match step {
        SparseStep::Everywhere => None,
        SparseStep::Observed(obs) | SparseStep::Pinned(obs) => {
            obs.ensure_shape((rows, cols))?;
            Some(obs.to_flags())
        }
    };
    let shrink_tau = lambda.map(|l| l / beta);
    let inv_beta = 1.0 / beta;

    let mut schedule = RankSchedule::new(cfg.rank_guess.unwrap_or(10.min(dmin)), cfg.full_svd_threshold);
    let mut s = DenseMatrix::zeros(rows, cols);
    let mut y = DenseMatrix::zeros(rows, cols);
    let mut l = DenseMatrix::zeros(rows, cols);
    let mut svd_count = 0;
    let mut iterations = 0;
    let mut residual = f64::INFINITY;
    let mut converged = false;

    while iterations < cfg.max_iters {
        iterations += 1;

        // L step.
        let mut x = m.sub(&s);
        x.axpy(inv_beta, &y);
        let (l_next, stats) = prox::svt_adaptive(&x, inv_beta, &mut schedule)?;
        l = l_next;
        svd_count += stats.svd_calls;

        // S step.
        let mut t = m.sub(&l);
        t.axpy(inv_beta, &y);
        s = match (&step, &observed) {
            (SparseStep::Everywhere, _) => prox::shrink(&t, shrink_tau.expect("pcp has lambda")),
            (SparseStep::Observed(_), Some(flags)) => {
                let tau = shrink_tau.expect("robust completion has lambda");
                let mut out = t;
                for (v, &on) in out.as_mut_slice().iter_mut().zip(flags) {
                    if on {
                        *v = prox::shrink_scalar(*v, tau);
                    }
                }
                out
            }
            (SparseStep::Pinned(obs), _) => {
                let mut out = t;
                prox::zero_on(&mut out, obs);
                out
            }
            (SparseStep::Observed(_), None) => unreachable!("flags built for masked steps"),
        };

        // Dual step.
        let mut r = m.sub(&l);
        r.axpy(-1.0, &s);
        y.axpy(beta, &r);
        residual = r.frobenius_norm() / m_norm;
        if !residual.is_finite() {
            return Err(PcpError::NumericalFailure(format!(
                "residual became non-finite at iteration {iterations}"
            )));
        }

        observer(&IterationEvent {
            iteration: iterations,
            svt_input: &x,
            svt_threshold: inv_beta,
            l: &l,
            s: &s,
            y: &y,
            residual,
        });

        if residual <= cfg.tol {
            converged = true;
            break;
        }
    }

    let rank_l = svd::numerical_rank(&svd::singular_values(&l)?, rows.max(cols));
    let card_s = s.count_above(1e-6 * m.linf_norm());
    Ok(PcpSolution {
        l_hat: l,
        s_hat: s,
        iterations,
        svd_count,
        final_residual: residual,
        rank_l,
        card_s,
        converged,
        wall_time: start.elapsed(),
        lambda,
        beta,
    })
}

/// `||estimate - truth||_F / ||truth||_F`; zero truth compares absolutely.
pub fn relative_error(estimate: &DenseMatrix, truth: &DenseMatrix) -> f64 {
    let diff = estimate.sub(truth).frobenius_norm();
    let scale = truth.frobenius_norm();
    if scale == 0.0 {
        diff
    } else {
        diff / scale
    }
}
