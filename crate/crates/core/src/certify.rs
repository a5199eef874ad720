//! Numerical dual certificates for exact recovery.
//!
//! For `M = L0 + S0` with `L0 = U Sigma V^T` and `S0` supported on `Omega`,
//! recovery is certified by `W = W^L + W^S` in `T^perp` with
//!
//! ```text
//! ||W^L + W^S||                          < 1/2
//! ||P_Omega (U V^T + W^L)||_F            <= lambda/4
//! ||P_Omega^perp (U V^T + W^L + W^S)||_inf < lambda/2
//! ```
//!
//! `W^L` comes from the golfing recursion over Bernoulli batches whose union is
//! the complement of `Omega`; `W^S` is the minimum-norm element of `T^perp` with
//! `P_Omega W^S = lambda sgn(S0)`, summed as a Neumann series. This module builds
//! both on random instances and reports the margin on every condition.

use serde::{Deserialize, Serialize};

use crate::error::{PcpError, Result};
use crate::matrix::{DenseMatrix, SupportMask};
use crate::prox::{self, TangentSpace, DEFAULT_POWER_MAX_ITERS, DEFAULT_POWER_TOL};
use crate::rng::{self, RngState};
use crate::svd;
use crate::synth;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IncoherenceReport {
    /// `(n1/r) max_i ||U^T e_i||^2`
    pub mu1: f64,
    /// `(n2/r) max_j ||V^T e_j||^2`
    pub mu2: f64,
    /// `(n1 n2 / r) ||U V^T||_inf^2`
    pub mu3: f64,
    pub mu: f64,
    pub r: usize,
}

/// Incoherence parameters of `l`, using its numerical rank.
pub fn incoherence(l: &DenseMatrix) -> Result<IncoherenceReport> {
    let f = svd::svd_full(l)?;
    let r = f.rank();
    if r == 0 {
        return Err(PcpError::InvalidArgument(
            "incoherence is undefined for a zero matrix".into(),
        ));
    }
    incoherence_of(&TangentSpace::from_factors(&f, r)?)
}

/// Incoherence parameters of the singular spaces spanning `t`.
pub fn incoherence_of(t: &TangentSpace) -> Result<IncoherenceReport> {
    let r = t.rank();
    if r == 0 {
        return Err(PcpError::InvalidArgument("rank-zero tangent space".into()));
    }
    let (n1, n2) = t.shape();
    let max_leverage = |q: &DenseMatrix| -> f64 {
        (0..q.rows())
            .map(|i| q.row(i).iter().map(|x| x * x).sum::<f64>())
            .fold(0.0, f64::max)
    };
    let rf = r as f64;
    let mu1 = n1 as f64 / rf * max_leverage(t.u());
    let mu2 = n2 as f64 / rf * max_leverage(t.v());
    let mu3 = (n1 * n2) as f64 / rf * t.uv_t().linf_norm().powi(2);
    Ok(IncoherenceReport {
        mu1,
        mu2,
        mu3,
        mu: mu1.max(mu2).max(mu3),
        r,
    })
}

/// Deviation `||P_T - rho0^{-1} P_T P_Omega0 P_T||` for one sampled `Omega0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialDeviation {
    pub deviation: f64,
    pub omega_size: usize,
    /// `false` when power iteration hit its cap; `deviation` is then the best estimate.
    pub converged: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationStats {
    pub rho0: f64,
    pub trials: Vec<TrialDeviation>,
    pub max: f64,
}

/// Trial `k` draws `Omega0 ~ Ber(rho0)` from `rng.substream(k)`.
pub fn measure_concentration(
    t: &TangentSpace,
    rho0: f64,
    rng: RngState,
    trials: usize,
) -> Result<ConcentrationStats> {
    measure_concentration_with(t, rho0, rng, trials, DEFAULT_POWER_TOL, DEFAULT_POWER_MAX_ITERS)
}

/// As [`measure_concentration`] with explicit power-iteration settings.
///
/// The deviation map `A = P_T - rho0^{-1} P_T P_Omega0 P_T` is self-adjoint but
/// indefinite, so the power iteration runs on `A^2` and returns the square root.
pub fn measure_concentration_with(
    t: &TangentSpace,
    rho0: f64,
    rng: RngState,
    trials: usize,
    tol: f64,
    max_iters: usize,
) -> Result<ConcentrationStats> {
    if !(rho0 > 0.0 && rho0 <= 1.0) {
        return Err(PcpError::InvalidArgument(format!(
            "rho0 must lie in (0, 1], got {rho0}"
        )));
    }
    let (n1, n2) = t.shape();
    let mut out = Vec::with_capacity(trials);
    for trial in 0..trials {
        let omega0 = rng::gen_bernoulli_mask(rng.substream(trial as u64), n1, n2, rho0)?;
        out.push(deviation_for(t, &omega0, rho0, trial as u64, tol, max_iters)?);
    }
    let max = out.iter().map(|d| d.deviation).fold(0.0, f64::max);
    Ok(ConcentrationStats {
        rho0,
        trials: out,
        max,
    })
}

/// `||P_T - rho0^{-1} P_T P_Omega0 P_T||` for a given `Omega0`.
pub fn deviation_for(
    t: &TangentSpace,
    omega0: &SupportMask,
    rho0: f64,
    trial: u64,
    tol: f64,
    max_iters: usize,
) -> Result<TrialDeviation> {
    omega0.ensure_shape(t.shape())?;
    if omega0.is_full() || t.rank() == 0 {
        // P_Omega0 = I turns the map into P_T - P_T = 0 exactly.
        let dev = if omega0.is_full() { (1.0 / rho0 - 1.0).abs() } else { 0.0 };
        return Ok(TrialDeviation {
            deviation: if t.rank() == 0 { 0.0 } else { dev },
            omega_size: omega0.len(),
            converged: true,
        });
    }
    let apply = |x: &DenseMatrix| -> Result<DenseMatrix> {
        let px = t.project(x)?;
        let mut out = px.clone();
        out.axpy(-1.0 / rho0, &t.project(&prox::proj_support(&px, omega0)?)?);
        Ok(out)
    };
    let start = prox::tangent_start(t)?;
    let result = prox::power_iteration_psd(
        t.shape(),
        start,
        RngState::with_stream(0xc0c0, trial),
        tol,
        max_iters,
        |x| apply(&apply(x)?),
    );
    let (value, converged) = match result {
        Ok(v) => (v, true),
        Err(PcpError::NonConvergence { best_estimate, .. }) => (best_estimate, false),
        Err(e) => return Err(e),
    };
    Ok(TrialDeviation {
        deviation: value.max(0.0).sqrt(),
        omega_size: omega0.len(),
        converged,
    })
}

/// Output of the golfing construction.
#[derive(Clone, Debug)]
pub struct GolfingResult {
    /// `W^L = P_T^perp Y_{j0}`.
    pub w_l: DenseMatrix,
    pub y: DenseMatrix,
    /// Complement of the union of the batches; distributed as `Ber(rho)`.
    pub omega: SupportMask,
    pub batches: Vec<SupportMask>,
    pub j0: usize,
    pub q: f64,
    /// `||Z_j||_F` for `j = 0..=j0`, `Z_j = U V^T - P_T Y_j`.
    pub z_frob: Vec<f64>,
    /// `||Z_j||_inf` for `j = 0..=j0`.
    pub z_linf: Vec<f64>,
    /// `Z_{j0}`.
    pub z_final: DenseMatrix,
}

/// Number of golfing batches, `2 ceil(ln n)` with `n = max(n1, n2)`, at least 1.
pub fn golfing_batches(n: usize) -> usize {
    (2.0 * (n.max(2) as f64).ln().ceil()) as usize
}

/// Golfing recursion `Y_j = Y_{j-1} + q^{-1} P_{Omega_j} P_T (U V^T - Y_{j-1})`.
pub fn build_wl_golfing(t: &TangentSpace, rho: f64, rng: RngState) -> Result<GolfingResult> {
    if !(rho > 0.0 && rho < 1.0) {
        return Err(PcpError::InvalidArgument(format!(
            "rho must lie in (0, 1), got {rho}"
        )));
    }
    if t.rank() == 0 {
        return Err(PcpError::InvalidArgument(
            "golfing needs a tangent space of rank >= 1".into(),
        ));
    }
    let (n1, n2) = t.shape();
    let j0 = golfing_batches(n1.max(n2));
    let q = 1.0 - rho.powf(1.0 / j0 as f64);

    let batches = (0..j0)
        .map(|j| rng::gen_bernoulli_mask(rng.substream(j as u64), n1, n2, q))
        .collect::<Result<Vec<_>>>()?;
    let mut union = SupportMask::empty(n1, n2);
    for b in &batches {
        union = union.union(b);
    }
    let omega = union.complement();

    let uv = t.uv_t();
    let mut y = DenseMatrix::zeros(n1, n2);
    let mut z = uv.clone();
    let mut z_frob = vec![z.frobenius_norm()];
    let mut z_linf = vec![z.linf_norm()];
    for batch in &batches {
        // P_T(UV^T - Y_{j-1}) = Z_{j-1} since UV^T lies in T.
        y.axpy(1.0 / q, &prox::proj_support(&z, batch)?);
        z = uv.sub(&t.project(&y)?);
        z_frob.push(z.frobenius_norm());
        z_linf.push(z.linf_norm());
    }
    let w_l = t.project_complement(&y)?;
    Ok(GolfingResult {
        w_l,
        y,
        omega,
        batches,
        j0,
        q,
        z_frob,
        z_linf,
        z_final: z,
    })
}

#[derive(Clone, Debug)]
pub struct NeumannResult {
    pub w_s: DenseMatrix,
    /// Series terms summed.
    pub terms: usize,
    /// Measured `||P_Omega P_T||`.
    pub composed_norm: f64,
}

const NEUMANN_MAX_TERMS: usize = 10_000;

/// `W^S = lambda P_T^perp sum_k (P_Omega P_T P_Omega)^k sgn(S0)`.
///
/// Requires `||P_Omega P_T|| < 1`. The sum stops once a term's Frobenius norm
/// falls below `1e-12` (relative to `lambda`).
pub fn build_ws_neumann(
    t: &TangentSpace,
    s0: &DenseMatrix,
    omega: &SupportMask,
    lambda: f64,
) -> Result<NeumannResult> {
    omega.ensure_shape(t.shape())?;
    s0.ensure_same_shape(&DenseMatrix::zeros(t.shape().0, t.shape().1))?;
    let (n1, n2) = t.shape();
    if omega.is_empty() {
        return Ok(NeumannResult {
            w_s: DenseMatrix::zeros(n1, n2),
            terms: 0,
            composed_norm: 0.0,
        });
    }
    let composed_norm = prox::op_norm_composed(omega, t, 1e-12, 20 * DEFAULT_POWER_MAX_ITERS)
        .or_else(|e| match e {
            // A stalled power iteration means eigenvalues cluster at the top;
            // the estimate is still a valid lower bound for the divergence test.
            PcpError::NonConvergence { best_estimate, .. } => Ok(best_estimate.max(0.0).sqrt()),
            e => Err(e),
        })?;
    if composed_norm >= 1.0 - 1e-9 {
        return Err(PcpError::SeriesDiverges {
            norm: composed_norm,
        });
    }

    let mut term = prox::proj_support(&s0.signum(), omega)?;
    let mut sum = term.clone();
    let mut terms = 1;
    while term.frobenius_norm() >= 1e-12 {
        if terms >= NEUMANN_MAX_TERMS {
            return Err(PcpError::NonConvergence {
                what: "Neumann series",
                iterations: terms,
                best_estimate: term.frobenius_norm(),
            });
        }
        term = prox::proj_support(&t.project(&term)?, omega)?;
        sum.axpy(1.0, &term);
        terms += 1;
    }
    let w_s = t.project_complement(&sum)?.scale(lambda);
    Ok(NeumannResult {
        w_s,
        terms,
        composed_norm,
    })
}

/// Margins (bound minus measured value) on every certificate condition; positive is satisfied.
///
/// Fields depending on `W^S` are `None` when the least-squares component
/// cannot be formed (`||P_Omega P_T|| >= 1`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertificateReport {
    pub n: usize,
    pub r: usize,
    pub seed: u64,
    pub lambda: f64,
    pub rho: f64,
    pub j0: usize,
    pub q: f64,
    pub omega_size: usize,
    pub pomega_pt_norm: f64,
    /// `1/2 - ||W^L + W^S||`
    pub norm_w: Option<f64>,
    /// `lambda/4 - ||P_Omega(U V^T + W^L)||_F`
    pub frob_on_omega: f64,
    /// `lambda/2 - ||P_Omega^perp(U V^T + W^L + W^S)||_inf`
    pub linf_off_omega: Option<f64>,
    /// `1/4 - ||W^L||`
    pub wl_norm: f64,
    /// `1/4 - ||W^S||`
    pub ws_norm: Option<f64>,
    /// `lambda/4 - ||P_Omega^perp W^S||_inf`
    pub ws_linf_off: Option<f64>,
    /// `||P_Omega W^S - lambda sgn(S0)||_F`
    pub ws_identity_error: Option<f64>,
    pub neumann_terms: Option<usize>,
    /// `||Z_j||_F` along the golfing recursion.
    pub z_frob: Vec<f64>,
    pub pass: bool,
}

impl CertificateReport {
    /// The three certificate conditions, evaluated from the stored margins.
    pub fn conditions_hold(&self) -> bool {
        matches!(self.norm_w, Some(m) if m > 0.0)
            && self.frob_on_omega >= 0.0
            && matches!(self.linf_off_omega, Some(m) if m > 0.0)
    }
}

/// Substream of the instance seed that drives the golfing batches.
pub const GOLFING_STREAM: u64 = 0x901f;
/// Substream of the instance seed that draws `sgn(S0)`.
pub const SIGN_STREAM: u64 = 0x5195;

/// Builds a random rank-`r` instance of size `n x n` with `Omega ~ Ber(rho)`
/// and random signs, constructs `W^L` and `W^S`, and evaluates every margin with
/// `lambda = 1/sqrt(n)`.
pub fn certify_instance(n: usize, r: usize, rho: f64, seed: u64) -> Result<CertificateReport> {
    if r == 0 || r > n {
        return Err(PcpError::InvalidArgument(format!(
            "rank must lie in 1..={n}, got {r}"
        )));
    }
    let base = RngState::new(seed);
    let l0 = synth::gen_low_rank(n, n, r, base)?;
    let t = TangentSpace::from_factors(&svd::svd_full(&l0)?, r)?;
    let golf = build_wl_golfing(&t, rho, base.substream(GOLFING_STREAM))?;
    let omega = &golf.omega;
    let s0 = rng::gen_signs_on(base.substream(SIGN_STREAM), omega);
    let lambda = 1.0 / (n as f64).sqrt();

    let uv = t.uv_t();
    let frob_on_omega = lambda / 4.0 - prox::proj_support(&uv.add(&golf.w_l), omega)?.frobenius_norm();
    let wl_norm = 0.25 - golf.w_l.operator_norm()?;

    let neumann = match build_ws_neumann(&t, &s0, omega, lambda) {
        Ok(ns) => Some(ns),
        Err(PcpError::SeriesDiverges { .. }) | Err(PcpError::NonConvergence { .. }) => None,
        Err(e) => return Err(e),
    };
    let pomega_pt_norm = match &neumann {
        Some(ns) => ns.composed_norm,
        None => prox::op_norm_composed(omega, &t, DEFAULT_POWER_TOL, DEFAULT_POWER_MAX_ITERS)
            .or_else(|e| match e {
                PcpError::NonConvergence { best_estimate, .. } => Ok(best_estimate.max(0.0).sqrt()),
                e => Err(e),
            })?,
    };

    let mut report = CertificateReport {
        n,
        r,
        seed,
        lambda,
        rho,
        j0: golf.j0,
        q: golf.q,
        omega_size: omega.len(),
        pomega_pt_norm,
        norm_w: None,
        frob_on_omega,
        linf_off_omega: None,
        wl_norm,
        ws_norm: None,
        ws_linf_off: None,
        ws_identity_error: None,
        neumann_terms: None,
        z_frob: golf.z_frob.clone(),
        pass: false,
    };
    if let Some(ns) = neumann {
        let w = golf.w_l.add(&ns.w_s);
        report.norm_w = Some(0.5 - w.operator_norm()?);
        let mut off = uv.add(&w);
        prox::zero_on(&mut off, omega);
        report.linf_off_omega = Some(lambda / 2.0 - off.linf_norm());
        report.ws_norm = Some(0.25 - ns.w_s.operator_norm()?);
        let mut ws_off = ns.w_s.clone();
        prox::zero_on(&mut ws_off, omega);
        report.ws_linf_off = Some(lambda / 4.0 - ws_off.linf_norm());
        let target = s0.signum().scale(lambda);
        report.ws_identity_error = Some(prox::proj_support(&ns.w_s, omega)?.sub(&target).frobenius_norm());
        report.neumann_terms = Some(ns.terms);
    }
    report.pass = report.conditions_hold();
    Ok(report)
}
