//! Proximal operators and the projections the solver and certifier compose.

use crate::error::{PcpError, Result};
use crate::matrix::{DenseMatrix, SupportMask};
use crate::rng::{self, RngState};
use crate::svd::{self, reconstruct_scaled, SvdFactors};

/// Elementwise soft thresholding `sgn(x) max(|x| - tau, 0)`, the prox of `tau ||.||_1`.
pub fn shrink(x: &DenseMatrix, tau: f64) -> DenseMatrix {
    debug_assert!(tau >= 0.0);
    x.map(|v| shrink_scalar(v, tau))
}

#[inline]
pub fn shrink_scalar(x: f64, tau: f64) -> f64 {
    if x > tau {
        x - tau
    } else if x < -tau {
        x + tau
    } else {
        0.0
    }
}

/// Bookkeeping from one singular value thresholding call.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SvtStats {
    /// Singular values strictly above the threshold.
    pub above: usize,
    /// SVD computations performed, including rank-schedule retries.
    pub svd_calls: usize,
    pub used_full: bool,
}

/// Singular value thresholding `U S_tau(Sigma) V^T` using a full SVD.
pub fn svt(x: &DenseMatrix, tau: f64) -> Result<(DenseMatrix, SvtStats)> {
    let f = svd::svd_full(x)?;
    let (z, above) = threshold_factors(&f, tau);
    Ok((
        z,
        SvtStats {
            above,
            svd_calls: 1,
            used_full: true,
        },
    ))
}

fn threshold_factors(f: &SvdFactors, tau: f64) -> (DenseMatrix, usize) {
    let shrunk: Vec<f64> = f.sigma.iter().map(|&s| (s - tau).max(0.0)).collect();
    let above = shrunk.iter().filter(|&&s| s > 0.0).count();
    (reconstruct_scaled(&f.u, &shrunk, &f.v), above)
}

/// Predicted-rank schedule for partial SVDs across consecutive thresholding calls.
///
/// With predicted rank `sv` and observed count `svp` of singular values above
/// the threshold: `svp < sv` gives `sv <- svp + 1`, otherwise
/// `sv <- svp + max(1, round(0.05 * n2))`, where `n2` is the smaller dimension.
/// Once `sv` exceeds `full_fraction * n2` a full SVD is used.
#[derive(Clone, Debug)]
pub struct RankSchedule {
    predicted: usize,
    full_fraction: f64,
}

impl RankSchedule {
    pub fn new(initial: usize, full_fraction: f64) -> Self {
        Self {
            predicted: initial.max(1),
            full_fraction,
        }
    }

    pub fn predicted(&self) -> usize {
        self.predicted
    }

    fn grow(&mut self, svp: usize, dmin: usize) {
        let step = ((0.05 * dmin as f64).round() as usize).max(1);
        self.predicted = (svp + step).min(dmin);
    }

    fn observe(&mut self, sv: usize, svp: usize, dmin: usize) {
        if svp < sv {
            self.predicted = (svp + 1).min(dmin);
        } else {
            self.grow(svp, dmin);
        }
    }
}

/// Singular value thresholding with a partial SVD sized by `schedule`.
///
/// When every computed singular value exceeds `tau` the spectrum was cut short,
/// so the predicted rank is grown and the decomposition retried; the result is
/// therefore always the exact `D_tau(x)`.
pub fn svt_adaptive(
    x: &DenseMatrix,
    tau: f64,
    schedule: &mut RankSchedule,
) -> Result<(DenseMatrix, SvtStats)> {
    let dmin = x.rows().min(x.cols());
    let mut stats = SvtStats::default();
    if dmin == 0 {
        return Ok((x.clone(), stats));
    }
    loop {
        let sv = schedule.predicted.clamp(1, dmin);
        let use_full = sv == dmin || sv as f64 > schedule.full_fraction * dmin as f64;
        let f = if use_full {
            svd::svd_full(x)?
        } else {
            svd::svd_truncated(x, sv)?
        };
        stats.svd_calls += 1;
        let (z, above) = threshold_factors(&f, tau);
        if !use_full && above == sv {
            schedule.grow(above, dmin);
            continue;
        }
        schedule.observe(if use_full { dmin } else { sv }, above, dmin);
        stats.above = above;
        stats.used_full = use_full;
        return Ok((z, stats));
    }
}

/// `P_Omega x`: keeps entries on `omega`, zeros elsewhere.
pub fn proj_support(x: &DenseMatrix, omega: &SupportMask) -> Result<DenseMatrix> {
    omega.ensure_shape(x.shape())?;
    let mut out = DenseMatrix::zeros(x.rows(), x.cols());
    for &(i, j) in omega.entries() {
        out[(i, j)] = x[(i, j)];
    }
    Ok(out)
}

/// Zeros the entries of `x` on `omega` in place (`P_Omega^perp`).
pub(crate) fn zero_on(x: &mut DenseMatrix, omega: &SupportMask) {
    for &(i, j) in omega.entries() {
        x[(i, j)] = 0.0;
    }
}

/// `T = { U X^T + Y V^T }` for column-orthonormal `U` (n1 x r) and `V` (n2 x r).
#[derive(Clone, Debug, PartialEq)]
pub struct TangentSpace {
    u: DenseMatrix,
    v: DenseMatrix,
}

impl TangentSpace {
    /// Validates shapes and column orthonormality (to 1e-10).
    pub fn new(u: DenseMatrix, v: DenseMatrix) -> Result<Self> {
        if u.cols() != v.cols() {
            return Err(PcpError::InvalidArgument(format!(
                "U has {} columns but V has {}",
                u.cols(),
                v.cols()
            )));
        }
        for (name, q) in [("U", &u), ("V", &v)] {
            let err = q.t_matmul(q).sub(&DenseMatrix::identity(q.cols())).frobenius_norm();
            if err > 1e-10 {
                return Err(PcpError::InvalidArgument(format!(
                    "{name} is not column-orthonormal (error {err:.3e})"
                )));
            }
        }
        Ok(Self { u, v })
    }

    /// Tangent space at a low-rank matrix, using its leading `rank` singular vectors.
    pub fn from_factors(f: &SvdFactors, rank: usize) -> Result<Self> {
        let t = f.truncate(rank);
        Self::new(t.u, t.v)
    }

    /// Tangent space at `l`, sized by its numerical rank.
    pub fn of_matrix(l: &DenseMatrix) -> Result<Self> {
        let f = svd::svd_full(l)?;
        let r = f.rank();
        Self::from_factors(&f, r)
    }

    pub fn empty(n1: usize, n2: usize) -> Self {
        Self {
            u: DenseMatrix::zeros(n1, 0),
            v: DenseMatrix::zeros(n2, 0),
        }
    }

    pub fn u(&self) -> &DenseMatrix {
        &self.u
    }

    pub fn v(&self) -> &DenseMatrix {
        &self.v
    }

    pub fn rank(&self) -> usize {
        self.u.cols()
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.u.rows(), self.v.rows())
    }

    /// `U V^T`.
    pub fn uv_t(&self) -> DenseMatrix {
        self.u.matmul_t(&self.v)
    }

    fn check(&self, x: &DenseMatrix) -> Result<()> {
        if x.shape() != self.shape() {
            return Err(PcpError::Shape {
                expected: self.shape(),
                got: x.shape(),
            });
        }
        Ok(())
    }

    /// `P_T x = U U^T x + x V V^T - U U^T x V V^T`.
    pub fn project(&self, x: &DenseMatrix) -> Result<DenseMatrix> {
        self.check(x)?;
        if self.rank() == 0 {
            return Ok(DenseMatrix::zeros(x.rows(), x.cols()));
        }
        // U (U^T x) + (x V - U (U^T x V)) V^T
        let utx = self.u.t_matmul(x);
        let xv = x.matmul(&self.v);
        let utxv = utx.matmul(&self.v);
        let left = xv.sub(&self.u.matmul(&utxv));
        let mut out = self.u.matmul(&utx);
        out.axpy(1.0, &left.matmul_t(&self.v));
        Ok(out)
    }

    /// `P_T^perp x = x - P_T x = (I - U U^T) x (I - V V^T)`.
    pub fn project_complement(&self, x: &DenseMatrix) -> Result<DenseMatrix> {
        Ok(x.sub(&self.project(x)?))
    }

    /// `||P_T(e_i e_j^T)||_F` for every position, computed from row leverages:
    /// `||P_T e_i e_j^T||_F^2 = ||U^T e_i||^2 + ||V^T e_j||^2 - ||U^T e_i||^2 ||V^T e_j||^2`.
    pub fn max_unit_projection_norm(&self) -> f64 {
        let lev = |q: &DenseMatrix| -> Vec<f64> {
            (0..q.rows()).map(|i| q.row(i).iter().map(|x| x * x).sum()).collect()
        };
        let lu = lev(&self.u);
        let lv = lev(&self.v);
        let mut best: f64 = 0.0;
        for &a in &lu {
            for &b in &lv {
                best = best.max(a + b - a * b);
            }
        }
        best.sqrt()
    }
}

pub fn proj_tangent(x: &DenseMatrix, t: &TangentSpace) -> Result<DenseMatrix> {
    t.project(x)
}

pub fn proj_tangent_complement(x: &DenseMatrix, t: &TangentSpace) -> Result<DenseMatrix> {
    t.project_complement(x)
}

pub const DEFAULT_POWER_TOL: f64 = 1e-9;
pub const DEFAULT_POWER_MAX_ITERS: usize = 5000;

/// Largest eigenvalue of a positive semidefinite map by power iteration.
///
/// Returns the Rayleigh quotient `<x, A x>` for the final unit iterate; stops
/// when its relative change drops below `tol`. A zero map returns 0.
pub(crate) fn power_iteration_psd(
    shape: (usize, usize),
    start: DenseMatrix,
    fallback_seed: RngState,
    tol: f64,
    max_iters: usize,
    apply: impl Fn(&DenseMatrix) -> Result<DenseMatrix>,
) -> Result<f64> {
    if !(tol > 0.0) {
        return Err(PcpError::InvalidArgument(format!("tol must be positive, got {tol}")));
    }
    let mut x = start;
    let mut nrm = x.frobenius_norm();
    if !(nrm > 1e-12) {
        let g = rng::standard_normal_vec(fallback_seed, shape.0 * shape.1);
        x = DenseMatrix::from_vec(shape.0, shape.1, g)?;
        nrm = x.frobenius_norm();
    }
    x = x.scale(1.0 / nrm);
    let mut estimate = f64::NAN;
    for _ in 0..max_iters {
        let ax = apply(&x)?;
        let rq = x.dot(&ax);
        let anrm = ax.frobenius_norm();
        if anrm == 0.0 {
            return Ok(0.0);
        }
        if estimate.is_finite() && (rq - estimate).abs() <= tol * rq.abs().max(f64::MIN_POSITIVE) {
            return Ok(rq);
        }
        estimate = rq;
        x = ax.scale(1.0 / anrm);
    }
    Err(PcpError::NonConvergence {
        what: "power iteration",
        iterations: max_iters,
        best_estimate: estimate,
    })
}

/// Deterministic start vector: `P_T` of the normalized all-ones matrix.
pub(crate) fn tangent_start(t: &TangentSpace) -> Result<DenseMatrix> {
    let (n1, n2) = t.shape();
    let ones = DenseMatrix::from_fn(n1, n2, |_, _| 1.0 / ((n1 * n2) as f64).sqrt());
    t.project(&ones)
}

/// `||P_Omega P_T||`, as the square root of the top eigenvalue of `P_T P_Omega P_T`.
pub fn op_norm_composed(
    omega: &SupportMask,
    t: &TangentSpace,
    tol: f64,
    max_iters: usize,
) -> Result<f64> {
    omega.ensure_shape(t.shape())?;
    if omega.is_empty() || t.rank() == 0 {
        return Ok(0.0);
    }
    let start = tangent_start(t)?;
    let lambda = power_iteration_psd(
        t.shape(),
        start,
        RngState::with_stream(0x0b5e, 1),
        tol,
        max_iters,
        |x| {
            let px = t.project(x)?;
            t.project(&proj_support(&px, omega)?)
        },
    )?;
    Ok(lambda.max(0.0).sqrt())
}
