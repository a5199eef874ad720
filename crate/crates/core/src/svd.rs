//! Full and partial singular value decompositions.
//!
//! The full SVD is a one-sided (Hestenes) Jacobi iteration, which delivers
//! singular values to high relative accuracy. The partial SVD is a Golub-Kahan-Lanczos
//! bidiagonalization with full reorthogonalization, extended until the residual
//! of every requested Ritz triplet is at roundoff level. Both apply the same
//! sign convention so factors can be compared directly: in each singular pair
//! the largest-magnitude entry of the left vector (first one on ties) is
//! nonnegative.

use crate::error::{PcpError, Result};
use crate::matrix::DenseMatrix;
use crate::rng::{self, RngState};

/// `m = u * diag(sigma) * v^T` with orthonormal columns in `u` and `v`.
#[derive(Clone, Debug, PartialEq)]
pub struct SvdFactors {
    pub u: DenseMatrix,
    pub sigma: Vec<f64>,
    pub v: DenseMatrix,
}

impl SvdFactors {
    pub fn len(&self) -> usize {
        self.sigma.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sigma.is_empty()
    }

    /// Numerical rank: count of `sigma_i > max(n1, n2) * eps * sigma_1`.
    pub fn rank(&self) -> usize {
        numerical_rank(&self.sigma, self.u.rows().max(self.v.rows()))
    }

    /// Keeps the leading `k` triplets.
    pub fn truncate(&self, k: usize) -> SvdFactors {
        let k = k.min(self.len());
        SvdFactors {
            u: self.u.leading_columns(k),
            sigma: self.sigma[..k].to_vec(),
            v: self.v.leading_columns(k),
        }
    }

    pub fn reconstruct(&self) -> DenseMatrix {
        reconstruct_scaled(&self.u, &self.sigma, &self.v)
    }
}

/// `u * diag(weights) * v^T`, using only the columns where the weight is nonzero.
pub fn reconstruct_scaled(u: &DenseMatrix, weights: &[f64], v: &DenseMatrix) -> DenseMatrix {
    let keep: Vec<usize> = (0..weights.len()).filter(|&i| weights[i] != 0.0).collect();
    let us = DenseMatrix::from_fn(u.rows(), keep.len(), |i, j| u[(i, keep[j])] * weights[keep[j]]);
    let vk = DenseMatrix::from_fn(v.rows(), keep.len(), |i, j| v[(i, keep[j])]);
    us.matmul_t(&vk)
}

/// Numerical rank of a nonincreasing spectrum for a matrix whose larger dimension is `max_dim`.
pub fn numerical_rank(sigma: &[f64], max_dim: usize) -> usize {
    let Some(&top) = sigma.first() else {
        return 0;
    };
    if top <= 0.0 {
        return 0;
    }
    let tol = max_dim as f64 * f64::EPSILON * top;
    sigma.iter().filter(|&&s| s > tol).count()
}

/// Singular values only, sorted nonincreasing.
pub fn singular_values(m: &DenseMatrix) -> Result<Vec<f64>> {
    m.ensure_finite()?;
    if m.rows() == 0 || m.cols() == 0 {
        return Ok(Vec::new());
    }
    let mut s = jacobi_svd(m, false)?.1;
    s.sort_by(|a, b| b.total_cmp(a));
    Ok(s)
}

/// Thin SVD with `k = min(rows, cols)` triplets.
pub fn svd_full(m: &DenseMatrix) -> Result<SvdFactors> {
    m.ensure_finite()?;
    let (rows, cols) = m.shape();
    if rows.min(cols) == 0 {
        return Ok(SvdFactors {
            u: DenseMatrix::zeros(rows, 0),
            sigma: Vec::new(),
            v: DenseMatrix::zeros(cols, 0),
        });
    }
    let (u, sigma, v) = jacobi_svd(m, true)?;
    Ok(normalize(u, sigma, v.expect("vectors requested")))
}

const JACOBI_MAX_SWEEPS: usize = 80;

/// One-sided Jacobi SVD. Returns `(U, sigma, V)` unsorted; `V` only when requested.
///
/// Orthogonalizes the columns of the tall orientation pairwise until every pair
/// satisfies `|<a_p, a_q>| <= eps ||a_p|| ||a_q||`.
fn jacobi_svd(m: &DenseMatrix, vectors: bool) -> Result<(DenseMatrix, Vec<f64>, Option<DenseMatrix>)> {
    if m.cols() > m.rows() {
        let (u, s, v) = jacobi_svd(&m.transpose(), vectors)?;
        return Ok((v.unwrap_or_else(|| DenseMatrix::zeros(m.rows(), 0)), s, Some(u)));
    }
    let (rows, n) = m.shape();
    // Columns of `m` as contiguous rows.
    let mut w: Vec<Vec<f64>> = (0..n).map(|j| m.column(j)).collect();
    let mut v: Vec<Vec<f64>> = if vectors {
        (0..n)
            .map(|j| {
                let mut e = vec![0.0; n];
                e[j] = 1.0;
                e
            })
            .collect()
    } else {
        Vec::new()
    };
    let mut norms2: Vec<f64> = w.iter().map(|c| dot(c, c)).collect();
    // Columns below this norm carry no information at working precision.
    let negligible = 1e-2 * f64::EPSILON * norms2.iter().sum::<f64>().sqrt();
    let negligible2 = negligible * negligible;
    // Rounding in the inner product is of order sqrt(rows) * eps.
    let rot_tol = (rows as f64).sqrt() * f64::EPSILON;
    let mut converged = false;
    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha = norms2[p];
                let beta = norms2[q];
                if alpha <= negligible2 || beta <= negligible2 {
                    continue;
                }
                let gamma = dot(&w[p], &w[q]);
                if gamma.abs() <= rot_tol * alpha.sqrt() * beta.sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                let (lo, hi) = w.split_at_mut(q);
                rotate(&mut lo[p], &mut hi[0], c, s);
                if vectors {
                    let (lo, hi) = v.split_at_mut(q);
                    rotate(&mut lo[p], &mut hi[0], c, s);
                }
                norms2[p] = dot(&w[p], &w[p]);
                norms2[q] = dot(&w[q], &w[q]);
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(PcpError::NumericalFailure(format!(
            "Jacobi SVD of a {rows}x{n} matrix did not converge in {JACOBI_MAX_SWEEPS} sweeps"
        )));
    }
    let sigma: Vec<f64> = norms2
        .iter()
        .map(|&x| if x <= negligible2 { 0.0 } else { x.sqrt() })
        .collect();
    if !vectors {
        return Ok((DenseMatrix::zeros(rows, 0), sigma, None));
    }

    // Left vectors; columns with no mass are completed to an orthonormal set.
    let mut u_cols: Vec<Option<Vec<f64>>> = w
        .into_iter()
        .zip(&sigma)
        .map(|(c, &s)| (s > 0.0).then(|| c.into_iter().map(|x| x / s).collect()))
        .collect();
    let mut basis: Vec<Vec<f64>> = u_cols.iter().flatten().cloned().collect();
    let mut next_unit = 0;
    for slot in u_cols.iter_mut().filter(|c| c.is_none()) {
        loop {
            let mut e = vec![0.0; rows];
            e[next_unit % rows] = 1.0;
            next_unit += 1;
            orthogonalize(&mut e, &basis);
            orthogonalize(&mut e, &basis);
            let nrm = norm(&e);
            if nrm > 1e-8 {
                e.iter_mut().for_each(|x| *x /= nrm);
                basis.push(e.clone());
                *slot = Some(e);
                break;
            }
        }
    }
    let mut u = DenseMatrix::zeros(rows, n);
    for (j, c) in u_cols.into_iter().enumerate() {
        u.set_column(j, &c.expect("completed above"));
    }
    let mut vm = DenseMatrix::zeros(n, n);
    for (j, c) in v.iter().enumerate() {
        vm.set_column(j, c);
    }
    Ok((u, sigma, Some(vm)))
}

/// `(x, y) <- (c x - s y, s x + c y)`.
#[inline]
fn rotate(x: &mut [f64], y: &mut [f64], c: f64, s: f64) {
    for (a, b) in x.iter_mut().zip(y.iter_mut()) {
        let (xa, yb) = (*a, *b);
        *a = c * xa - s * yb;
        *b = s * xa + c * yb;
    }
}

/// Dot product with four independent accumulators so the loop vectorizes.
#[inline]
pub(crate) fn dot(x: &[f64], y: &[f64]) -> f64 {
    let mut acc = [0.0f64; 4];
    let xc = x.chunks_exact(4);
    let yc = y.chunks_exact(4);
    let tail: f64 = xc.remainder().iter().zip(yc.remainder()).map(|(a, b)| a * b).sum();
    for (a, b) in xc.zip(yc) {
        acc[0] += a[0] * b[0];
        acc[1] += a[1] * b[1];
        acc[2] += a[2] * b[2];
        acc[3] += a[3] * b[3];
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// Sorts triplets by decreasing singular value and applies the sign convention.
fn normalize(u: DenseMatrix, sigma: Vec<f64>, v: DenseMatrix) -> SvdFactors {
    let k = sigma.len();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| sigma[b].total_cmp(&sigma[a]));
    let mut out_u = DenseMatrix::zeros(u.rows(), k);
    let mut out_v = DenseMatrix::zeros(v.rows(), k);
    let mut out_sigma = Vec::with_capacity(k);
    for (dst, &src) in order.iter().enumerate() {
        let mut uc = u.column(src);
        let mut vc = v.column(src);
        let mut pivot = 0;
        for (i, x) in uc.iter().enumerate() {
            if x.abs() > uc[pivot].abs() {
                pivot = i;
            }
        }
        if uc.get(pivot).is_some_and(|&x| x < 0.0) {
            uc.iter_mut().for_each(|x| *x = -*x);
            vc.iter_mut().for_each(|x| *x = -*x);
        }
        out_u.set_column(dst, &uc);
        out_v.set_column(dst, &vc);
        out_sigma.push(sigma[src].max(0.0));
    }
    SvdFactors {
        u: out_u,
        sigma: out_sigma,
        v: out_v,
    }
}

/// Relative residual at which a Ritz triplet counts as converged.
const LANCZOS_TOL: f64 = 1e-13;

/// Leading `k` singular triplets by Lanczos bidiagonalization.
///
/// The Krylov basis grows until `||A^T u_i - sigma_i v_i|| <= 1e-13 * sigma_1`
/// for every `i < k`; at full dimension the bidiagonalization is exact, so the
/// routine always terminates.
pub fn svd_truncated(m: &DenseMatrix, k: usize) -> Result<SvdFactors> {
    m.ensure_finite()?;
    let (rows, cols) = m.shape();
    let dmin = rows.min(cols);
    if k == 0 || k > dmin {
        return Err(PcpError::InvalidArgument(format!(
            "truncated SVD rank must lie in 1..={dmin}, got {k}"
        )));
    }
    if cols > rows {
        let t = svd_truncated(&m.transpose(), k)?;
        return Ok(normalize(t.v, t.sigma, t.u));
    }
    let (u, sigma, v) = LanczosBidiag::new(m).top_triplets(k)?;
    Ok(normalize(u, sigma, v))
}

/// Golub-Kahan-Lanczos state for a tall (`rows >= cols`) matrix:
/// `A V_p = U_p B_p`, `A^T U_p = V_p B_p^T + beta_p v_{p+1} e_p^T`.
struct LanczosBidiag<'a> {
    a: &'a DenseMatrix,
    us: Vec<Vec<f64>>,
    vs: Vec<Vec<f64>>,
    alphas: Vec<f64>,
    betas: Vec<f64>,
    /// Next right vector, already normalized (or a fresh random direction after breakdown).
    next_v: Vec<f64>,
    breakdown_tol: f64,
    restarts: u64,
}

impl<'a> LanczosBidiag<'a> {
    fn new(a: &'a DenseMatrix) -> Self {
        let n = a.cols();
        let scale = a.frobenius_norm();
        let mut me = Self {
            a,
            us: Vec::new(),
            vs: Vec::new(),
            alphas: Vec::new(),
            betas: Vec::new(),
            next_v: Vec::new(),
            breakdown_tol: (a.rows() as f64) * f64::EPSILON * scale.max(f64::MIN_POSITIVE),
            restarts: 0,
        };
        me.next_v = me.fresh_direction(n, true);
        me
    }

    /// Random unit vector orthogonal to the current left (`left == false`) or right basis.
    fn fresh_direction(&mut self, len: usize, right: bool) -> Vec<f64> {
        loop {
            self.restarts += 1;
            let state = RngState::with_stream(0x5eed_1a2c, self.restarts);
            let mut x = rng::standard_normal_vec(state, len);
            let basis = if right { &self.vs } else { &self.us };
            orthogonalize(&mut x, basis);
            orthogonalize(&mut x, basis);
            let nrm = norm(&x);
            if nrm > 1e-8 {
                x.iter_mut().for_each(|v| *v /= nrm);
                return x;
            }
        }
    }

    fn len(&self) -> usize {
        self.vs.len()
    }

    /// Extends the factorization to `p` steps.
    fn extend_to(&mut self, p: usize) {
        let (m, n) = self.a.shape();
        while self.len() < p {
            let v = std::mem::take(&mut self.next_v);
            let mut u = self.a.matvec(&v);
            if let (Some(prev_u), Some(&beta)) = (self.us.last(), self.betas.last()) {
                axpy(&mut u, -beta, prev_u);
            }
            orthogonalize(&mut u, &self.us);
            orthogonalize(&mut u, &self.us);
            let mut alpha = norm(&u);
            self.vs.push(v);
            if alpha <= self.breakdown_tol {
                alpha = 0.0;
                u = self.fresh_direction(m, false);
            } else {
                u.iter_mut().for_each(|x| *x /= alpha);
            }
            self.alphas.push(alpha);

            let mut w = self.a.t_matvec(&u);
            axpy(&mut w, -alpha, self.vs.last().expect("just pushed"));
            self.us.push(u);
            orthogonalize(&mut w, &self.vs);
            orthogonalize(&mut w, &self.vs);
            let mut beta = norm(&w);
            if self.len() == n {
                beta = 0.0;
            } else if beta <= self.breakdown_tol {
                beta = 0.0;
                w = self.fresh_direction(n, true);
            } else {
                w.iter_mut().for_each(|x| *x /= beta);
            }
            self.betas.push(beta);
            self.next_v = w;
        }
    }

    fn top_triplets(&mut self, k: usize) -> Result<(DenseMatrix, Vec<f64>, DenseMatrix)> {
        let (m, n) = self.a.shape();
        let mut p = n.min((2 * k).max(k + 10));
        loop {
            self.extend_to(p);
            let b = DenseMatrix::from_fn(p, p, |i, j| {
                if i == j {
                    self.alphas[i]
                } else if j == i + 1 {
                    self.betas[i]
                } else {
                    0.0
                }
            });
            let (pb, sig, qb) = jacobi_svd(&b, true)?;
            let qb = qb.expect("vectors requested");
            let mut order: Vec<usize> = (0..p).collect();
            order.sort_by(|&x, &y| sig[y].total_cmp(&sig[x]));
            let top = sig[order[0]];
            let beta_p = self.betas[p - 1];
            let converged = p == n
                || order[..k]
                    .iter()
                    .all(|&c| beta_p * pb[(p - 1, c)].abs() <= LANCZOS_TOL * top.max(f64::MIN_POSITIVE));
            if converged {
                let mut u = DenseMatrix::zeros(m, k);
                let mut v = DenseMatrix::zeros(n, k);
                let mut sigma = Vec::with_capacity(k);
                for (dst, &c) in order[..k].iter().enumerate() {
                    let mut ucol = vec![0.0; m];
                    let mut vcol = vec![0.0; n];
                    for j in 0..p {
                        axpy(&mut ucol, pb[(j, c)], &self.us[j]);
                        axpy(&mut vcol, qb[(j, c)], &self.vs[j]);
                    }
                    u.set_column(dst, &ucol);
                    v.set_column(dst, &vcol);
                    sigma.push(sig[c]);
                }
                return Ok((u, sigma, v));
            }
            p = n.min(p + k.max(10));
        }
    }
}

fn norm(x: &[f64]) -> f64 {
    dot(x, x).sqrt()
}

fn axpy(y: &mut [f64], alpha: f64, x: &[f64]) {
    for (a, &b) in y.iter_mut().zip(x) {
        *a += alpha * b;
    }
}

/// One classical Gram-Schmidt pass against an orthonormal basis.
fn orthogonalize(x: &mut [f64], basis: &[Vec<f64>]) {
    for q in basis {
        let c = dot(q, x);
        axpy(x, -c, q);
    }
}
