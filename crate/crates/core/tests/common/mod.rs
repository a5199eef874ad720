//! Independent reference computations shared by the integration tests and the
//! acceptance suite. Nothing here calls the routines it is used to check.
#![allow(dead_code)]

use pcp_core::{DenseMatrix, SupportMask};

/// Square dense matrix stored row-major, used for explicitly assembled operators.
#[derive(Clone, Debug)]
pub struct Square {
    pub n: usize,
    pub a: Vec<f64>,
}

impl Square {
    pub fn zeros(n: usize) -> Self {
        Self { n, a: vec![0.0; n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut s = Self::zeros(n);
        for i in 0..n {
            s.a[i * n + i] = 1.0;
        }
        s
    }

    pub fn from_dense(m: &DenseMatrix) -> Self {
        assert_eq!(m.rows(), m.cols());
        Self {
            n: m.rows(),
            a: m.as_slice().to_vec(),
        }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.a[i * self.n + j]
    }

    pub fn mul(&self, other: &Square) -> Square {
        let n = self.n;
        let mut out = Square::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let aik = self.a[i * n + k];
                if aik == 0.0 {
                    continue;
                }
                for j in 0..n {
                    out.a[i * n + j] += aik * other.a[k * n + j];
                }
            }
        }
        out
    }

    pub fn lin(&self, alpha: f64, other: &Square, beta: f64) -> Square {
        Square {
            n: self.n,
            a: self.a.iter().zip(&other.a).map(|(x, y)| alpha * x + beta * y).collect(),
        }
    }

    pub fn transpose(&self) -> Square {
        let n = self.n;
        let mut out = Square::zeros(n);
        for i in 0..n {
            for j in 0..n {
                out.a[j * n + i] = self.a[i * n + j];
            }
        }
        out
    }

    /// Kronecker product, so that `vec(A X B) = (A kron B^T) vec(X)` for row-major `vec`.
    pub fn kron(&self, other: &Square) -> Square {
        let (p, q) = (self.n, other.n);
        let n = p * q;
        let mut out = Square::zeros(n);
        for i in 0..p {
            for j in 0..p {
                let s = self.a[i * p + j];
                for k in 0..q {
                    for l in 0..q {
                        out.a[(i * q + k) * n + (j * q + l)] = s * other.a[k * q + l];
                    }
                }
            }
        }
        out
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.a[i * self.n + j] * x[j]).sum())
            .collect()
    }
}

/// Eigenvalues of a symmetric matrix by the cyclic two-sided Jacobi method, descending.
pub fn sym_eigenvalues(m: &Square) -> Vec<f64> {
    let n = m.n;
    let mut a = m.a.clone();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i * n + j] * a[i * n + j])
            .sum();
        let total: f64 = a.iter().map(|x| x * x).sum();
        if off <= 1e-30 * total.max(f64::MIN_POSITIVE) {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k * n + p], a[k * n + q]);
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p * n + k], a[q * n + k]);
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..n).map(|i| a[i * n + i]).collect();
    ev.sort_by(|x, y| y.partial_cmp(x).unwrap());
    ev
}

/// Singular values of a general matrix from the eigenvalues of its Gram matrix.
pub fn singular_values_via_gram(m: &DenseMatrix) -> Vec<f64> {
    let g = if m.rows() >= m.cols() { m.t_matmul(m) } else { m.matmul_t(m) };
    let ev = sym_eigenvalues(&Square::from_dense(&g));
    // Gram eigenvalues carry absolute error ~eps * top; below that they are zero.
    let floor = 1e-13 * ev.first().copied().unwrap_or(0.0);
    ev.into_iter()
        .map(|e| if e <= floor { 0.0 } else { e.sqrt() })
        .collect()
}

/// `P_T` on `n1 n2`-vectors: `P_U kron I + I kron P_V - P_U kron P_V`.
pub fn tangent_projector(u: &DenseMatrix, v: &DenseMatrix) -> Square {
    let pu = Square::from_dense(&u.matmul_t(u));
    let pv = Square::from_dense(&v.matmul_t(v));
    let iu = Square::identity(u.rows());
    let iv = Square::identity(v.rows());
    let a = pu.kron(&iv);
    let b = iu.kron(&pv);
    let c = pu.kron(&pv);
    a.lin(1.0, &b, 1.0).lin(1.0, &c, -1.0)
}

/// Diagonal 0/1 matrix selecting the entries of `mask`.
pub fn support_projector(mask: &SupportMask) -> Square {
    let (rows, cols) = (mask.rows(), mask.cols());
    let mut s = Square::zeros(rows * cols);
    for &(i, j) in mask.entries() {
        let k = i * cols + j;
        s.a[k * rows * cols + k] = 1.0;
    }
    s
}

/// Largest absolute eigenvalue of a symmetric matrix.
pub fn spectral_radius(m: &Square) -> f64 {
    sym_eigenvalues(m).iter().fold(0.0_f64, |acc, &e| acc.max(e.abs()))
}

/// Solves `A x = b` by Gaussian elimination with partial pivoting.
pub fn solve_dense(a: &Square, b: &[f64]) -> Vec<f64> {
    let n = a.n;
    let mut m = a.a.clone();
    let mut x = b.to_vec();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| m[i * n + col].abs().partial_cmp(&m[j * n + col].abs()).unwrap())
            .unwrap();
        if piv != col {
            for k in 0..n {
                m.swap(col * n + k, piv * n + k);
            }
            x.swap(col, piv);
        }
        let d = m[col * n + col];
        assert!(d.abs() > 1e-14, "singular system");
        for i in col + 1..n {
            let f = m[i * n + col] / d;
            if f == 0.0 {
                continue;
            }
            for k in col..n {
                m[i * n + k] -= f * m[col * n + k];
            }
            x[i] -= f * x[col];
        }
    }
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|k| m[i * n + k] * x[k]).sum();
        x[i] = (x[i] - s) / m[i * n + i];
    }
    x
}

/// Prox of `tau |.|` at `x` by brute-force search on a grid of the given step.
pub fn grid_prox_abs(x: f64, tau: f64, step: f64) -> f64 {
    let lo = x.min(0.0) - step;
    let hi = x.max(0.0) + step;
    let count = ((hi - lo) / step).ceil() as usize;
    let objective = |z: f64| 0.5 * (z - x) * (z - x) + tau * z.abs();
    let mut best = 0.0;
    let mut best_val = objective(0.0);
    for k in 0..=count {
        let z = lo + k as f64 * step;
        let val = objective(z);
        if val < best_val {
            best = z;
            best_val = val;
        }
    }
    best
}

/// Subgradient optimality residuals of `z = D_tau(x)`: `(||x - z|| - tau, |<x - z, z> - tau ||z||_*|)`.
///
/// `x - z` lies in `tau * d||z||_*` exactly when the first is `<= 0` and the second is 0.
pub fn svt_optimality(x: &DenseMatrix, z: &DenseMatrix, tau: f64) -> (f64, f64) {
    let g = x.sub(z);
    let spec = singular_values_via_gram(&g)[0];
    let nuc: f64 = singular_values_via_gram(z).iter().sum();
    (spec - tau, (g.dot(z) - tau * nuc).abs())
}

/// Relative Frobenius distance.
pub fn rel_diff(a: &DenseMatrix, b: &DenseMatrix) -> f64 {
    a.sub(b).frobenius_norm() / b.frobenius_norm().max(f64::MIN_POSITIVE)
}

/// Checks the projector identities on one random instance and returns every violation.
///
/// `P_T` idempotence, self-adjointness and complementarity are checked to 1e-10
/// relative; `P_Omega` idempotence and complementarity exactly; the leverage
/// bound `max ||P_T e_i e_j^T||_F <= sqrt(2 mu r / min(n1, n2)) + 1e-8` against a
/// brute-force maximum.
pub fn projector_violations(n1: usize, n2: usize, r: usize, rho: f64, seed: u64) -> Vec<String> {
    use pcp_core::rng::{gen_bernoulli_mask, gen_gaussian};
    use pcp_core::{certify, prox, svd, RngState, TangentSpace};

    let mut bad = Vec::new();
    let base = RngState::new(seed);
    let a = gen_gaussian(base.substream(1), n1, r, 1.0).unwrap();
    let b = gen_gaussian(base.substream(2), n2, r, 1.0).unwrap();
    let t = TangentSpace::from_factors(&svd::svd_full(&a.matmul_t(&b)).unwrap(), r).unwrap();
    let x = gen_gaussian(base.substream(3), n1, n2, 1.0).unwrap();
    let y = gen_gaussian(base.substream(4), n1, n2, 1.0).unwrap();
    let tol = 1e-10 * x.frobenius_norm();

    let px = t.project(&x).unwrap();
    let ppx = t.project(&px).unwrap();
    if ppx.sub(&px).frobenius_norm() > tol {
        bad.push(format!("P_T not idempotent (seed {seed})"));
    }
    let py = t.project(&y).unwrap();
    if (px.dot(&y) - x.dot(&py)).abs() > 1e-10 * x.frobenius_norm() * y.frobenius_norm() {
        bad.push(format!("P_T not self-adjoint (seed {seed})"));
    }
    let qx = t.project_complement(&x).unwrap();
    if px.add(&qx).sub(&x).frobenius_norm() > tol || px.dot(&qx).abs() > tol * x.frobenius_norm() {
        bad.push(format!("P_T and its complement not complementary (seed {seed})"));
    }
    if t.project(&qx).unwrap().frobenius_norm() > tol {
        bad.push(format!("complement not annihilated by P_T (seed {seed})"));
    }

    let omega = gen_bernoulli_mask(base.substream(5), n1, n2, rho).unwrap();
    let ox = prox::proj_support(&x, &omega).unwrap();
    if prox::proj_support(&ox, &omega).unwrap() != ox {
        bad.push(format!("P_Omega not idempotent (seed {seed})"));
    }
    let oc = prox::proj_support(&x, &omega.complement()).unwrap();
    if ox.add(&oc) != x || ox.dot(&oc) != 0.0 {
        bad.push(format!("P_Omega and its complement not complementary (seed {seed})"));
    }

    let mu = certify::incoherence_of(&t).unwrap().mu;
    let bound = (2.0 * mu * r as f64 / n1.min(n2) as f64).sqrt() + 1e-8;
    let mut brute = 0.0_f64;
    for i in 0..n1 {
        for j in 0..n2 {
            let mut e = DenseMatrix::zeros(n1, n2);
            e[(i, j)] = 1.0;
            brute = brute.max(t.project(&e).unwrap().frobenius_norm());
        }
    }
    if brute > bound {
        bad.push(format!("leverage bound {brute} > {bound} (seed {seed})"));
    }
    if (t.max_unit_projection_norm() - brute).abs() > 1e-10 {
        bad.push(format!(
            "closed-form leverage {} differs from brute force {brute} (seed {seed})",
            t.max_unit_projection_norm()
        ));
    }
    bad
}

/// Tangent space of the rank-`r` product drawn by `gen_low_rank` with `seed`.
pub fn random_tangent(n: usize, r: usize, seed: u64) -> pcp_core::TangentSpace {
    let l = pcp_core::synth::gen_low_rank(n, n, r, pcp_core::RngState::new(seed)).unwrap();
    pcp_core::TangentSpace::from_factors(&pcp_core::svd::svd_full(&l).unwrap(), r).unwrap()
}

/// Largest deviation of `shrink_scalar` from a grid-search prox over a sweep of inputs.
pub fn shrink_grid_gap(step: f64) -> f64 {
    let mut worst = 0.0_f64;
    for &tau in &[0.0, 0.1, 0.5, 1.3] {
        for k in -40..=40 {
            let x = k as f64 * 0.07;
            let z = pcp_core::prox::shrink_scalar(x, tau);
            worst = worst.max((z - grid_prox_abs(x, tau, step)).abs());
        }
    }
    worst
}

/// Worst subgradient optimality residual of `svt` over a few random inputs.
pub fn svt_optimality_gap() -> f64 {
    let mut worst = 0.0_f64;
    for (rows, cols, tau, seed) in [(12, 12, 0.8, 1), (20, 9, 1.5, 2), (7, 16, 0.3, 3), (25, 25, 2.0, 4)] {
        let x = pcp_core::rng::gen_gaussian(pcp_core::RngState::new(seed), rows, cols, 1.0).unwrap();
        let (z, _) = pcp_core::prox::svt(&x, tau).unwrap();
        let (excess, gap) = svt_optimality(&x, &z, tau);
        worst = worst.max(excess.max(0.0)).max(gap);
    }
    worst
}

/// `|op_norm_composed - oracle|` with `|Omega| = count` and the tangent space of a rank-`r` product.
pub fn composed_norm_gap(n: usize, r: usize, count: usize, seed: u64) -> f64 {
    let t = random_tangent(n, r, seed);
    let omega = pcp_core::rng::gen_fixed_count_mask(pcp_core::RngState::new(seed), n, n, count).unwrap();
    let pt = tangent_projector(t.u(), t.v());
    let po = support_projector(&omega);
    let oracle = spectral_radius(&pt.mul(&po).mul(&pt)).sqrt();
    let ours = pcp_core::prox::op_norm_composed(&omega, &t, 1e-14, 200_000).unwrap();
    (ours - oracle).abs()
}

/// `|measure_concentration - oracle|` for one trial.
pub fn concentration_gap(n: usize, r: usize, rho0: f64, seed: u64) -> f64 {
    let t = random_tangent(n, r, seed);
    let rng = pcp_core::RngState::new(seed);
    let stats = pcp_core::certify::measure_concentration_with(&t, rho0, rng, 1, 1e-14, 200_000).unwrap();
    // Trial k draws from substream k.
    let omega0 = pcp_core::rng::gen_bernoulli_mask(rng.substream(0), n, n, rho0).unwrap();
    assert_eq!(stats.trials[0].omega_size, omega0.len());
    let pt = tangent_projector(t.u(), t.v());
    let po = support_projector(&omega0);
    let dev = pt.lin(1.0, &pt.mul(&po).mul(&pt), -1.0 / rho0);
    (stats.max - spectral_radius(&dev)).abs()
}

/// Frobenius distance between `build_ws_neumann` and the dense restricted-inverse solution.
pub fn neumann_gap(n: usize, r: usize, count: usize, seed: u64) -> f64 {
    let lambda = 1.0 / (n as f64).sqrt();
    let t = random_tangent(n, r, seed);
    let omega = pcp_core::rng::gen_fixed_count_mask(pcp_core::RngState::new(seed), n, n, count).unwrap();
    let s0 = pcp_core::rng::gen_signs_on(pcp_core::RngState::with_stream(seed, 1), &omega);
    let ns = pcp_core::certify::build_ws_neumann(&t, &s0, &omega, lambda).unwrap();

    // On the coordinates of Omega, P_Omega - P_Omega P_T P_Omega is I - (P_T)_{Omega,Omega}.
    let pt = tangent_projector(t.u(), t.v());
    let idx: Vec<usize> = omega.entries().iter().map(|&(i, j)| i * n + j).collect();
    let k = idx.len();
    let mut a = Square::identity(k);
    for (p, &ip) in idx.iter().enumerate() {
        for (q, &iq) in idx.iter().enumerate() {
            a.a[p * k + q] -= pt.get(ip, iq);
        }
    }
    let rhs: Vec<f64> = idx.iter().map(|&c| s0.as_slice()[c].signum()).collect();
    let x = solve_dense(&a, &rhs);
    let mut full = vec![0.0; n * n];
    for (p, &c) in idx.iter().enumerate() {
        full[c] = x[p];
    }
    let proj = pt.apply(&full);
    ns.w_s
        .as_slice()
        .iter()
        .zip(full.iter().zip(&proj))
        .map(|(w, (f, p))| (w - lambda * (f - p)).powi(2))
        .sum::<f64>()
        .sqrt()
}
