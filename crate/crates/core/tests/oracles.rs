//! Library routines checked against independent dense reference computations.

mod common;

use common::*;
use pcp_core::certify::{self, build_wl_golfing, build_ws_neumann, incoherence};
use pcp_core::prox;
use pcp_core::rng::{self, gen_gaussian, gen_signs_on};
use pcp_core::svd::{self, svd_full, svd_truncated};
use pcp_core::synth::gen_low_rank;
use pcp_core::{DenseMatrix, RngState, SupportMask};

#[test]
fn singular_values_match_gram_eigenvalues() {
    for (rows, cols, seed) in [(9, 9, 1), (15, 7, 2), (6, 13, 3), (30, 30, 4)] {
        let m = gen_gaussian(RngState::new(seed), rows, cols, 1.0).unwrap();
        let ours = svd::singular_values(&m).unwrap();
        let oracle = singular_values_via_gram(&m);
        for (a, b) in ours.iter().zip(&oracle) {
            assert!((a - b).abs() <= 1e-8 * oracle[0], "{rows}x{cols}: {a} vs {b}");
        }
    }
}

#[test]
fn nuclear_norm_of_two_by_two() {
    let m = DenseMatrix::from_rows(&[&[3.0, 1.0], &[-2.0, 4.0]]).unwrap();
    let oracle: f64 = singular_values_via_gram(&m).iter().sum();
    assert!((m.nuclear_norm().unwrap() - oracle).abs() <= 1e-12 * oracle);
    assert!((m.operator_norm().unwrap() - singular_values_via_gram(&m)[0]).abs() <= 1e-12 * oracle);
}

#[test]
fn rank_one_constant_matrix() {
    let m = DenseMatrix::from_fn(9, 9, |_, _| 1.0 / 9.0);
    let f = svd_full(&m).unwrap();
    assert!((f.sigma[0] - 1.0).abs() < 1e-14);
    assert_eq!(f.rank(), 1);
    assert!(f.reconstruct().sub(&m).frobenius_norm() < 1e-14);
}

#[test]
fn truncated_svd_matches_full_on_low_rank_product() {
    let a = gen_gaussian(RngState::new(11), 30, 4, 1.0).unwrap();
    let b = gen_gaussian(RngState::new(12), 30, 4, 1.0).unwrap();
    let m = a.matmul_t(&b);
    let full = svd_full(&m).unwrap();
    let part = svd_truncated(&m, 4).unwrap();
    for k in 0..4 {
        assert!((full.sigma[k] - part.sigma[k]).abs() <= 1e-8 * full.sigma[0]);
    }
    assert!(part.reconstruct().sub(&m).frobenius_norm() <= 1e-8 * m.frobenius_norm());
}

#[test]
fn shrink_matches_grid_search_prox() {
    assert!(shrink_grid_gap(1e-4) <= 1e-4);
}

#[test]
fn svt_satisfies_subgradient_optimality() {
    assert!(svt_optimality_gap() <= 1e-8);
}

#[test]
fn svt_counts_singular_values_above_threshold() {
    for (rows, cols, tau, seed) in [(12, 12, 0.8, 1), (20, 9, 1.5, 2), (7, 16, 0.3, 3)] {
        let x = gen_gaussian(RngState::new(seed), rows, cols, 1.0).unwrap();
        let (_, stats) = prox::svt(&x, tau).unwrap();
        let expected = singular_values_via_gram(&x).iter().filter(|&&s| s > tau).count();
        assert_eq!(stats.above, expected);
    }
}

#[test]
fn composed_norm_matches_explicit_assembly() {
    let gap = composed_norm_gap(12, 2, 20, 3);
    assert!(gap <= 1e-8, "gap {gap}");
}

#[test]
fn concentration_matches_explicit_assembly() {
    let gap = concentration_gap(12, 2, 0.5, 9);
    assert!(gap <= 1e-8, "gap {gap}");
}

#[test]
fn full_sampling_has_zero_deviation() {
    let t = random_tangent(20, 3, 4);
    let stats = certify::measure_concentration(&t, 1.0, RngState::new(1), 3).unwrap();
    assert!(stats.max <= 1e-10);
}

#[test]
fn concentration_below_one_at_half_sampling() {
    let t = random_tangent(200, 2, 10);
    let stats = certify::measure_concentration(&t, 0.5, RngState::new(10), 10).unwrap();
    assert_eq!(stats.trials.len(), 10);
    assert!(stats.max < 1.0, "max deviation {}", stats.max);
}

#[test]
fn neumann_series_matches_restricted_inverse() {
    let gap = neumann_gap(12, 2, 10, 2);
    assert!(gap <= 1e-8, "gap {gap}");
}

#[test]
fn neumann_identity_and_complement_membership() {
    let n = 40;
    let lambda = 1.0 / (n as f64).sqrt();
    let t = random_tangent(n, 2, 5);
    let omega = rng::gen_bernoulli_mask(RngState::new(5), n, n, 0.05).unwrap();
    let s0 = gen_signs_on(RngState::new(6), &omega);
    let ns = build_ws_neumann(&t, &s0, &omega, lambda).unwrap();
    let on = prox::proj_support(&ns.w_s, &omega).unwrap();
    assert!(on.sub(&s0.scale(lambda)).frobenius_norm() <= 1e-8 * lambda);
    assert!(t.project(&ns.w_s).unwrap().frobenius_norm() <= 1e-8 * ns.w_s.frobenius_norm());
}

#[test]
fn neumann_with_empty_support_is_zero() {
    let t = random_tangent(10, 1, 1);
    let ns = build_ws_neumann(&t, &DenseMatrix::zeros(10, 10), &SupportMask::empty(10, 10), 0.3).unwrap();
    assert!(ns.w_s.is_zero());
}

#[test]
fn incoherence_is_basis_independent() {
    let l0 = gen_low_rank(200, 200, 10, RngState::new(1)).unwrap();
    let a = incoherence(&l0).unwrap();
    let f = svd_full(&l0).unwrap().truncate(10);
    let b = incoherence(&f.reconstruct()).unwrap();
    assert_eq!(a.r, 10);
    for (x, y) in [(a.mu1, b.mu1), (a.mu2, b.mu2), (a.mu3, b.mu3), (a.mu, b.mu)] {
        assert!((x - y).abs() <= 1e-10 * x, "{x} vs {y}");
    }
    // Recorded value for this seed; mu3 dominates.
    assert!((a.mu - 25.421569342616).abs() <= 1e-9 * a.mu, "{a:?}");
    assert_eq!(a.mu, a.mu3);
}

#[test]
fn golfing_recursion_invariants() {
    let n = 50;
    let r = 2;
    let t = random_tangent(n, r, 21);
    let g = build_wl_golfing(&t, 0.02, RngState::new(21).substream(certify::GOLFING_STREAM)).unwrap();
    assert_eq!(g.j0, certify::golfing_batches(n));
    assert_eq!(g.z_frob.len(), g.j0 + 1);
    assert!((g.z_frob[0] - t.uv_t().frobenius_norm()).abs() <= 1e-12);
    assert!(prox::proj_support(&g.y, &g.omega).unwrap().frobenius_norm() <= 1e-12);
    let bound = 10.0 * (-(g.j0 as f64)).exp() * (r as f64).sqrt();
    assert!(g.z_frob[g.j0] <= bound, "{} > {bound}", g.z_frob[g.j0]);
    let lhs = prox::proj_support(&t.uv_t().add(&g.w_l), &g.omega).unwrap().frobenius_norm();
    let rhs = prox::proj_support(&g.z_final, &g.omega).unwrap().frobenius_norm();
    assert!((lhs - rhs).abs() <= 1e-12, "{lhs} vs {rhs}");
    assert!(t.project(&g.w_l).unwrap().frobenius_norm() <= 1e-8 * g.w_l.frobenius_norm());
}
