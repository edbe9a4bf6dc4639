//! Invariants of the scalar continued-fraction machinery, checked against
//! dense linear algebra over the whole model catalog.

mod common;

use common::{c, catalog, dense_det, rng};
use num_complex::Complex64;
use rand::Rng;

use nhspectra::cf_scalar::{
    cf_recurrence, cf_tail_limit, det_tridiagonal, fixed_point_analysis, ufl_factorize,
    Stability,
};
use nhspectra::model::build_ubh;

/// The continued-fraction value is the (1,1) resolvent entry: checked for
/// 200 random shifts per catalog model, relative to the dense inverse.
#[test]
fn resolvent_identity_over_catalog() {
    let mut r = rng(11);
    for (name, h) in catalog() {
        if h.dim() > 12 {
            continue;
        }
        let radius = 2.0 * (1.0 + h.max_norm());
        let mut checked = 0;
        while checked < 200 {
            let z = c(r.gen_range(-radius..radius), r.gen_range(-radius..radius));
            let mut shifted = h.to_dense();
            for i in 0..h.dim() {
                shifted[[i, i]] -= z;
            }
            if dense_det(&shifted).norm() <= 1e-6 {
                continue;
            }
            checked += 1;
            let dense = common::dense_resolvent(&h, z).expect("determinant checked");
            let reference = dense[[0, 0]];
            let cf = cf_recurrence(&h, z).unwrap_or_else(|e| {
                panic!("{name}: unexpected breakdown at z={z}: {e}")
            });
            let rel = (cf.value - reference).norm() / reference.norm();
            assert!(rel <= 1e-9, "{name}: z={z}, relative error {rel}");
        }
    }
}

/// The product of the continued-fraction reciprocals reproduces the
/// determinant computed by the minor recurrence.
#[test]
fn determinant_product_consistency() {
    let mut r = rng(12);
    for (name, h) in catalog() {
        for _ in 0..20 {
            let radius = 2.0 * (1.0 + h.max_norm());
            let z = c(r.gen_range(-radius..radius), r.gen_range(-radius..radius));
            let cf = match cf_recurrence(&h, z) {
                Ok(cf) => cf,
                Err(_) => continue,
            };
            let mut product = c(1.0, 0.0);
            let mut overflow = false;
            for f in &cf.tail {
                product *= *f;
                if !product.re.is_finite() || !product.im.is_finite() || product.norm() == 0.0
                {
                    overflow = true;
                    break;
                }
            }
            if overflow {
                continue;
            }
            let det_from_cf = c(1.0, 0.0) / product;
            if !det_from_cf.re.is_finite() {
                continue;
            }
            let det = det_tridiagonal(&h, z);
            let rel = (det_from_cf - det).norm() / det.norm().max(f64::MIN_POSITIVE);
            assert!(rel <= 1e-9, "{name}: z={z}, relative error {rel}");
        }
    }
}

/// Factorization residual over random shifts on a disk of twice the
/// matrix scale.
#[test]
fn factorization_residual_over_catalog() {
    let mut r = rng(13);
    for (name, h) in catalog() {
        if h.dim() > 12 {
            continue;
        }
        let radius = 2.0 * h.max_norm().max(0.5);
        for _ in 0..10 {
            let e = c(r.gen_range(-radius..radius), r.gen_range(-radius..radius));
            let factors = match ufl_factorize(&h, e) {
                Ok(f) => f,
                Err(_) => continue,
            };
            let residual = factors.residual(&h, e);
            let bound = 1e-10 * (1.0 + h.max_norm());
            assert!(residual <= bound, "{name}: E={e}, residual {residual} > {bound}");
        }
    }
}

/// Wherever the derivative criterion picks a stable root, the tail
/// iteration from zero converges to that root (parameters kept away from
/// the double-root locus).
#[test]
fn tail_iteration_agrees_with_stable_root() {
    for alpha_re in [0.4, 0.7071067811865476, 1.0] {
        for beta_re in [1.6, 2.0, 3.0] {
            for beta_im in [0.0, 0.2] {
                let alpha = c(alpha_re, 0.0);
                let beta = c(beta_re, beta_im);
                let e = c(0.0, 0.0);
                let disc = (beta - e) * (beta - e) - 4.0 * alpha * alpha;
                if disc.norm() < 1e-3 {
                    continue;
                }
                let report = fixed_point_analysis(alpha, beta, e).unwrap();
                let target = match report.stable {
                    Stability::Plus => report.f_plus,
                    Stability::Minus => report.f_minus,
                    _ => continue,
                };
                let tol = 1e-12;
                let limit = cf_tail_limit(alpha, beta, e, c(0.0, 0.0), 200_000, tol)
                    .expect("no breakdown expected");
                assert!(
                    limit.converged,
                    "no convergence for alpha={alpha}, beta={beta}"
                );
                assert!(
                    (limit.value - target).norm() <= 10.0 * tol,
                    "alpha={alpha}, beta={beta}: limit {} vs root {}",
                    limit.value,
                    target
                );
            }
        }
    }
}

/// The closed-form eigenvalues of the gamma-deformed ladder are roots of
/// the determinant.
#[test]
fn pole_detection_on_closed_form_spectra() {
    for particles in 1..=5usize {
        for g in [0.0, 0.25, 0.5, 0.75, 0.95] {
            let h = build_ubh(particles, g);
            let scale = h.max_norm().powi(h.dim() as i32).max(1.0);
            let s = (1.0 - g * g).sqrt();
            for n in 0..=particles {
                let e = (2.0 * n as f64 - particles as f64) * s;
                let det = det_tridiagonal(&h, c(e, 0.0));
                assert!(
                    det.norm() <= 1e-8 * scale,
                    "particles={particles}, gamma={g}, E={e}: |det| = {}",
                    det.norm()
                );
            }
        }
    }
}

/// Breakdown reports point at the trailing sub-chain whose eigenvalue the
/// shift hit.
#[test]
fn breakdown_index_identifies_subchain() {
    // golden ratio: an eigenvalue of the trailing 2x2 chain over rows 3..4
    // of this model, but not of the trailing 1x1 chain
    let h = nhspectra::model::TridiagonalOperator::new(
        vec![c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)],
        vec![c(1.0, 0.0); 3],
        vec![c(1.0, 0.0); 3],
    )
    .unwrap();
    let phi = (1.0 + 5f64.sqrt()) / 2.0;
    match nhspectra::cf_scalar::cf_recurrence_with_tol(&h, c(phi, 0.0), 1e-10) {
        Err(nhspectra::Error::PivotBreakdown { index }) => assert_eq!(index, 3),
        other => panic!("expected breakdown at step 3, got {other:?}"),
    }
}
