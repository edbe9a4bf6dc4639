//! Scalar continued fractions for tridiagonal Green's functions: the
//! downward recurrence, the unit-bidiagonal factorization of `H - E`,
//! breakdown-free determinants, and fixed-point convergence analysis for
//! infinite tails.
//!
//! Sign convention: the continued fraction is built from `a_1 - z`, so its
//! value equals the `(1,1)` entry of `(H - z)^-1` — the *negative* of the
//! conventional resolvent `(z - H)^-1` entry.

use ndarray::Array2;
use num_complex::Complex64;

use crate::error::Error;
use crate::model::TridiagonalOperator;
use crate::scaled::{rescale_factor, Scaled};
use crate::Result;

/// Default magnitude below which a continued-fraction denominator counts
/// as a pivot breakdown.
pub const PIVOT_TOL: f64 = 1e-300;

/// Robust complex reciprocal (no intermediate over/underflow for any
/// representable nonzero input).
pub(crate) fn cinv(z: Complex64) -> Complex64 {
    if z.re.abs() >= z.im.abs() {
        let r = z.im / z.re;
        let d = z.re + z.im * r;
        Complex64::new(1.0 / d, -r / d)
    } else {
        let r = z.re / z.im;
        let d = z.re * r + z.im;
        Complex64::new(r / d, -1.0 / d)
    }
}

/// Value and tail of a continued-fraction evaluation.
///
/// For the finite recurrence the tail holds `f_1..f_N` and `iterations`
/// is zero; for the infinite-tail iteration the tail is empty and
/// `iterations` counts the applied map steps.
#[derive(Debug, Clone)]
pub struct CfResult {
    pub value: Complex64,
    pub tail: Vec<Complex64>,
    pub breakdown_index: Option<usize>,
    pub converged: bool,
    pub iterations: usize,
}

/// Downward continued-fraction sweep
/// `f_k = 1 / (a_k - z - b_k f_{k+1} c_{k+1})` with `f_{N+1} = 0`.
///
/// The value `f_1(z)` equals the `(1,1)` entry of `(H - z)^-1` whenever
/// that inverse exists.
pub fn cf_recurrence(h: &TridiagonalOperator, z: Complex64) -> Result<CfResult> {
    cf_recurrence_with_tol(h, z, PIVOT_TOL)
}

/// [`cf_recurrence`] with an explicit pivot tolerance on the denominator
/// magnitude. A breakdown at step `k` signals that `z` is at (or
/// numerically near) an eigenvalue of the trailing sub-chain starting at
/// row `k`.
pub fn cf_recurrence_with_tol(
    h: &TridiagonalOperator,
    z: Complex64,
    pivot_tol: f64,
) -> Result<CfResult> {
    let n = h.dim();
    let mut tail = vec![Complex64::new(0.0, 0.0); n];
    let mut f_next = Complex64::new(0.0, 0.0);
    for k in (0..n).rev() {
        let coupling = if k + 1 < n {
            h.upper()[k] * f_next * h.lower()[k]
        } else {
            Complex64::new(0.0, 0.0)
        };
        let denom = h.diag()[k] - z - coupling;
        if denom.norm() < pivot_tol {
            return Err(Error::PivotBreakdown { index: k + 1 });
        }
        f_next = cinv(denom);
        tail[k] = f_next;
    }
    Ok(CfResult {
        value: tail[0],
        tail,
        breakdown_index: None,
        converged: true,
        iterations: 0,
    })
}

/// Factors of `H - E = U * F * L` with unit-bidiagonal `U`, `L` and
/// diagonal `F = diag(1/f_1 .. 1/f_N)`.
///
/// `u` holds `u_2..u_N` (superdiagonal generators `u_{k+1} = -b_k f_{k+1}`),
/// `v` holds `v_2..v_N` (subdiagonal generators `v_j = -f_j c_j`), and `f`
/// the continued-fraction tail `f_1..f_N`.
#[derive(Debug, Clone)]
pub struct UflFactors {
    pub u: Vec<Complex64>,
    pub v: Vec<Complex64>,
    pub f: Vec<Complex64>,
}

impl UflFactors {
    pub fn dim(&self) -> usize {
        self.f.len()
    }

    /// Assemble the three factor matrices (`U`, `F`, `L`) densely.
    pub fn matrices(&self) -> (Array2<Complex64>, Array2<Complex64>, Array2<Complex64>) {
        let n = self.dim();
        let mut mu = Array2::eye(n);
        let mut mf = Array2::zeros((n, n));
        let mut ml = Array2::eye(n);
        for k in 0..n {
            mf[[k, k]] = cinv(self.f[k]);
            if k + 1 < n {
                mu[[k, k + 1]] = -self.u[k];
                ml[[k + 1, k]] = -self.v[k];
            }
        }
        (mu, mf, ml)
    }

    /// Max-entry residual of the reconstruction `U*F*L - (H - E)`,
    /// evaluated by dense multiplication.
    pub fn residual(&self, h: &TridiagonalOperator, e: Complex64) -> f64 {
        let (mu, mf, ml) = self.matrices();
        let product = mu.dot(&mf).dot(&ml);
        let mut target = h.to_dense();
        for k in 0..h.dim() {
            target[[k, k]] -= e;
        }
        (&product - &target)
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }
}

/// Factorize `H - E` through the continued-fraction tail.
pub fn ufl_factorize(h: &TridiagonalOperator, e: Complex64) -> Result<UflFactors> {
    let cf = cf_recurrence(h, e)?;
    let f = cf.tail;
    let u = (0..h.dim() - 1)
        .map(|i| -h.upper()[i] * f[i + 1])
        .collect();
    let v = (0..h.dim() - 1)
        .map(|i| -f[i + 1] * h.lower()[i])
        .collect();
    Ok(UflFactors { u, v, f })
}

/// `det(H - z)` by the leading-principal-minor recurrence
/// `D_k = (a_k - z) D_{k-1} - b_{k-1} c_k D_{k-2}`, carried with a
/// separate base-2 exponent so it never overflows and never breaks down.
pub fn det_scaled(h: &TridiagonalOperator, z: Complex64) -> Scaled {
    let mut exp2: i64 = 0;
    let mut d_prev = Complex64::new(1.0, 0.0);
    let mut d_prev2 = Complex64::new(0.0, 0.0);
    for k in 0..h.dim() {
        let d = if k == 0 {
            (h.diag()[0] - z) * d_prev
        } else {
            (h.diag()[k] - z) * d_prev - h.upper()[k - 1] * h.lower()[k - 1] * d_prev2
        };
        d_prev2 = d_prev;
        d_prev = d;
        let factor = rescale_factor(d_prev.norm().max(d_prev2.norm()), &mut exp2);
        if factor != 1.0 {
            d_prev *= factor;
            d_prev2 *= factor;
        }
    }
    Scaled::new(d_prev, exp2)
}

/// `det(H - z)` as a plain complex number; saturates to zero or infinity
/// when the determinant leaves the `f64` range (use [`det_scaled`] to keep
/// the exponent).
pub fn det_tridiagonal(h: &TridiagonalOperator, z: Complex64) -> Complex64 {
    det_scaled(h, z).to_complex()
}

/// Stability classification of the two fixed points of the tail map.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stability {
    /// The `+` root attracts.
    Plus,
    /// The `-` root attracts.
    Minus,
    /// Neither root attracts.
    None,
    /// Both derivative magnitudes equal one within tolerance (double
    /// root); convergence is at best algebraic.
    Marginal,
}

/// Fixed points of the constant-coefficient tail map
/// `f' = 1 / (beta - E - alpha^2 f)` and their attraction.
#[derive(Debug, Clone)]
pub struct FixedPointReport {
    /// Root taken with the principal branch `+sqrt`.
    pub f_plus: Complex64,
    /// Root taken with `-sqrt`.
    pub f_minus: Complex64,
    /// `|alpha^2 f_+^2|`, the map-derivative magnitude at `f_+`.
    pub deriv_plus: f64,
    /// `|alpha^2 f_-^2|`.
    pub deriv_minus: f64,
    pub stable: Stability,
}

/// Tolerance for classifying a derivative magnitude as exactly one.
const MARGINAL_TOL: f64 = 1e-12;

/// Solve `alpha^2 f^2 - (beta - E) f + 1 = 0` and classify the roots by
/// the derivative criterion `|alpha^2 f^2| < 1`.
pub fn fixed_point_analysis(
    alpha: Complex64,
    beta: Complex64,
    energy: Complex64,
) -> Result<FixedPointReport> {
    if alpha.norm() == 0.0 {
        return Err(Error::DegenerateMap);
    }
    let a2 = alpha * alpha;
    let d = beta - energy;
    let disc = d * d - 4.0 * a2;
    let s = disc.sqrt();
    // Evaluate the larger-magnitude root directly and recover the other
    // from the root product 1/alpha^2 to avoid cancellation.
    let (f_plus, f_minus) = if (d + s).norm() >= (d - s).norm() {
        let fp = (d + s) / (2.0 * a2);
        (fp, cinv(a2 * fp))
    } else {
        let fm = (d - s) / (2.0 * a2);
        (cinv(a2 * fm), fm)
    };
    let deriv_plus = (a2 * f_plus * f_plus).norm();
    let deriv_minus = (a2 * f_minus * f_minus).norm();

    // A double root cancels the discriminant only down to rounding in
    // d^2 - 4 a^2, so sqrt(disc) retains ~sqrt(eps) and the derivative
    // magnitudes land ~1e-8 away from one. Treat roots as coincident
    // when the discriminant vanishes relative to its own terms.
    let coincident =
        disc.norm() <= 32.0 * f64::EPSILON * (d.norm_sqr() + 4.0 * a2.norm());
    let marginal = coincident
        || ((deriv_plus - 1.0).abs() <= MARGINAL_TOL
            && (deriv_minus - 1.0).abs() <= MARGINAL_TOL);
    let stable = if marginal {
        Stability::Marginal
    } else {
        match (deriv_plus < 1.0, deriv_minus < 1.0) {
            (true, false) => Stability::Plus,
            (false, true) => Stability::Minus,
            (false, false) => Stability::None,
            // The derivative magnitudes multiply to one, so two
            // attracting roots can only be a rounding artifact; pick the
            // stronger attractor.
            (true, true) => {
                if deriv_plus <= deriv_minus {
                    Stability::Plus
                } else {
                    Stability::Minus
                }
            }
        }
    };

    Ok(FixedPointReport {
        f_plus,
        f_minus,
        deriv_plus,
        deriv_minus,
        stable,
    })
}

/// Iterate the tail map `f -> 1 / (beta - E - alpha^2 f)` from `f0` until
/// two successive iterates differ by less than `tol` or `max_iter` steps
/// have been taken.
pub fn cf_tail_limit(
    alpha: Complex64,
    beta: Complex64,
    energy: Complex64,
    f0: Complex64,
    max_iter: usize,
    tol: f64,
) -> Result<CfResult> {
    assert!(max_iter >= 1, "max_iter must be at least 1");
    assert!(tol > 0.0, "tol must be positive");
    let a2 = alpha * alpha;
    let mut f = f0;
    let mut converged = false;
    let mut iterations = 0;
    for step in 1..=max_iter {
        let denom = beta - energy - a2 * f;
        if denom.norm() < PIVOT_TOL {
            return Err(Error::PivotBreakdown { index: step });
        }
        let next = cinv(denom);
        iterations = step;
        let delta = (next - f).norm();
        f = next;
        if delta < tol {
            converged = true;
            break;
        }
    }
    Ok(CfResult {
        value: f,
        tail: Vec::new(),
        breakdown_index: None,
        converged,
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_ubh, TridiagonalOperator};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn swap_matrix() -> TridiagonalOperator {
        TridiagonalOperator::new(
            vec![c(0.0, 0.0), c(0.0, 0.0)],
            vec![c(1.0, 0.0)],
            vec![c(1.0, 0.0)],
        )
        .unwrap()
    }

    #[test]
    fn two_level_tail_matches_direct_inverse() {
        // (H - 2)^-1 of the swap matrix has (1,1) entry -2/3
        let r = cf_recurrence(&swap_matrix(), c(2.0, 0.0)).unwrap();
        assert!((r.tail[1] - c(-0.5, 0.0)).norm() < 1e-15);
        assert!((r.value - c(-2.0 / 3.0, 0.0)).norm() < 1e-15);
        assert!(r.converged && r.breakdown_index.is_none());
    }

    #[test]
    fn ubh_resolvent_entry_at_origin() {
        let h = build_ubh(1, 0.5);
        let r = cf_recurrence(&h, c(0.0, 0.0)).unwrap();
        assert!((r.value - c(0.0, -2.0 / 3.0)).norm() < 1e-15);
    }

    #[test]
    fn value_diverges_at_eigenvalue() {
        let h = swap_matrix();
        let r = cf_recurrence(&h, c(1.0 + 1e-9, 0.0)).unwrap();
        assert!(cinv(r.value).norm() < 1e-8);
    }

    #[test]
    fn breakdown_at_exact_eigenvalue_of_subchain() {
        // z = 0 hits the trailing 1x1 sub-chain of the swap matrix
        match cf_recurrence(&swap_matrix(), c(0.0, 0.0)) {
            Err(Error::PivotBreakdown { index }) => assert_eq!(index, 2),
            other => panic!("expected breakdown, got {other:?}"),
        }
    }

    #[test]
    fn robust_reciprocal_handles_extremes() {
        for &z in &[c(1e-250, 0.0), c(0.0, 1e250), c(3.0, -4.0), c(-1e-300, 1e-300)] {
            let w = cinv(z);
            let back = z * w;
            assert!((back - c(1.0, 0.0)).norm() < 1e-12, "failed for {z}");
        }
    }

    #[test]
    fn ufl_two_level_factors_by_hand() {
        let h = swap_matrix();
        let fac = ufl_factorize(&h, c(2.0, 0.0)).unwrap();
        assert!((fac.f[0] - c(-2.0 / 3.0, 0.0)).norm() < 1e-15);
        assert!((fac.f[1] - c(-0.5, 0.0)).norm() < 1e-15);
        assert!((fac.u[0] - c(0.5, 0.0)).norm() < 1e-15);
        assert!((fac.v[0] - c(0.5, 0.0)).norm() < 1e-15);
        assert!(fac.residual(&h, c(2.0, 0.0)) < 1e-14);
    }

    #[test]
    fn ufl_diagonal_matrix_has_trivial_factors() {
        let h = TridiagonalOperator::new(
            vec![c(1.0, 0.0), c(2.0, 1.0), c(-3.0, 0.5)],
            vec![c(0.0, 0.0); 2],
            vec![c(0.0, 0.0); 2],
        )
        .unwrap();
        let e = c(0.25, -0.75);
        let fac = ufl_factorize(&h, e).unwrap();
        for (k, f) in fac.f.iter().enumerate() {
            let expected = cinv(h.diag()[k] - e);
            assert!((f - expected).norm() < 1e-15);
        }
        assert!(fac.u.iter().all(|u| u.norm() == 0.0));
        assert!(fac.v.iter().all(|v| v.norm() == 0.0));
        assert!(fac.residual(&h, e) < 1e-14);
    }

    #[test]
    fn ufl_reconstruction_residual_small() {
        let h = build_ubh(2, 0.3);
        let e = c(0.0, 0.1);
        let fac = ufl_factorize(&h, e).unwrap();
        assert!(fac.residual(&h, e) <= 1e-10 * (1.0 + h.max_norm()));
    }

    #[test]
    fn determinant_of_swap_matrix() {
        assert!((det_tridiagonal(&swap_matrix(), c(0.0, 0.0)) - c(-1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn determinant_two_level_closed_form() {
        // det(H) = gamma^2 - 1 for the two-level model
        for &g in &[0.0, 0.3, 0.9, 2.0] {
            let h = build_ubh(1, g);
            let d = det_tridiagonal(&h, c(0.0, 0.0));
            assert!((d - c(g * g - 1.0, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn determinant_vanishes_at_eigenvalue() {
        // E_+ = 2 sqrt(1 - 0.36) = 1.6 for the three-level model
        let h = build_ubh(2, 0.6);
        let d = det_tridiagonal(&h, c(1.6, 0.0));
        assert!(d.norm() < 1e-10);
    }

    #[test]
    fn determinant_never_breaks_down_where_cf_does() {
        let h = swap_matrix();
        // cf_recurrence breaks down at z = 0, the determinant must not
        let d = det_tridiagonal(&h, c(0.0, 0.0));
        assert!((d - c(-1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn determinant_scaling_survives_large_dimension() {
        // diagonal entries of magnitude 3 => |det| = 3^2000 ~ 10^954
        let n = 2000;
        let h = TridiagonalOperator::new(
            vec![c(3.0, 0.0); n],
            vec![c(0.0, 0.0); n - 1],
            vec![c(0.0, 0.0); n - 1],
        )
        .unwrap();
        let d = det_scaled(&h, c(0.0, 0.0));
        let expected_log2 = 2000.0 * 3f64.log2();
        assert!((d.log2_abs() - expected_log2).abs() < 1e-6);
        assert!(det_tridiagonal(&h, c(0.0, 0.0)).re.is_infinite());
    }

    #[test]
    fn fixed_points_double_root_is_marginal() {
        let alpha = c(1.0 / 2f64.sqrt(), 0.0);
        let beta = c(2f64.sqrt(), 0.0);
        let r = fixed_point_analysis(alpha, beta, c(0.0, 0.0)).unwrap();
        // a double root is only determined to ~sqrt(eps)
        assert!((r.f_plus - c(2f64.sqrt(), 0.0)).norm() < 1e-7);
        assert!((r.f_minus - c(2f64.sqrt(), 0.0)).norm() < 1e-7);
        assert!((r.deriv_plus - 1.0).abs() < 1e-7);
        assert_eq!(r.stable, Stability::Marginal);
    }

    #[test]
    fn fixed_points_generic_pair() {
        let alpha = c(1.0 / 2f64.sqrt(), 0.0);
        let r = fixed_point_analysis(alpha, c(1.5, 0.0), c(0.0, 0.0)).unwrap();
        assert!((r.f_plus - c(2.0, 0.0)).norm() < 1e-12);
        assert!((r.f_minus - c(1.0, 0.0)).norm() < 1e-12);
        assert!((r.deriv_plus - 2.0).abs() < 1e-12);
        assert!((r.deriv_minus - 0.5).abs() < 1e-12);
        assert_eq!(r.stable, Stability::Minus);
    }

    #[test]
    fn fixed_points_golden_ratio_pair() {
        let r = fixed_point_analysis(c(1.0, 0.0), c(3.0, 0.0), c(0.0, 0.0)).unwrap();
        let s5 = 5f64.sqrt();
        assert!((r.f_plus - c((3.0 + s5) / 2.0, 0.0)).norm() < 1e-12);
        assert!((r.f_minus - c((3.0 - s5) / 2.0, 0.0)).norm() < 1e-12);
        assert!((r.deriv_plus - ((3.0 + s5) / 2.0).powi(2)).abs() < 1e-10);
        assert_eq!(r.stable, Stability::Minus);
    }

    #[test]
    fn fixed_points_solve_the_quadratic() {
        let cases = [
            (c(0.7, 0.1), c(2.0, -0.4), c(0.3, 0.0)),
            (c(1.0, 0.0), c(0.1, 0.9), c(0.0, 0.0)),
            (c(0.01, 0.0), c(5.0, 0.0), c(0.0, 1.0)),
        ];
        for (alpha, beta, e) in cases {
            let r = fixed_point_analysis(alpha, beta, e).unwrap();
            let a2 = alpha * alpha;
            for f in [r.f_plus, r.f_minus] {
                let residual = (a2 * f * f - (beta - e) * f + 1.0).norm();
                let scale = 1.0 + (a2 * f * f).norm() + ((beta - e) * f).norm();
                assert!(
                    residual <= 1e-12 * scale,
                    "residual {residual} for {alpha} {beta} {e}"
                );
            }
        }
    }

    #[test]
    fn degenerate_map_rejected() {
        assert!(matches!(
            fixed_point_analysis(c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)),
            Err(Error::DegenerateMap)
        ));
    }

    #[test]
    fn tail_iteration_reaches_stable_root() {
        let alpha = c(1.0 / 2f64.sqrt(), 0.0);
        let r = cf_tail_limit(alpha, c(1.5, 0.0), c(0.0, 0.0), c(0.0, 0.0), 1000, 1e-12).unwrap();
        assert!(r.converged);
        assert!((r.value - c(1.0, 0.0)).norm() < 1e-11);
    }

    #[test]
    fn tail_iteration_matches_scaled_fixed_point() {
        // beta = sqrt(2)(1 + delta^2) pulls the iteration to the smaller root
        let alpha = c(1.0 / 2f64.sqrt(), 0.0);
        let delta = 0.1;
        let beta = c(2f64.sqrt() * (1.0 + delta * delta), 0.0);
        let r = cf_tail_limit(alpha, beta, c(0.0, 0.0), c(0.0, 0.0), 100_000, 1e-13).unwrap();
        assert!(r.converged);
        let expected = beta - (beta * beta - 2.0).sqrt();
        assert!((r.value - expected).norm() < 1e-10);
    }

    #[test]
    fn tail_iteration_stalls_at_marginal_point() {
        let alpha = c(1.0 / 2f64.sqrt(), 0.0);
        let beta = c(2f64.sqrt(), 0.0);
        let r = cf_tail_limit(alpha, beta, c(0.0, 0.0), c(0.0, 0.0), 1000, 1e-12).unwrap();
        assert!(!r.converged);
        assert_eq!(r.iterations, 1000);
    }
}
