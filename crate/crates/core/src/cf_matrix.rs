//! Matrix continued fractions over 2x2-block tridiagonal operators: the
//! downward block recurrence, a breakdown-free secular determinant for
//! real shifts of Hermitian block operators, singular-value extraction by
//! sign-change bracketing, the block factorization check, and the
//! two-sided Green's function of doubly infinite chains.

use ndarray::Array2;
use num_complex::Complex64;

use crate::cf_scalar::{cinv, PIVOT_TOL};
use crate::error::Error;
use crate::hermitize::{block_tridiagonalize, Block2, BlockTridiagonal};
use crate::model::TridiagonalOperator;
use crate::scaled::{rescale_factor, ScaledReal};
use crate::Result;

/// Result of the downward matrix continued fraction.
#[derive(Debug, Clone)]
pub struct McfResult {
    /// `F_1`, the head of the fraction.
    pub f1: Block2,
    /// `F_1 .. F_n`.
    pub tail: Vec<Block2>,
    pub breakdown_index: Option<usize>,
}

/// Subtract a scalar shift from the diagonal of a block.
fn shifted(a: &Block2, sigma: Complex64) -> Block2 {
    let mut d = *a;
    d.0[0][0] -= sigma;
    d.0[1][1] -= sigma;
    d
}

/// Core downward sweep, also returning the pre-inversion denominators
/// `S_k = A_k - sigma - B_k F_{k+1} C_{k+1}` (so `F_k = S_k^-1`).
fn mcf_sweep(
    bt: &BlockTridiagonal,
    sigma: Complex64,
) -> Result<(Vec<Block2>, Vec<Block2>)> {
    let n = bt.nblocks();
    let mut tail = vec![Block2::zero(); n];
    let mut denoms = vec![Block2::zero(); n];
    let mut f_next = Block2::zero();
    for k in (0..n).rev() {
        let mut s = shifted(&bt.a[k], sigma);
        if k + 1 < n {
            s = s - bt.b[k] * f_next * bt.c[k];
        }
        let f = s
            .inverse(PIVOT_TOL)
            .ok_or(Error::PivotBreakdown { index: k + 1 })?;
        denoms[k] = s;
        tail[k] = f;
        f_next = f;
    }
    Ok((tail, denoms))
}

/// Matrix continued fraction
/// `F_k = (A_k - sigma - B_k F_{k+1} C_{k+1})^-1` with `F_{n+1} = 0`,
/// evaluated downward from the last block.
pub fn mcf_recurrence(bt: &BlockTridiagonal, sigma: Complex64) -> Result<McfResult> {
    let (tail, _) = mcf_sweep(bt, sigma)?;
    Ok(McfResult {
        f1: tail[0],
        tail,
        breakdown_index: None,
    })
}

/// Real determinant of a Hermitian 2x2 block.
fn det_hermitian(m: &Block2) -> f64 {
    m.0[0][0].re * m.0[1][1].re - (m.0[0][1] * m.0[1][0]).re
}

/// `det(H_blocks - sigma)` for a Hermitian block operator and real shift,
/// through the block analogue of the leading-principal-minor recurrence.
///
/// State per step: the last two minors (real scalars) and the trailing
/// 2x2 block of the adjugate of the leading principal submatrix. All
/// updates are division-free, so the evaluation never breaks down, and
/// everything is carried with a shared base-2 exponent so it never
/// overflows. The sign of the result is exact in the sense of correctly
/// rounded real arithmetic.
pub fn secular_value(bt: &BlockTridiagonal, sigma: f64) -> Result<ScaledReal> {
    if !bt.hermitian_as_whole() {
        return Err(Error::NotHermitian("secular determinant of a real shift"));
    }
    let shift = Complex64::new(sigma, 0.0);
    let n = bt.nblocks();
    let mut exp2: i64 = 0;

    let d1 = shifted(&bt.a[0], shift);
    let mut delta_prev2 = 1.0_f64; // minor over zero blocks
    let mut delta_prev = det_hermitian(&d1); // first block minor
    let mut w = d1.adjugate(); // trailing adjugate block
    for k in 1..n {
        let d = shifted(&bt.a[k], shift);
        let b = bt.b[k - 1];
        let c = bt.c[k - 1];
        let cwb = c * w * b;
        // det(B) det(C) = |det B|^2 since C = B^dagger
        let det_bc = (b.det() * c.det()).re;
        let delta = det_hermitian(&d) * delta_prev + det_bc * delta_prev2
            - (d.adjugate() * cwb).trace().re;
        let m = d * Complex64::new(delta_prev, 0.0) - cwb;
        let mut w_next = m.adjugate();
        // the exact quantity is Hermitian; kill rounding drift
        w_next = (w_next + w_next.adjoint()) * 0.5;

        delta_prev2 = delta_prev;
        delta_prev = delta;
        w = w_next;

        let mag = delta_prev
            .abs()
            .max(delta_prev2.abs())
            .max(w.max_norm());
        let factor = rescale_factor(mag, &mut exp2);
        if factor != 1.0 {
            delta_prev *= factor;
            delta_prev2 *= factor;
            w = w * factor;
        }
    }
    Ok(ScaledReal {
        mantissa: delta_prev,
        exp2,
    })
}

/// A located root of the secular determinant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SecularRoot {
    pub sigma: f64,
    /// Number of singular values this location accounts for. Greater
    /// than one when an even-order minimum (or the boundary zero) was
    /// resolved by the multiplicity fallback.
    pub multiplicity: usize,
    /// True when the root came from a plain sign-change bracket.
    pub from_bracket: bool,
}

/// Default search bound: the Gershgorin bound of the Hermitization,
/// doubled.
pub fn default_sigma_max(h: &TridiagonalOperator) -> f64 {
    2.0 * block_tridiagonalize(h).gershgorin_bound()
}

/// Number of eigenvalues of the assembled Hermitian block operator
/// strictly below `sigma`, by Sylvester inertia: the continued-fraction
/// denominators `S_k` are the diagonal of a block `U D U^dagger`
/// congruence of `H_blocks - sigma`, so their negative eigenvalues count
/// the spectrum below the shift. `None` when a denominator is too close
/// to singular to classify (the caller nudges the shift).
fn eigen_count_below(bt: &BlockTridiagonal, sigma: f64) -> Option<usize> {
    let n = bt.nblocks();
    let shift = Complex64::new(sigma, 0.0);
    let mut f_next = Block2::zero();
    let mut count = 0usize;
    for k in (0..n).rev() {
        let mut s = shifted(&bt.a[k], shift);
        if k + 1 < n {
            s = s - bt.b[k] * f_next * bt.c[k];
        }
        let det = det_hermitian(&s);
        let trace = s.trace().re;
        let scale = s.max_norm();
        if det.abs() <= 1e-3 * f64::EPSILON * scale * scale {
            return None;
        }
        if det < 0.0 {
            count += 1;
        } else if trace < 0.0 {
            count += 2;
        }
        f_next = s.inverse(0.0).expect("determinant checked above");
    }
    Some(count)
}

/// [`eigen_count_below`] with deterministic shift nudging past exact
/// resonances.
fn eigen_count_robust(bt: &BlockTridiagonal, sigma: f64) -> Option<usize> {
    let mut s = sigma;
    for _ in 0..8 {
        if let Some(c) = eigen_count_below(bt, s) {
            return Some(c);
        }
        s += 64.0 * f64::EPSILON * (1.0 + s.abs());
    }
    None
}

/// Smallest point in `(lo, hi]` where the eigenvalue count exceeds
/// `base`, to absolute tolerance `tol`.
fn bisect_count(
    bt: &BlockTridiagonal,
    mut lo: f64,
    mut hi: f64,
    base: usize,
    tol: f64,
) -> f64 {
    for _ in 0..200 {
        if hi - lo <= tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        match eigen_count_robust(bt, mid) {
            Some(c) if c > base => hi = mid,
            Some(_) => lo = mid,
            None => break,
        }
    }
    0.5 * (lo + hi)
}

/// Locate every eigenvalue in `(lo, hi]` individually by counting
/// bisection: close-but-distinct roots sharing a grid cell come out as
/// separate locations, exactly coincident ones as one location with the
/// full multiplicity.
fn split_cluster(
    bt: &BlockTridiagonal,
    lo: f64,
    hi: f64,
    base: usize,
    jump: usize,
    tol: f64,
) -> Vec<SecularRoot> {
    let mut points = Vec::with_capacity(jump);
    for j in 0..jump {
        points.push(bisect_count(bt, lo, hi, base + j, tol));
    }
    let mut roots: Vec<SecularRoot> = Vec::new();
    for p in points {
        match roots.last_mut() {
            Some(prev) if (p - prev.sigma).abs() <= 2.0 * tol => prev.multiplicity += 1,
            _ => roots.push(SecularRoot {
                sigma: p,
                multiplicity: 1,
                from_bracket: false,
            }),
        }
    }
    roots
}

/// Singular values of `H` located as the nonnegative roots of the secular
/// determinant `det(H_blocks - sigma)` of the Hermitized block operator.
///
/// Sign changes on the grid are bisected to `tol`; even-multiplicity
/// roots (no sign change) and the boundary zero are resolved by the
/// magnitude-drop fallback with the zero order estimated from the local
/// log-log slope. Returns [`Error::GridTooCoarse`] (carrying what was
/// found) when the accounted multiplicities do not sum to `N`.
pub fn singular_values_mcf(
    h: &TridiagonalOperator,
    sigma_max: f64,
    grid: usize,
    tol: f64,
) -> Result<Vec<f64>> {
    let bt = block_tridiagonalize(h);
    let roots = secular_roots(&bt, sigma_max, grid, tol)?;
    let mut out = Vec::with_capacity(h.dim());
    for r in &roots {
        for _ in 0..r.multiplicity {
            out.push(r.sigma);
        }
    }
    out.sort_by(|a, b| b.partial_cmp(a).expect("roots are finite"));
    Ok(out)
}

/// Root location on `[0, sigma_max]` for a Hermitian block operator; see
/// [`singular_values_mcf`].
pub fn secular_roots(
    bt: &BlockTridiagonal,
    sigma_max: f64,
    grid: usize,
    tol: f64,
) -> Result<Vec<SecularRoot>> {
    assert!(tol > 0.0, "tol must be positive");
    let expected = bt.nblocks();
    let smax = sigma_max.max(bt.gershgorin_bound());
    let npts = grid.max(2 * expected).max(8);
    let step = smax / npts as f64;

    let eval = |sigma: f64| secular_value(bt, sigma).expect("hermitian checked above");
    if !bt.hermitian_as_whole() {
        return Err(Error::NotHermitian("singular-value search"));
    }

    let mut values: Vec<ScaledReal> = (0..=npts).map(|i| eval(i as f64 * step)).collect();

    let mut roots: Vec<SecularRoot> = Vec::new();
    let mut consumed = vec![false; npts + 1];
    let loc_tol = tol.min(1e4 * f64::EPSILON * (1.0 + smax));

    // Boundary zeros: the assembled spectrum is symmetric {+-sigma_n}, so
    // the eigenvalue count just right of the origin is N plus the number
    // of vanishing singular values. The origin determinant is then pure
    // cancellation noise with an arbitrary sign, so replace it by an
    // off-origin sample for the bracketing pass.
    let h0 = step / 8.0;
    if let Some(count) = eigen_count_robust(bt, h0) {
        let zeros = count.saturating_sub(expected);
        if zeros > 0 {
            roots.push(SecularRoot {
                sigma: 0.0,
                multiplicity: zeros,
                from_bracket: false,
            });
            values[0] = eval(h0);
        }
    }

    // Exact zeros on grid points (common when singular values are round
    // numbers): locate and count them through the inertia jump across
    // the surrounding cell.
    for i in 1..npts {
        if values[i].sign() != 0 {
            continue;
        }
        let sigma = i as f64 * step;
        let (lo, hi) = (sigma - step / 2.0, sigma + step / 2.0);
        if let (Some(below), Some(above)) =
            (eigen_count_robust(bt, lo), eigen_count_robust(bt, hi))
        {
            if above > below {
                roots.extend(split_cluster(bt, lo, hi, below, above - below, loc_tol));
            }
        }
        consumed[i] = true;
    }

    // Sign-change brackets, bisected on the exact sign.
    let mut bracket_cells = vec![false; npts + 1];
    for i in 0..npts {
        if consumed[i] || consumed[i + 1] {
            continue;
        }
        let s_lo = values[i].sign();
        let s_hi = values[i + 1].sign();
        if s_lo != 0 && s_hi != 0 && s_lo != s_hi {
            let lo = i as f64 * step;
            let hi = (i + 1) as f64 * step;
            let sigma = bisect_sign(&eval, lo, hi, s_lo, tol);
            bracket_cells[i] = true;
            bracket_cells[i + 1] = true;
            roots.push(SecularRoot {
                sigma,
                multiplicity: 1,
                from_bracket: true,
            });
        }
    }

    // Even-multiplicity interior roots give the magnitude a strict local
    // minimum without a sign change; the inertia jump across the
    // surrounding cells confirms the root and yields its multiplicity,
    // and counting bisection pins the location far below the sqrt(eps)
    // floor of magnitude minimization.
    for i in 1..npts {
        if bracket_cells[i] || bracket_cells[i - 1] || bracket_cells[i + 1] {
            continue;
        }
        if consumed[i - 1] || consumed[i] || consumed[i + 1] {
            continue;
        }
        if i == 1 && roots.iter().any(|r| r.sigma == 0.0) {
            continue;
        }
        let (sm, s0, sp) = (values[i - 1].sign(), values[i].sign(), values[i + 1].sign());
        if s0 == 0 || sm != s0 || sp != s0 {
            continue;
        }
        let (lm, l0, lp) = (
            values[i - 1].log2_abs(),
            values[i].log2_abs(),
            values[i + 1].log2_abs(),
        );
        if !(l0 < lm && l0 < lp) {
            continue;
        }
        let lo = (i - 1) as f64 * step;
        let hi = (i + 1) as f64 * step;
        if let (Some(below), Some(above)) =
            (eigen_count_robust(bt, lo), eigen_count_robust(bt, hi))
        {
            if above > below {
                roots.extend(split_cluster(bt, lo, hi, below, above - below, loc_tol));
            }
        }
    }

    let total: usize = roots.iter().map(|r| r.multiplicity).sum();
    if total != expected {
        let mut found: Vec<f64> = roots
            .iter()
            .flat_map(|r| std::iter::repeat(r.sigma).take(r.multiplicity))
            .collect();
        found.sort_by(|a, b| b.partial_cmp(a).expect("roots are finite"));
        return Err(Error::GridTooCoarse { expected, found });
    }
    roots.sort_by(|a, b| b.sigma.partial_cmp(&a.sigma).expect("roots are finite"));
    Ok(roots)
}

fn bisect_sign(
    eval: &dyn Fn(f64) -> ScaledReal,
    mut lo: f64,
    mut hi: f64,
    sign_lo: i8,
    tol: f64,
) -> f64 {
    for _ in 0..200 {
        if hi - lo <= tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let s = eval(mid).sign();
        if s == 0 {
            return mid;
        }
        if s == sign_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Reconstruction residual of the partitioned factorization
/// `U * F * L = H_blocks - sigma`, where `U` is unit upper
/// block-bidiagonal with superdiagonal blocks `B_k F_{k+1}`, `L` unit
/// lower with subdiagonal blocks `F_{k+1} C_{k+1}`, and `F` block-diagonal
/// with the pre-inversion denominators `F_k^-1`. Returns the max-entry
/// residual of the dense product against the assembled shifted operator.
pub fn block_factor_check(bt: &BlockTridiagonal, sigma: Complex64) -> Result<f64> {
    let n = bt.nblocks();
    let (tail, denoms) = mcf_sweep(bt, sigma)?;

    let dim = 2 * n;
    let mut mu = Array2::<Complex64>::eye(dim);
    let mut mf = Array2::<Complex64>::zeros((dim, dim));
    let mut ml = Array2::<Complex64>::eye(dim);
    let put = |m: &mut Array2<Complex64>, bi: usize, bj: usize, blk: &Block2| {
        for i in 0..2 {
            for j in 0..2 {
                m[[2 * bi + i, 2 * bj + j]] = blk.0[i][j];
            }
        }
    };
    for k in 0..n {
        put(&mut mf, k, k, &denoms[k]);
        if k + 1 < n {
            let up = bt.b[k] * tail[k + 1];
            let down = tail[k + 1] * bt.c[k];
            put(&mut mu, k, k + 1, &up);
            put(&mut ml, k + 1, k, &down);
        }
    }
    let product = mu.dot(&mf).dot(&ml);
    let mut target = bt.assemble();
    for i in 0..dim {
        target[[i, i]] -= sigma;
    }
    Ok((&product - &target)
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max))
}

/// A doubly infinite block-tridiagonal chain truncated to `M` blocks on
/// the left of the center and `N` on the right.
///
/// Left-side storage runs outward: `left_diag[j-1]` holds `A_{-j}`, and
/// `left_pairs[j-1] = (C_{-j}, B_{-j-1})` couples `A_{-j}` to `A_{-j-1}`.
/// Right-side storage mirrors it: `right_diag[k-1] = A_k` and
/// `right_pairs[k-1] = (B_k, C_{k+1})`.
#[derive(Debug, Clone)]
pub struct TwoSidedModel {
    pub center: Block2,
    /// `(B_{-1}, C_0)`: couples `A_{-1}` to the center.
    pub left_coupling: (Block2, Block2),
    /// `(B_0, C_1)`: couples the center to `A_1`.
    pub right_coupling: (Block2, Block2),
    pub left_diag: Vec<Block2>,
    pub left_pairs: Vec<(Block2, Block2)>,
    pub right_diag: Vec<Block2>,
    pub right_pairs: Vec<(Block2, Block2)>,
}

impl TwoSidedModel {
    /// Truncation depths `(M, N)`.
    pub fn depths(&self) -> (usize, usize) {
        (self.left_diag.len(), self.right_diag.len())
    }

    pub fn validate(&self) -> Result<()> {
        let ok_len = |d: &Vec<Block2>, p: &Vec<(Block2, Block2)>| {
            p.len() == d.len().saturating_sub(1)
        };
        if !ok_len(&self.left_diag, &self.left_pairs)
            || !ok_len(&self.right_diag, &self.right_pairs)
        {
            return Err(Error::InconsistentDimensions(
                "tail coupling-pair count must be one less than the tail block count".into(),
            ));
        }
        let finite = self
            .left_diag
            .iter()
            .chain(&self.right_diag)
            .chain(std::iter::once(&self.center))
            .all(Block2::is_finite)
            && self
                .left_pairs
                .iter()
                .chain(&self.right_pairs)
                .chain([&self.left_coupling, &self.right_coupling])
                .all(|(x, y)| x.is_finite() && y.is_finite());
        if !finite {
            return Err(Error::NonFinite("two-sided model block"));
        }
        Ok(())
    }

    /// Dense assembly of the truncation, blocks ordered
    /// `A_{-M} .. A_{-1}, A_0, A_1 .. A_N`.
    pub fn assemble(&self) -> Array2<Complex64> {
        let (m, n) = self.depths();
        let nblocks = m + n + 1;
        let dim = 2 * nblocks;
        let mut out = Array2::zeros((dim, dim));
        let mut put = |bi: usize, bj: usize, blk: &Block2| {
            for i in 0..2 {
                for j in 0..2 {
                    out[[2 * bi + i, 2 * bj + j]] = blk.0[i][j];
                }
            }
        };
        // diagonal blocks
        for j in 1..=m {
            put(m - j, m - j, &self.left_diag[j - 1]);
        }
        put(m, m, &self.center);
        for k in 1..=n {
            put(m + k, m + k, &self.right_diag[k - 1]);
        }
        // couplings: position p couples to p+1 with super B, sub C
        if m > 0 {
            let (b, c) = &self.left_coupling; // (B_{-1}, C_0)
            put(m - 1, m, b);
            put(m, m - 1, c);
        }
        if n > 0 {
            let (b, c) = &self.right_coupling; // (B_0, C_1)
            put(m, m + 1, b);
            put(m + 1, m, c);
        }
        for j in 1..m {
            // (C_{-j}, B_{-j-1}) sits between positions m-j-1 and m-j
            let (c, b) = &self.left_pairs[j - 1];
            put(m - j - 1, m - j, b);
            put(m - j, m - j - 1, c);
        }
        for k in 1..n {
            // (B_k, C_{k+1}) sits between positions m+k and m+k+1
            let (b, c) = &self.right_pairs[k - 1];
            put(m + k, m + k + 1, b);
            put(m + k + 1, m + k, c);
        }
        out
    }
}

/// Two-sided Green's function `G(z) = det F_0(z)` of the truncated doubly
/// infinite chain: both tails are evaluated inward by matrix continued
/// fractions and combined at the center block.
pub fn two_sided_green(model: &TwoSidedModel, z: Complex64) -> Result<Complex64> {
    model.validate()?;
    let (m, n) = model.depths();

    // right tail: F_k = (A_k - z - B_k F_{k+1} C_{k+1})^-1 inward from k = N
    let mut f_right: Option<Block2> = None;
    for k in (1..=n).rev() {
        let mut s = shifted(&model.right_diag[k - 1], z);
        if let Some(f) = f_right {
            let (b, c) = model.right_pairs[k - 1];
            s = s - b * f * c;
        }
        f_right = Some(
            s.inverse(PIVOT_TOL)
                .ok_or(Error::PivotBreakdown { index: k })?,
        );
    }
    // left tail: F_{-j} = (A_{-j} - z - C_{-j} F_{-j-1} B_{-j-1})^-1 inward from j = M
    let mut f_left: Option<Block2> = None;
    for j in (1..=m).rev() {
        let mut s = shifted(&model.left_diag[j - 1], z);
        if let Some(f) = f_left {
            let (c, b) = model.left_pairs[j - 1];
            s = s - c * f * b;
        }
        f_left = Some(
            s.inverse(PIVOT_TOL)
                .ok_or(Error::PivotBreakdown { index: j })?,
        );
    }

    let mut s0 = shifted(&model.center, z);
    if let Some(f) = f_left {
        let (b, c) = model.left_coupling; // (B_{-1}, C_0)
        s0 = s0 - c * f * b;
    }
    if let Some(f) = f_right {
        let (b, c) = model.right_coupling; // (B_0, C_1)
        s0 = s0 - b * f * c;
    }
    let det = s0.det();
    if det.norm() < PIVOT_TOL {
        return Err(Error::PivotBreakdown { index: 0 });
    }
    // det F_0 = 1 / det(F_0^-1)
    Ok(cinv(det))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_nonbh5, build_ubh, TridiagonalOperator};
    use ndarray_linalg::Determinant;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn dense_det(m: &Array2<Complex64>) -> Complex64 {
        m.det().unwrap()
    }

    #[test]
    fn single_block_fraction_is_plain_inverse() {
        let a = c(0.3, 1.2);
        let bt = BlockTridiagonal::new(vec![Block2::antidiag(a, a.conj())], vec![], vec![])
            .unwrap();
        let r = mcf_recurrence(&bt, c(0.0, 0.0)).unwrap();
        assert!((r.f1.0[0][1] - cinv(a.conj())).norm() < 1e-15);
        assert!((r.f1.0[1][0] - cinv(a)).norm() < 1e-15);
        assert!(r.f1.0[0][0].norm() < 1e-15);
    }

    #[test]
    fn fraction_determinant_product_matches_dense() {
        let h = build_ubh(1, 0.5);
        let bt = block_tridiagonalize(&h);
        let sigma = c(2.0, 0.0);
        let (tail, denoms) = mcf_sweep(&bt, sigma).unwrap();
        assert_eq!(tail.len(), 2);
        let product: Complex64 = denoms.iter().map(Block2::det).product();
        let mut dense = bt.assemble();
        for i in 0..4 {
            dense[[i, i]] -= sigma;
        }
        let expected = dense_det(&dense);
        assert!((product - expected).norm() < 1e-10 * expected.norm());
    }

    #[test]
    fn fraction_head_singular_at_singular_value() {
        // sigma = 1.5 is a singular value of the two-level model at t=0.5:
        // approaching it drives det F_1^-1 to zero, and hitting it exactly
        // is a pivot breakdown
        let bt = block_tridiagonalize(&build_ubh(1, 0.5));
        let (_, denoms) = mcf_sweep(&bt, c(1.5 + 1e-10, 0.0)).unwrap();
        assert!(denoms[0].det().norm() < 1e-8);
        assert!(matches!(
            mcf_recurrence(&bt, c(1.5, 0.0)),
            Err(Error::PivotBreakdown { index: 1 })
        ));
    }

    #[test]
    fn secular_value_two_level_closed_form() {
        let bt = block_tridiagonalize(&build_ubh(1, 0.5));
        // det(H_blocks) = product of eigenvalues (+-1.5, +-0.5)
        let at0 = secular_value(&bt, 0.0).unwrap();
        assert!((at0.to_f64() - 0.5625).abs() < 1e-12);
        // sigma = 0.5 is an eigenvalue
        let at_root = secular_value(&bt, 0.5).unwrap();
        assert!(at_root.to_f64().abs() < 1e-10);
        // far outside the spectrum the sign is positive (even dimension)
        let far = secular_value(&bt, 100.0).unwrap();
        assert_eq!(far.sign(), 1);
    }

    #[test]
    fn secular_value_matches_dense_determinant_off_spectrum() {
        // relative agreement is only meaningful away from the roots
        for (h, sigmas) in [
            (build_ubh(2, 0.3), vec![0.4, 1.1, 2.7]),
            (build_ubh(3, 0.8), vec![0.2, 1.0, 3.5]),
            (build_nonbh5(0.6), vec![2.0, 7.7, 14.0]),
        ] {
            let bt = block_tridiagonalize(&h);
            for s in sigmas {
                let got = secular_value(&bt, s).unwrap().to_f64();
                let mut dense = bt.assemble();
                for i in 0..bt.dim() {
                    dense[[i, i]] -= c(s, 0.0);
                }
                let expected = dense_det(&dense);
                assert!(expected.im.abs() < 1e-8 * expected.norm());
                assert!(
                    (got - expected.re).abs() <= 1e-8 * expected.norm(),
                    "sigma {s}: {got} vs {}",
                    expected.re
                );
            }
        }
    }

    #[test]
    fn secular_value_rejects_non_hermitian_blocks() {
        let bt = BlockTridiagonal::new(
            vec![Block2::antidiag(c(0.0, 1.0), c(0.0, 1.0))],
            vec![],
            vec![],
        )
        .unwrap();
        assert!(matches!(
            secular_value(&bt, 0.5),
            Err(Error::NotHermitian(_))
        ));
    }

    #[test]
    fn singular_values_two_level() {
        let h = build_ubh(1, 0.5);
        let sv = singular_values_mcf(&h, default_sigma_max(&h), 64, 1e-12).unwrap();
        assert_eq!(sv.len(), 2);
        assert!((sv[0] - 1.5).abs() < 1e-9);
        assert!((sv[1] - 0.5).abs() < 1e-9);
    }

    #[test]
    fn singular_values_resolve_double_roots() {
        // Hermitian four-level model at t = 0: singular values {3, 3, 1, 1}
        let h = build_ubh(3, 0.0);
        let sv = singular_values_mcf(&h, default_sigma_max(&h), 64, 1e-12).unwrap();
        assert_eq!(sv.len(), 4);
        assert!((sv[0] - 3.0).abs() < 1e-6, "{sv:?}");
        assert!((sv[1] - 3.0).abs() < 1e-6);
        assert!((sv[2] - 1.0).abs() < 1e-6);
        assert!((sv[3] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn singular_values_detect_boundary_zero() {
        // even particle number makes the model singular: sigma = 0 present
        let h = build_ubh(2, 0.4);
        let sv = singular_values_mcf(&h, default_sigma_max(&h), 64, 1e-12).unwrap();
        assert_eq!(sv.len(), 3);
        assert_eq!(sv[2], 0.0);
        let direct = crate::hermitize::singular_values_direct(&h).unwrap();
        for (a, b) in sv.iter().zip(&direct) {
            assert!((a - b).abs() < 1e-8, "{sv:?} vs {direct:?}");
        }
    }

    #[test]
    fn singular_values_match_direct_oracle() {
        for g in [0.2, 0.9] {
            let h = build_nonbh5(g);
            let sv = singular_values_mcf(&h, default_sigma_max(&h), 128, 1e-12).unwrap();
            let direct = crate::hermitize::singular_values_direct(&h).unwrap();
            assert_eq!(sv.len(), direct.len());
            for (a, b) in sv.iter().zip(&direct) {
                assert!((a - b).abs() < 1e-8, "gamma {g}: {sv:?} vs {direct:?}");
            }
        }
    }

    #[test]
    fn sub_grid_cluster_is_counted_by_inertia() {
        // three singular values closer together than the grid step are
        // reported as one location with the full multiplicity
        let h = TridiagonalOperator::new(
            vec![c(2.0, 0.0), c(2.0 + 1e-9, 0.0), c(2.0 + 2e-9, 0.0)],
            vec![c(0.0, 0.0); 2],
            vec![c(0.0, 0.0); 2],
        )
        .unwrap();
        let sv = singular_values_mcf(&h, 8.0, 64, 1e-12).unwrap();
        assert_eq!(sv.len(), 3);
        for s in &sv {
            assert!((s - 2.0).abs() < 1e-8, "{sv:?}");
        }
    }

    #[test]
    fn masked_double_root_reports_grid_too_coarse() {
        // a double root hiding in the cell right after a bracketed simple
        // root leaves no grid signature: the count comes up short
        let h = TridiagonalOperator::new(
            vec![c(1.97, 0.0), c(2.03, 0.0), c(2.03, 0.0)],
            vec![c(0.0, 0.0); 2],
            vec![c(0.0, 0.0); 2],
        )
        .unwrap();
        match singular_values_mcf(&h, 8.0, 64, 1e-12) {
            Err(Error::GridTooCoarse { expected, found }) => {
                assert_eq!(expected, 3);
                assert!(!found.is_empty());
            }
            other => panic!("expected GridTooCoarse, got {other:?}"),
        }
        // a finer grid resolves the same model
        let sv = singular_values_mcf(&h, 8.0, 1024, 1e-12).unwrap();
        assert_eq!(sv.len(), 3);
        assert!((sv[0] - 2.03).abs() < 1e-8);
        assert!((sv[2] - 1.97).abs() < 1e-8);
    }

    #[test]
    fn factor_check_single_block() {
        let bt = BlockTridiagonal::new(
            vec![Block2::antidiag(c(1.0, 2.0), c(1.0, -2.0))],
            vec![],
            vec![],
        )
        .unwrap();
        let r = block_factor_check(&bt, c(0.7, 0.0)).unwrap();
        assert!(r <= 1e-14);
    }

    #[test]
    fn factor_check_three_level() {
        let bt = block_tridiagonalize(&build_ubh(2, 0.3));
        let r = block_factor_check(&bt, c(0.7, 0.0)).unwrap();
        assert!(r <= 1e-10 * (1.0 + bt.max_norm()));
    }

    #[test]
    fn factor_check_complex_shift() {
        let bt = block_tridiagonalize(&build_nonbh5(0.1));
        let r = block_factor_check(&bt, c(0.0, 2.2)).unwrap();
        assert!(r <= 1e-10 * (1.0 + bt.max_norm()));
    }

    fn homogeneous_chain(m: usize, n: usize) -> TwoSidedModel {
        // scalar chain a_k = 0, b_k = c_k = 1, Hermitized
        let hop = Block2::antidiag(c(1.0, 0.0), c(1.0, 0.0));
        TwoSidedModel {
            center: Block2::zero(),
            left_coupling: (hop, hop),
            right_coupling: (hop, hop),
            left_diag: vec![Block2::zero(); m],
            left_pairs: vec![(hop, hop); m.saturating_sub(1)],
            right_diag: vec![Block2::zero(); n],
            right_pairs: vec![(hop, hop); n.saturating_sub(1)],
        }
    }

    #[test]
    fn two_sided_without_tails_is_center_inverse_determinant() {
        let a0 = Block2::antidiag(c(0.4, 0.6), c(0.4, -0.6));
        let model = TwoSidedModel {
            center: a0,
            left_coupling: (Block2::zero(), Block2::zero()),
            right_coupling: (Block2::zero(), Block2::zero()),
            left_diag: vec![],
            left_pairs: vec![],
            right_diag: vec![],
            right_pairs: vec![],
        };
        let z = c(3.0, 0.0);
        let g = two_sided_green(&model, z).unwrap();
        let expected = cinv(shifted(&a0, z).det());
        assert!((g - expected).norm() < 1e-15);
    }

    #[test]
    fn two_sided_assembly_shape_and_symmetry() {
        let model = homogeneous_chain(3, 5);
        let dense = model.assemble();
        assert_eq!(dense.nrows(), 2 * (3 + 5 + 1));
        for i in 0..dense.nrows() {
            for j in 0..dense.ncols() {
                assert_eq!(dense[[i, j]], dense[[j, i]].conj());
            }
        }
    }

    #[test]
    fn two_sided_truncation_doubling_is_stable_off_spectrum() {
        let z = c(3.0, 0.0);
        let g40 = two_sided_green(&homogeneous_chain(40, 40), z).unwrap();
        let g80 = two_sided_green(&homogeneous_chain(80, 80), z).unwrap();
        assert!((g40 - g80).norm() <= 1e-8);
    }

    #[test]
    fn two_sided_asymmetric_truncation_runs() {
        let z = c(0.0, 2.5);
        let g = two_sided_green(&homogeneous_chain(0, 12), z).unwrap();
        assert!(g.norm() > 0.0);
    }
}
