//! Hermitization of a tridiagonal operator: the partitioned Hermitian
//! pencil `[[0, H], [H^†, 0]]`, the interleaving basis permutation, the
//! 2x2-block tridiagonal isospectral partner with sparse blocks, and the
//! dense singular-value oracle through `H^† H`.
//!
//! The spectrum of the pencil is `{+sigma_n} ∪ {-sigma_n}` where `sigma_n`
//! are the singular values of `H`, which makes singular values reachable
//! with Hermitian-only machinery even when `H` itself has complex spectrum.

use std::ops::{Add, Mul, Neg, Sub};

use ndarray::Array2;
use ndarray_linalg::{Eigh, UPLO};
use num_complex::Complex64;

use crate::error::Error;
use crate::model::{TridiagonalOperator, DENSE_CAP};
use crate::Result;

/// A dense 2x2 complex block.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Block2(pub [[Complex64; 2]; 2]);

impl Block2 {
    pub fn zero() -> Self {
        Block2([[Complex64::new(0.0, 0.0); 2]; 2])
    }

    pub fn identity() -> Self {
        let mut b = Self::zero();
        b.0[0][0] = Complex64::new(1.0, 0.0);
        b.0[1][1] = Complex64::new(1.0, 0.0);
        b
    }

    /// Off-diagonal block `[[0, x], [y, 0]]`, the shape every block of the
    /// permuted Hermitization takes.
    pub fn antidiag(x: Complex64, y: Complex64) -> Self {
        let mut b = Self::zero();
        b.0[0][1] = x;
        b.0[1][0] = y;
        b
    }

    pub fn adjoint(&self) -> Self {
        Block2([
            [self.0[0][0].conj(), self.0[1][0].conj()],
            [self.0[0][1].conj(), self.0[1][1].conj()],
        ])
    }

    pub fn det(&self) -> Complex64 {
        self.0[0][0] * self.0[1][1] - self.0[0][1] * self.0[1][0]
    }

    pub fn trace(&self) -> Complex64 {
        self.0[0][0] + self.0[1][1]
    }

    /// Adjugate: `adj(M) * M = det(M) * I`.
    pub fn adjugate(&self) -> Self {
        Block2([
            [self.0[1][1], -self.0[0][1]],
            [-self.0[1][0], self.0[0][0]],
        ])
    }

    /// Inverse; `None` when the determinant magnitude is below `pivot_tol`.
    pub fn inverse(&self, pivot_tol: f64) -> Option<Self> {
        let d = self.det();
        if d.norm() < pivot_tol {
            return None;
        }
        let inv_d = crate::cf_scalar::cinv(d);
        Some(self.adjugate() * inv_d)
    }

    pub fn max_norm(&self) -> f64 {
        self.0
            .iter()
            .flatten()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.0
            .iter()
            .flatten()
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

impl Add for Block2 {
    type Output = Block2;
    fn add(self, rhs: Block2) -> Block2 {
        let mut out = Block2::zero();
        for i in 0..2 {
            for j in 0..2 {
                out.0[i][j] = self.0[i][j] + rhs.0[i][j];
            }
        }
        out
    }
}

impl Sub for Block2 {
    type Output = Block2;
    fn sub(self, rhs: Block2) -> Block2 {
        let mut out = Block2::zero();
        for i in 0..2 {
            for j in 0..2 {
                out.0[i][j] = self.0[i][j] - rhs.0[i][j];
            }
        }
        out
    }
}

impl Mul for Block2 {
    type Output = Block2;
    fn mul(self, rhs: Block2) -> Block2 {
        let mut out = Block2::zero();
        for i in 0..2 {
            for j in 0..2 {
                out.0[i][j] = self.0[i][0] * rhs.0[0][j] + self.0[i][1] * rhs.0[1][j];
            }
        }
        out
    }
}

impl Mul<Complex64> for Block2 {
    type Output = Block2;
    fn mul(self, rhs: Complex64) -> Block2 {
        let mut out = self;
        for row in out.0.iter_mut() {
            for z in row.iter_mut() {
                *z *= rhs;
            }
        }
        out
    }
}

impl Mul<f64> for Block2 {
    type Output = Block2;
    fn mul(self, rhs: f64) -> Block2 {
        self * Complex64::new(rhs, 0.0)
    }
}

impl Neg for Block2 {
    type Output = Block2;
    fn neg(self) -> Block2 {
        self * Complex64::new(-1.0, 0.0)
    }
}

/// Block-tridiagonal matrix with 2x2 blocks: diagonal blocks `A_1..A_n`,
/// superdiagonal `B_1..B_{n-1}`, subdiagonal `C_2..C_n` (stored with
/// `c[k]` holding `C_{k+2}`, aligned with `b[k] = B_{k+1}`).
#[derive(Debug, Clone, PartialEq)]
pub struct BlockTridiagonal {
    pub a: Vec<Block2>,
    pub b: Vec<Block2>,
    pub c: Vec<Block2>,
}

impl BlockTridiagonal {
    pub fn new(a: Vec<Block2>, b: Vec<Block2>, c: Vec<Block2>) -> Result<Self> {
        if a.is_empty() || b.len() != a.len() - 1 || c.len() != a.len() - 1 {
            return Err(Error::InconsistentDimensions(format!(
                "block-tridiagonal with {} diagonal blocks needs {} off-diagonal blocks, got {} / {}",
                a.len(),
                a.len().saturating_sub(1),
                b.len(),
                c.len()
            )));
        }
        if !a.iter().chain(&b).chain(&c).all(Block2::is_finite) {
            return Err(Error::NonFinite("block entry"));
        }
        Ok(Self { a, b, c })
    }

    pub fn nblocks(&self) -> usize {
        self.a.len()
    }

    /// Scalar dimension of the assembled matrix.
    pub fn dim(&self) -> usize {
        2 * self.nblocks()
    }

    /// True iff `C_{k+1} = B_k^†` for all k, which makes the assembled
    /// matrix Hermitian whenever the diagonal blocks are.
    pub fn hermitian_as_whole(&self) -> bool {
        self.b
            .iter()
            .zip(&self.c)
            .all(|(b, c)| *c == b.adjoint())
            && self.a.iter().all(|a| *a == a.adjoint())
    }

    /// Dense assembly (2n x 2n).
    pub fn assemble(&self) -> Array2<Complex64> {
        let n = self.nblocks();
        let mut m = Array2::zeros((2 * n, 2 * n));
        let mut put = |bi: usize, bj: usize, blk: &Block2| {
            for i in 0..2 {
                for j in 0..2 {
                    m[[2 * bi + i, 2 * bj + j]] = blk.0[i][j];
                }
            }
        };
        for k in 0..n {
            put(k, k, &self.a[k]);
            if k + 1 < n {
                put(k, k + 1, &self.b[k]);
                put(k + 1, k, &self.c[k]);
            }
        }
        m
    }

    /// Largest block-entry magnitude.
    pub fn max_norm(&self) -> f64 {
        self.a
            .iter()
            .chain(&self.b)
            .chain(&self.c)
            .map(Block2::max_norm)
            .fold(0.0, f64::max)
    }

    /// Gershgorin-type bound on the assembled matrix: the largest absolute
    /// row sum. Every eigenvalue lies within this bound of zero.
    pub fn gershgorin_bound(&self) -> f64 {
        let n = self.nblocks();
        let mut bound: f64 = 0.0;
        for k in 0..n {
            for i in 0..2 {
                let mut row = self.a[k].0[i][0].norm() + self.a[k].0[i][1].norm();
                if k + 1 < n {
                    row += self.b[k].0[i][0].norm() + self.b[k].0[i][1].norm();
                }
                if k > 0 {
                    row += self.c[k - 1].0[i][0].norm() + self.c[k - 1].0[i][1].norm();
                }
                bound = bound.max(row);
            }
        }
        bound
    }
}

/// The Hermitian pencil `[[0, H], [H^†, 0]]` as a dense 2N x 2N matrix.
pub fn hermitized_pencil(h: &TridiagonalOperator) -> Array2<Complex64> {
    let n = h.dim();
    let dense = h.to_dense();
    let mut m = Array2::zeros((2 * n, 2 * n));
    for i in 0..n {
        for j in 0..n {
            m[[i, n + j]] = dense[[i, j]];
            m[[n + j, i]] = dense[[i, j]].conj();
        }
    }
    m
}

/// Index map sending position `i` of the block-interleaved basis to its
/// position in the pencil basis: even slots go to the first half, odd
/// slots to the second. (0-based; with 1-based indices this is
/// `2k-1 -> k`, `2k -> N+k`.)
pub fn interleave_permutation(n: usize) -> Vec<usize> {
    let mut perm = Vec::with_capacity(2 * n);
    for k in 0..n {
        perm.push(k);
        perm.push(n + k);
    }
    perm
}

/// Permuted Hermitization: 2x2 blocks
/// `A_k = [[0, a_k], [a_k^*, 0]]`, `B_k = [[0, b_k], [c_{k+1}^*, 0]]`,
/// `C_{k+1} = B_k^†`. The assembled result is permutation-equivalent to
/// [`hermitized_pencil`].
pub fn block_tridiagonalize(h: &TridiagonalOperator) -> BlockTridiagonal {
    let n = h.dim();
    let a = (0..n)
        .map(|k| Block2::antidiag(h.diag()[k], h.diag()[k].conj()))
        .collect();
    let b: Vec<Block2> = (0..n - 1)
        .map(|k| Block2::antidiag(h.upper()[k], h.lower()[k].conj()))
        .collect();
    let c = b.iter().map(Block2::adjoint).collect();
    BlockTridiagonal { a, b, c }
}

/// Relative noise floor for singular values computed through `H^† H`:
/// forming the product squares the condition, so anything below
/// `~sqrt(eps)` of the largest singular value is indistinguishable from
/// zero and is reported as exactly zero.
pub const SV_RELATIVE_FLOOR: f64 = 4.8e-7; // 32 * sqrt(machine epsilon)

/// Singular values of `H` (sorted descending) as square roots of the
/// eigenvalues of `H^† H`, via a dense Hermitian eigensolver.
///
/// Values below `SV_RELATIVE_FLOOR * sigma_max` are clamped to zero; such
/// values are only certified to lie in `[0, SV_RELATIVE_FLOOR * sigma_max]`.
pub fn singular_values_direct(h: &TridiagonalOperator) -> Result<Vec<f64>> {
    let n = h.dim();
    if n > DENSE_CAP {
        return Err(Error::DimensionTooLarge {
            dim: n,
            cap: DENSE_CAP,
        });
    }
    let gram = gram_matrix(h);
    let (eigs, _) = gram
        .eigh(UPLO::Lower)
        .map_err(|e| Error::Eigensolver(e.to_string()))?;
    let mut sv: Vec<f64> = eigs.iter().map(|l| l.max(0.0).sqrt()).collect();
    sv.sort_by(|a, b| b.partial_cmp(a).expect("singular values are finite"));
    let clamp = SV_RELATIVE_FLOOR * sv.first().copied().unwrap_or(0.0);
    for s in sv.iter_mut() {
        if *s < clamp {
            *s = 0.0;
        }
    }
    Ok(sv)
}

/// Dense `H^† H`, assembled from the bands (the product of a tridiagonal
/// matrix with its adjoint is pentadiagonal).
fn gram_matrix(h: &TridiagonalOperator) -> Array2<Complex64> {
    let n = h.dim();
    let a = h.diag();
    let b = h.upper();
    let c = h.lower();
    let mut m = Array2::zeros((n, n));
    for i in 0..n {
        let mut d = a[i].norm_sqr();
        if i > 0 {
            d += b[i - 1].norm_sqr();
        }
        if i + 1 < n {
            d += c[i].norm_sqr();
        }
        m[[i, i]] = Complex64::new(d, 0.0);
        if i + 1 < n {
            // column i overlaps column i+1 in rows i and i+1
            let p = a[i].conj() * b[i] + c[i].conj() * a[i + 1];
            m[[i, i + 1]] = p;
            m[[i + 1, i]] = p.conj();
        }
        if i + 2 < n {
            // columns i and i+2 only share row i+1
            let p = c[i].conj() * b[i + 1];
            m[[i, i + 2]] = p;
            m[[i + 2, i]] = p.conj();
        }
    }
    m
}
