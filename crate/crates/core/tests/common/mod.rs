//! Shared integration-test helpers: the model catalog, dense oracles, and
//! a seeded RNG.

use ndarray::Array2;
use ndarray_linalg::{Determinant, Inverse};
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use nhspectra::model::{
    build_bose_hubbard, build_nonbh5, build_ubh, TridiagonalOperator,
};

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Every model family at desk scale: the non-Hermitian Bose-Hubbard
/// ladder over a gamma grid, the five-level non-Bose-Hubbard model, a few
/// fully complex Bose-Hubbard points, and seeded random band matrices.
pub fn catalog() -> Vec<(String, TridiagonalOperator)> {
    let mut models = Vec::new();
    for particles in 1..=5 {
        for g in [0.0, 0.1, 0.3, 0.5, 0.7, 0.9, 1.5] {
            models.push((
                format!("ubh({particles}, {g})"),
                build_ubh(particles, g),
            ));
        }
    }
    for g in [0.0, 0.2, 0.5, 0.9, 1.3] {
        models.push((format!("nonbh5({g})"), build_nonbh5(g)));
    }
    for (e, v, cc) in [
        (c(0.3, 0.2), c(1.1, -0.1), c(0.0, 0.4)),
        (c(0.0, 0.8), c(1.0, 0.0), c(0.5, 0.0)),
        (c(-0.2, 0.0), c(0.7, 0.7), c(0.0, 0.0)),
    ] {
        models.push((
            format!("bh(3, {e}, {v}, {cc})"),
            build_bose_hubbard(3, e, v, cc),
        ));
    }
    let mut r = rng(0x5eed);
    for n in [2usize, 5, 9, 12] {
        models.push((format!("random({n})"), random_model(&mut r, n)));
    }
    models
}

pub fn random_model(r: &mut ChaCha8Rng, n: usize) -> TridiagonalOperator {
    let mut band = |len: usize| -> Vec<Complex64> {
        (0..len)
            .map(|_| c(r.gen_range(-2.0..2.0), r.gen_range(-2.0..2.0)))
            .collect()
    };
    TridiagonalOperator::new(band(n), band(n - 1), band(n - 1)).unwrap()
}

/// Dense `(H - z)^-1` through LU, independent of the continued fractions.
pub fn dense_resolvent(h: &TridiagonalOperator, z: Complex64) -> Option<Array2<Complex64>> {
    let mut m = h.to_dense();
    for i in 0..h.dim() {
        m[[i, i]] -= z;
    }
    m.inv().ok()
}

pub fn dense_det(m: &Array2<Complex64>) -> Complex64 {
    m.det().expect("square matrix")
}

/// Max-entry magnitude of a dense matrix.
pub fn max_entry(m: &Array2<Complex64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}
