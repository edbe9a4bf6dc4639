//! Non-Hermitian tridiagonal Hamiltonians of Bose-Hubbard type: model
//! construction, spectra, exceptional points, continued-fraction Green's
//! functions and singular values via Hermitization.

pub mod cf_matrix;
pub mod cf_scalar;
pub mod error;
pub mod hermitize;
pub mod model;
pub mod scaled;
pub mod spectral;

pub use error::Error;
pub use num_complex::Complex64;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
