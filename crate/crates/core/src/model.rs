//! Tridiagonal model construction: the Bose-Hubbard family in the two-mode
//! Fock basis, the non-Bose-Hubbard five-level preset, and user-supplied
//! custom band matrices.
//!
//! Basis convention for the two-mode builders: index `k = 1..K` carries the
//! occupation pair `(n_1, n_2) = (k-1, N-k+1)` where `N` is the particle
//! number and `K = N + 1`. The diagonal entries are
//! `eps*(n_1-n_2) + (c/2)*(n_1-n_2)^2` and the hopping entries are
//! `v*sqrt(k*(N-k+1))`.

use num_complex::Complex64;
use serde_json::{json, Value};

use crate::error::Error;
use crate::Result;

/// Particle-number cap for the builders; beyond this the dense companions
/// are useless anyway (they are O(N^3)).
pub const MAX_PARTICLES: usize = 10_000;

/// Dimension cap for the dense O(N^3) routines.
pub const DENSE_CAP: usize = 1_000;

/// A complex tridiagonal N x N matrix stored as three bands.
///
/// `diag` holds the N diagonal entries, `upper` the N-1 superdiagonal
/// entries and `lower` the N-1 subdiagonal entries, so `upper[i]` couples
/// row `i` to row `i+1` and `lower[i]` couples row `i+1` to row `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct TridiagonalOperator {
    diag: Vec<Complex64>,
    upper: Vec<Complex64>,
    lower: Vec<Complex64>,
}

impl TridiagonalOperator {
    /// Validating constructor: band lengths must be `N`, `N-1`, `N-1` with
    /// `N >= 1`, and every entry must be finite.
    pub fn new(
        diag: Vec<Complex64>,
        upper: Vec<Complex64>,
        lower: Vec<Complex64>,
    ) -> Result<Self> {
        if diag.is_empty() {
            return Err(Error::InconsistentDimensions(
                "diagonal must contain at least one entry".into(),
            ));
        }
        if upper.len() != diag.len() - 1 || lower.len() != diag.len() - 1 {
            return Err(Error::InconsistentDimensions(format!(
                "for dimension {} expected {} off-diagonal entries, got upper {} / lower {}",
                diag.len(),
                diag.len() - 1,
                upper.len(),
                lower.len()
            )));
        }
        let finite =
            |v: &[Complex64]| v.iter().all(|z| z.re.is_finite() && z.im.is_finite());
        if !finite(&diag) || !finite(&upper) || !finite(&lower) {
            return Err(Error::NonFinite("tridiagonal band entry"));
        }
        Ok(Self { diag, upper, lower })
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn diag(&self) -> &[Complex64] {
        &self.diag
    }

    pub fn upper(&self) -> &[Complex64] {
        &self.upper
    }

    pub fn lower(&self) -> &[Complex64] {
        &self.lower
    }

    /// True iff the matrix equals its plain (unconjugated) transpose.
    pub fn is_complex_symmetric(&self) -> bool {
        self.upper == self.lower
    }

    /// True iff the matrix equals its conjugate transpose.
    pub fn is_hermitian(&self) -> bool {
        self.diag.iter().all(|a| a.im == 0.0)
            && self
                .upper
                .iter()
                .zip(&self.lower)
                .all(|(b, c)| *c == b.conj())
    }

    /// Largest entry magnitude over all three bands.
    pub fn max_norm(&self) -> f64 {
        self.diag
            .iter()
            .chain(&self.upper)
            .chain(&self.lower)
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    /// Dense copy, for the O(N^3) companions and for tests.
    pub fn to_dense(&self) -> ndarray::Array2<Complex64> {
        let n = self.dim();
        let mut m = ndarray::Array2::zeros((n, n));
        for i in 0..n {
            m[[i, i]] = self.diag[i];
            if i + 1 < n {
                m[[i, i + 1]] = self.upper[i];
                m[[i + 1, i]] = self.lower[i];
            }
        }
        m
    }
}

/// Two-mode Bose-Hubbard Hamiltonian with `particles` bosons, on-site
/// imbalance `epsilon`, hopping `v` and interaction `c`, as a
/// `(particles+1) x (particles+1)` tridiagonal matrix.
///
/// All parameters may be complex so that the analytic continuation
/// `epsilon -> i*gamma` needs no separate code path.
///
/// # Panics
/// When `particles` exceeds [`MAX_PARTICLES`].
pub fn build_bose_hubbard(
    particles: usize,
    epsilon: Complex64,
    v: Complex64,
    c: Complex64,
) -> TridiagonalOperator {
    assert!(
        particles <= MAX_PARTICLES,
        "particle number {particles} exceeds the builder cap {MAX_PARTICLES}"
    );
    let n = particles as f64;
    let dim = particles + 1;
    let diag = (0..dim)
        .map(|k| {
            let imbalance = 2.0 * k as f64 - n;
            epsilon * imbalance + c * (0.5 * imbalance * imbalance)
        })
        .collect();
    let upper: Vec<Complex64> = (1..dim)
        .map(|k| v * (k as f64 * (n - k as f64 + 1.0)).sqrt())
        .collect();
    let lower = upper.clone();
    TridiagonalOperator { diag, upper, lower }
}

/// The non-Hermitian continuation of the Bose-Hubbard dimer: imbalance
/// `i*gamma`, unit hopping, no interaction. Complex-symmetric for any
/// `gamma`.
pub fn build_ubh(particles: usize, gamma: f64) -> TridiagonalOperator {
    build_bose_hubbard(
        particles,
        Complex64::new(0.0, gamma),
        Complex64::new(1.0, 0.0),
        Complex64::new(0.0, 0.0),
    )
}

/// The fixed five-level complex-symmetric model that is not of
/// Bose-Hubbard type: diagonal `(-4i g, -2i g, 0, 2i g, 4i g)` with
/// off-diagonal couplings `(8, i*sqrt(54), i*sqrt(54), 8)`.
pub fn build_nonbh5(gamma: f64) -> TridiagonalOperator {
    let ig = |m: f64| Complex64::new(0.0, m * gamma);
    let diag = vec![ig(-4.0), ig(-2.0), ig(0.0), ig(2.0), ig(4.0)];
    let s54 = Complex64::new(0.0, 54f64.sqrt());
    let eight = Complex64::new(8.0, 0.0);
    let upper = vec![eight, s54, s54, eight];
    let lower = upper.clone();
    TridiagonalOperator { diag, upper, lower }
}

/// Declarative model description; the parsed form of the model file format.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelSpec {
    BoseHubbard {
        particles: usize,
        epsilon: Complex64,
        v: Complex64,
        c: Complex64,
    },
    UnconventionalBh {
        particles: usize,
        gamma: f64,
        v: f64,
        c: f64,
    },
    NonBh5 {
        gamma: f64,
    },
    Custom {
        diag: Vec<Complex64>,
        upper: Vec<Complex64>,
        lower: Vec<Complex64>,
    },
}

impl ModelSpec {
    /// Matrix dimension this spec produces.
    pub fn dim(&self) -> usize {
        match self {
            ModelSpec::BoseHubbard { particles, .. }
            | ModelSpec::UnconventionalBh { particles, .. } => particles + 1,
            ModelSpec::NonBh5 { .. } => 5,
            ModelSpec::Custom { diag, .. } => diag.len(),
        }
    }

    /// Construct the tridiagonal matrix this spec describes.
    pub fn build(&self) -> Result<TridiagonalOperator> {
        match self {
            ModelSpec::BoseHubbard {
                particles,
                epsilon,
                v,
                c,
            } => {
                check_particle_cap(*particles)?;
                Ok(build_bose_hubbard(*particles, *epsilon, *v, *c))
            }
            ModelSpec::UnconventionalBh {
                particles,
                gamma,
                v,
                c,
            } => {
                check_particle_cap(*particles)?;
                Ok(build_bose_hubbard(
                    *particles,
                    Complex64::new(0.0, *gamma),
                    Complex64::new(*v, 0.0),
                    Complex64::new(*c, 0.0),
                ))
            }
            ModelSpec::NonBh5 { gamma } => Ok(build_nonbh5(*gamma)),
            ModelSpec::Custom { diag, upper, lower } => {
                TridiagonalOperator::new(diag.clone(), upper.clone(), lower.clone())
            }
        }
    }

    /// Serialize to the model file format (see [`parse_model_spec`]).
    pub fn to_document(&self) -> String {
        let cpx = |z: &Complex64| json!([z.re, z.im]);
        let band = |v: &[Complex64]| Value::Array(v.iter().map(|z| cpx(z)).collect());
        let value = match self {
            ModelSpec::BoseHubbard {
                particles,
                epsilon,
                v,
                c,
            } => json!({
                "type": "bh",
                "particles": particles,
                "epsilon": cpx(epsilon),
                "v": cpx(v),
                "c": cpx(c),
            }),
            ModelSpec::UnconventionalBh {
                particles,
                gamma,
                v,
                c,
            } => json!({
                "type": "ubh",
                "particles": particles,
                "gamma": gamma,
                "v": v,
                "c": c,
            }),
            ModelSpec::NonBh5 { gamma } => json!({ "type": "nonbh5", "gamma": gamma }),
            ModelSpec::Custom { diag, upper, lower } => json!({
                "type": "custom",
                "diag": band(diag),
                "upper": band(upper),
                "lower": band(lower),
            }),
        };
        serde_json::to_string_pretty(&value).expect("static JSON structure")
    }
}

fn check_particle_cap(particles: usize) -> Result<()> {
    if particles > MAX_PARTICLES {
        Err(Error::DimensionTooLarge {
            dim: particles + 1,
            cap: MAX_PARTICLES + 1,
        })
    } else {
        Ok(())
    }
}

/// Parse a UTF-8 model document.
///
/// The format is a JSON object with `"type"` in `{"bh","ubh","nonbh5","custom"}`.
/// Complex scalars are two-element arrays `[re, im]`; a bare number is
/// accepted wherever a complex scalar is expected and means a zero
/// imaginary part. Omitted couplings default to `epsilon = 0`, `v = 1`,
/// `c = 0`.
pub fn parse_model_spec(text: &str) -> Result<ModelSpec> {
    let value: Value = serde_json::from_str(text)
        .map_err(|e| Error::MalformedInput(format!("invalid JSON: {e}")))?;
    let obj = value
        .as_object()
        .ok_or_else(|| Error::MalformedInput("top level must be an object".into()))?;
    let kind = obj
        .get("type")
        .ok_or_else(|| Error::MalformedInput("missing \"type\" key".into()))?
        .as_str()
        .ok_or_else(|| Error::MalformedInput("\"type\" must be a string".into()))?;

    match kind {
        "bh" => Ok(ModelSpec::BoseHubbard {
            particles: particles_field(obj)?,
            epsilon: complex_field(obj, "epsilon", Complex64::new(0.0, 0.0))?,
            v: complex_field(obj, "v", Complex64::new(1.0, 0.0))?,
            c: complex_field(obj, "c", Complex64::new(0.0, 0.0))?,
        }),
        "ubh" => Ok(ModelSpec::UnconventionalBh {
            particles: particles_field(obj)?,
            gamma: real_field(obj, "gamma", None)?,
            v: real_field(obj, "v", Some(1.0))?,
            c: real_field(obj, "c", Some(0.0))?,
        }),
        "nonbh5" => Ok(ModelSpec::NonBh5 {
            gamma: real_field(obj, "gamma", None)?,
        }),
        "custom" => {
            let diag = band_field(obj, "diag")?;
            let upper = band_field(obj, "upper")?;
            let lower = band_field(obj, "lower")?;
            if diag.is_empty() {
                return Err(Error::InconsistentDimensions(
                    "custom model needs a non-empty diagonal".into(),
                ));
            }
            if upper.len() != diag.len() - 1 || lower.len() != diag.len() - 1 {
                return Err(Error::InconsistentDimensions(format!(
                    "dimension {} requires {} entries per off-diagonal band, got upper {} / lower {}",
                    diag.len(),
                    diag.len() - 1,
                    upper.len(),
                    lower.len()
                )));
            }
            Ok(ModelSpec::Custom { diag, upper, lower })
        }
        other => Err(Error::UnknownVariant(other.to_string())),
    }
}

fn particles_field(obj: &serde_json::Map<String, Value>) -> Result<usize> {
    let v = obj
        .get("particles")
        .ok_or_else(|| Error::MalformedInput("missing \"particles\"".into()))?;
    let n = v
        .as_u64()
        .ok_or_else(|| Error::MalformedInput("\"particles\" must be a non-negative integer".into()))?;
    let n = n as usize;
    check_particle_cap(n)?;
    Ok(n)
}

fn real_field(
    obj: &serde_json::Map<String, Value>,
    key: &str,
    default: Option<f64>,
) -> Result<f64> {
    match obj.get(key) {
        None => default.ok_or_else(|| Error::MalformedInput(format!("missing \"{key}\""))),
        Some(v) => {
            let x = v
                .as_f64()
                .ok_or_else(|| Error::MalformedInput(format!("\"{key}\" must be a number")))?;
            if !x.is_finite() {
                return Err(Error::NonFinite("model parameter"));
            }
            Ok(x)
        }
    }
}

fn complex_field(
    obj: &serde_json::Map<String, Value>,
    key: &str,
    default: Complex64,
) -> Result<Complex64> {
    match obj.get(key) {
        None => Ok(default),
        Some(v) => complex_value(v, key),
    }
}

fn complex_value(v: &Value, context: &str) -> Result<Complex64> {
    let z = match v {
        Value::Number(x) => {
            let re = x
                .as_f64()
                .ok_or_else(|| Error::MalformedInput(format!("\"{context}\": bad number")))?;
            Complex64::new(re, 0.0)
        }
        Value::Array(parts) if parts.len() == 2 => {
            let get = |i: usize| -> Result<f64> {
                parts[i].as_f64().ok_or_else(|| {
                    Error::MalformedInput(format!(
                        "\"{context}\": complex scalar entries must be numbers"
                    ))
                })
            };
            Complex64::new(get(0)?, get(1)?)
        }
        _ => {
            return Err(Error::MalformedInput(format!(
                "\"{context}\": expected a number or a two-element [re, im] array"
            )))
        }
    };
    if !z.re.is_finite() || !z.im.is_finite() {
        return Err(Error::NonFinite("model parameter"));
    }
    Ok(z)
}

fn band_field(obj: &serde_json::Map<String, Value>, key: &str) -> Result<Vec<Complex64>> {
    let v = obj
        .get(key)
        .ok_or_else(|| Error::MalformedInput(format!("missing \"{key}\"")))?;
    let arr = v
        .as_array()
        .ok_or_else(|| Error::MalformedInput(format!("\"{key}\" must be an array")))?;
    arr.iter().map(|e| complex_value(e, key)).collect()
}

/// One-parameter model family `gamma -> H(gamma)`, used by the
/// exceptional-point scanner and the CLI sweeps. Every variant has a fixed
/// dimension, so scans never change matrix size mid-range.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelFamily {
    /// `build_ubh(particles, gamma)`.
    Ubh { particles: usize },
    /// Bose-Hubbard with `epsilon = i*gamma` and fixed `v`, `c`.
    BoseHubbardGamma {
        particles: usize,
        v: Complex64,
        c: Complex64,
    },
    /// `build_nonbh5(gamma)`.
    NonBh5,
}

impl ModelFamily {
    pub fn build(&self, gamma: f64) -> TridiagonalOperator {
        match self {
            ModelFamily::Ubh { particles } => build_ubh(*particles, gamma),
            ModelFamily::BoseHubbardGamma { particles, v, c } => {
                build_bose_hubbard(*particles, Complex64::new(0.0, gamma), *v, *c)
            }
            ModelFamily::NonBh5 => build_nonbh5(gamma),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            ModelFamily::Ubh { particles }
            | ModelFamily::BoseHubbardGamma { particles, .. } => particles + 1,
            ModelFamily::NonBh5 => 5,
        }
    }
}
