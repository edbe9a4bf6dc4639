//! Floating-point values carried as mantissa + separate base-2 exponent.
//!
//! Determinants of N x N matrices overflow `f64` long before N reaches the
//! sizes the band recurrences handle, so the minor recurrences track their
//! state with an explicit power-of-two scale. Rescaling multiplies by exact
//! powers of two and therefore introduces no rounding.

use num_complex::Complex64;

/// Rescale whenever a magnitude leaves `[2^-SCALE_LIMIT, 2^SCALE_LIMIT]`.
const SCALE_LIMIT: i32 = 256;

/// A complex value `mantissa * 2^exp2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scaled {
    pub mantissa: Complex64,
    pub exp2: i64,
}

impl Scaled {
    pub fn new(mantissa: Complex64, exp2: i64) -> Self {
        Self { mantissa, exp2 }
    }

    pub fn zero() -> Self {
        Self::new(Complex64::new(0.0, 0.0), 0)
    }

    pub fn is_zero(&self) -> bool {
        self.mantissa.re == 0.0 && self.mantissa.im == 0.0
    }

    /// Collapse to a plain complex number. Saturates to zero or infinity
    /// when the exponent leaves the representable range.
    pub fn to_complex(&self) -> Complex64 {
        if self.is_zero() {
            return Complex64::new(0.0, 0.0);
        }
        // Apply the exponent in two halves so each factor stays finite.
        let e1 = (self.exp2 / 2).clamp(-1022, 1022) as i32;
        let e2 = (self.exp2 - e1 as i64).clamp(-1074, 1023) as i32;
        self.mantissa * exp2i(e1) * exp2i(e2)
    }

    /// `log2` of the magnitude, `-inf` for zero.
    pub fn log2_abs(&self) -> f64 {
        if self.is_zero() {
            f64::NEG_INFINITY
        } else {
            self.mantissa.norm().log2() + self.exp2 as f64
        }
    }

    /// Magnitude as a plain `f64`, saturating like `to_complex`.
    pub fn abs(&self) -> f64 {
        if self.is_zero() {
            0.0
        } else {
            let l = self.log2_abs();
            if l > 1024.0 {
                f64::INFINITY
            } else if l < -1075.0 {
                0.0
            } else {
                l.exp2()
            }
        }
    }

    /// Real projection, keeping the exponent.
    pub fn real(&self) -> ScaledReal {
        ScaledReal {
            mantissa: self.mantissa.re,
            exp2: self.exp2,
        }
    }
}

/// A real value `mantissa * 2^exp2` with exact sign.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaledReal {
    pub mantissa: f64,
    pub exp2: i64,
}

impl ScaledReal {
    pub fn sign(&self) -> i8 {
        if self.mantissa > 0.0 {
            1
        } else if self.mantissa < 0.0 {
            -1
        } else {
            0
        }
    }

    pub fn log2_abs(&self) -> f64 {
        if self.mantissa == 0.0 {
            f64::NEG_INFINITY
        } else {
            self.mantissa.abs().log2() + self.exp2 as f64
        }
    }

    /// Saturating conversion to `f64`.
    pub fn to_f64(&self) -> f64 {
        if self.mantissa == 0.0 {
            return 0.0;
        }
        let l = self.log2_abs();
        if l > 1024.0 {
            f64::INFINITY * self.mantissa.signum()
        } else if l < -1075.0 {
            0.0
        } else {
            l.exp2() * self.mantissa.signum()
        }
    }
}

/// Exact power of two as `f64` (|e| <= 1074).
fn exp2i(e: i32) -> f64 {
    (e as f64).exp2()
}

/// Mutable scale state used inside the minor recurrences: callers pass the
/// magnitudes currently in flight; when they drift out of range the common
/// exponent absorbs an exact power of two and the returned factor must be
/// applied to every state variable.
pub fn rescale_factor(max_abs: f64, exp2: &mut i64) -> f64 {
    if max_abs == 0.0 || !max_abs.is_finite() {
        return 1.0;
    }
    let limit = exp2i(SCALE_LIMIT);
    if max_abs > limit {
        *exp2 += SCALE_LIMIT as i64;
        exp2i(-SCALE_LIMIT)
    } else if max_abs < 1.0 / limit {
        *exp2 -= SCALE_LIMIT as i64;
        limit
    } else {
        1.0
    }
}
