//! Working precision and small helpers around `rug` complex numbers.

use rug::float::Constant;
use rug::ops::Pow;
use rug::{Complex, Float};

/// Default number of significant decimal digits.
pub const DEFAULT_DIGITS: u32 = 64;

const GUARD_BITS: u32 = 16;

/// Working precision, counted in decimal digits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Precision(u32);

impl Precision {
    pub fn digits(digits: u32) -> Self {
        Precision(digits.max(8))
    }

    pub fn decimal_digits(self) -> u32 {
        self.0
    }

    /// Binary precision used for every `rug` value, with a few guard bits.
    pub fn bits(self) -> u32 {
        (f64::from(self.0) * std::f64::consts::LOG2_10).ceil() as u32 + GUARD_BITS
    }

    pub fn complex(self, re: f64, im: f64) -> Complex {
        Complex::with_val(self.bits(), (re, im))
    }

    pub fn zero(self) -> Complex {
        Complex::new(self.bits())
    }

    pub fn one(self) -> Complex {
        Complex::with_val(self.bits(), 1)
    }

    pub fn real(self, value: f64) -> Float {
        Float::with_val(self.bits(), value)
    }

    pub fn pi(self) -> Float {
        Float::with_val(self.bits(), Constant::Pi)
    }

    /// `2πi` at this precision.
    pub fn two_pi_i(self) -> Complex {
        let two_pi = Float::with_val(self.bits(), 2 * self.pi());
        Complex::with_val(self.bits(), (0, two_pi))
    }

    /// `e(u) = exp(2πi u)`.
    pub fn e(self, u: &Complex) -> Complex {
        Complex::with_val(self.bits(), u * self.two_pi_i()).exp()
    }

    /// `10^(-exponent)` as a float at this precision.
    pub fn ten_pow_neg(self, exponent: i64) -> Float {
        let ten = Float::with_val(self.bits(), 10);
        Float::with_val(self.bits(), ten.pow(-exponent as i32))
    }
}

impl Default for Precision {
    fn default() -> Self {
        Precision(DEFAULT_DIGITS)
    }
}

/// Modulus of a complex number as a float.
pub fn modulus(z: &Complex) -> Float {
    Float::with_val(z.prec().0, z.abs_ref())
}

/// log10 of a modulus; `-inf` for zero. Used for truncation bounds.
pub fn log10_modulus(z: &Complex) -> f64 {
    let m = modulus(z);
    if m.is_zero() {
        f64::NEG_INFINITY
    } else {
        // `log10` on a Float keeps the full exponent range, unlike `to_f64`.
        m.log10().to_f64()
    }
}

/// Render a float in scientific notation with `digits` significant digits.
pub fn format_float(value: &Float, digits: usize) -> String {
    if value.is_zero() {
        return "0".to_string();
    }
    value.to_string_radix(10, Some(digits))
}
