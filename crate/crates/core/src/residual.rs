//! Values that remember the size of the terms they were summed from.
//!
//! Every identity in this crate is a sum of products that must cancel. A
//! bare residual says little on its own, so sums carry `scale`, the largest
//! modulus among the contributing products, and residuals are reported
//! relative to it.

use std::fmt;

use rug::{Complex, Float};

use crate::precision::modulus;

#[derive(Clone, PartialEq)]
pub struct Weighted {
    pub value: Complex,
    pub scale: Float,
}

impl Weighted {
    /// A single product term: its scale is its own modulus.
    pub fn term(value: Complex) -> Self {
        let scale = modulus(&value);
        Weighted { value, scale }
    }

    pub fn zero(bits: u32) -> Self {
        Weighted {
            value: Complex::new(bits),
            scale: Float::new(bits),
        }
    }

    pub fn add(&mut self, other: &Weighted) {
        self.value += &other.value;
        if other.scale > self.scale {
            self.scale.clone_from(&other.scale);
        }
    }

    pub fn sub(&mut self, other: &Weighted) {
        self.value -= &other.value;
        if other.scale > self.scale {
            self.scale.clone_from(&other.scale);
        }
    }

    /// Product of two tracked values; scales multiply.
    pub fn mul(&self, other: &Weighted) -> Weighted {
        let bits = self.value.prec().0;
        Weighted {
            value: Complex::with_val(bits, &self.value * &other.value),
            scale: Float::with_val(bits, &self.scale * &other.scale),
        }
    }

    pub fn scaled(&self, factor: &Complex) -> Weighted {
        let bits = self.value.prec().0;
        Weighted {
            value: Complex::with_val(bits, &self.value * factor),
            scale: Float::with_val(bits, &self.scale * modulus(factor)),
        }
    }

    /// `|value| / scale`, or zero when every contributing term vanished.
    pub fn relative(&self) -> Float {
        let bits = self.value.prec().0;
        if self.scale.is_zero() {
            return Float::new(bits);
        }
        Float::with_val(bits, modulus(&self.value) / &self.scale)
    }
}

impl fmt::Debug for Weighted {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "Weighted({:.6e} + {:.6e}i, scale {:.3e})",
            self.value.real().to_f64(),
            self.value.imag().to_f64(),
            self.scale.to_f64()
        )
    }
}

/// Running maximum of relative residuals.
pub fn max_float(a: Float, b: &Float) -> Float {
    if *b > a {
        b.clone()
    } else {
        a
    }
}
