//! The bracket function `[z]`: an odd entire function satisfying the
//! three-term relation
//!
//! ```text
//! [z±α][β±γ] + [z±β][γ±α] + [z±γ][α±β] = 0,      [a±b] = [a+b][a−b].
//! ```
//!
//! Three flavors are provided, each optionally multiplied by `e^{cz²}`:
//!
//! * rational: `z`
//! * trigonometric: `sin(πz/ω)`
//! * elliptic: the odd theta series
//!   `Σ_{k≥0} (−1)^k p^{k(k+1)/2} (e((k+½)z/ω1) − e(−(k+½)z/ω1))`, `p = e(ω2/ω1)`,
//!   which is a constant multiple of `e^{c'z²} σ(z; Ω)`.
//!
//! All identities checked by this crate are homogeneous in `[·]` term by term,
//! so the missing normalization constant never matters.

use std::f64::consts::{LN_10, PI};
use std::fmt;
use std::str::FromStr;

use rug::{Complex, Float};

use crate::error::{Error, Result};
use crate::precision::{log10_modulus, modulus, Precision};
use crate::residual::Weighted;
use crate::sampling::POLE_GUARD;

/// Hard cap on theta-series terms.
pub const MAX_SERIES_TERMS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FlavorKind {
    Elliptic,
    Trigonometric,
    Rational,
}

impl FlavorKind {
    pub const ALL: [FlavorKind; 3] = [
        FlavorKind::Elliptic,
        FlavorKind::Trigonometric,
        FlavorKind::Rational,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FlavorKind::Elliptic => "elliptic",
            FlavorKind::Trigonometric => "trig",
            FlavorKind::Rational => "rational",
        }
    }
}

impl fmt::Display for FlavorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FlavorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "elliptic" => Ok(FlavorKind::Elliptic),
            "trig" | "trigonometric" => Ok(FlavorKind::Trigonometric),
            "rational" => Ok(FlavorKind::Rational),
            other => Err(Error::InvalidParameters(format!("unknown flavor `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Flavor {
    Elliptic { omega1: Complex, omega2: Complex },
    Trigonometric { omega: Complex },
    Rational,
}

/// Per-flavor constants computed once at construction.
#[derive(Debug, Clone, PartialEq)]
enum Cache {
    Elliptic {
        /// `πi/ω1`
        half_angle: Complex,
        /// nome `p = e(ω2/ω1)`
        nome: Complex,
        log10_nome: f64,
        /// `1/ω1`, for the truncation bound
        inv_omega1: Complex,
    },
    Trigonometric {
        /// `π/ω`
        angle: Complex,
    },
    Rational,
}

/// The entire function `[z]` together with its working precision.
#[derive(Debug, Clone, PartialEq)]
pub struct BracketFunction {
    flavor: Flavor,
    gauss_c: Complex,
    precision: Precision,
    cache: Cache,
}

impl BracketFunction {
    pub fn rational(precision: Precision) -> Self {
        BracketFunction {
            flavor: Flavor::Rational,
            gauss_c: precision.zero(),
            precision,
            cache: Cache::Rational,
        }
    }

    pub fn trigonometric(omega: Complex, precision: Precision) -> Result<Self> {
        if omega.is_zero() {
            return Err(Error::InvalidParameters("trigonometric period is zero".into()));
        }
        let omega = Complex::with_val(precision.bits(), omega);
        let angle = Complex::with_val(precision.bits(), precision.pi() / &omega);
        Ok(BracketFunction {
            flavor: Flavor::Trigonometric { omega },
            gauss_c: precision.zero(),
            precision,
            cache: Cache::Trigonometric { angle },
        })
    }

    pub fn elliptic(omega1: Complex, omega2: Complex, precision: Precision) -> Result<Self> {
        let bits = precision.bits();
        if omega1.is_zero() {
            return Err(Error::InvalidParameters("elliptic period ω1 is zero".into()));
        }
        let omega1 = Complex::with_val(bits, omega1);
        let omega2 = Complex::with_val(bits, omega2);
        let tau = Complex::with_val(bits, &omega2 / &omega1);
        if *tau.imag() <= 0 {
            return Err(Error::InvalidParameters(
                "elliptic periods need Im(ω2/ω1) > 0".into(),
            ));
        }
        let nome = precision.e(&tau);
        let log10_nome = log10_modulus(&nome);
        let inv_omega1 = Complex::with_val(bits, omega1.clone().recip());
        let pi_i = Complex::with_val(bits, (0, precision.pi()));
        let half_angle = Complex::with_val(bits, pi_i / &omega1);
        Ok(BracketFunction {
            flavor: Flavor::Elliptic { omega1, omega2 },
            gauss_c: precision.zero(),
            precision,
            cache: Cache::Elliptic {
                half_angle,
                nome,
                log10_nome,
                inv_omega1,
            },
        })
    }

    /// Standard parameters per flavor: ω1 = 1, ω2 = i (elliptic), ω = 1 (trig).
    pub fn standard(kind: FlavorKind, precision: Precision) -> Self {
        match kind {
            FlavorKind::Rational => Self::rational(precision),
            FlavorKind::Trigonometric => {
                Self::trigonometric(precision.one(), precision).expect("unit period is valid")
            }
            FlavorKind::Elliptic => {
                Self::elliptic(precision.one(), precision.complex(0.0, 1.0), precision)
                    .expect("square lattice is valid")
            }
        }
    }

    /// Same bracket times `e^{cz²}`.
    pub fn with_gauss(mut self, c: Complex) -> Self {
        self.gauss_c = Complex::with_val(self.precision.bits(), c);
        self
    }

    pub fn flavor(&self) -> &Flavor {
        &self.flavor
    }

    pub fn kind(&self) -> FlavorKind {
        match self.flavor {
            Flavor::Elliptic { .. } => FlavorKind::Elliptic,
            Flavor::Trigonometric { .. } => FlavorKind::Trigonometric,
            Flavor::Rational => FlavorKind::Rational,
        }
    }

    pub fn gauss_c(&self) -> &Complex {
        &self.gauss_c
    }

    pub fn precision(&self) -> Precision {
        self.precision
    }

    pub fn bits(&self) -> u32 {
        self.precision.bits()
    }

    /// `[z]`.
    pub fn eval(&self, z: &Complex) -> Result<Complex> {
        let bits = self.bits();
        let mut value = match &self.cache {
            Cache::Rational => Complex::with_val(bits, z),
            Cache::Trigonometric { angle } => Complex::with_val(bits, z * angle).sin(),
            Cache::Elliptic {
                half_angle,
                nome,
                log10_nome,
                inv_omega1,
            } => self.theta_series(z, half_angle, nome, *log10_nome, inv_omega1)?,
        };
        if !self.gauss_c.is_zero() {
            let exponent = Complex::with_val(bits, z.square_ref()) * &self.gauss_c;
            value *= exponent.exp();
        }
        Ok(value)
    }

    fn theta_series(
        &self,
        z: &Complex,
        half_angle: &Complex,
        nome: &Complex,
        log10_nome: f64,
        inv_omega1: &Complex,
    ) -> Result<Complex> {
        let bits = self.bits();
        let cutoff = -f64::from(self.precision.decimal_digits() + 10);
        let im = Complex::with_val(53, z * inv_omega1).imag().to_f64().abs();

        // e((k+½)z/ω1) = E^{2k+1} with E = exp(πiz/ω1)
        let base = Complex::with_val(bits, z * half_angle).exp();
        let step = Complex::with_val(bits, base.square_ref());
        let step_inv = Complex::with_val(bits, step.recip_ref());
        let mut up = base.clone();
        let mut down = base.recip();
        let mut weight = Complex::with_val(bits, 1);
        let mut nome_pow = nome.clone();
        let mut sum = Complex::new(bits);

        for k in 0..MAX_SERIES_TERMS {
            let kf = k as f64;
            let bound = kf * (kf + 1.0) / 2.0 * log10_nome + 2.0 * PI * (kf + 0.5) * im / LN_10;
            if bound < cutoff {
                return Ok(sum);
            }
            let term = Complex::with_val(bits, &up - &down) * &weight;
            if k % 2 == 0 {
                sum += term;
            } else {
                sum -= term;
            }
            up *= &step;
            down *= &step_inv;
            // p^{(k+1)(k+2)/2} = p^{k(k+1)/2} · p^{k+1}
            weight *= &nome_pow;
            nome_pow *= nome;
        }
        Err(Error::PrecisionUnreachable {
            terms: MAX_SERIES_TERMS,
        })
    }

    /// `[z]`, rejecting values inside the pole guard. Used for every bracket
    /// that ends up in a denominator.
    pub fn eval_denominator(&self, z: &Complex) -> Result<Complex> {
        let value = self.eval(z)?;
        guard(&value)?;
        Ok(value)
    }

    /// `[num] / [den]`.
    pub fn ratio(&self, num: &Complex, den: &Complex) -> Result<Complex> {
        let d = self.eval_denominator(den)?;
        Ok(self.eval(num)? / d)
    }

    /// δ-shifted factorial `[z]_k = [z][z+δ]⋯[z+(k−1)δ]`.
    pub fn shifted_factorial(&self, z: &Complex, k: u32, delta: &Complex) -> Result<Complex> {
        let bits = self.bits();
        let mut product = Complex::with_val(bits, 1);
        let mut arg = Complex::with_val(bits, z);
        for _ in 0..k {
            product *= self.eval(&arg)?;
            arg += delta;
        }
        Ok(product)
    }

    /// Shifted factorial used as a denominator: each factor is pole-guarded.
    pub fn shifted_factorial_denominator(
        &self,
        z: &Complex,
        k: u32,
        delta: &Complex,
    ) -> Result<Complex> {
        let bits = self.bits();
        let mut product = Complex::with_val(bits, 1);
        let mut arg = Complex::with_val(bits, z);
        for _ in 0..k {
            product *= self.eval_denominator(&arg)?;
            arg += delta;
        }
        Ok(product)
    }

    /// Left side of the three-term relation, tracked against its largest term.
    pub fn hirota_residual(
        &self,
        z: &Complex,
        alpha: &Complex,
        beta: &Complex,
        gamma: &Complex,
    ) -> Result<Weighted> {
        let pm = |a: &Complex, b: &Complex| -> Result<Complex> {
            let bits = self.bits();
            let plus = self.eval(&Complex::with_val(bits, a + b))?;
            let minus = self.eval(&Complex::with_val(bits, a - b))?;
            Ok(plus * minus)
        };
        let mut total = Weighted::zero(self.bits());
        for (x, y, w) in [(alpha, beta, gamma), (beta, gamma, alpha), (gamma, alpha, beta)] {
            total.add(&Weighted::term(pm(z, x)? * pm(y, w)?));
        }
        Ok(total)
    }

    /// Difference product `Δ(x) = ∏_{i<j} [x_i − x_j]`.
    pub fn delta_product(&self, x: &[Complex]) -> Result<Complex> {
        let bits = self.bits();
        let mut product = Complex::with_val(bits, 1);
        for (i, xi) in x.iter().enumerate() {
            for xj in &x[i + 1..] {
                product *= self.eval(&Complex::with_val(bits, xi - xj))?;
            }
        }
        Ok(product)
    }
}

/// Reject values whose modulus is below the pole guard.
pub fn guard(value: &Complex) -> Result<()> {
    let m = modulus(value);
    if m < POLE_GUARD {
        return Err(Error::PoleProximity {
            magnitude: m.to_f64(),
        });
    }
    Ok(())
}

/// `|a − b| / max(1, |a|, |b|)`.
pub fn relative_gap(a: &Complex, b: &Complex) -> Float {
    let bits = a.prec().0;
    let diff = modulus(&Complex::with_val(bits, a - b));
    let scale = modulus(a).max(&modulus(b)).max(&Float::with_val(bits, 1));
    diff / scale
}
