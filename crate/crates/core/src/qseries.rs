//! Numeric q-series: q-Pochhammer symbols, truncated power series in an
//! auxiliary variable `u`, and the multiplicative (Macdonald-type) operator
//! coefficients evaluated at complex points.

use rug::ops::Pow;
use rug::Complex;

use crate::diffop::{compositions, subsets, MultiIndex};
use crate::error::{Error, Result};
use crate::precision::{log10_modulus, Precision};

/// Cap on factors in a truncated infinite product.
pub const MAX_PRODUCT_FACTORS: usize = 100_000;

fn guarded(value: Complex) -> Result<Complex> {
    crate::bracket::guard(&value)?;
    Ok(value)
}

/// `(a; q)_k = ∏_{j<k} (1 − a q^j)`.
pub fn qpoch(a: &Complex, q: &Complex, k: u32) -> Result<Complex> {
    let bits = a.prec().0;
    let mut product = Complex::with_val(bits, 1);
    let mut term = a.clone();
    for _ in 0..k {
        product *= Complex::with_val(bits, 1 - &term);
        term *= q;
    }
    Ok(product)
}

/// `(a; q)_k` with every factor pole-guarded, for use in denominators.
pub fn qpoch_denominator(a: &Complex, q: &Complex, k: u32) -> Result<Complex> {
    let bits = a.prec().0;
    let mut product = Complex::with_val(bits, 1);
    let mut term = a.clone();
    for _ in 0..k {
        product *= guarded(Complex::with_val(bits, 1 - &term))?;
        term *= q;
    }
    Ok(product)
}

/// `(a; q)_∞`, truncated once `|a q^j|` drops below `10^{−(digits+10)}`.
pub fn qpoch_infinite(a: &Complex, q: &Complex, precision: Precision) -> Result<Complex> {
    check_convergent(q)?;
    let bits = a.prec().0;
    let cutoff = -f64::from(precision.decimal_digits() + 10);
    let mut product = Complex::with_val(bits, 1);
    let mut term = a.clone();
    for _ in 0..MAX_PRODUCT_FACTORS {
        if term.is_zero() || log10_modulus(&term) < cutoff {
            return Ok(product);
        }
        product *= Complex::with_val(bits, 1 - &term);
        term *= q;
    }
    Err(Error::PrecisionUnreachable {
        terms: MAX_PRODUCT_FACTORS,
    })
}

pub fn check_convergent(q: &Complex) -> Result<()> {
    let m = crate::precision::modulus(q);
    if m >= 1 {
        return Err(Error::Divergence { modulus: m.to_f64() });
    }
    Ok(())
}

/// Truncated power series `Σ_{j≤order} c_j u^j`.
pub type Series = Vec<Complex>;

/// Product of two series, truncated to `order`.
pub fn series_mul(a: &[Complex], b: &[Complex], order: usize) -> Series {
    let bits = a.first().or(b.first()).map_or(64, |c| c.prec().0);
    let mut out = vec![Complex::new(bits); order + 1];
    for (i, ai) in a.iter().enumerate().take(order + 1) {
        for (j, bj) in b.iter().enumerate().take(order + 1 - i) {
            out[i + j] += Complex::with_val(bits, ai * bj);
        }
    }
    out
}

/// Coefficients of `(A u; q)_∞`: `[u^j] = (−A)^j q^{j(j−1)/2} / (q;q)_j`.
pub fn qexp_series(a: &Complex, q: &Complex, order: usize) -> Result<Series> {
    check_convergent(q)?;
    let bits = a.prec().0;
    let mut out = Vec::with_capacity(order + 1);
    let mut c = Complex::with_val(bits, 1);
    out.push(c.clone());
    let mut qj = Complex::with_val(bits, 1);
    for _ in 1..=order {
        // c_j = c_{j−1} · (−A) q^{j−1} / (1 − q^j)
        let prev_q = qj.clone();
        qj *= q;
        c *= Complex::with_val(bits, a * &prev_q);
        c = -c;
        c /= guarded(Complex::with_val(bits, 1 - &qj))?;
        out.push(c.clone());
    }
    Ok(out)
}

/// Coefficients of `(A u; q)_∞ / (u; q)_∞ = Σ_j (A;q)_j/(q;q)_j u^j`.
pub fn qbinomial_series(a: &Complex, q: &Complex, order: usize) -> Result<Series> {
    check_convergent(q)?;
    (0..=order as u32)
        .map(|j| Ok(qpoch(a, q, j)? / qpoch_denominator(q, q, j)?))
        .collect()
}

/// Coefficients of the polynomial `(u; t)_k = ∏_{j<k} (1 − t^j u)`.
pub fn finite_qpoch_poly(t: &Complex, k: usize) -> Series {
    let bits = t.prec().0;
    let mut poly = vec![Complex::with_val(bits, 1)];
    let mut tj = Complex::with_val(bits, 1);
    for _ in 0..k {
        let factor = [Complex::with_val(bits, 1), Complex::with_val(bits, -&tj)];
        poly = series_mul(&poly, &factor, poly.len());
        tj *= t;
    }
    poly
}

/// `z ↦ (q^{μ_1} z_1, …, q^{μ_n} z_n)`.
pub fn q_shift(z: &[Complex], mu: &MultiIndex, q: &Complex) -> Vec<Complex> {
    z.iter()
        .zip(mu.entries())
        .map(|(zi, &m)| {
            let bits = zi.prec().0;
            Complex::with_val(bits, zi * Complex::with_val(bits, q.pow(m)))
        })
        .collect()
}

/// `t^{r(r−1)/2} ∏_{i∈I, j∉I} (t z_i − z_j)/(z_i − z_j)`.
pub fn cal_d_coefficient(subset: &MultiIndex, z: &[Complex], t: &Complex) -> Result<Complex> {
    let bits = t.prec().0;
    let r = subset.total();
    let mut c = Complex::with_val(bits, t.pow(r * r.saturating_sub(1) / 2));
    let inside = subset.entries();
    for i in (0..z.len()).filter(|&i| inside[i] > 0) {
        for j in (0..z.len()).filter(|&j| inside[j] == 0) {
            let num = Complex::with_val(bits, t * &z[i]) - &z[j];
            c *= num / guarded(Complex::with_val(bits, &z[i] - &z[j]))?;
        }
    }
    Ok(c)
}

/// `∏_{i<j} (q^{μ_i}z_i − q^{μ_j}z_j)/(z_i − z_j) · ∏_{i,j} (t z_i/z_j; q)_{μ_i} / (q z_i/z_j; q)_{μ_i}`.
pub fn cal_h_coefficient(mu: &MultiIndex, z: &[Complex], q: &Complex, t: &Complex) -> Result<Complex> {
    let bits = t.prec().0;
    let n = z.len();
    let shifted = q_shift(z, mu, q);
    let mut c = Complex::with_val(bits, 1);
    for i in 0..n {
        for j in i + 1..n {
            let num = Complex::with_val(bits, &shifted[i] - &shifted[j]);
            c *= num / guarded(Complex::with_val(bits, &z[i] - &z[j]))?;
        }
    }
    for i in 0..n {
        let k = mu.entries()[i];
        if k == 0 {
            continue;
        }
        for j in 0..n {
            let ratio = Complex::with_val(bits, &z[i] / &z[j]);
            c *= qpoch(&Complex::with_val(bits, t * &ratio), q, k)?;
            c /= qpoch_denominator(&Complex::with_val(bits, q * &ratio), q, k)?;
        }
    }
    Ok(c)
}

/// `(𝒟_r f)(z) = Σ_{|I|=r} coefficient · f(q^{ε_I} z)`, as (value, largest term).
pub fn apply_cal_d<F>(r: usize, z: &[Complex], q: &Complex, t: &Complex, f: &F) -> Result<crate::residual::Weighted>
where
    F: Fn(&[Complex]) -> Result<Complex>,
{
    let n = z.len();
    let mut total = crate::residual::Weighted::zero(t.prec().0);
    for s in subsets(n, r) {
        let eps = MultiIndex::indicator(n, &s);
        let c = cal_d_coefficient(&eps, z, t)?;
        total.add(&crate::residual::Weighted::term(c * f(&q_shift(z, &eps, q))?));
    }
    Ok(total)
}

/// `(ℋ_l f)(z) = Σ_{|μ|=l} coefficient · f(q^μ z)`.
pub fn apply_cal_h<F>(l: usize, z: &[Complex], q: &Complex, t: &Complex, f: &F) -> Result<crate::residual::Weighted>
where
    F: Fn(&[Complex]) -> Result<Complex>,
{
    let mut total = crate::residual::Weighted::zero(t.prec().0);
    for mu in compositions(z.len(), l as u32) {
        let c = cal_h_coefficient(&mu, z, q, t)?;
        total.add(&crate::residual::Weighted::term(c * f(&q_shift(z, &mu, q))?));
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bracket::relative_gap;
    use crate::sampling::Sampler;

    fn p() -> Precision {
        Precision::default()
    }

    #[test]
    fn finite_pochhammer_by_hand() {
        let a = p().complex(0.5, 0.0);
        let q = p().complex(0.5, 0.0);
        // (1 − 1/2)(1 − 1/4)(1 − 1/8)
        let want = p().complex(0.5 * 0.75 * 0.875, 0.0);
        assert!(relative_gap(&qpoch(&a, &q, 3).unwrap(), &want) < 1e-60);
        assert_eq!(qpoch(&a, &q, 0).unwrap(), p().one());
    }

    #[test]
    fn infinite_product_rejects_large_q() {
        let r = qpoch_infinite(&p().one(), &p().complex(1.0, 0.0), p());
        assert!(matches!(r, Err(Error::Divergence { .. })));
    }

    #[test]
    fn euler_expansion_matches_product() {
        let mut s = Sampler::new(1, p());
        let q = s.annulus(0.2, 0.6);
        let a = s.point();
        let u = s.annulus(0.0, 0.3);
        let coeffs = qexp_series(&a, &q, 120).unwrap();
        let mut sum = p().zero();
        let mut power = p().one();
        for c in &coeffs {
            sum += Complex::with_val(p().bits(), c * &power);
            power *= &u;
        }
        let direct = qpoch_infinite(&Complex::with_val(p().bits(), &a * &u), &q, p()).unwrap();
        assert!(relative_gap(&sum, &direct) < 1e-50);
    }

    #[test]
    fn qbinomial_matches_product_ratio() {
        let mut s = Sampler::new(2, p());
        let q = s.annulus(0.2, 0.5);
        let a = s.point();
        let u = s.annulus(0.0, 0.2);
        let coeffs = qbinomial_series(&a, &q, 150).unwrap();
        let mut sum = p().zero();
        let mut power = p().one();
        for c in &coeffs {
            sum += Complex::with_val(p().bits(), c * &power);
            power *= &u;
        }
        let bits = p().bits();
        let direct = qpoch_infinite(&Complex::with_val(bits, &a * &u), &q, p()).unwrap()
            / qpoch_infinite(&u, &q, p()).unwrap();
        assert!(relative_gap(&sum, &direct) < 1e-50);
    }

    #[test]
    fn finite_poly_expands_product() {
        let t = p().complex(0.3, 0.1);
        let poly = finite_qpoch_poly(&t, 2);
        // (1 − u)(1 − t u) = 1 − (1 + t) u + t u²
        assert_eq!(poly.len(), 3);
        assert!(relative_gap(&poly[1], &(-(p().one() + &t))) < 1e-60);
        assert!(relative_gap(&poly[2], &t) < 1e-60);
    }

    #[test]
    fn single_variable_h_coefficient() {
        let mut s = Sampler::new(3, p());
        let (q, t) = (s.annulus(0.2, 0.6), s.point());
        let z = s.points(1);
        for l in 0..4u32 {
            let got = cal_h_coefficient(&MultiIndex::new(vec![l]), &z, &q, &t).unwrap();
            let want = qpoch(&t, &q, l).unwrap() / qpoch(&q, &q, l).unwrap();
            assert!(relative_gap(&got, &want) < 1e-55);
        }
    }
}
