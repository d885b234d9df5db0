//! Kernel functions and the identities they satisfy.
//!
//! Additive side (any flavor): the dual Cauchy kernel `Ψ = ∏[x_i − y_k]`
//! intertwining `H_r` with the δ↔κ swapped `D_r`, and the finite duality
//! sums between `m` and `n` variables. Multiplicative side (trigonometric):
//! the Cauchy kernel `Π`, its dual `∏(z_i − w_k)`, and Kajihara's Euler
//! transformation, all compared coefficient by coefficient in an auxiliary
//! variable `u`.

use std::sync::Arc;

use rug::ops::Pow;
use rug::{Complex, Float};

use crate::bracket::BracketFunction;
use crate::diffop::{compositions, ModelParams, MultiIndex};
use crate::error::{Error, Result};
use crate::precision::{modulus, Precision};
use crate::qseries::{
    apply_cal_d, apply_cal_h, check_convergent, finite_qpoch_poly, qbinomial_series, qexp_series, qpoch,
    qpoch_denominator, qpoch_infinite,
};
use crate::residual::{max_float, Weighted};
use crate::ruijsenaars::{build_d, build_h};
use crate::sampling::Sampler;

/// `Ψ(x; y) = ∏_{i,k} [x_i − y_k]`.
pub fn dual_cauchy_psi(x: &[Complex], y: &[Complex], b: &BracketFunction) -> Result<Complex> {
    let bits = b.bits();
    let mut product = Complex::with_val(bits, 1);
    for xi in x {
        for yk in y {
            product *= b.eval(&Complex::with_val(bits, xi - yk))?;
        }
    }
    Ok(product)
}

/// `H_r^x Ψ − (−1)^r D̂_r^y Ψ` with `κ = −nδ/m`, where `D̂` acts in `y` with
/// δ and κ exchanged.
pub fn hd_identity_residual(
    r: usize,
    x: &[Complex],
    y: &[Complex],
    delta: &Complex,
    b: &Arc<BracketFunction>,
) -> Result<Weighted> {
    let (m, n) = (x.len(), y.len());
    if m == 0 || n == 0 {
        return Err(Error::InvalidParameters("both variable sets must be nonempty".into()));
    }
    let bits = b.bits();
    let kappa = Complex::with_val(bits, delta * n as u32) / m as u32;
    let kappa = -kappa;
    let in_x = ModelParams::new(m, delta.clone(), kappa.clone(), b.clone())?;
    let in_y = ModelParams::new(n, kappa, delta.clone(), b.clone())?;

    let lhs = build_h(r, &in_x).apply(|xs| dual_cauchy_psi(xs, y, b), x)?;
    let mut rhs = build_d(r, &in_y).apply(|ys| dual_cauchy_psi(x, ys, b), y)?;
    if r % 2 == 1 {
        rhs.value = -rhs.value;
    }
    let mut out = lhs;
    out.sub(&rhs);
    Ok(out)
}

/// Parameters of the duality transformation between `m` and `n` variables.
#[derive(Debug, Clone)]
pub struct DualityParams {
    pub a: Vec<Complex>,
    pub b: Vec<Complex>,
    pub delta: Complex,
    pub bracket: Arc<BracketFunction>,
}

impl DualityParams {
    /// Rejects parameters violating `a_1 + ⋯ + a_m = b_1 + ⋯ + b_n`.
    pub fn new(a: Vec<Complex>, b: Vec<Complex>, delta: Complex, bracket: Arc<BracketFunction>) -> Result<Self> {
        if a.is_empty() || b.is_empty() {
            return Err(Error::InvalidParameters("both parameter sets must be nonempty".into()));
        }
        let bits = bracket.bits();
        let mut gap = Complex::new(bits);
        let mut size = Float::with_val(bits, 1);
        for v in &a {
            gap += v;
            size += modulus(v);
        }
        for v in &b {
            gap -= v;
            size += modulus(v);
        }
        let allowed = size * bracket.precision().ten_pow_neg(i64::from(bracket.precision().decimal_digits()) - 10);
        if modulus(&gap) > allowed {
            return Err(Error::InvalidParameters(format!(
                "unbalanced parameters: Σa − Σb has modulus {:.3e}",
                modulus(&gap).to_f64()
            )));
        }
        Ok(DualityParams { a, b, delta, bracket })
    }

    /// Random `a`, `b` and δ with the last `b` fixed by balancing.
    pub fn random_balanced(m: usize, n: usize, bracket: Arc<BracketFunction>, sampler: &mut Sampler) -> Result<Self> {
        let a = sampler.points(m);
        let mut b = sampler.points(n.saturating_sub(1));
        let mut last = Complex::new(bracket.bits());
        for v in &a {
            last += v;
        }
        for v in &b {
            last -= v;
        }
        b.push(last);
        let delta = sampler.point();
        Self::new(a, b, delta, bracket)
    }

    pub fn m(&self) -> usize {
        self.a.len()
    }

    pub fn n(&self) -> usize {
        self.b.len()
    }
}

/// `Σ_{|μ|=r} Δ(x+μδ)/Δ(x) ∏_{i,j} [x_i−x_j+a_j]_{μ_i}/[x_i−x_j+δ]_{μ_i} ∏_{i,k} [x_i+y_k−b_k]_{μ_i}/[x_i+y_k]_{μ_i}`.
pub fn duality_side(
    r: usize,
    x: &[Complex],
    y: &[Complex],
    a: &[Complex],
    b: &[Complex],
    delta: &Complex,
    br: &BracketFunction,
) -> Result<Weighted> {
    let bits = br.bits();
    let m = x.len();
    let mut base_delta = Complex::with_val(bits, 1);
    for i in 0..m {
        for j in i + 1..m {
            base_delta *= br.eval_denominator(&Complex::with_val(bits, &x[i] - &x[j]))?;
        }
    }
    let mut sum = Weighted::zero(bits);
    for mu in compositions(m, r as u32) {
        let mut term = br.delta_product(&mu.shift_point(x, delta))? / &base_delta;
        for i in 0..m {
            let k = mu.entries()[i];
            if k == 0 {
                continue;
            }
            for j in 0..m {
                let d = Complex::with_val(bits, &x[i] - &x[j]);
                term *= br.shifted_factorial(&Complex::with_val(bits, &d + &a[j]), k, delta)?;
                term /= br.shifted_factorial_denominator(&Complex::with_val(bits, &d + delta), k, delta)?;
            }
            for (yk, bk) in y.iter().zip(b) {
                let s = Complex::with_val(bits, &x[i] + yk);
                term *= br.shifted_factorial(&Complex::with_val(bits, &s - bk), k, delta)?;
                term /= br.shifted_factorial_denominator(&s, k, delta)?;
            }
        }
        sum.add(&Weighted::term(term));
    }
    Ok(sum)
}

/// Left duality sum in `x` minus the right one in `y`.
pub fn duality_sum_residual(r: usize, x: &[Complex], y: &[Complex], dp: &DualityParams) -> Result<Weighted> {
    if x.len() != dp.m() || y.len() != dp.n() {
        return Err(Error::DimensionMismatch {
            expected: dp.m() + dp.n(),
            found: x.len() + y.len(),
        });
    }
    let mut lhs = duality_side(r, x, y, &dp.a, &dp.b, &dp.delta, &dp.bracket)?;
    let rhs = duality_side(r, y, x, &dp.b, &dp.a, &dp.delta, &dp.bracket)?;
    lhs.sub(&rhs);
    Ok(lhs)
}

/// `Π(z; w) = ∏_{i,k} (t z_i w_k; q)_∞ / (z_i w_k; q)_∞`.
pub fn trig_cauchy_pi(z: &[Complex], w: &[Complex], q: &Complex, t: &Complex, precision: Precision) -> Result<Complex> {
    check_convergent(q)?;
    let bits = precision.bits();
    let mut product = Complex::with_val(bits, 1);
    for zi in z {
        for wk in w {
            let zw = Complex::with_val(bits, zi * wk);
            product *= qpoch_infinite(&Complex::with_val(bits, t * &zw), q, precision)?;
            let den = qpoch_infinite(&zw, q, precision)?;
            crate::bracket::guard(&den)?;
            product /= den;
        }
    }
    Ok(product)
}

/// `∏_{i,k} (z_i − w_k)`.
pub fn trig_dual_psi(z: &[Complex], w: &[Complex]) -> Complex {
    let bits = z.first().or(w.first()).map_or(64, |c| c.prec().0);
    let mut product = Complex::with_val(bits, 1);
    for zi in z {
        for wk in w {
            product *= Complex::with_val(bits, zi - wk);
        }
    }
    product
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TrigKernel {
    /// `𝒟^z(u) Π = (u;t)_{m−n} 𝒟^w(t^{m−n}u) Π`, with `𝒟(u) = Σ_r (−u)^r 𝒟_r`.
    DD,
    /// `ℋ^z(u) Π = (t^{m−n}u;q)_∞/(u;q)_∞ · ℋ^w(t^{m−n}u) Π`, with `ℋ(u) = Σ_l u^l ℋ_l`.
    HH,
    /// `(u;q)_∞ ℋ^z(u) Ψ = (t^m q^n u;q)_∞ 𝒟̂^w(u) Ψ`, where `𝒟̂` swaps q and t.
    HD,
}

impl TrigKernel {
    pub const ALL: [TrigKernel; 3] = [TrigKernel::DD, TrigKernel::HH, TrigKernel::HD];

    pub fn name(self) -> &'static str {
        match self {
            TrigKernel::DD => "DD",
            TrigKernel::HH => "HH",
            TrigKernel::HD => "HD",
        }
    }
}

/// Multiply a scalar series into a tracked series, truncated to `order`.
fn weighted_series_mul(scalars: &[Complex], series: &[Weighted], order: usize, bits: u32) -> Vec<Weighted> {
    let mut out = vec![Weighted::zero(bits); order + 1];
    for (i, c) in scalars.iter().enumerate().take(order + 1) {
        for (j, w) in series.iter().enumerate().take(order + 1 - i) {
            out[i + j].add(&w.scaled(c));
        }
    }
    out
}

/// Largest relative gap between two tracked series, order by order.
fn series_gap(lhs: &[Weighted], rhs: &[Weighted], bits: u32) -> Float {
    let mut worst = Float::new(bits);
    for (l, r) in lhs.iter().zip(rhs) {
        let mut d = l.clone();
        d.sub(r);
        worst = max_float(worst, &d.relative());
    }
    worst
}

/// Maximum relative residual over `u`-orders `0..=order` of a multiplicative
/// kernel identity at the points `z` (m of them) and `w` (n of them).
pub fn trig_kernel_residuals(
    kind: TrigKernel,
    z: &[Complex],
    w: &[Complex],
    q: &Complex,
    t: &Complex,
    order: usize,
    precision: Precision,
) -> Result<Float> {
    check_convergent(q)?;
    let (m, n) = (z.len(), w.len());
    if kind != TrigKernel::HD && m < n {
        return Err(Error::InvalidParameters(format!("{} needs m ≥ n, got m={m}, n={n}", kind.name())));
    }
    let bits = precision.bits();
    let sign = |r: usize, v: Weighted| {
        if r % 2 == 1 {
            Weighted {
                value: -v.value,
                scale: v.scale,
            }
        } else {
            v
        }
    };
    let (lhs, rhs) = match kind {
        TrigKernel::DD => {
            let pi = |zz: &[Complex], ww: &[Complex]| trig_cauchy_pi(zz, ww, q, t, precision);
            let a = Complex::with_val(bits, t.pow((m - n) as u32));
            let mut lhs = Vec::new();
            let mut inner = Vec::new();
            for r in 0..=order {
                lhs.push(sign(r, apply_cal_d(r, z, q, t, &|zs: &[Complex]| pi(zs, w))?));
                let image = apply_cal_d(r, w, q, t, &|ws: &[Complex]| pi(z, ws))?;
                inner.push(sign(r, image).scaled(&Complex::with_val(bits, (&a).pow(r as u32))));
            }
            let prefactor = finite_qpoch_poly(t, m - n);
            (lhs, weighted_series_mul(&prefactor, &inner, order, bits))
        }
        TrigKernel::HH => {
            let pi = |zz: &[Complex], ww: &[Complex]| trig_cauchy_pi(zz, ww, q, t, precision);
            let a = Complex::with_val(bits, t.pow((m - n) as u32));
            let mut lhs = Vec::new();
            let mut inner = Vec::new();
            for l in 0..=order {
                lhs.push(apply_cal_h(l, z, q, t, &|zs: &[Complex]| pi(zs, w))?);
                let image = apply_cal_h(l, w, q, t, &|ws: &[Complex]| pi(z, ws))?;
                inner.push(image.scaled(&Complex::with_val(bits, (&a).pow(l as u32))));
            }
            let prefactor = qbinomial_series(&a, q, order)?;
            (lhs, weighted_series_mul(&prefactor, &inner, order, bits))
        }
        TrigKernel::HD => {
            let mut h_images = Vec::new();
            let mut d_images = Vec::new();
            for l in 0..=order {
                h_images.push(apply_cal_h(l, z, q, t, &|zs: &[Complex]| Ok(trig_dual_psi(zs, w)))?);
                let image = apply_cal_d(l, w, t, q, &|ws: &[Complex]| Ok(trig_dual_psi(z, ws)))?;
                d_images.push(sign(l, image));
            }
            let one = Complex::with_val(bits, 1);
            let tq = Complex::with_val(bits, t.pow(m as u32)) * Complex::with_val(bits, q.pow(n as u32));
            (
                weighted_series_mul(&qexp_series(&one, q, order)?, &h_images, order, bits),
                weighted_series_mul(&qexp_series(&tq, q, order)?, &d_images, order, bits),
            )
        }
    };
    Ok(series_gap(&lhs, &rhs, bits))
}

/// Parameter choices under which Kajihara's transformation reduces to one
/// of the three kernel identities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum KajiharaPreset {
    /// `a_j = b_l = q^{−1}`.
    DD,
    /// `a_j = b_l = t`.
    HH,
    /// `a_j = t`, `b_l = q^{−1}`.
    HD,
}

impl KajiharaPreset {
    pub const ALL: [KajiharaPreset; 3] = [KajiharaPreset::DD, KajiharaPreset::HH, KajiharaPreset::HD];

    pub fn kernel(self) -> TrigKernel {
        match self {
            KajiharaPreset::DD => TrigKernel::DD,
            KajiharaPreset::HH => TrigKernel::HH,
            KajiharaPreset::HD => TrigKernel::HD,
        }
    }

    /// `(a, b)` for `m` and `n` variables.
    pub fn parameters(self, m: usize, n: usize, q: &Complex, t: &Complex) -> (Vec<Complex>, Vec<Complex>) {
        let q_inv = Complex::with_val(q.prec().0, q.recip_ref());
        let (a, b) = match self {
            KajiharaPreset::DD => (&q_inv, &q_inv),
            KajiharaPreset::HH => (t, t),
            KajiharaPreset::HD => (t, &q_inv),
        };
        (vec![a.clone(); m], vec![b.clone(); n])
    }
}

/// One side of Kajihara's transformation as a series in `u`:
/// `(u/α;q)_∞/(u;q)_∞ · Σ_μ (u/α)^{|μ|} C_μ(z; w)`, with `α = ∏ a_j`.
pub fn kajihara_side(
    order: usize,
    z: &[Complex],
    w: &[Complex],
    a: &[Complex],
    b: &[Complex],
    q: &Complex,
) -> Result<Vec<Weighted>> {
    let bits = q.prec().0;
    let m = z.len();
    let mut alpha = Complex::with_val(bits, 1);
    for v in a {
        alpha *= v;
    }
    crate::bracket::guard(&alpha)?;
    let alpha_inv = Complex::with_val(bits, alpha.recip_ref());
    let mut sums = Vec::with_capacity(order + 1);
    let mut weight = Complex::with_val(bits, 1);
    for s in 0..=order {
        let mut sum = Weighted::zero(bits);
        for mu in compositions(m, s as u32) {
            sum.add(&Weighted::term(kajihara_term(&mu, z, w, a, b, q)?));
        }
        sums.push(sum.scaled(&weight));
        weight *= &alpha_inv;
    }
    let prefactor = qbinomial_series(&alpha_inv, q, order)?;
    Ok(weighted_series_mul(&prefactor, &sums, order, bits))
}

fn kajihara_term(
    mu: &MultiIndex,
    z: &[Complex],
    w: &[Complex],
    a: &[Complex],
    b: &[Complex],
    q: &Complex,
) -> Result<Complex> {
    let bits = q.prec().0;
    let m = z.len();
    let shifted = crate::qseries::q_shift(z, mu, q);
    let mut c = Complex::with_val(bits, 1);
    for i in 0..m {
        for j in i + 1..m {
            let d = Complex::with_val(bits, &z[i] - &z[j]);
            crate::bracket::guard(&d)?;
            c *= Complex::with_val(bits, &shifted[i] - &shifted[j]) / d;
        }
    }
    for i in 0..m {
        let k = mu.entries()[i];
        if k == 0 {
            continue;
        }
        for j in 0..m {
            let ratio = Complex::with_val(bits, &z[i] / &z[j]);
            c *= qpoch(&Complex::with_val(bits, &a[j] * &ratio), q, k)?;
            c /= qpoch_denominator(&Complex::with_val(bits, q * &ratio), q, k)?;
        }
        for (wl, bl) in w.iter().zip(b) {
            let zw = Complex::with_val(bits, &z[i] * wl);
            c *= qpoch(&Complex::with_val(bits, &zw / bl), q, k)?;
            c /= qpoch_denominator(&zw, q, k)?;
        }
    }
    Ok(c)
}

/// Largest relative gap between the two sides of Kajihara's transformation
/// over `u`-orders `0..=order`.
pub fn kajihara_residual(
    order: usize,
    z: &[Complex],
    w: &[Complex],
    a: &[Complex],
    b: &[Complex],
    q: &Complex,
) -> Result<Float> {
    check_convergent(q)?;
    if a.len() != z.len() || b.len() != w.len() {
        return Err(Error::DimensionMismatch {
            expected: z.len() + w.len(),
            found: a.len() + b.len(),
        });
    }
    let lhs = kajihara_side(order, z, w, a, b, q)?;
    let rhs = kajihara_side(order, w, z, b, a, q)?;
    Ok(series_gap(&lhs, &rhs, q.prec().0))
}
