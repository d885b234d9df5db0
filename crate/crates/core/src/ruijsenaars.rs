//! The Ruijsenaars operators `D_r`, the family `H_l`, and the identities
//! tying them together.

use std::sync::Arc;

use rug::Complex;

use crate::diffop::{compositions, subsets, DiffOperator, FamilyFn, ModelParams, MultiIndex};
use crate::error::Result;
use crate::residual::Weighted;

/// Brackets of pairwise differences at one point, shared by all terms.
struct PairTable {
    n: usize,
    /// `[x_i − x_j + κ + kδ]` for `0 ≤ k < depth`.
    kappa: Vec<Complex>,
    /// `[x_i − x_j + kδ]` for `−depth ≤ k ≤ depth`.
    shift: Vec<Complex>,
    depth: usize,
}

impl PairTable {
    /// Brackets that can land in a denominator are pole-guarded: the
    /// off-diagonal `[x_i − x_j + kδ]` for `0 ≤ k ≤ depth` and the diagonal
    /// ones for `k ≥ 1`.
    fn new(p: &ModelParams, x: &[Complex], depth: usize) -> Result<Self> {
        let n = p.n;
        let bits = p.bits();
        let b = &p.bracket;
        let mut kappa = Vec::with_capacity(n * n * depth);
        let mut shift = Vec::with_capacity(n * n * (2 * depth + 1));
        for i in 0..n {
            for j in 0..n {
                let d = Complex::with_val(bits, &x[i] - &x[j]);
                for k in 0..depth {
                    let arg = Complex::with_val(bits, &d + &p.kappa) + Complex::with_val(bits, &p.delta * k as u32);
                    kappa.push(b.eval(&arg)?);
                }
                for k in -(depth as i64)..=(depth as i64) {
                    let arg = Complex::with_val(bits, &p.delta * k) + &d;
                    let guarded = if i == j { k >= 1 } else { k >= 0 };
                    shift.push(if guarded { b.eval_denominator(&arg)? } else { b.eval(&arg)? });
                }
            }
        }
        Ok(PairTable {
            n,
            kappa,
            shift,
            depth,
        })
    }

    fn kappa(&self, i: usize, j: usize, k: usize) -> &Complex {
        &self.kappa[(i * self.n + j) * self.depth + k]
    }

    fn shift(&self, i: usize, j: usize, k: i64) -> &Complex {
        let width = 2 * self.depth + 1;
        &self.shift[(i * self.n + j) * width + (k + self.depth as i64) as usize]
    }
}

/// `A_I(x) = ∏_{i∈I, j∉I} [x_i − x_j + κ] / [x_i − x_j]`.
fn d_coefficient_from(table: &PairTable, subset: &MultiIndex, bits: u32) -> Complex {
    let mu = subset.entries();
    let mut num = Complex::with_val(bits, 1);
    let mut den = Complex::with_val(bits, 1);
    for i in 0..table.n {
        if mu[i] == 0 {
            continue;
        }
        for j in (0..table.n).filter(|&j| mu[j] == 0) {
            num *= table.kappa(i, j, 0);
            den *= table.shift(i, j, 0);
        }
    }
    num / den
}

/// `Δ(x+μδ)/Δ(x) · ∏_{i,j} [x_i−x_j+κ]_{μ_i} / [x_i−x_j+δ]_{μ_i}`.
fn h_coefficient_from(table: &PairTable, mu: &MultiIndex, bits: u32) -> Complex {
    let m = mu.entries();
    let mut num = Complex::with_val(bits, 1);
    let mut den = Complex::with_val(bits, 1);
    for i in 0..table.n {
        for j in 0..table.n {
            if i < j {
                num *= table.shift(i, j, i64::from(m[i]) - i64::from(m[j]));
                den *= table.shift(i, j, 0);
            }
            for k in 0..m[i] as usize {
                num *= table.kappa(i, j, k);
                den *= table.shift(i, j, k as i64 + 1);
            }
        }
    }
    num / den
}

/// Ratio `[κ+ε]/[κ]` applied by the perturbation hook, if any.
fn perturbation_factor(p: &ModelParams) -> Result<Option<Complex>> {
    match &p.h_kappa_perturbation {
        None => Ok(None),
        Some(eps) => {
            let shifted = Complex::with_val(p.bits(), &p.kappa + eps);
            Ok(Some(p.bracket.ratio(&shifted, &p.kappa)?))
        }
    }
}

/// Coefficient `A_I(x)` of `T^{ε_I δ}` in `D_r`, for a 0/1 index.
pub fn d_coefficient(subset: &MultiIndex, x: &[Complex], p: &ModelParams) -> Result<Complex> {
    let table = PairTable::new(p, x, 1)?;
    Ok(d_coefficient_from(&table, subset, p.bits()))
}

/// Coefficient `H_μ(x)` of `T^{μδ}` in `H_{|μ|}`.
pub fn h_coefficient(mu: &MultiIndex, x: &[Complex], p: &ModelParams) -> Result<Complex> {
    let table = PairTable::new(p, x, (mu.total() as usize).max(1))?;
    let mut value = h_coefficient_from(&table, mu, p.bits());
    if let (Some(f), true) = (perturbation_factor(p)?, mu.entries()[0] > 0) {
        value *= f;
    }
    Ok(value)
}

/// `D_r`: identity for `r = 0`, zero for `r > n`.
pub fn build_d(r: usize, p: &ModelParams) -> DiffOperator {
    let n = p.n;
    if r == 0 {
        return DiffOperator::identity(n, &p.delta);
    }
    if r > n {
        return DiffOperator::zero(n, &p.delta);
    }
    let indices: Vec<MultiIndex> = subsets(n, r).iter().map(|s| MultiIndex::indicator(n, s)).collect();
    let params = p.clone();
    let idx = indices.clone();
    let eval: FamilyFn = Arc::new(move |x: &[Complex]| {
        let table = PairTable::new(&params, x, 1)?;
        Ok(idx.iter().map(|s| d_coefficient_from(&table, s, params.bits())).collect())
    });
    DiffOperator::from_family(n, &p.delta, indices, eval)
}

/// `H_l`, summed over all `μ ∈ ℕⁿ` with `|μ| = l`.
pub fn build_h(l: usize, p: &ModelParams) -> DiffOperator {
    let n = p.n;
    if l == 0 {
        return DiffOperator::identity(n, &p.delta);
    }
    let indices = compositions(n, l as u32);
    let params = p.clone();
    let idx = indices.clone();
    let eval: FamilyFn = Arc::new(move |x: &[Complex]| {
        let table = PairTable::new(&params, x, l)?;
        let bump = perturbation_factor(&params)?;
        Ok(idx
            .iter()
            .map(|mu| {
                let mut v = h_coefficient_from(&table, mu, params.bits());
                if let (Some(f), true) = (&bump, mu.entries()[0] > 0) {
                    v *= f;
                }
                v
            })
            .collect())
    });
    DiffOperator::from_family(n, &p.delta, indices, eval)
}

/// Which variant of the `H_l` coefficient formula to evaluate term by term.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HForm {
    /// `∏_{i<j}[x_i−x_j+(μ_i−μ_j)δ]/[x_i−x_j] · ∏_{i,j} ∏_{k<μ_i} [x_i−x_j+κ+kδ]/[x_i−x_j+δ+kδ]`.
    TripleProduct,
    /// `Δ(x+μδ)/Δ(x) · ∏_{i,j} [x_j−x_i+κ]_{μ_j}/[x_j−x_i+δ]_{μ_j}`.
    Transposed,
}

/// `H_l` with each coefficient evaluated independently from the chosen
/// formula, without shared tables. Used to cross-check [`build_h`].
pub fn build_h_form(l: usize, p: &ModelParams, form: HForm) -> DiffOperator {
    let n = p.n;
    let terms = compositions(n, l as u32)
        .into_iter()
        .map(|mu| {
            let params = p.clone();
            let m = mu.clone();
            let f: crate::diffop::CoefficientFn = Arc::new(move |x: &[Complex]| match form {
                HForm::TripleProduct => triple_product_coefficient(&m, x, &params),
                HForm::Transposed => transposed_coefficient(&m, x, &params),
            });
            (mu, f)
        })
        .collect();
    DiffOperator::from_terms(n, &p.delta, terms)
}

fn triple_product_coefficient(mu: &MultiIndex, x: &[Complex], p: &ModelParams) -> Result<Complex> {
    let bits = p.bits();
    let b = &p.bracket;
    let m = mu.entries();
    let mut value = Complex::with_val(bits, 1);
    for i in 0..p.n {
        for j in 0..p.n {
            let d = Complex::with_val(bits, &x[i] - &x[j]);
            if i < j {
                let shift = i64::from(m[i]) - i64::from(m[j]);
                let num = Complex::with_val(bits, &p.delta * shift) + &d;
                value *= b.ratio(&num, &d)?;
            }
            for k in 0..m[i] {
                let num = Complex::with_val(bits, &d + &p.kappa) + Complex::with_val(bits, &p.delta * k);
                let den = Complex::with_val(bits, &d + &p.delta) + Complex::with_val(bits, &p.delta * k);
                value *= b.ratio(&num, &den)?;
            }
        }
    }
    Ok(value)
}

fn transposed_coefficient(mu: &MultiIndex, x: &[Complex], p: &ModelParams) -> Result<Complex> {
    let bits = p.bits();
    let b = &p.bracket;
    let shifted = mu.shift_point(x, &p.delta);
    let mut value = b.delta_product(&shifted)?;
    for i in 0..p.n {
        for j in i + 1..p.n {
            value /= b.eval_denominator(&Complex::with_val(bits, &x[i] - &x[j]))?;
        }
    }
    for i in 0..p.n {
        for j in 0..p.n {
            let d = Complex::with_val(bits, &x[j] - &x[i]);
            let k = mu.entries()[j];
            let num = Complex::with_val(bits, &d + &p.kappa);
            let den = Complex::with_val(bits, &d + &p.delta);
            value *= b.shifted_factorial(&num, k, &p.delta)?;
            value /= b.shifted_factorial_denominator(&den, k, &p.delta)?;
        }
    }
    Ok(value)
}

/// `Σ_{r+s=l} (−1)^r [rκ+sδ] D_r H_s`, which must vanish.
pub fn wronski_residual_op(l: usize, p: &ModelParams) -> Result<DiffOperator> {
    let mut coeffs = Vec::new();
    let mut ops = Vec::new();
    for r in 0..=l.min(p.n) {
        let s = l - r;
        let mut c = p.bracket_of(r as i64, s as i64)?;
        if r % 2 == 1 {
            c = -c;
        }
        coeffs.push(c);
        ops.push(build_d(r, p).compose(&build_h(s, p))?);
    }
    DiffOperator::linear(&coeffs, &ops)
}

/// Coefficient of `T^{λδ}` in the Wronski residual, written out directly:
/// `Σ_{I⊆supp λ} (−1)^{|I|} [|I|κ+(|λ|−|I|)δ] A_I(x) H_{λ−ε_I}(x+ε_Iδ)`.
pub fn coefficient_identity_residual(lambda: &MultiIndex, x: &[Complex], p: &ModelParams) -> Result<Weighted> {
    let n = p.n;
    let support = lambda.support();
    let total = i64::from(lambda.total());
    let mut sum = Weighted::zero(p.bits());
    for size in 0..=support.len() {
        for chosen in subsets(support.len(), size) {
            let members: Vec<usize> = chosen.iter().map(|&k| support[k]).collect();
            let eps = MultiIndex::indicator(n, &members);
            let rest = lambda.checked_sub(&eps).expect("subset of the support");
            let mut term = p.bracket_of(size as i64, total - size as i64)?;
            if size % 2 == 1 {
                term = -term;
            }
            term *= d_coefficient(&eps, x, p)?;
            term *= h_coefficient(&rest, &eps.shift_point(x, &p.delta), p)?;
            sum.add(&Weighted::term(term));
        }
    }
    Ok(sum)
}

/// The alternating subset sum
/// `Σ_I (−1)^{|I|} [|w|−|z|+|I|a]/[|w|−|z|] ∏_{i∈I,j∉I} [z_j−z_i+a]/[z_j−z_i] ∏_{i∈I,k} [w_k−z_i]/[w_k−z_i+a]`.
pub fn key_identity_residual(
    z: &[Complex],
    w: &[Complex],
    a: &Complex,
    b: &crate::bracket::BracketFunction,
) -> Result<Weighted> {
    let n = z.len();
    if w.len() != n {
        return Err(crate::error::Error::DimensionMismatch {
            expected: n,
            found: w.len(),
        });
    }
    let bits = b.bits();
    let mut gap = Complex::new(bits);
    for (wi, zi) in w.iter().zip(z) {
        gap += wi;
        gap -= zi;
    }
    let gap_bracket = b.eval_denominator(&gap)?;
    let mut sum = Weighted::zero(bits);
    for size in 0..=n {
        for subset in subsets(n, size) {
            let mut inside = vec![false; n];
            for &i in &subset {
                inside[i] = true;
            }
            let arg = Complex::with_val(bits, a * size as u32) + &gap;
            let mut term = b.eval(&arg)? / &gap_bracket;
            for &i in &subset {
                for j in (0..n).filter(|&j| !inside[j]) {
                    let d = Complex::with_val(bits, &z[j] - &z[i]);
                    term *= b.ratio(&Complex::with_val(bits, &d + a), &d)?;
                }
                for wk in w {
                    let d = Complex::with_val(bits, wk - &z[i]);
                    term *= b.ratio(&d, &Complex::with_val(bits, &d + a))?;
                }
            }
            if size % 2 == 1 {
                term = -term;
            }
            sum.add(&Weighted::term(term));
        }
    }
    Ok(sum)
}

/// Order in which the factors of each Leibniz product are composed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProductOrder {
    /// `a_{1σ(1)} a_{2σ(2)} ⋯ a_{lσ(l)}`.
    Rows,
    /// `a_{σ⁻¹(1)1} a_{σ⁻¹(2)2} ⋯ a_{σ⁻¹(l)l}`.
    Columns,
}

/// Permutations of `0..l` with their signs.
fn permutations(l: usize) -> Vec<(Vec<usize>, bool)> {
    fn rec(prefix: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if prefix.len() == used.len() {
            out.push(prefix.clone());
            return;
        }
        for k in 0..used.len() {
            if !used[k] {
                used[k] = true;
                prefix.push(k);
                rec(prefix, used, out);
                prefix.pop();
                used[k] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), &mut vec![false; l], &mut out);
    out.into_iter()
        .map(|s| {
            let inversions = (0..l).flat_map(|i| (i + 1..l).map(move |j| (i, j))).filter(|&(i, j)| s[i] > s[j]).count();
            (s, inversions % 2 == 1)
        })
        .collect()
}

/// Leibniz expansion of `det(c(i,j) · F_{i−j+1})` with 1-based `i, j`,
/// where `F_0 = 1` and `F_r` for `r < 0` is zero.
fn operator_determinant<S, F>(
    l: usize,
    p: &ModelParams,
    scalar: S,
    family: F,
    order: ProductOrder,
) -> Result<DiffOperator>
where
    S: Fn(i64, i64) -> Result<Complex>,
    F: Fn(usize) -> DiffOperator,
{
    let identity = DiffOperator::identity(p.n, &p.delta);
    if l == 0 {
        return Ok(identity);
    }
    let ops: Vec<DiffOperator> = (0..=l).map(&family).collect();
    let mut coeffs = vec![p.precision_one()];
    let mut terms = vec![DiffOperator::zero(p.n, &p.delta)];
    'perm: for (sigma, odd) in permutations(l) {
        let pairs: Vec<(usize, usize)> = match order {
            ProductOrder::Rows => (0..l).map(|i| (i, sigma[i])).collect(),
            ProductOrder::Columns => {
                let mut inv = vec![0; l];
                for (i, &s) in sigma.iter().enumerate() {
                    inv[s] = i;
                }
                (0..l).map(|j| (inv[j], j)).collect()
            }
        };
        let mut c = p.precision_one();
        let mut product = identity.clone();
        for (i, j) in pairs {
            let (i, j) = (i as i64 + 1, j as i64 + 1);
            let r = i - j + 1;
            if r < 0 {
                continue 'perm;
            }
            c *= scalar(i, j)?;
            if r > 0 {
                let entry = &ops[r as usize];
                if entry.is_structurally_zero() {
                    continue 'perm;
                }
                product = product.compose(entry)?;
            }
        }
        if odd {
            c = -c;
        }
        coeffs.push(c);
        terms.push(product);
    }
    DiffOperator::linear(&coeffs, &terms)
}

impl ModelParams {
    fn precision_one(&self) -> Complex {
        Complex::with_val(self.bits(), 1)
    }
}

/// `H_l = det([(i−j+1)κ+(j−1)δ]/[iδ] · D_{i−j+1})`.
pub fn h_via_determinant(l: usize, p: &ModelParams, order: ProductOrder) -> Result<DiffOperator> {
    let num = |i: i64, j: i64| -> Complex { p.combination(i - j + 1, j - 1) };
    operator_determinant(
        l,
        p,
        |i, j| p.bracket.ratio(&num(i, j), &p.combination(0, i)),
        |r| build_d(r, p),
        order,
    )
}

/// `D_l = det([(i−j+1)δ+(j−1)κ]/[iκ] · H_{i−j+1})`.
pub fn d_via_determinant(l: usize, p: &ModelParams, order: ProductOrder) -> Result<DiffOperator> {
    let num = |i: i64, j: i64| -> Complex { p.combination(j - 1, i - j + 1) };
    operator_determinant(
        l,
        p,
        |i, j| p.bracket.ratio(&num(i, j), &p.combination(i, 0)),
        |r| build_h(r, p),
        order,
    )
}

/// Compositions `(r_1, …, r_d)` of `l` into positive parts.
pub fn integer_compositions(l: usize) -> Vec<Vec<usize>> {
    if l == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for first in 1..=l {
        for mut rest in integer_compositions(l - first) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

/// Scalar weight `∏_i [(r_1+⋯+r_{i−1})δ + r_iκ] / [(r_1+⋯+r_i)δ]` of `D_{r_1}⋯D_{r_d}`.
pub fn composition_weight(parts: &[usize], p: &ModelParams) -> Result<Complex> {
    let mut c = p.precision_one();
    let mut partial = 0i64;
    for &r in parts {
        let r = r as i64;
        c *= p.bracket.ratio(&p.combination(r, partial), &p.combination(0, partial + r))?;
        partial += r;
    }
    Ok(c)
}

/// `H_l = Σ_d (−1)^{l−d} Σ_{r_1+⋯+r_d=l} weight(r) · D_{r_1}⋯D_{r_d}`.
pub fn h_via_compositions(l: usize, p: &ModelParams) -> Result<DiffOperator> {
    if l == 0 {
        return Ok(DiffOperator::identity(p.n, &p.delta));
    }
    let ds: Vec<DiffOperator> = (0..=l).map(|r| build_d(r, p)).collect();
    let mut coeffs = Vec::new();
    let mut ops = Vec::new();
    for parts in integer_compositions(l) {
        let mut c = composition_weight(&parts, p)?;
        if (l - parts.len()) % 2 == 1 {
            c = -c;
        }
        let mut op = DiffOperator::identity(p.n, &p.delta);
        for &r in &parts {
            op = op.compose(&ds[r])?;
        }
        coeffs.push(c);
        ops.push(op);
    }
    DiffOperator::linear(&coeffs, &ops)
}

/// `H_2` written out as `[κ][κ+δ]/([δ][2δ]) D_1² − [2κ]/[2δ] D_2`.
pub fn h2_closed_form(p: &ModelParams) -> Result<DiffOperator> {
    let br = |r: i64, s: i64| p.bracket_of(r, s);
    let d1 = build_d(1, p);
    let c1 = br(1, 0)? * br(1, 1)? / (br(0, 1)? * br(0, 2)?);
    let c2 = -(br(2, 0)? / br(0, 2)?);
    DiffOperator::linear(&[c1, c2], &[d1.compose(&d1)?, build_d(2, p)])
}

/// `H_3` as a four-term combination of `D_1³`, `D_2D_1`, `D_1D_2`, `D_3`.
/// `d2d1_shift` is the δ-multiple `s` in the `[κ + sδ]` factor of the
/// `D_2D_1` coefficient.
pub fn h3_closed_form(p: &ModelParams, d2d1_shift: i64) -> Result<DiffOperator> {
    let br = |r: i64, s: i64| p.bracket_of(r, s);
    let d1 = build_d(1, p);
    let d2 = build_d(2, p);
    let c_111 = br(1, 0)? * br(1, 1)? * br(1, 2)? / (br(0, 1)? * br(0, 2)? * br(0, 3)?);
    let c_21 = -(br(2, 0)? * br(1, d2d1_shift)? / (br(0, 2)? * br(0, 3)?));
    let c_12 = -(br(1, 0)? * br(2, 1)? / (br(0, 1)? * br(0, 3)?));
    let c_3 = br(3, 0)? / br(0, 3)?;
    DiffOperator::linear(
        &[c_111, c_21, c_12, c_3],
        &[
            d1.compose(&d1)?.compose(&d1)?,
            d2.compose(&d1)?,
            d1.compose(&d2)?,
            build_d(3, p),
        ],
    )
}

/// The `[κ+sδ]` shift printed in the published `H_3` formula.
pub const H3_PRINTED_SHIFT: i64 = 1;
/// The shift that the composition expansion actually produces.
pub const H3_EXPANSION_SHIFT: i64 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CommutatorKind {
    DD,
    DH,
    HH,
}

/// `XY − YX` for the selected pair of families.
pub fn commutator_residual(kind: CommutatorKind, r: usize, s: usize, p: &ModelParams) -> Result<DiffOperator> {
    let (a, b) = match kind {
        CommutatorKind::DD => (build_d(r, p), build_d(s, p)),
        CommutatorKind::DH => (build_d(r, p), build_h(s, p)),
        CommutatorKind::HH => (build_h(r, p), build_h(s, p)),
    };
    a.compose(&b)?.sub(&b.compose(&a)?)
}
