//! Exact trigonometric specialization: symmetric polynomials over ℚ, the
//! multiplicative operators `𝒟_r` and `ℋ_l`, Macdonald polynomials, and the
//! eigenvalue and recurrence identities they satisfy.
//!
//! Operators are applied exactly. Each term of `𝒟_r f` or `ℋ_l f` is a
//! rational function whose denominator is a product of binary linear forms
//! `z_a − c z_b`; the terms are brought to a common denominator, their
//! numerators summed, and the sum divided by every form with a remainder
//! check. A nonzero remainder or a non-symmetric quotient is reported as
//! [`Error::ExactnessViolation`].

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rug::{Complex, Float, Rational};

use crate::bracket::BracketFunction;
use crate::diffop::{compositions, subsets, ModelParams, MultiIndex};
use crate::error::{Error, Result};
use crate::precision::{modulus, Precision};
use crate::qseries::{cal_d_coefficient, cal_h_coefficient};
use crate::residual::max_float;
use crate::ruijsenaars::{build_d, build_h};

/// A partition `λ_1 ≥ λ_2 ≥ ⋯ > 0` (trailing zeros are dropped).
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Partition(Vec<u32>);

impl Partition {
    pub fn new(mut parts: Vec<u32>) -> Result<Self> {
        while parts.last() == Some(&0) {
            parts.pop();
        }
        if parts.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::InvalidParameters(format!("{parts:?} is not weakly decreasing")));
        }
        Ok(Partition(parts))
    }

    /// The partition obtained by sorting arbitrary nonnegative entries.
    pub fn sorted(mut entries: Vec<u32>) -> Self {
        entries.sort_unstable_by(|a, b| b.cmp(a));
        while entries.last() == Some(&0) {
            entries.pop();
        }
        Partition(entries)
    }

    pub fn empty() -> Self {
        Partition(Vec::new())
    }

    pub fn row(l: u32) -> Self {
        Partition::sorted(vec![l])
    }

    pub fn parts(&self) -> &[u32] {
        &self.0
    }

    pub fn size(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn length(&self) -> usize {
        self.0.len()
    }

    /// Parts padded with zeros to length `n`.
    pub fn padded(&self, n: usize) -> Vec<u32> {
        let mut v = self.0.clone();
        v.resize(n.max(v.len()), 0);
        v
    }

    /// `self ≥ other` in dominance order (sizes must agree).
    pub fn dominates(&self, other: &Partition) -> bool {
        if self.size() != other.size() {
            return false;
        }
        let len = self.length().max(other.length());
        let (a, b) = (self.padded(len), other.padded(len));
        let (mut sa, mut sb) = (0, 0);
        for i in 0..len {
            sa += a[i];
            sb += b[i];
            if sa < sb {
                return false;
            }
        }
        true
    }

    /// Partitions of `size` with at most `max_len` parts, in decreasing
    /// lexicographic order (a linear extension of reverse dominance).
    pub fn all(size: u32, max_len: usize) -> Vec<Partition> {
        fn rec(left: u32, cap: u32, slots: usize, cur: &mut Vec<u32>, out: &mut Vec<Partition>) {
            if left == 0 {
                out.push(Partition(cur.clone()));
                return;
            }
            if slots == 0 {
                return;
            }
            for part in (1..=cap.min(left)).rev() {
                cur.push(part);
                rec(left - part, part, slots - 1, cur, out);
                cur.pop();
            }
        }
        let mut out = Vec::new();
        rec(size, size, max_len, &mut Vec::new(), &mut out);
        out
    }

    /// All partitions of size at most `max_size` with at most `max_len` parts.
    pub fn up_to(max_size: u32, max_len: usize) -> Vec<Partition> {
        (0..=max_size).flat_map(|d| Partition::all(d, max_len)).collect()
    }

    /// Multiplicities `m_k` of each part size `k`.
    fn multiplicities(&self) -> BTreeMap<u32, u32> {
        let mut m = BTreeMap::new();
        for &p in &self.0 {
            *m.entry(p).or_insert(0) += 1;
        }
        m
    }
}

impl fmt::Debug for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(u32::to_string).collect();
        write!(f, "({})", parts.join(","))
    }
}

impl FromStr for Partition {
    type Err = Error;

    /// Accepts `2,1`, `(2,1)` or `2 1`.
    fn from_str(s: &str) -> Result<Self> {
        let body = s.trim().trim_start_matches('(').trim_end_matches(')');
        let parts = body
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|p| !p.is_empty())
            .map(|p| p.parse::<u32>().map_err(|e| Error::InvalidParameters(format!("bad part {p:?}: {e}"))))
            .collect::<Result<Vec<_>>>()?;
        Partition::new(parts)
    }
}

fn rat(v: i64) -> Rational {
    Rational::from(v)
}

fn rpow(x: &Rational, k: u32) -> Rational {
    let mut r = rat(1);
    for _ in 0..k {
        r *= x;
    }
    r
}

/// `(a; q)_k` over ℚ.
pub fn qpoch_exact(a: &Rational, q: &Rational, k: u32) -> Rational {
    let mut r = rat(1);
    let mut term = a.clone();
    for _ in 0..k {
        r *= rat(1) - &term;
        term *= q;
    }
    r
}

/// The exact parameters `q, t`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QTField {
    pub q: Rational,
    pub t: Rational,
}

impl QTField {
    /// Rejects `q` or `t` in `{0, 1, −1}`, where the operators or the
    /// spectrum degenerate outright.
    pub fn new(q: Rational, t: Rational) -> Result<Self> {
        for (name, v) in [("q", &q), ("t", &t)] {
            if *v == 0 || *v == 1 || *v == -1 {
                return Err(Error::InvalidParameters(format!("{name} = {v} is not admissible")));
            }
        }
        Ok(QTField { q, t })
    }

    /// Parse two rationals written as `p/q` (or integers).
    pub fn parse(q: &str, t: &str) -> Result<Self> {
        let parse = |s: &str| {
            Rational::from_str(s.trim()).map_err(|e| Error::InvalidParameters(format!("bad rational {s:?}: {e}")))
        };
        QTField::new(parse(q)?, parse(t)?)
    }

    /// `ξ = t^δ q^λ = (t^{n−1} q^{λ_1}, …, t^0 q^{λ_n})`.
    pub fn spectral_point(&self, lambda: &Partition, n: usize) -> Vec<Rational> {
        lambda
            .padded(n)
            .iter()
            .enumerate()
            .map(|(i, &l)| rpow(&self.t, (n - 1 - i) as u32) * rpow(&self.q, l))
            .collect()
    }
}

impl Default for QTField {
    fn default() -> Self {
        QTField {
            q: Rational::from((3, 5)),
            t: Rational::from((2, 7)),
        }
    }
}

/// Elementary symmetric polynomial `e_r` at a rational point.
pub fn elementary(r: usize, xi: &[Rational]) -> Rational {
    let mut e = vec![rat(0); r + 1];
    e[0] = rat(1);
    for x in xi {
        for k in (1..=r).rev() {
            let add = Rational::from(&e[k - 1] * x);
            e[k] += add;
        }
    }
    e[r].clone()
}

/// A polynomial in `n` variables with rational coefficients.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Poly {
    n: usize,
    terms: BTreeMap<Vec<u32>, Rational>,
}

impl Poly {
    pub fn zero(n: usize) -> Self {
        Poly {
            n,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(n: usize, c: Rational) -> Self {
        let mut p = Poly::zero(n);
        p.add_term(vec![0; n], c);
        p
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn terms(&self) -> &BTreeMap<Vec<u32>, Rational> {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add_term(&mut self, exponent: Vec<u32>, c: Rational) {
        if c == 0 {
            return;
        }
        match self.terms.entry(exponent) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if *o.get() == 0 {
                    o.remove();
                }
            }
        }
    }

    pub fn add(&mut self, other: &Poly) {
        for (e, c) in &other.terms {
            self.add_term(e.clone(), c.clone());
        }
    }

    pub fn scale(&self, c: &Rational) -> Poly {
        if *c == 0 {
            return Poly::zero(self.n);
        }
        Poly {
            n: self.n,
            terms: self.terms.iter().map(|(e, v)| (e.clone(), Rational::from(v * c))).collect(),
        }
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        let mut out = Poly::zero(self.n);
        for (ea, ca) in &self.terms {
            for (eb, cb) in &other.terms {
                let e = ea.iter().zip(eb).map(|(a, b)| a + b).collect();
                out.add_term(e, Rational::from(ca * cb));
            }
        }
        out
    }

    /// `f(q^{μ_1} z_1, …, q^{μ_n} z_n)`.
    pub fn q_shift(&self, mu: &[u32], q: &Rational) -> Poly {
        let mut out = Poly::zero(self.n);
        for (e, c) in &self.terms {
            let power: u32 = e.iter().zip(mu).map(|(a, b)| a * b).sum();
            out.add_term(e.clone(), c * rpow(q, power));
        }
        out
    }

    pub fn eval(&self, z: &[Rational]) -> Rational {
        let mut total = rat(0);
        for (e, c) in &self.terms {
            let mut term = c.clone();
            for (zi, &k) in z.iter().zip(e) {
                term *= rpow(zi, k);
            }
            total += term;
        }
        total
    }

    /// Multiply by `z_a − c z_b`.
    fn mul_form(&self, form: &LinearForm) -> Poly {
        let mut out = Poly::zero(self.n);
        for (e, v) in &self.terms {
            let mut ea = e.clone();
            ea[form.a] += 1;
            out.add_term(ea, v.clone());
            let mut eb = e.clone();
            eb[form.b] += 1;
            out.add_term(eb, -Rational::from(v * &form.c));
        }
        out
    }

    /// Exact quotient by `z_a − c z_b`.
    ///
    /// The form only mixes the exponents of `z_a` and `z_b` and lowers their
    /// sum by one, so monomials are grouped by the remaining exponents and by
    /// `e_a + e_b`, and each group is a synthetic division by `x − c`.
    fn div_form(&self, form: &LinearForm) -> Result<Poly> {
        let (a, b) = (form.a, form.b);
        let mut groups: BTreeMap<(Vec<u32>, u32), BTreeMap<u32, Rational>> = BTreeMap::new();
        for (e, v) in &self.terms {
            let mut rest = e.clone();
            rest[a] = 0;
            rest[b] = 0;
            groups
                .entry((rest, e[a] + e[b]))
                .or_default()
                .insert(e[a], v.clone());
        }
        let mut out = Poly::zero(self.n);
        for ((rest, s), coeffs) in groups {
            // Σ_k p_k x^k with x = z_a / z_b, divided by (x − c).
            let top = *coeffs.keys().next_back().expect("nonempty group");
            let mut carry = rat(0);
            for k in (1..=top).rev() {
                let p = coeffs.get(&k).cloned().unwrap_or_else(|| rat(0));
                carry = p + Rational::from(&carry * &form.c);
                if carry != 0 {
                    let mut e = rest.clone();
                    e[a] = k - 1;
                    e[b] = s - 1 - (k - 1);
                    out.add_term(e, carry.clone());
                }
            }
            let remainder = coeffs.get(&0).cloned().unwrap_or_else(|| rat(0)) + Rational::from(&carry * &form.c);
            if remainder != 0 {
                return Err(Error::ExactnessViolation(format!(
                    "nonzero remainder dividing by z{} − ({})·z{}",
                    a + 1,
                    form.c,
                    b + 1
                )));
            }
        }
        Ok(out)
    }
}

/// `z_a − c·z_b` with `a < b`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
struct LinearForm {
    a: usize,
    b: usize,
    c: Rational,
}

impl LinearForm {
    /// Write `α z_i + β z_j` as `scalar · (z_a − c z_b)`.
    fn normalize(i: usize, alpha: Rational, j: usize, beta: Rational) -> (Rational, LinearForm) {
        let (a, b, ca, cb) = if i < j { (i, j, alpha, beta) } else { (j, i, beta, alpha) };
        let c = -(cb / &ca);
        (ca, LinearForm { a, b, c })
    }
}

/// `scalar · ∏ num / ∏ den · poly`.
struct RationalTerm {
    scalar: Rational,
    num: Vec<LinearForm>,
    den: Vec<LinearForm>,
    poly: Poly,
}

impl RationalTerm {
    fn new(poly: Poly) -> Self {
        RationalTerm {
            scalar: rat(1),
            num: Vec::new(),
            den: Vec::new(),
            poly,
        }
    }

    fn numerator(&mut self, i: usize, alpha: Rational, j: usize, beta: Rational) {
        let (s, f) = LinearForm::normalize(i, alpha, j, beta);
        self.scalar *= s;
        self.num.push(f);
    }

    fn denominator(&mut self, i: usize, alpha: Rational, j: usize, beta: Rational) -> Result<()> {
        let (s, f) = LinearForm::normalize(i, alpha, j, beta);
        if s == 0 {
            return Err(Error::DivisionByZero);
        }
        self.scalar /= s;
        self.den.push(f);
        Ok(())
    }

    /// Drop forms appearing in both numerator and denominator.
    fn cancel(&mut self) {
        let mut kept = Vec::new();
        for f in self.num.drain(..) {
            if let Some(pos) = self.den.iter().position(|d| *d == f) {
                self.den.swap_remove(pos);
            } else {
                kept.push(f);
            }
        }
        self.num = kept;
    }
}

fn multiset(forms: &[LinearForm]) -> BTreeMap<LinearForm, u32> {
    let mut m = BTreeMap::new();
    for f in forms {
        *m.entry(f.clone()).or_insert(0) += 1;
    }
    m
}

/// Sum rational terms over their least common denominator and divide it out.
fn combine(n: usize, mut terms: Vec<RationalTerm>) -> Result<Poly> {
    let mut lcd: BTreeMap<LinearForm, u32> = BTreeMap::new();
    for t in &mut terms {
        t.cancel();
        for (f, k) in multiset(&t.den) {
            let e = lcd.entry(f).or_insert(0);
            *e = (*e).max(k);
        }
    }
    let mut numerator = Poly::zero(n);
    for t in &terms {
        if t.scalar == 0 || t.poly.is_zero() {
            continue;
        }
        let own = multiset(&t.den);
        let mut p = t.poly.scale(&t.scalar);
        for f in &t.num {
            p = p.mul_form(f);
        }
        for (f, k) in &lcd {
            for _ in own.get(f).copied().unwrap_or(0)..*k {
                p = p.mul_form(f);
            }
        }
        numerator.add(&p);
    }
    for (f, k) in &lcd {
        for _ in 0..*k {
            numerator = numerator.div_form(f)?;
        }
    }
    Ok(numerator)
}

/// `𝒟_r f` for an arbitrary polynomial `f`; the result is exact.
pub fn apply_cal_d_poly(r: usize, f: &Poly, qt: &QTField) -> Result<Poly> {
    let n = f.n();
    if r == 0 {
        return Ok(f.clone());
    }
    if r > n {
        return Ok(Poly::zero(n));
    }
    let tr = rpow(&qt.t, (r * (r - 1) / 2) as u32);
    let mut terms = Vec::new();
    for subset in subsets(n, r) {
        let eps = MultiIndex::indicator(n, &subset);
        let mut term = RationalTerm::new(f.q_shift(eps.entries(), &qt.q));
        term.scalar = tr.clone();
        for &i in &subset {
            for j in (0..n).filter(|j| !subset.contains(j)) {
                term.numerator(i, qt.t.clone(), j, rat(-1));
                term.denominator(i, rat(1), j, rat(-1))?;
            }
        }
        terms.push(term);
    }
    combine(n, terms)
}

/// `ℋ_l f` for an arbitrary polynomial `f`; the result is exact.
pub fn apply_cal_h_poly(l: usize, f: &Poly, qt: &QTField) -> Result<Poly> {
    let n = f.n();
    if l == 0 {
        return Ok(f.clone());
    }
    let (q, t) = (&qt.q, &qt.t);
    let mut terms = Vec::new();
    for mu in compositions(n, l as u32) {
        let m = mu.entries();
        let mut term = RationalTerm::new(f.q_shift(m, q));
        for i in 0..n {
            // Diagonal factors (t;q)_{μ_i} / (q;q)_{μ_i}.
            let den = qpoch_exact(q, q, m[i]);
            if den == 0 {
                return Err(Error::DivisionByZero);
            }
            term.scalar *= qpoch_exact(t, q, m[i]) / den;
            for j in i + 1..n {
                term.numerator(i, rpow(q, m[i]), j, -rpow(q, m[j]));
                term.denominator(i, rat(1), j, rat(-1))?;
            }
            for j in (0..n).filter(|&j| j != i) {
                // (t z_i/z_j; q)_k / (q z_i/z_j; q)_k = ∏_s (z_j − t q^s z_i)/(z_j − q^{s+1} z_i).
                for s in 0..m[i] {
                    term.numerator(j, rat(1), i, -(t * rpow(q, s)));
                    term.denominator(j, rat(1), i, -rpow(q, s + 1))?;
                }
            }
        }
        terms.push(term);
    }
    combine(n, terms)
}

/// A symmetric polynomial stored in the monomial symmetric basis `m_λ`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SymPoly {
    n: usize,
    coeffs: BTreeMap<Partition, Rational>,
}

impl SymPoly {
    pub fn zero(n: usize) -> Self {
        SymPoly {
            n,
            coeffs: BTreeMap::new(),
        }
    }

    pub fn one(n: usize) -> Self {
        SymPoly::monomial(&Partition::empty(), n).expect("empty partition fits")
    }

    /// `m_λ` in `n` variables.
    pub fn monomial(lambda: &Partition, n: usize) -> Result<Self> {
        if lambda.length() > n {
            return Err(Error::InvalidParameters(format!("{lambda} has more than {n} parts")));
        }
        let mut s = SymPoly::zero(n);
        s.coeffs.insert(lambda.clone(), rat(1));
        Ok(s)
    }

    /// `e_r = m_{(1^r)}`.
    pub fn elementary(r: usize, n: usize) -> Result<Self> {
        SymPoly::monomial(&Partition::sorted(vec![1; r]), n)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn coeffs(&self) -> &BTreeMap<Partition, Rational> {
        &self.coeffs
    }

    pub fn coefficient(&self, lambda: &Partition) -> Rational {
        self.coeffs.get(lambda).cloned().unwrap_or_else(|| rat(0))
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn add_scaled(&mut self, other: &SymPoly, c: &Rational) {
        for (lambda, v) in &other.coeffs {
            let add = Rational::from(v * c);
            let e = self.coeffs.entry(lambda.clone()).or_insert_with(|| rat(0));
            *e += add;
            if *e == 0 {
                self.coeffs.remove(lambda);
            }
        }
    }

    pub fn scale(&self, c: &Rational) -> SymPoly {
        let mut out = SymPoly::zero(self.n);
        out.add_scaled(self, c);
        out
    }

    pub fn sub(&self, other: &SymPoly) -> SymPoly {
        let mut out = self.clone();
        out.add_scaled(other, &rat(-1));
        out
    }

    pub fn mul(&self, other: &SymPoly) -> Result<SymPoly> {
        SymPoly::from_poly(&self.to_poly().mul(&other.to_poly()))
    }

    /// Expand into monomials.
    pub fn to_poly(&self) -> Poly {
        let mut p = Poly::zero(self.n);
        for (lambda, c) in &self.coeffs {
            for e in distinct_permutations(&lambda.padded(self.n)) {
                p.add_term(e, c.clone());
            }
        }
        p
    }

    /// Collect a polynomial into the `m_λ` basis, failing if it is not symmetric.
    pub fn from_poly(p: &Poly) -> Result<SymPoly> {
        let mut s = SymPoly::zero(p.n());
        for (e, c) in p.terms() {
            if e.windows(2).all(|w| w[0] >= w[1]) {
                s.coeffs.insert(Partition::sorted(e.clone()), c.clone());
            }
        }
        if s.to_poly() != *p {
            return Err(Error::ExactnessViolation("operator image is not symmetric".into()));
        }
        Ok(s)
    }

    pub fn eval(&self, z: &[Rational]) -> Rational {
        self.to_poly().eval(z)
    }
}

impl fmt::Display for SymPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.coeffs.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self.coeffs.iter().rev().map(|(l, c)| format!("({c})·m{l}")).collect();
        write!(f, "{}", parts.join(" + "))
    }
}

/// All distinct rearrangements of a multiset of exponents.
fn distinct_permutations(v: &[u32]) -> Vec<Vec<u32>> {
    fn rec(counts: &mut BTreeMap<u32, usize>, len: usize, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if cur.len() == len {
            out.push(cur.clone());
            return;
        }
        let keys: Vec<u32> = counts.iter().filter(|(_, &c)| c > 0).map(|(&k, _)| k).collect();
        for k in keys {
            *counts.get_mut(&k).unwrap() -= 1;
            cur.push(k);
            rec(counts, len, cur, out);
            cur.pop();
            *counts.get_mut(&k).unwrap() += 1;
        }
    }
    let mut counts = BTreeMap::new();
    for &x in v {
        *counts.entry(x).or_insert(0usize) += 1;
    }
    let mut out = Vec::new();
    rec(&mut counts, v.len(), &mut Vec::new(), &mut out);
    out
}

/// `𝒟_r f`, asserting the image is a symmetric polynomial.
pub fn apply_cal_d(r: usize, f: &SymPoly, qt: &QTField) -> Result<SymPoly> {
    SymPoly::from_poly(&apply_cal_d_poly(r, &f.to_poly(), qt)?)
}

/// `ℋ_l f`, asserting the image is a symmetric polynomial.
pub fn apply_cal_h(l: usize, f: &SymPoly, qt: &QTField) -> Result<SymPoly> {
    SymPoly::from_poly(&apply_cal_h_poly(l, &f.to_poly(), qt)?)
}

/// Monic `P_λ` in `n` variables, from the triangular eigenvector equations
/// of `𝒟_1` (falling back to `𝒟_2, …, 𝒟_n` where `𝒟_1` is degenerate).
pub fn macdonald_poly(lambda: &Partition, n: usize, qt: &QTField) -> Result<SymPoly> {
    if lambda.length() > n {
        return Err(Error::InvalidParameters(format!("{lambda} has more than {n} parts")));
    }
    let basis: Vec<Partition> = Partition::all(lambda.size(), n)
        .into_iter()
        .filter(|mu| lambda.dominates(mu))
        .collect();
    let xi = qt.spectral_point(lambda, n);
    let mut images: BTreeMap<(usize, Partition), SymPoly> = BTreeMap::new();
    let mut image = |r: usize, mu: &Partition| -> Result<SymPoly> {
        if let Some(img) = images.get(&(r, mu.clone())) {
            return Ok(img.clone());
        }
        let img = apply_cal_d(r, &SymPoly::monomial(mu, n)?, qt)?;
        if img.coeffs().keys().any(|nu| !mu.dominates(nu)) {
            return Err(Error::ExactnessViolation(format!("𝒟_{r} m{mu} is not dominance-triangular")));
        }
        images.insert((r, mu.clone()), img.clone());
        Ok(img)
    };

    let mut coeffs: Vec<(Partition, Rational)> = vec![(lambda.clone(), rat(1))];
    for nu in basis.iter().skip(1) {
        let mut solved = None;
        for r in 1..=n {
            let eigenvalue = elementary(r, &xi);
            let diagonal = image(r, nu)?.coefficient(nu) - &eigenvalue;
            if diagonal == 0 {
                continue;
            }
            let mut rhs = rat(0);
            for (mu, a) in &coeffs {
                rhs += image(r, mu)?.coefficient(nu) * a;
            }
            solved = Some(-rhs / diagonal);
            break;
        }
        match solved {
            Some(a) => coeffs.push((nu.clone(), a)),
            None => {
                return Err(Error::DegenerateSpectrum {
                    partition: lambda.parts().to_vec(),
                })
            }
        }
    }
    let mut p = SymPoly::zero(n);
    for (mu, a) in coeffs {
        p.add_scaled(&SymPoly::monomial(&mu, n)?, &a);
    }
    Ok(p)
}

/// Coefficient of `z^μ` in the power sum product `p_ρ`.
fn power_sum_monomial_coefficient(rho: &[u32], mu: &[u32]) -> u64 {
    fn rec(rho: &[u32], rest: &mut Vec<u32>) -> u64 {
        match rho.split_first() {
            None => u64::from(rest.iter().all(|&x| x == 0)),
            Some((&part, tail)) => {
                let mut count = 0;
                for i in 0..rest.len() {
                    if rest[i] >= part {
                        rest[i] -= part;
                        count += rec(tail, rest);
                        rest[i] += part;
                    }
                }
                count
            }
        }
    }
    rec(rho, &mut mu.to_vec())
}

/// `z_ρ ∏_i (1 − q^{ρ_i}) / (1 − t^{ρ_i})`.
fn qt_norm(rho: &Partition, qt: &QTField) -> Result<Rational> {
    let mut z = rat(1);
    for (&k, &m) in &rho.multiplicities() {
        for j in 1..=m {
            z *= rat(i64::from(k)) * rat(i64::from(j));
        }
    }
    for &p in rho.parts() {
        let den = rat(1) - rpow(&qt.t, p);
        if den == 0 {
            return Err(Error::DivisionByZero);
        }
        z *= (rat(1) - rpow(&qt.q, p)) / den;
    }
    Ok(z)
}

/// Inverse of a square rational matrix by Gauss–Jordan elimination.
fn invert(mut m: Vec<Vec<Rational>>) -> Result<Vec<Vec<Rational>>> {
    let k = m.len();
    let mut inv: Vec<Vec<Rational>> = (0..k)
        .map(|i| (0..k).map(|j| rat(i64::from(i == j))).collect())
        .collect();
    for col in 0..k {
        let pivot = (col..k).find(|&r| m[r][col] != 0).ok_or(Error::DivisionByZero)?;
        m.swap(col, pivot);
        inv.swap(col, pivot);
        let p = m[col][col].clone();
        for j in 0..k {
            m[col][j] /= &p;
            inv[col][j] /= &p;
        }
        for r in 0..k {
            if r != col && m[r][col] != 0 {
                let f = m[r][col].clone();
                for j in 0..k {
                    let a = Rational::from(&f * &m[col][j]);
                    m[r][j] -= a;
                    let b = Rational::from(&f * &inv[col][j]);
                    inv[r][j] -= b;
                }
            }
        }
    }
    Ok(inv)
}

/// Monic `P_λ` by Gram–Schmidt orthogonalization of the monomial basis with
/// respect to the `(q,t)` power-sum scalar product, then restricted to `n`
/// variables. Independent of the operators; used as a cross-check.
pub fn macdonald_poly_gram_schmidt(lambda: &Partition, n: usize, qt: &QTField) -> Result<SymPoly> {
    if lambda.length() > n {
        return Err(Error::InvalidParameters(format!("{lambda} has more than {n} parts")));
    }
    let d = lambda.size();
    // Increasing lexicographic order extends dominance.
    let mut parts = Partition::all(d, d as usize);
    parts.reverse();
    let k = parts.len();
    let width = d as usize;
    // transition[ρ][μ]: p_ρ = Σ_μ transition[ρ][μ] m_μ.
    let transition: Vec<Vec<Rational>> = parts
        .iter()
        .map(|rho| {
            parts
                .iter()
                .map(|mu| rat(power_sum_monomial_coefficient(rho.parts(), &mu.padded(width)) as i64))
                .collect()
        })
        .collect();
    let norms = parts.iter().map(|rho| qt_norm(rho, qt)).collect::<Result<Vec<_>>>()?;
    // m_μ = Σ_ρ inv[μ][ρ] p_ρ, so ⟨m_μ, m_ν⟩ = Σ_ρ inv[μ][ρ] inv[ν][ρ] z_ρ(q,t).
    let inv = invert(transition)?;
    let gram = |u: &[Rational], v: &[Rational]| -> Rational {
        let mut total = rat(0);
        for rho in 0..k {
            let mut su = rat(0);
            let mut sv = rat(0);
            for mu in 0..k {
                su += Rational::from(&u[mu] * &inv[mu][rho]);
                sv += Rational::from(&v[mu] * &inv[mu][rho]);
            }
            total += su * sv * &norms[rho];
        }
        total
    };
    let target = parts.iter().position(|p| p == lambda).expect("λ is a partition of d");
    let mut orthogonal: Vec<(Vec<Rational>, Rational)> = Vec::new();
    let mut current = Vec::new();
    for idx in 0..=target {
        let mut v: Vec<Rational> = (0..k).map(|j| rat(i64::from(j == idx))).collect();
        for (prev, norm) in &orthogonal {
            let c = gram(&v, prev) / norm;
            for j in 0..k {
                let s = Rational::from(&c * &prev[j]);
                v[j] -= s;
            }
        }
        let norm = gram(&v, &v);
        if norm == 0 {
            return Err(Error::DegenerateSpectrum {
                partition: lambda.parts().to_vec(),
            });
        }
        current = v.clone();
        orthogonal.push((v, norm));
    }
    let mut p = SymPoly::zero(n);
    for (j, c) in current.iter().enumerate() {
        if parts[j].length() <= n && *c != 0 {
            p.add_scaled(&SymPoly::monomial(&parts[j], n)?, c);
        }
    }
    Ok(p)
}

/// `𝒟_r P_λ = e_r(t^δ q^λ) P_λ`, checked exactly.
pub fn eigen_check_d(lambda: &Partition, r: usize, n: usize, qt: &QTField) -> Result<bool> {
    d_eigen_holds(&macdonald_poly(lambda, n, qt)?, lambda, r, qt)
}

/// As [`eigen_check_d`], for an already constructed `P_λ`.
pub fn d_eigen_holds(p: &SymPoly, lambda: &Partition, r: usize, qt: &QTField) -> Result<bool> {
    let eigenvalue = elementary(r, &qt.spectral_point(lambda, p.n()));
    Ok(apply_cal_d(r, p, qt)? == p.scale(&eigenvalue))
}

/// `g_l(ξ) = Σ_{|ν|=l} ∏_i (t;q)_{ν_i}/(q;q)_{ν_i} ξ^ν`.
pub fn g_polynomial(l: usize, n: usize, qt: &QTField) -> Result<SymPoly> {
    let mut p = Poly::zero(n);
    for nu in compositions(n, l as u32) {
        let mut c = rat(1);
        for &k in nu.entries() {
            let den = qpoch_exact(&qt.q, &qt.q, k);
            if den == 0 {
                return Err(Error::DivisionByZero);
            }
            c *= qpoch_exact(&qt.t, &qt.q, k) / den;
        }
        p.add_term(nu.entries().to_vec(), c);
    }
    SymPoly::from_poly(&p)
}

/// `g_l = (t;q)_l/(q;q)_l · P_{(l)}`.
pub fn g_matches_one_row(l: usize, n: usize, qt: &QTField) -> Result<bool> {
    let g = g_polynomial(l, n, qt)?;
    let p = macdonald_poly(&Partition::row(l as u32), n, qt)?;
    let c = qpoch_exact(&qt.t, &qt.q, l as u32) / qpoch_exact(&qt.q, &qt.q, l as u32);
    Ok(g == p.scale(&c))
}

/// `ℋ_l P_λ = g_l(t^δ q^λ) P_λ`, checked exactly.
pub fn eigen_check_h(lambda: &Partition, l: usize, n: usize, qt: &QTField) -> Result<bool> {
    h_eigen_holds(&macdonald_poly(lambda, n, qt)?, lambda, l, qt)
}

/// As [`eigen_check_h`], for an already constructed `P_λ`.
pub fn h_eigen_holds(p: &SymPoly, lambda: &Partition, l: usize, qt: &QTField) -> Result<bool> {
    let n = p.n();
    let eigenvalue = g_polynomial(l, n, qt)?.eval(&qt.spectral_point(lambda, n));
    Ok(apply_cal_h(l, p, qt)? == p.scale(&eigenvalue))
}

/// `Σ_{r+s=l} (−1)^r (1 − t^r q^s) e_r(ξ) g_s(ξ) = 0` as polynomials in `ξ`,
/// for `l = 1, …, l_max`.
pub fn scalar_wronski_check(l_max: usize, n: usize, qt: &QTField) -> Result<bool> {
    let g: Vec<SymPoly> = (0..=l_max).map(|s| g_polynomial(s, n, qt)).collect::<Result<_>>()?;
    for l in 1..=l_max {
        let mut total = SymPoly::zero(n);
        for r in 0..=l.min(n) {
            let s = l - r;
            let mut c = rat(1) - rpow(&qt.t, r as u32) * rpow(&qt.q, s as u32);
            if r % 2 == 1 {
                c = -c;
            }
            total.add_scaled(&SymPoly::elementary(r, n)?.mul(&g[s])?, &c);
        }
        if !total.is_zero() {
            return Ok(false);
        }
    }
    Ok(true)
}

/// `Σ_{r+s=l} (−1)^r (1 − t^r q^s) 𝒟_r ℋ_s f`, given the images `ℋ_s f`.
fn wronski_combination(l: usize, h_images: &[SymPoly], n: usize, qt: &QTField) -> Result<SymPoly> {
    let mut total = SymPoly::zero(n);
    for r in 0..=l.min(n) {
        let s = l - r;
        let mut c = rat(1) - rpow(&qt.t, r as u32) * rpow(&qt.q, s as u32);
        if c == 0 {
            continue;
        }
        if r % 2 == 1 {
            c = -c;
        }
        total.add_scaled(&apply_cal_d(r, &h_images[s], qt)?, &c);
    }
    Ok(total)
}

/// Applies the operator Wronski combination for `l = 1, …, l_max` to every
/// `m_μ` with `|μ| ≤ l_max + 2` and checks that each image vanishes.
pub fn operator_wronski_trig_check(l_max: usize, n: usize, qt: &QTField) -> Result<bool> {
    for mu in Partition::up_to(l_max as u32 + 2, n) {
        let f = SymPoly::monomial(&mu, n)?;
        let h: Vec<SymPoly> = (0..=l_max).map(|s| apply_cal_h(s, &f, qt)).collect::<Result<_>>()?;
        for l in 1..=l_max {
            if !wronski_combination(l, &h, n, qt)?.is_zero() {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Generating-function identities on `P_λ` through `u`-order `order`:
/// `𝒟(u)ℋ(u) = 𝒟(tu)ℋ(qu)` and
/// `ℋ(u) P_λ = ∏_i (u t^{n−i+1} q^{λ_i}; q)_∞ / (u t^{n−i} q^{λ_i}; q)_∞ · P_λ`.
pub fn genfun_check(lambda: &Partition, n: usize, qt: &QTField, order: usize) -> Result<bool> {
    let p = macdonald_poly(lambda, n, qt)?;
    let h: Vec<SymPoly> = (0..=order).map(|s| apply_cal_h(s, &p, qt)).collect::<Result<_>>()?;
    for k in 1..=order {
        if !wronski_combination(k, &h, n, qt)?.is_zero() {
            return Ok(false);
        }
    }
    // Each factor (A t u; q)_∞ / (A u; q)_∞ = Σ_j (t;q)_j/(q;q)_j A^j u^j.
    let mut series = vec![rat(0); order + 1];
    series[0] = rat(1);
    for a in qt.spectral_point(lambda, n) {
        let factor: Vec<Rational> = (0..=order as u32)
            .map(|j| qpoch_exact(&qt.t, &qt.q, j) / qpoch_exact(&qt.q, &qt.q, j) * rpow(&a, j))
            .collect();
        let mut next = vec![rat(0); order + 1];
        for i in 0..=order {
            for j in 0..=order - i {
                next[i + j] += Rational::from(&series[i] * &factor[j]);
            }
        }
        series = next;
    }
    for (l, c) in series.iter().enumerate() {
        if h[l] != p.scale(c) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// True when `λ ↦ (e_1, …, e_n)(t^δ q^λ)` is injective on `partitions`.
pub fn eigenvalues_separated(partitions: &[Partition], n: usize, qt: &QTField) -> bool {
    let mut seen = std::collections::BTreeSet::new();
    partitions.iter().all(|lambda| {
        let xi = qt.spectral_point(lambda, n);
        seen.insert((1..=n).map(|r| elementary(r, &xi)).collect::<Vec<_>>())
    })
}

/// Which operator family a bridge check compares.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BridgeFamily {
    D,
    H,
}

/// Which scalar prefactors relate the additive and multiplicative forms.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BridgePrefactor {
    /// `D_r = t^{−r(n−1)/2} 𝒟_r` and `H_l = q^{l/2} t^{−nl/2} ℋ_l`.
    Derived,
    /// `D_r = t^{−r(n−r)/2} 𝒟_r` and `H_l = q^{−l/2} t^{−nl/2} ℋ_l`, as
    /// commonly printed; off by `t^{r(r−1)/2}` and `q^l` respectively.
    Printed,
}

/// Compare the additive trigonometric coefficients at `x` with the
/// multiplicative ones at `z = e(x)`, `q = e(δ)`, `t = e(κ)` through the
/// scalar prefactor. Returns the largest relative gap over the support.
pub fn normalization_bridge_residual(
    family: BridgeFamily,
    order: usize,
    x: &[Complex],
    delta: &Complex,
    kappa: &Complex,
    prefactor: BridgePrefactor,
    precision: Precision,
) -> Result<Float> {
    let n = x.len();
    let bits = precision.bits();
    let bracket = std::sync::Arc::new(BracketFunction::standard(crate::bracket::FlavorKind::Trigonometric, precision));
    let params = ModelParams::new(n, delta.clone(), kappa.clone(), bracket)?;
    let additive = match family {
        BridgeFamily::D => build_d(order, &params),
        BridgeFamily::H => build_h(order, &params),
    }
    .coefficients_at(x)?;
    let z: Vec<Complex> = x.iter().map(|xi| precision.e(xi)).collect();
    let (q, t) = (precision.e(delta), precision.e(kappa));
    let (o, nn) = (order as i64, n as i64);
    // Exponent of e(·) as (multiple of δ, multiple of κ), both halved.
    let (dq, dk) = match (family, prefactor) {
        (BridgeFamily::D, BridgePrefactor::Derived) => (0, -o * (nn - 1)),
        (BridgeFamily::D, BridgePrefactor::Printed) => (0, -o * (nn - o)),
        (BridgeFamily::H, BridgePrefactor::Derived) => (o, -nn * o),
        (BridgeFamily::H, BridgePrefactor::Printed) => (-o, -nn * o),
    };
    let half = Complex::with_val(bits, delta * dq) + Complex::with_val(bits, kappa * dk);
    let scale = precision.e(&(half / 2u32));
    let mut worst = Float::new(bits);
    for (mu, w) in additive {
        let mult = match family {
            BridgeFamily::D => cal_d_coefficient(&mu, &z, &t)?,
            BridgeFamily::H => cal_h_coefficient(&mu, &z, &q, &t)?,
        };
        let predicted = Complex::with_val(bits, &mult * &scale);
        let gap = modulus(&Complex::with_val(bits, &w.value - &predicted));
        let size = max_float(modulus(&w.value), &modulus(&predicted));
        if !size.is_zero() {
            worst = max_float(worst, &Float::with_val(bits, gap / size));
        }
    }
    Ok(worst)
}
