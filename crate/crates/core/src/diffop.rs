//! Finite difference operators `Σ_μ A_μ(x) T_x^{μδ}`.
//!
//! Shifts are integer multi-indices in units of δ. Coefficients are
//! evaluators (closures) rather than symbolic expressions: linear
//! combinations and compositions build a lazy tree, and equality of two
//! operators is tested by evaluating every coefficient at random generic
//! points. Since all coefficients are meromorphic, agreement at generic
//! points to working precision is the numerical analogue of a
//! Schwartz–Zippel test.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use rug::{Complex, Float};

use crate::bracket::BracketFunction;
use crate::error::{Error, Result};
use crate::residual::{max_float, Weighted};
use crate::sampling::Sampler;

/// Shift exponents `(μ_1, …, μ_n)`.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn new(entries: Vec<u32>) -> Self {
        MultiIndex(entries)
    }

    pub fn zeros(n: usize) -> Self {
        MultiIndex(vec![0; n])
    }

    /// Unit vector `ε_i`.
    pub fn unit(n: usize, i: usize) -> Self {
        let mut v = vec![0; n];
        v[i] = 1;
        MultiIndex(v)
    }

    /// Indicator `ε_I` of a subset.
    pub fn indicator(n: usize, subset: &[usize]) -> Self {
        let mut v = vec![0; n];
        for &i in subset {
            v[i] = 1;
        }
        MultiIndex(v)
    }

    pub fn entries(&self) -> &[u32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `|μ|`.
    pub fn total(&self) -> u32 {
        self.0.iter().sum()
    }

    /// Positions with a nonzero entry.
    pub fn support(&self) -> Vec<usize> {
        (0..self.0.len()).filter(|&i| self.0[i] > 0).collect()
    }

    pub fn add(&self, other: &MultiIndex) -> MultiIndex {
        MultiIndex(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    /// `self − other`, if every entry stays nonnegative.
    pub fn checked_sub(&self, other: &MultiIndex) -> Option<MultiIndex> {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| a.checked_sub(*b))
            .collect::<Option<Vec<_>>>()
            .map(MultiIndex)
    }

    /// `(σμ)_{σ(i)} = μ_i`.
    pub fn permuted(&self, sigma: &[usize]) -> MultiIndex {
        let mut v = vec![0; self.0.len()];
        for (i, &s) in sigma.iter().enumerate() {
            v[s] = self.0[i];
        }
        MultiIndex(v)
    }

    /// The point `x + μδ`.
    pub fn shift_point(&self, x: &[Complex], delta: &Complex) -> Vec<Complex> {
        x.iter()
            .zip(&self.0)
            .map(|(xi, &m)| {
                let bits = xi.prec().0;
                if m == 0 {
                    xi.clone()
                } else {
                    Complex::with_val(bits, delta * m) + xi
                }
            })
            .collect()
    }
}

impl fmt::Debug for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

/// All `μ ∈ ℕⁿ` with `|μ| = total`, in lexicographic order.
pub fn compositions(n: usize, total: u32) -> Vec<MultiIndex> {
    fn rec(n: usize, left: u32, prefix: &mut Vec<u32>, out: &mut Vec<MultiIndex>) {
        if prefix.len() + 1 == n {
            prefix.push(left);
            out.push(MultiIndex(prefix.clone()));
            prefix.pop();
            return;
        }
        for first in 0..=left {
            prefix.push(first);
            rec(n, left - first, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if n == 0 {
        if total == 0 {
            out.push(MultiIndex(Vec::new()));
        }
        return out;
    }
    rec(n, total, &mut Vec::with_capacity(n), &mut out);
    out
}

/// All `r`-subsets of `{0, …, n−1}` as sorted index lists.
pub fn subsets(n: usize, r: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, r: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == r {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            if n - i < r - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, n, r, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if r <= n {
        rec(0, n, r, &mut Vec::with_capacity(r), &mut out);
    }
    out
}

/// Ambient parameters of the operator families.
#[derive(Clone)]
pub struct ModelParams {
    pub n: usize,
    pub delta: Complex,
    pub kappa: Complex,
    pub bracket: Arc<BracketFunction>,
    /// Test hook: when set, one factor `[κ]` of the diagonal shifted
    /// factorial in `H_l` uses `κ + perturbation` instead.
    pub h_kappa_perturbation: Option<Complex>,
}

impl fmt::Debug for ModelParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ModelParams")
            .field("n", &self.n)
            .field("delta", &self.delta.to_string_radix(10, Some(12)))
            .field("kappa", &self.kappa.to_string_radix(10, Some(12)))
            .field("flavor", &self.bracket.kind())
            .finish()
    }
}

/// Largest multiple of δ or κ guarded when drawing generic parameters.
const GENERIC_DEPTH: i32 = 6;

impl ModelParams {
    pub fn new(n: usize, delta: Complex, kappa: Complex, bracket: Arc<BracketFunction>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameters("need at least one variable".into()));
        }
        if delta.is_zero() {
            return Err(Error::InvalidParameters("shift unit δ is zero".into()));
        }
        let bits = bracket.bits();
        Ok(ModelParams {
            n,
            delta: Complex::with_val(bits, delta),
            kappa: Complex::with_val(bits, kappa),
            bracket,
            h_kappa_perturbation: None,
        })
    }

    /// Draw generic `(δ, κ)`: every `[rκ + sδ]` with `0 ≤ r, s ≤ 6`, not both
    /// zero, stays outside the pole guard.
    pub fn sample(n: usize, bracket: Arc<BracketFunction>, sampler: &mut Sampler) -> Result<Self> {
        sampler.retry(|s| {
            let delta = s.point();
            let kappa = s.point();
            let bits = bracket.bits();
            for r in 0..=GENERIC_DEPTH {
                for t in 0..=GENERIC_DEPTH {
                    if r == 0 && t == 0 {
                        continue;
                    }
                    let arg = Complex::with_val(bits, &kappa * r) + Complex::with_val(bits, &delta * t);
                    bracket.eval_denominator(&arg)?;
                }
            }
            ModelParams::new(n, delta, kappa, bracket.clone())
        })
    }

    /// Same model with δ and κ exchanged.
    pub fn swapped(&self) -> ModelParams {
        ModelParams {
            n: self.n,
            delta: self.kappa.clone(),
            kappa: self.delta.clone(),
            bracket: self.bracket.clone(),
            h_kappa_perturbation: None,
        }
    }

    pub fn with_n(&self, n: usize) -> ModelParams {
        ModelParams { n, ..self.clone() }
    }

    pub fn bits(&self) -> u32 {
        self.bracket.bits()
    }

    /// `[r κ + s δ]` for integer `r, s`.
    pub fn bracket_of(&self, r: i64, s: i64) -> Result<Complex> {
        self.bracket.eval(&self.combination(r, s))
    }

    pub fn combination(&self, r: i64, s: i64) -> Complex {
        let bits = self.bits();
        Complex::with_val(bits, &self.kappa * r) + Complex::with_val(bits, &self.delta * s)
    }
}

pub type CoefficientFn = Arc<dyn Fn(&[Complex]) -> Result<Complex> + Send + Sync>;

/// Evaluates a whole family of coefficients at once, in the order of the
/// accompanying index list. Lets builders share brackets between terms.
pub type FamilyFn = Arc<dyn Fn(&[Complex]) -> Result<Vec<Complex>> + Send + Sync>;

enum Node {
    Constant(Vec<(MultiIndex, Complex)>),
    Terms(Vec<(MultiIndex, CoefficientFn)>),
    Family {
        indices: Vec<MultiIndex>,
        eval: FamilyFn,
    },
    Linear(Vec<(Complex, DiffOperator)>),
    Compose(DiffOperator, DiffOperator),
}

/// A finite difference operator in `n` variables with shift unit δ.
#[derive(Clone)]
pub struct DiffOperator {
    n: usize,
    delta: Arc<Complex>,
    support: Arc<BTreeSet<MultiIndex>>,
    node: Arc<Node>,
}

impl fmt::Debug for DiffOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DiffOperator")
            .field("n", &self.n)
            .field("support", &self.support)
            .finish()
    }
}

impl DiffOperator {
    fn with_node(n: usize, delta: Arc<Complex>, support: BTreeSet<MultiIndex>, node: Node) -> Self {
        DiffOperator {
            n,
            delta,
            support: Arc::new(support),
            node: Arc::new(node),
        }
    }

    pub fn identity(n: usize, delta: &Complex) -> Self {
        let one = Complex::with_val(delta.prec().0, 1);
        Self::constant(n, delta, vec![(MultiIndex::zeros(n), one)])
    }

    pub fn zero(n: usize, delta: &Complex) -> Self {
        Self::constant(n, delta, Vec::new())
    }

    /// Operator with constant coefficients.
    pub fn constant(n: usize, delta: &Complex, terms: Vec<(MultiIndex, Complex)>) -> Self {
        let support = terms.iter().map(|(m, _)| m.clone()).collect();
        Self::with_node(n, Arc::new(delta.clone()), support, Node::Constant(terms))
    }

    pub fn from_terms(n: usize, delta: &Complex, terms: Vec<(MultiIndex, CoefficientFn)>) -> Self {
        let support = terms.iter().map(|(m, _)| m.clone()).collect();
        Self::with_node(n, Arc::new(delta.clone()), support, Node::Terms(terms))
    }

    pub fn from_family(n: usize, delta: &Complex, indices: Vec<MultiIndex>, eval: FamilyFn) -> Self {
        let support = indices.iter().cloned().collect();
        Self::with_node(n, Arc::new(delta.clone()), support, Node::Family { indices, eval })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn delta(&self) -> &Complex {
        &self.delta
    }

    pub fn support(&self) -> &BTreeSet<MultiIndex> {
        &self.support
    }

    /// True when the support is empty, i.e. the operator is zero by construction.
    pub fn is_structurally_zero(&self) -> bool {
        self.support.is_empty()
    }

    fn bits(&self) -> u32 {
        self.delta.prec().0
    }

    fn check_compatible(&self, other: &DiffOperator) -> Result<()> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: other.n,
            });
        }
        if *self.delta != *other.delta {
            return Err(Error::ShiftMismatch);
        }
        Ok(())
    }

    /// `Σ c_k · ops_k`. Terms with a zero scalar are dropped.
    pub fn linear(coeffs: &[Complex], ops: &[DiffOperator]) -> Result<DiffOperator> {
        if coeffs.len() != ops.len() {
            return Err(Error::DimensionMismatch {
                expected: coeffs.len(),
                found: ops.len(),
            });
        }
        let first = ops
            .first()
            .ok_or_else(|| Error::InvalidParameters("empty linear combination".into()))?;
        let mut parts = Vec::new();
        let mut support = BTreeSet::new();
        for (c, op) in coeffs.iter().zip(ops) {
            first.check_compatible(op)?;
            if c.is_zero() || op.is_structurally_zero() {
                continue;
            }
            support.extend(op.support.iter().cloned());
            parts.push((c.clone(), op.clone()));
        }
        Ok(Self::with_node(first.n, first.delta.clone(), support, Node::Linear(parts)))
    }

    pub fn scale(&self, c: &Complex) -> DiffOperator {
        Self::linear(std::slice::from_ref(c), std::slice::from_ref(self)).expect("single operator is compatible")
    }

    pub fn sub(&self, other: &DiffOperator) -> Result<DiffOperator> {
        let bits = self.bits();
        Self::linear(
            &[Complex::with_val(bits, 1), Complex::with_val(bits, -1)],
            &[self.clone(), other.clone()],
        )
    }

    /// `self ∘ other`: the coefficient of `T^{λδ}` is
    /// `Σ_{μ+ν=λ} A_μ(x) B_ν(x + μδ)`.
    pub fn compose(&self, other: &DiffOperator) -> Result<DiffOperator> {
        self.check_compatible(other)?;
        let support = self
            .support
            .iter()
            .flat_map(|m| other.support.iter().map(move |v| m.add(v)))
            .collect();
        Ok(Self::with_node(
            self.n,
            self.delta.clone(),
            support,
            Node::Compose(self.clone(), other.clone()),
        ))
    }

    /// Every coefficient at `x`, each tracked against its largest contributing product.
    pub fn coefficients_at(&self, x: &[Complex]) -> Result<BTreeMap<MultiIndex, Weighted>> {
        if x.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: x.len(),
            });
        }
        let mut out = BTreeMap::new();
        match &*self.node {
            Node::Constant(terms) => {
                for (m, c) in terms {
                    out.insert(m.clone(), Weighted::term(c.clone()));
                }
            }
            Node::Terms(terms) => {
                for (m, f) in terms {
                    out.insert(m.clone(), Weighted::term(f(x)?));
                }
            }
            Node::Family { indices, eval } => {
                let values = eval(x)?;
                debug_assert_eq!(values.len(), indices.len());
                for (m, v) in indices.iter().zip(values) {
                    out.insert(m.clone(), Weighted::term(v));
                }
            }
            Node::Linear(parts) => {
                for (c, op) in parts {
                    for (m, w) in op.coefficients_at(x)? {
                        accumulate(&mut out, m, &w.scaled(c), self.bits());
                    }
                }
            }
            Node::Compose(left, right) => {
                for (mu, a) in left.coefficients_at(x)? {
                    let shifted = mu.shift_point(x, &self.delta);
                    for (nu, b) in right.coefficients_at(&shifted)? {
                        accumulate(&mut out, mu.add(&nu), &a.mul(&b), self.bits());
                    }
                }
            }
        }
        Ok(out)
    }

    /// `A_μ(x)`; zero outside the support.
    pub fn coefficient_at(&self, mu: &MultiIndex, x: &[Complex]) -> Result<Complex> {
        let all = self.coefficients_at(x)?;
        Ok(all
            .get(mu)
            .map(|w| w.value.clone())
            .unwrap_or_else(|| Complex::new(self.bits())))
    }

    /// `(A f)(x) = Σ_μ A_μ(x) f(x + μδ)`.
    pub fn apply<F>(&self, f: F, x: &[Complex]) -> Result<Weighted>
    where
        F: Fn(&[Complex]) -> Result<Complex>,
    {
        let mut total = Weighted::zero(self.bits());
        for (mu, a) in self.coefficients_at(x)? {
            let value = f(&mu.shift_point(x, &self.delta))?;
            total.add(&a.mul(&Weighted::term(value)));
        }
        Ok(total)
    }

    /// Compare `self` and `other` coefficient-wise at `samples` random points.
    pub fn equal_at(
        &self,
        other: &DiffOperator,
        sampler: &mut Sampler,
        samples: usize,
        tolerance: &Float,
    ) -> Result<ResidualReport> {
        self.sub(other)?.vanishes_at(sampler, samples, tolerance)
    }

    /// Check that every coefficient of `self` vanishes at `samples` random
    /// points, relative to the largest product it was summed from.
    pub fn vanishes_at(
        &self,
        sampler: &mut Sampler,
        samples: usize,
        tolerance: &Float,
    ) -> Result<ResidualReport> {
        let bits = self.bits();
        let forks: Vec<Sampler> = (0..samples).map(|_| sampler.fork()).collect();
        let evaluations: Vec<Result<BTreeMap<MultiIndex, Weighted>>> = forks
            .into_par_iter()
            .map(|mut s| {
                let n = self.n;
                s.retry(|s| self.coefficients_at(&s.points(n)))
            })
            .collect();

        let mut worst = Float::new(bits);
        let mut worst_index = None;
        for evaluation in evaluations {
            for (mu, w) in evaluation? {
                let rel = w.relative();
                if rel > worst || worst_index.is_none() {
                    worst_index = Some(mu);
                    worst = max_float(worst, &rel);
                }
            }
        }
        let passed = worst < *tolerance;
        Ok(ResidualReport {
            max_relative: worst,
            samples,
            coefficients: self.support.len(),
            tolerance: tolerance.clone(),
            worst_index,
            passed,
        })
    }
}

fn accumulate(out: &mut BTreeMap<MultiIndex, Weighted>, m: MultiIndex, w: &Weighted, bits: u32) {
    out.entry(m).or_insert_with(|| Weighted::zero(bits)).add(w);
}

/// Outcome of a sampled identity check.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualReport {
    /// Largest relative residual seen over all coefficients and samples.
    pub max_relative: Float,
    pub samples: usize,
    /// Size of the union of supports that was checked.
    pub coefficients: usize,
    pub tolerance: Float,
    pub worst_index: Option<MultiIndex>,
    pub passed: bool,
}

impl ResidualReport {
    /// Report for a check with nothing to compare (e.g. both sides structurally zero).
    pub fn trivial(tolerance: &Float) -> Self {
        ResidualReport {
            max_relative: Float::new(tolerance.prec()),
            samples: 0,
            coefficients: 0,
            tolerance: tolerance.clone(),
            worst_index: None,
            passed: true,
        }
    }

    /// Worst of two reports.
    pub fn merge(mut self, other: ResidualReport) -> ResidualReport {
        if other.max_relative > self.max_relative {
            self.max_relative = other.max_relative;
            self.worst_index = other.worst_index;
        }
        self.samples += other.samples;
        self.coefficients = self.coefficients.max(other.coefficients);
        self.passed &= other.passed;
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bracket::FlavorKind;
    use crate::precision::Precision;

    fn prec() -> Precision {
        Precision::default()
    }

    fn tol() -> Float {
        prec().ten_pow_neg(39)
    }

    /// Random operator with `terms` coefficients of the form `[a·x + b]`.
    fn random_op(n: usize, delta: &Complex, terms: usize, s: &mut Sampler) -> DiffOperator {
        let bracket = Arc::new(BracketFunction::standard(FlavorKind::Trigonometric, prec()));
        let mut out = Vec::new();
        let mut seen = BTreeSet::new();
        let terms = terms.min(3usize.pow(n as u32));
        while out.len() < terms {
            let mu = MultiIndex::new((0..n).map(|_| ((s.unit().abs() * 3.0) as u32).min(2)).collect());
            if !seen.insert(mu.clone()) {
                continue;
            }
            let a: Vec<Complex> = s.points(n);
            let b = s.point();
            let bracket = bracket.clone();
            let f: CoefficientFn = Arc::new(move |x: &[Complex]| {
                let mut arg = b.clone();
                for (ai, xi) in a.iter().zip(x) {
                    arg += Complex::with_val(ai.prec().0, ai * xi);
                }
                bracket.eval(&arg)
            });
            out.push((mu, f));
        }
        DiffOperator::from_terms(n, delta, out)
    }

    #[test]
    fn compositions_count_matches_stars_and_bars() {
        assert_eq!(compositions(4, 4).len(), 35);
        assert_eq!(compositions(1, 3), vec![MultiIndex::new(vec![3])]);
        assert_eq!(compositions(3, 0).len(), 1);
        assert_eq!(subsets(4, 2).len(), 6);
        assert!(subsets(2, 3).is_empty());
        assert_eq!(subsets(3, 0), vec![Vec::<usize>::new()]);
    }

    #[test]
    fn identity_applies_as_identity() {
        let p = prec();
        let delta = p.complex(0.3, 0.2);
        let id = DiffOperator::identity(2, &delta);
        let x = vec![p.complex(0.1, 0.0), p.complex(0.5, 0.1)];
        let f = |y: &[Complex]| Ok(Complex::with_val(p.bits(), &y[0] * &y[1]));
        let v = id.apply(f, &x).unwrap();
        assert_eq!(v.value, f(&x).unwrap());

        let three = id.scale(&p.complex(3.0, 0.0));
        let v = three.apply(f, &x).unwrap();
        assert_eq!(v.value, f(&x).unwrap() * 3);
    }

    #[test]
    fn identity_is_neutral_for_composition() {
        let p = prec();
        let mut s = Sampler::new(2, p);
        let delta = s.point();
        let a = random_op(2, &delta, 4, &mut s);
        let id = DiffOperator::identity(2, &delta);
        let left = id.compose(&a).unwrap();
        let right = a.compose(&id).unwrap();
        assert!(left.equal_at(&a, &mut s, 5, &tol()).unwrap().passed);
        assert!(right.equal_at(&a, &mut s, 5, &tol()).unwrap().passed);
    }

    #[test]
    fn single_shift_composition_rule() {
        let p = prec();
        let delta = p.complex(0.25, 0.1);
        let shift = DiffOperator::constant(1, &delta, vec![(MultiIndex::new(vec![1]), p.one())]);
        let a: CoefficientFn = Arc::new(|x: &[Complex]| Ok(Complex::with_val(x[0].prec().0, x[0].square_ref())));
        let a_op = DiffOperator::from_terms(1, &delta, vec![(MultiIndex::new(vec![1]), a.clone())]);
        let composed = shift.compose(&a_op).unwrap();
        let x = vec![p.complex(0.4, -0.3)];
        let got = composed.coefficient_at(&MultiIndex::new(vec![2]), &x).unwrap();
        let want = a(&MultiIndex::new(vec![1]).shift_point(&x, &delta)).unwrap();
        assert_eq!(got, want);
    }

    #[test]
    fn opposite_combination_cancels() {
        let p = prec();
        let mut s = Sampler::new(3, p);
        let delta = s.point();
        let a = random_op(2, &delta, 3, &mut s);
        let diff = DiffOperator::linear(&[p.one(), p.complex(-1.0, 0.0)], &[a.clone(), a.clone()]).unwrap();
        let report = diff.vanishes_at(&mut s, 4, &tol()).unwrap();
        assert!(report.passed);
        assert!(report.max_relative.is_zero());

        let zero = a.scale(&p.zero());
        assert!(zero.is_structurally_zero());
    }

    #[test]
    fn mismatched_operators_are_rejected() {
        let p = prec();
        let d = p.complex(0.1, 0.0);
        let a = DiffOperator::identity(2, &d);
        let b = DiffOperator::identity(3, &d);
        assert!(matches!(a.compose(&b), Err(Error::DimensionMismatch { .. })));
        let c = DiffOperator::identity(2, &p.complex(0.2, 0.0));
        assert!(matches!(a.compose(&c), Err(Error::ShiftMismatch)));
        assert!(matches!(
            DiffOperator::linear(&[p.one()], &[a.clone(), a]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn composition_is_associative() {
        let p = prec();
        let mut s = Sampler::new(4, p);
        for n in 1..=3 {
            let delta = s.point();
            let a = random_op(n, &delta, 3, &mut s);
            let b = random_op(n, &delta, 4, &mut s);
            let c = random_op(n, &delta, 2, &mut s);
            let lhs = a.compose(&b).unwrap().compose(&c).unwrap();
            let rhs = a.compose(&b.compose(&c).unwrap()).unwrap();
            let r = lhs.equal_at(&rhs, &mut s, 10, &tol()).unwrap();
            assert!(r.passed, "n={n}: {r:?}");
        }
    }

    #[test]
    fn composition_is_bilinear() {
        let p = prec();
        let mut s = Sampler::new(5, p);
        let delta = s.point();
        let a = random_op(2, &delta, 3, &mut s);
        let b = random_op(2, &delta, 3, &mut s);
        let c = random_op(2, &delta, 3, &mut s);
        let (x, y) = (s.point(), s.point());
        let sum = DiffOperator::linear(&[x.clone(), y.clone()], &[a.clone(), b.clone()]).unwrap();
        let lhs = sum.compose(&c).unwrap();
        let rhs = DiffOperator::linear(&[x, y], &[a.compose(&c).unwrap(), b.compose(&c).unwrap()]).unwrap();
        assert!(lhs.equal_at(&rhs, &mut s, 5, &tol()).unwrap().passed);
    }

    #[test]
    fn different_operators_fail_with_order_one_residual() {
        let p = prec();
        let mut s = Sampler::new(6, p);
        let delta = s.point();
        let a = random_op(2, &delta, 3, &mut s);
        let b = random_op(2, &delta, 3, &mut s);
        let r = a.equal_at(&b, &mut s, 3, &tol()).unwrap();
        assert!(!r.passed);
        assert!(r.max_relative > 1e-3);
    }

    #[test]
    fn apply_requires_matching_point_dimension() {
        let p = prec();
        let id = DiffOperator::identity(2, &p.one());
        let r = id.apply(|_| Ok(p.one()), &[p.one()]);
        assert!(matches!(r, Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn model_sampling_is_generic_and_deterministic() {
        let p = prec();
        let bracket = Arc::new(BracketFunction::standard(FlavorKind::Elliptic, p));
        let a = ModelParams::sample(3, bracket.clone(), &mut Sampler::new(8, p)).unwrap();
        let b = ModelParams::sample(3, bracket, &mut Sampler::new(8, p)).unwrap();
        assert_eq!(a.delta, b.delta);
        assert_eq!(a.kappa, b.kappa);
        assert!(ModelParams::new(0, p.one(), p.one(), a.bracket.clone()).is_err());
        assert!(ModelParams::new(1, p.zero(), p.one(), a.bracket.clone()).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(24))]

            #[test]
            fn composed_support_is_sumset(seed in 0u64..1000, n in 1usize..4, ta in 1usize..4, tb in 1usize..4) {
                let p = prec();
                let mut s = Sampler::new(seed, p);
                let delta = s.point();
                let a = random_op(n, &delta, ta, &mut s);
                let b = random_op(n, &delta, tb, &mut s);
                let c = a.compose(&b).unwrap();
                for lam in c.support() {
                    prop_assert!(a.support().iter().any(|m| b.support().iter().any(|v| &m.add(v) == lam)));
                }
            }

            #[test]
            fn graded_operators_compose_to_graded(seed in 0u64..1000, n in 1usize..4, r in 0u32..3, t in 0u32..3) {
                let p = prec();
                let mut s = Sampler::new(seed, p);
                let delta = s.point();
                let a = DiffOperator::constant(n, &delta, compositions(n, r).into_iter().map(|m| (m, s.point())).collect());
                let b = DiffOperator::constant(n, &delta, compositions(n, t).into_iter().map(|m| (m, s.point())).collect());
                let c = a.compose(&b).unwrap();
                prop_assert!(c.support().iter().all(|m| m.total() == r + t));
            }

            #[test]
            fn sub_then_checked_sub_roundtrips(a in proptest::collection::vec(0u32..5, 1..5), b in proptest::collection::vec(0u32..5, 1..5)) {
                let len = a.len().min(b.len());
                let a = MultiIndex::new(a[..len].to_vec());
                let b = MultiIndex::new(b[..len].to_vec());
                prop_assert_eq!(a.add(&b).checked_sub(&b), Some(a.clone()));
                prop_assert_eq!(a.add(&b).total(), a.total() + b.total());
            }
        }
    }
}
