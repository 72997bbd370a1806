//! Gate families and exact pointwise evaluation.
//!
//! Bit vectors are little-endian: bit `i` of a mask encodes `x_{i+1}`, so the
//! canonical point order is `0, 1, ..., 2^n - 1` read as masks. Every value is
//! exact; no floating point is used anywhere.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};

pub type Rational = BigRational;

/// Largest variable count representable by a `u64` point mask.
pub const MAX_VARS: usize = 64;

/// Unpacks a point mask into an explicit bit vector of length `n`.
pub fn bits_of(mask: u64, n: usize) -> Vec<bool> {
    (0..n).map(|i| mask >> i & 1 == 1).collect()
}

/// Packs a bit vector into a point mask.
pub fn mask_of(bits: &[bool]) -> u64 {
    bits.iter()
        .enumerate()
        .fold(0u64, |acc, (i, &b)| acc | (u64::from(b) << i))
}

/// All points of `{0,1}^n` in canonical order, as masks.
pub fn cube(n: usize) -> std::ops::Range<u64> {
    assert!(n < MAX_VARS, "cube of {n} variables");
    0..1u64 << n
}

fn check_dims(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

fn checked_point(n: usize, x: &[bool]) -> Result<u64> {
    check_dims(n, x.len())?;
    Ok(mask_of(x))
}

pub(crate) fn dot_mask(weights: &[Rational], mask: u64) -> Rational {
    let mut acc = Rational::zero();
    let mut m = mask;
    while m != 0 {
        acc += &weights[m.trailing_zeros() as usize];
        m &= m - 1;
    }
    acc
}

/// Least common multiple of the denominators of `values` (1 for an empty slice).
pub(crate) fn common_denominator<'a>(values: impl IntoIterator<Item = &'a Rational>) -> BigInt {
    values
        .into_iter()
        .fold(BigInt::one(), |acc, v| acc.lcm(v.denom()))
}

pub(crate) fn scaled_integers(values: &[Rational], scale: &BigInt) -> Vec<BigInt> {
    values
        .iter()
        .map(|v| (v * Rational::from_integer(scale.clone())).to_integer())
        .collect()
}

/// Integer view of a rational slice, if every entry is integral.
pub(crate) fn integer_view(values: &[Rational]) -> Option<Vec<BigInt>> {
    values
        .iter()
        .map(|v| v.is_integer().then(|| v.to_integer()))
        .collect()
}

/// Minimum and maximum of `<weights, x>` over the hypercube.
pub(crate) fn linear_range(weights: &[BigInt]) -> (BigInt, BigInt) {
    let mut lo = BigInt::zero();
    let mut hi = BigInt::zero();
    for w in weights {
        if w.is_negative() {
            lo += w;
        } else {
            hi += w;
        }
    }
    (lo, hi)
}

/// A gate function on `{0,1}^n`.
pub trait Gate {
    type Value;

    fn n(&self) -> usize;

    fn eval(&self, x: &[bool]) -> Result<Self::Value>;
}

/// A gate rescaled to integer parameters. `scale` is the positive factor the
/// parameters were multiplied by.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Normalized<G> {
    pub gate: G,
    pub scale: BigInt,
}

/// `[<weights, x> >= threshold]`
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ThresholdGate {
    weights: Vec<Rational>,
    threshold: Rational,
}

impl ThresholdGate {
    pub fn new(weights: Vec<Rational>, threshold: Rational) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::NoVariables);
        }
        Ok(ThresholdGate { weights, threshold })
    }

    /// Integer-parameter constructor.
    ///
    /// Panics if `weights` is empty.
    pub fn from_ints(weights: &[i64], threshold: i64) -> Self {
        Self::new(ints(weights), Rational::from_integer(threshold.into()))
            .expect("threshold gate needs at least one weight")
    }

    /// `x_i` as a threshold gate (`i` is 0-based).
    pub fn projection(n: usize, i: usize) -> Self {
        let mut w = vec![0; n];
        w[i] = 1;
        Self::from_ints(&w, 1)
    }

    /// The constant-1 gate `[0 >= 0]`.
    pub fn constant_one(n: usize) -> Self {
        Self::from_ints(&vec![0; n], 0)
    }

    pub fn weights(&self) -> &[Rational] {
        &self.weights
    }

    pub fn threshold(&self) -> &Rational {
        &self.threshold
    }

    pub fn eval_mask(&self, mask: u64) -> bool {
        dot_mask(&self.weights, mask) >= self.threshold
    }

    /// Scales the weights to integers and rounds the threshold up. The
    /// result fires on exactly the same points.
    pub fn normalize_integer(&self) -> Normalized<ThresholdGate> {
        let scale = common_denominator(&self.weights);
        let weights = scaled_integers(&self.weights, &scale)
            .into_iter()
            .map(Rational::from_integer)
            .collect();
        let threshold = (&self.threshold * Rational::from_integer(scale.clone())).ceil();
        Normalized {
            gate: ThresholdGate { weights, threshold },
            scale,
        }
    }

    /// Integer weights and threshold, if both are integral.
    pub fn integer_parts(&self) -> Option<(Vec<BigInt>, BigInt)> {
        let w = integer_view(&self.weights)?;
        self.threshold
            .is_integer()
            .then(|| (w, self.threshold.to_integer()))
    }
}

impl Gate for ThresholdGate {
    type Value = bool;

    fn n(&self) -> usize {
        self.weights.len()
    }

    fn eval(&self, x: &[bool]) -> Result<bool> {
        Ok(self.eval_mask(checked_point(self.n(), x)?))
    }
}

/// `[<weights, x> == target]`
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExactThresholdGate {
    weights: Vec<Rational>,
    target: Rational,
}

impl ExactThresholdGate {
    pub fn new(weights: Vec<Rational>, target: Rational) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::NoVariables);
        }
        Ok(ExactThresholdGate { weights, target })
    }

    /// Panics if `weights` is empty.
    pub fn from_ints(weights: &[i64], target: i64) -> Self {
        Self::new(ints(weights), Rational::from_integer(target.into()))
            .expect("exact threshold gate needs at least one weight")
    }

    pub(crate) fn from_big(weights: Vec<BigInt>, target: BigInt) -> Self {
        ExactThresholdGate {
            weights: weights.into_iter().map(Rational::from_integer).collect(),
            target: Rational::from_integer(target),
        }
    }

    pub fn projection(n: usize, i: usize) -> Self {
        let mut w = vec![0; n];
        w[i] = 1;
        Self::from_ints(&w, 1)
    }

    pub fn weights(&self) -> &[Rational] {
        &self.weights
    }

    pub fn target(&self) -> &Rational {
        &self.target
    }

    pub fn eval_mask(&self, mask: u64) -> bool {
        dot_mask(&self.weights, mask) == self.target
    }

    /// Scales weights and target by the least common denominator of all of
    /// them, which leaves the zero set of `<w, x> - t` unchanged.
    pub fn normalize_integer(&self) -> Normalized<ExactThresholdGate> {
        let scale = common_denominator(self.weights.iter().chain([&self.target]));
        let weights = scaled_integers(&self.weights, &scale);
        let target = (&self.target * Rational::from_integer(scale.clone())).to_integer();
        Normalized {
            gate: ExactThresholdGate::from_big(weights, target),
            scale,
        }
    }

    pub fn integer_parts(&self) -> Option<(Vec<BigInt>, BigInt)> {
        let w = integer_view(&self.weights)?;
        self.target
            .is_integer()
            .then(|| (w, self.target.to_integer()))
    }
}

impl Gate for ExactThresholdGate {
    type Value = bool;

    fn n(&self) -> usize {
        self.weights.len()
    }

    fn eval(&self, x: &[bool]) -> Result<bool> {
        Ok(self.eval_mask(checked_point(self.n(), x)?))
    }
}

/// `max{0, <weights, x> + bias}`
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReluGate {
    weights: Vec<Rational>,
    bias: Rational,
}

impl ReluGate {
    pub fn new(weights: Vec<Rational>, bias: Rational) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::NoVariables);
        }
        Ok(ReluGate { weights, bias })
    }

    /// Panics if `weights` is empty.
    pub fn from_ints(weights: &[i64], bias: i64) -> Self {
        Self::new(ints(weights), Rational::from_integer(bias.into()))
            .expect("ReLU gate needs at least one weight")
    }

    pub fn projection(n: usize, i: usize) -> Self {
        let mut w = vec![0; n];
        w[i] = 1;
        Self::from_ints(&w, 0)
    }

    pub fn weights(&self) -> &[Rational] {
        &self.weights
    }

    pub fn bias(&self) -> &Rational {
        &self.bias
    }

    pub fn eval_mask(&self, mask: u64) -> Rational {
        let v = dot_mask(&self.weights, mask) + &self.bias;
        if v.is_positive() {
            v
        } else {
            Rational::zero()
        }
    }

    /// Scales weights and bias to integers. The normalized gate evaluates to
    /// `scale` times the original everywhere.
    pub fn normalize_integer(&self) -> Normalized<ReluGate> {
        let scale = common_denominator(self.weights.iter().chain([&self.bias]));
        let factor = Rational::from_integer(scale.clone());
        Normalized {
            gate: ReluGate {
                weights: self.weights.iter().map(|w| w * &factor).collect(),
                bias: &self.bias * &factor,
            },
            scale,
        }
    }

    /// Multiplies weights and bias by `factor`.
    pub fn scaled(&self, factor: &Rational) -> ReluGate {
        ReluGate {
            weights: self.weights.iter().map(|w| w * factor).collect(),
            bias: &self.bias * factor,
        }
    }
}

impl Gate for ReluGate {
    type Value = Rational;

    fn n(&self) -> usize {
        self.weights.len()
    }

    fn eval(&self, x: &[bool]) -> Result<Rational> {
        Ok(self.eval_mask(checked_point(self.n(), x)?))
    }
}

fn ints(values: &[i64]) -> Vec<Rational> {
    values
        .iter()
        .map(|&v| Rational::from_integer(v.into()))
        .collect()
}

pub(crate) fn is_prime(p: u64) -> bool {
    if p < 2 {
        return false;
    }
    let mut d = 2u64;
    while d.saturating_mul(d) <= p {
        if p.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

/// A multilinear polynomial over `F_p`, stored as a map from variable subsets
/// (masks) to nonzero coefficients.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FpPolynomial {
    prime: u64,
    n: usize,
    degree_bound: usize,
    monomials: BTreeMap<u64, u64>,
}

impl FpPolynomial {
    /// Builds a polynomial from `(variable mask, coefficient)` pairs. Repeated
    /// masks are summed; coefficients are reduced mod `prime` and zeros dropped.
    pub fn new(
        prime: u64,
        n: usize,
        degree_bound: usize,
        terms: impl IntoIterator<Item = (u64, u64)>,
    ) -> Result<Self> {
        if !is_prime(prime) {
            return Err(Error::NotPrime(prime));
        }
        if n > MAX_VARS {
            return Err(Error::TooManyVariables(n));
        }
        let mut monomials = BTreeMap::new();
        for (mask, coeff) in terms {
            if n < MAX_VARS && mask >> n != 0 {
                return Err(Error::VariableOutOfRange {
                    index: 63 - mask.leading_zeros() as usize,
                    n,
                });
            }
            let degree = mask.count_ones() as usize;
            if degree > degree_bound {
                return Err(Error::DegreeBound {
                    degree,
                    bound: degree_bound,
                });
            }
            let slot = monomials.entry(mask).or_insert(0u64);
            *slot = ((*slot as u128 + coeff as u128) % prime as u128) as u64;
        }
        monomials.retain(|_, c| *c != 0);
        Ok(FpPolynomial {
            prime,
            n,
            degree_bound,
            monomials,
        })
    }

    /// Builds a polynomial from 0-based variable lists and signed
    /// coefficients. The degree bound is the largest monomial degree.
    pub fn from_terms(
        prime: u64,
        n: usize,
        terms: impl IntoIterator<Item = (Vec<usize>, i64)>,
    ) -> Result<Self> {
        if !is_prime(prime) {
            return Err(Error::NotPrime(prime));
        }
        let mut masked = Vec::new();
        for (vars, coeff) in terms {
            let mut mask = 0u64;
            for v in vars {
                if v >= n || v >= MAX_VARS {
                    return Err(Error::VariableOutOfRange { index: v, n });
                }
                mask |= 1 << v;
            }
            masked.push((mask, coeff.rem_euclid(prime as i64) as u64));
        }
        let degree = masked
            .iter()
            .map(|(m, _)| m.count_ones() as usize)
            .max()
            .unwrap_or(0);
        Self::new(prime, n, degree, masked)
    }

    pub fn zero(prime: u64, n: usize) -> Result<Self> {
        Self::new(prime, n, 0, [])
    }

    pub fn constant(prime: u64, n: usize, c: u64) -> Result<Self> {
        Self::new(prime, n, 0, [(0, c)])
    }

    pub fn prime(&self) -> u64 {
        self.prime
    }

    pub fn degree_bound(&self) -> usize {
        self.degree_bound
    }

    /// Largest degree among stored monomials (0 for the zero polynomial).
    pub fn degree(&self) -> usize {
        self.monomials
            .keys()
            .map(|m| m.count_ones() as usize)
            .max()
            .unwrap_or(0)
    }

    pub fn monomials(&self) -> &BTreeMap<u64, u64> {
        &self.monomials
    }

    pub fn is_zero(&self) -> bool {
        self.monomials.is_empty()
    }

    /// Value in `{0, ..., p-1}` at a point mask.
    pub fn eval_mask(&self, mask: u64) -> u64 {
        let p = self.prime as u128;
        let sum = self
            .monomials
            .iter()
            .filter(|(m, _)| *m & mask == **m)
            .fold(0u128, |acc, (_, &c)| (acc + c as u128) % p);
        sum as u64
    }

    pub(crate) fn check_same_field(&self, other: &FpPolynomial) -> Result<()> {
        if self.prime != other.prime {
            return Err(Error::PrimeMismatch(self.prime, other.prime));
        }
        check_dims(self.n, other.n)
    }

    /// `self + factor * other`
    pub fn add_scaled(&self, other: &FpPolynomial, factor: u64) -> Result<FpPolynomial> {
        self.check_same_field(other)?;
        let p = self.prime as u128;
        let f = factor as u128 % p;
        let terms = self
            .monomials
            .iter()
            .map(|(&m, &c)| (m, c))
            .chain(
                other
                    .monomials
                    .iter()
                    .map(|(&m, &c)| (m, (c as u128 * f % p) as u64)),
            );
        FpPolynomial::new(
            self.prime,
            self.n,
            self.degree_bound.max(other.degree_bound),
            terms,
        )
    }

    /// `self - c` for a field constant `c`.
    pub fn sub_constant(&self, c: u64) -> FpPolynomial {
        let neg = (self.prime - c % self.prime) % self.prime;
        FpPolynomial::new(
            self.prime,
            self.n,
            self.degree_bound,
            self.monomials
                .iter()
                .map(|(&m, &v)| (m, v))
                .chain([(0, neg)]),
        )
        .expect("constant shift keeps the polynomial well formed")
    }

    /// Substitutes the bits of `assignment` for the last `m` variables,
    /// leaving a polynomial in the first `n - m` variables.
    pub fn restrict_suffix(&self, m: usize, assignment: u64) -> FpPolynomial {
        assert!(m <= self.n, "suffix longer than the variable list");
        let keep = self.n - m;
        let prefix_mask = if keep == MAX_VARS {
            u64::MAX
        } else {
            (1u64 << keep) - 1
        };
        let suffix_bits = if keep >= MAX_VARS {
            0
        } else {
            assignment << keep
        };
        let terms = self.monomials.iter().filter_map(|(&mono, &c)| {
            let suffix_part = mono & !prefix_mask;
            (suffix_part & suffix_bits == suffix_part).then_some((mono & prefix_mask, c))
        });
        FpPolynomial::new(self.prime, keep, self.degree_bound, terms)
            .expect("restriction keeps the polynomial well formed")
    }
}

impl Gate for FpPolynomial {
    type Value = u64;

    fn n(&self) -> usize {
        self.n
    }

    fn eval(&self, x: &[bool]) -> Result<u64> {
        Ok(self.eval_mask(checked_point(self.n, x)?))
    }
}

impl fmt::Display for FpPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.monomials.is_empty() {
            return write!(f, "0 (mod {})", self.prime);
        }
        let mut first = true;
        for (&mask, &c) in &self.monomials {
            if !first {
                f.write_str(" + ")?;
            }
            first = false;
            let vars: Vec<String> = (0..self.n)
                .filter(|i| mask >> i & 1 == 1)
                .map(|i| format!("x{}", i + 1))
                .collect();
            match (c, vars.is_empty()) {
                (_, true) => write!(f, "{c}")?,
                (1, false) => write!(f, "{}", vars.join("·"))?,
                _ => write!(f, "{c}·{}", vars.join("·"))?,
            }
        }
        write!(f, " (mod {})", self.prime)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    Thr,
    Ethr,
    Relu,
    FpPoly,
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Family::Thr => "thr",
            Family::Ethr => "ethr",
            Family::Relu => "relu",
            Family::FpPoly => "fp",
        })
    }
}

/// A homogeneous list of gates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GateList {
    Thr(Vec<ThresholdGate>),
    Ethr(Vec<ExactThresholdGate>),
    Relu(Vec<ReluGate>),
    Fp(Vec<FpPolynomial>),
}

impl GateList {
    pub fn empty(family: Family) -> Self {
        match family {
            Family::Thr => GateList::Thr(Vec::new()),
            Family::Ethr => GateList::Ethr(Vec::new()),
            Family::Relu => GateList::Relu(Vec::new()),
            Family::FpPoly => GateList::Fp(Vec::new()),
        }
    }

    pub fn family(&self) -> Family {
        match self {
            GateList::Thr(_) => Family::Thr,
            GateList::Ethr(_) => Family::Ethr,
            GateList::Relu(_) => Family::Relu,
            GateList::Fp(_) => Family::FpPoly,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            GateList::Thr(g) => g.len(),
            GateList::Ethr(g) => g.len(),
            GateList::Relu(g) => g.len(),
            GateList::Fp(g) => g.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn arity(&self, i: usize) -> usize {
        match self {
            GateList::Thr(g) => g[i].n(),
            GateList::Ethr(g) => g[i].n(),
            GateList::Relu(g) => g[i].n(),
            GateList::Fp(g) => g[i].n(),
        }
    }

    /// Shared prime of an `Fp` list, if any gate is present.
    pub fn prime(&self) -> Option<u64> {
        match self {
            GateList::Fp(g) => g.first().map(FpPolynomial::prime),
            _ => None,
        }
    }

    /// Checks that every gate has `n` variables and all polynomials share a prime.
    pub fn check(&self, n: usize) -> Result<()> {
        for i in 0..self.len() {
            check_dims(n, self.arity(i))?;
        }
        if let GateList::Fp(polys) = self {
            for q in polys.iter().skip(1) {
                polys[0].check_same_field(q)?;
            }
        }
        Ok(())
    }

    /// The sub-list at the given indices, in the given order (repeats allowed).
    pub fn select(&self, indices: &[usize]) -> GateList {
        fn pick<T: Clone>(items: &[T], indices: &[usize]) -> Vec<T> {
            indices.iter().map(|&i| items[i].clone()).collect()
        }
        match self {
            GateList::Thr(g) => GateList::Thr(pick(g, indices)),
            GateList::Ethr(g) => GateList::Ethr(pick(g, indices)),
            GateList::Relu(g) => GateList::Relu(pick(g, indices)),
            GateList::Fp(g) => GateList::Fp(pick(g, indices)),
        }
    }

    /// Concatenation of two lists of the same family.
    pub fn concat(&self, other: &GateList) -> Result<GateList> {
        Ok(match (self, other) {
            (GateList::Thr(a), GateList::Thr(b)) => GateList::Thr([&a[..], b].concat()),
            (GateList::Ethr(a), GateList::Ethr(b)) => GateList::Ethr([&a[..], b].concat()),
            (GateList::Relu(a), GateList::Relu(b)) => GateList::Relu([&a[..], b].concat()),
            (GateList::Fp(a), GateList::Fp(b)) => GateList::Fp([&a[..], b].concat()),
            _ => return Err(Error::FamilyMismatch(self.family(), other.family())),
        })
    }

    /// Value of gate `i` at a point, with polynomial values lifted to integers.
    pub fn value_at(&self, i: usize, mask: u64) -> Rational {
        let fire = |b: bool| {
            if b {
                Rational::one()
            } else {
                Rational::zero()
            }
        };
        match self {
            GateList::Thr(g) => fire(g[i].eval_mask(mask)),
            GateList::Ethr(g) => fire(g[i].eval_mask(mask)),
            GateList::Relu(g) => g[i].eval_mask(mask),
            GateList::Fp(g) => Rational::from_integer(g[i].eval_mask(mask).into()),
        }
    }
}

/// A sparse linear combination `sum_i coefficients[i] * gates[i]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinComb {
    n: usize,
    coefficients: Vec<Rational>,
    gates: GateList,
}

impl LinComb {
    pub fn new(n: usize, coefficients: Vec<Rational>, gates: GateList) -> Result<Self> {
        if coefficients.len() != gates.len() {
            return Err(Error::ArityMismatch {
                coefficients: coefficients.len(),
                gates: gates.len(),
            });
        }
        if n >= MAX_VARS {
            return Err(Error::TooManyVariables(n));
        }
        gates.check(n)?;
        Ok(LinComb {
            n,
            coefficients,
            gates,
        })
    }

    /// Every coefficient equal to one.
    pub fn unit(n: usize, gates: GateList) -> Result<Self> {
        let coefficients = vec![Rational::one(); gates.len()];
        Self::new(n, coefficients, gates)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn coefficients(&self) -> &[Rational] {
        &self.coefficients
    }

    pub fn gates(&self) -> &GateList {
        &self.gates
    }

    pub fn family(&self) -> Family {
        self.gates.family()
    }

    pub fn sparsity(&self) -> usize {
        self.coefficients.len()
    }

    pub fn eval_mask(&self, mask: u64) -> Rational {
        self.coefficients
            .iter()
            .enumerate()
            .map(|(i, c)| c * self.gates.value_at(i, mask))
            .sum()
    }

    pub fn eval(&self, x: &[bool]) -> Result<Rational> {
        Ok(self.eval_mask(checked_point(self.n, x)?))
    }

    /// Same gates in a new order: position `i` of the result holds input `order[i]`.
    pub fn permuted(&self, order: &[usize]) -> LinComb {
        LinComb {
            n: self.n,
            coefficients: order.iter().map(|&i| self.coefficients[i].clone()).collect(),
            gates: self.gates.select(order),
        }
    }
}
