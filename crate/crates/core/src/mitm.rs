//! Meet-in-the-middle kernels over a split of the variables into the first
//! `ceil(n/2)` and the remaining `floor(n/2)`.
//!
//! Both sides are enumerated once, grouped by the partial value of the exact
//! threshold's linear form, and stored as sorted [`HalfTable`]s. A query for a
//! target `t` then walks the two tables towards each other and combines every
//! pair of keys summing to `t`.

use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Resource, Result};
use crate::gates::{
    common_denominator, linear_range, scaled_integers, ExactThresholdGate, Gate, Rational,
    ReluGate,
};

/// Variables per side above which a half enumeration is refused.
pub const MAX_HALF_VARS: usize = 32;

/// Sizes of the two halves: `(ceil(n/2), floor(n/2))`.
pub fn split_sizes(n: usize) -> (usize, usize) {
    (n.div_ceil(2), n / 2)
}

/// Data attached to one key of a [`HalfTable`]. Entries sharing a key are
/// merged with `absorb`.
pub trait Payload: Clone {
    fn absorb(&mut self, other: &Self);
}

impl Payload for u64 {
    fn absorb(&mut self, other: &Self) {
        *self += other;
    }
}

impl<S: Scalar> Payload for Vec<S> {
    fn absorb(&mut self, other: &Self) {
        for (a, b) in self.iter_mut().zip(other) {
            a.add_ref(b);
        }
    }
}

/// Sorted table with one entry per distinct key; a key's payload is the sum
/// of the payloads of every partial assignment producing that key.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HalfTable<P> {
    entries: Vec<(i128, P)>,
}

impl<P: Payload> HalfTable<P> {
    pub fn aggregate(rows: impl IntoIterator<Item = (i128, P)>) -> Self {
        let mut rows: Vec<(i128, P)> = rows.into_iter().collect();
        rows.sort_by_key(|r| r.0);
        let mut entries: Vec<(i128, P)> = Vec::with_capacity(rows.len());
        for (key, payload) in rows {
            match entries.last_mut() {
                Some((last, acc)) if *last == key => acc.absorb(&payload),
                _ => entries.push((key, payload)),
            }
        }
        HalfTable { entries }
    }
}

impl<P> HalfTable<P> {
    pub fn entries(&self) -> &[(i128, P)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, key: i128) -> Option<&P> {
        self.entries
            .binary_search_by_key(&key, |e| e.0)
            .ok()
            .map(|i| &self.entries[i].1)
    }

    fn bounds(&self) -> Option<(i128, i128)> {
        Some((self.entries.first()?.0, self.entries.last()?.0))
    }
}

/// Calls `f` on every pair of entries whose keys sum to `target`.
fn for_each_match<P, Q>(
    first: &HalfTable<P>,
    second: &HalfTable<Q>,
    target: i128,
    mut f: impl FnMut(&P, &Q),
) {
    let (Some((lo1, hi1)), Some((lo2, hi2))) = (first.bounds(), second.bounds()) else {
        return;
    };
    if target < lo1 + lo2 || target > hi1 + hi2 {
        return;
    }
    let right = second.entries();
    let mut j = right.len();
    for (k1, p) in first.entries() {
        let need = target - k1;
        while j > 0 && right[j - 1].0 > need {
            j -= 1;
        }
        if j == 0 {
            break;
        }
        if right[j - 1].0 == need {
            f(p, &right[j - 1].1);
        }
    }
}

/// Linear-form weights as `i128`, refusing forms whose range could overflow.
pub(crate) fn narrow_keys(weights: &[BigInt]) -> Result<Vec<i128>> {
    let span: BigInt = weights.iter().map(|w| w.abs()).sum();
    let limit = BigInt::from(i128::MAX >> 3);
    if span > limit {
        return Err(Error::cap(
            Resource::KeyWidth,
            format!("{} bits", span.bits()),
            limit.bits(),
        ));
    }
    Ok(weights.iter().map(|w| w.to_i128().unwrap()).collect())
}

fn check_half(vars: usize) -> Result<()> {
    if vars > MAX_HALF_VARS {
        return Err(Error::cap(Resource::HalfTable, vars, MAX_HALF_VARS as u64));
    }
    Ok(())
}

/// Subset sums of `weights`, indexed by mask.
fn partial_sums<S: Scalar>(weights: &[S]) -> Vec<S> {
    let mut sums = vec![S::zero_value(); 1usize << weights.len()];
    for mask in 1..sums.len() {
        let mut s = sums[mask & (mask - 1)].clone();
        s.add_ref(&weights[mask.trailing_zeros() as usize]);
        sums[mask] = s;
    }
    sums
}

/// Counts of `#{x : <w, x> = t}` for arbitrary targets over one weight vector.
#[derive(Debug, Clone)]
pub struct SubsetSumIndex {
    first: HalfTable<u64>,
    second: HalfTable<u64>,
    partials: u64,
}

impl SubsetSumIndex {
    pub fn build(weights: &[BigInt]) -> Result<Self> {
        let keys = narrow_keys(weights)?;
        let (h1, h2) = split_sizes(keys.len());
        check_half(h1)?;
        let (left, right) = keys.split_at(h1);
        let table = |side: &[i128]| HalfTable::aggregate(partial_sums(side).into_iter().map(|k| (k, 1u64)));
        Ok(SubsetSumIndex {
            first: table(left),
            second: table(right),
            partials: (1u64 << h1) + (1u64 << h2),
        })
    }

    /// Partial assignments enumerated while building: `2^ceil(n/2) + 2^floor(n/2)`.
    pub fn partials_enumerated(&self) -> u64 {
        self.partials
    }

    pub fn count(&self, target: &BigInt) -> u128 {
        target.to_i128().map_or(0, |t| self.count_i128(t))
    }

    pub(crate) fn count_i128(&self, target: i128) -> u128 {
        let mut total = 0u128;
        for_each_match(&self.first, &self.second, target, |a, b| {
            total += u128::from(*a) * u128::from(*b);
        });
        total
    }
}

/// Result of [`count_subset_sum`], with its enumeration counter.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SubsetSumCount {
    pub count: u128,
    pub partials_enumerated: u64,
}

/// `#{x in {0,1}^n : <weights, x> = target}` by split-and-list.
pub fn count_subset_sum(weights: &[BigInt], target: &BigInt) -> Result<SubsetSumCount> {
    let index = SubsetSumIndex::build(weights)?;
    Ok(SubsetSumCount {
        count: index.count(target),
        partials_enumerated: index.partials_enumerated(),
    })
}

/// An affine form `<weights, x> + bias`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AffineForm {
    pub weights: Vec<Rational>,
    pub bias: Rational,
}

impl AffineForm {
    pub fn new(weights: Vec<Rational>, bias: Rational) -> Self {
        AffineForm { weights, bias }
    }

    /// The pre-activation `<w, x> + a` of a ReLU gate.
    pub fn of_relu(g: &ReluGate) -> Self {
        AffineForm::new(g.weights().to_vec(), g.bias().clone())
    }

    pub fn eval_mask(&self, mask: u64) -> Rational {
        crate::gates::dot_mask(&self.weights, mask) + &self.bias
    }
}

/// Ring element used for the subset-product payloads. `i128` is used when a
/// magnitude bound proves it cannot overflow, `BigInt` otherwise.
pub trait Scalar: Clone + fmt::Debug {
    fn zero_value() -> Self;
    fn one_value() -> Self;
    fn from_big(v: &BigInt) -> Self;
    fn add_ref(&mut self, other: &Self);
    fn mul_ref(&self, other: &Self) -> Self;
    fn into_big(self) -> BigInt;
}

impl Scalar for i128 {
    fn zero_value() -> Self {
        0
    }
    fn one_value() -> Self {
        1
    }
    fn from_big(v: &BigInt) -> Self {
        v.to_i128().expect("value within the proven i128 bound")
    }
    fn add_ref(&mut self, other: &Self) {
        *self += other;
    }
    fn mul_ref(&self, other: &Self) -> Self {
        self * other
    }
    fn into_big(self) -> BigInt {
        self.into()
    }
}

impl Scalar for BigInt {
    fn zero_value() -> Self {
        Zero::zero()
    }
    fn one_value() -> Self {
        One::one()
    }
    fn from_big(v: &BigInt) -> Self {
        v.clone()
    }
    fn add_ref(&mut self, other: &Self) {
        *self += other;
    }
    fn mul_ref(&self, other: &Self) -> Self {
        self * other
    }
    fn into_big(self) -> BigInt {
        self
    }
}

#[derive(Debug, Clone)]
struct Weighted<S> {
    first: HalfTable<Vec<S>>,
    second: HalfTable<Vec<S>>,
}

impl<S: Scalar> Weighted<S> {
    /// Payload layout: entry `T` (a subset of the `k` forms, as a mask) holds
    /// `prod_{j in T} v[j]` on the first side and `prod_{j not in T} w[j]` on
    /// the second, so their inner product is `prod_j (v[j] + w[j])`.
    fn build(keys: &[i128], forms: &[(Vec<BigInt>, BigInt)], h1: usize) -> Self {
        let k = forms.len();
        let n = keys.len();
        let side = |lo: usize, hi: usize, with_bias: bool, complement: bool| {
            let key_sums = partial_sums(&keys[lo..hi]);
            let form_sums: Vec<Vec<S>> = forms
                .iter()
                .map(|(w, b)| {
                    let coeffs: Vec<S> = w[lo..hi].iter().map(S::from_big).collect();
                    let mut sums = partial_sums(&coeffs);
                    if with_bias {
                        let bias = S::from_big(b);
                        sums.iter_mut().for_each(|s| s.add_ref(&bias));
                    }
                    sums
                })
                .collect();
            let full = (1usize << k) - 1;
            let rows = key_sums.into_iter().enumerate().map(|(mask, key)| {
                let mut prod = vec![S::one_value(); 1 << k];
                for t in 1..prod.len() {
                    let j = t.trailing_zeros() as usize;
                    prod[t] = prod[t & (t - 1)].mul_ref(&form_sums[j][mask]);
                }
                let payload = if complement {
                    (0..=full).map(|t| prod[full ^ t].clone()).collect()
                } else {
                    prod
                };
                (key, payload)
            });
            HalfTable::aggregate(rows)
        };
        Weighted {
            first: side(0, h1, true, false),
            second: side(h1, n, false, true),
        }
    }

    fn sum(&self, target: i128) -> BigInt {
        let mut acc = S::zero_value();
        for_each_match(&self.first, &self.second, target, |v, w| {
            for (a, b) in v.iter().zip(w) {
                acc.add_ref(&a.mul_ref(b));
            }
        });
        acc.into_big()
    }
}

#[derive(Debug, Clone)]
enum Repr {
    Small(Weighted<i128>),
    Big(Weighted<BigInt>),
}

/// Answers `sum_{x : <w, x> = t} prod_j (<w_j, x> + a_j)` for arbitrary targets
/// `t` over one exact-threshold weight vector and a fixed list of affine forms.
#[derive(Debug, Clone)]
pub struct WeightedIndex {
    repr: Repr,
    denominator: BigInt,
    partials: u64,
}

impl WeightedIndex {
    pub fn build(weights: &[BigInt], affines: &[AffineForm]) -> Result<Self> {
        let n = weights.len();
        for a in affines {
            if a.weights.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: a.weights.len(),
                });
            }
        }
        let keys = narrow_keys(weights)?;
        let (h1, h2) = split_sizes(n);
        check_half(h1)?;

        // each form is scaled to integers; the product of the scales is divided out at the end
        let mut denominator = BigInt::one();
        let mut bound = BigInt::one() << (n + affines.len());
        let forms: Vec<(Vec<BigInt>, BigInt)> = affines
            .iter()
            .map(|a| {
                let scale = common_denominator(a.weights.iter().chain([&a.bias]));
                let w = scaled_integers(&a.weights, &scale);
                let b = (&a.bias * Rational::from_integer(scale.clone())).to_integer();
                let magnitude: BigInt = w.iter().map(|x| x.abs()).sum::<BigInt>() + b.abs();
                let m = magnitude.max(BigInt::one());
                bound *= &m * &m;
                denominator *= scale;
                (w, b)
            })
            .collect();

        let repr = if bound.bits() < 125 {
            Repr::Small(Weighted::build(&keys, &forms, h1))
        } else {
            Repr::Big(Weighted::build(&keys, &forms, h1))
        };
        Ok(WeightedIndex {
            repr,
            denominator,
            partials: (1u64 << h1) + (1u64 << h2),
        })
    }

    pub fn partials_enumerated(&self) -> u64 {
        self.partials
    }

    /// Product of the per-form scale factors.
    pub fn denominator(&self) -> &BigInt {
        &self.denominator
    }

    /// The weighted sum for `target`, times [`Self::denominator`].
    pub(crate) fn scaled_sum_i128(&self, target: i128) -> BigInt {
        match &self.repr {
            Repr::Small(w) => w.sum(target),
            Repr::Big(w) => w.sum(target),
        }
    }

    pub fn sum(&self, target: &BigInt) -> Rational {
        let scaled = target
            .to_i128()
            .map_or_else(BigInt::zero, |t| self.scaled_sum_i128(t));
        Rational::new(scaled, self.denominator.clone())
    }
}

/// `sum_{x : g(x) = 1} prod_j (<w_j, x> + a_j)` for an integer exact-threshold gate.
pub fn weighted_ethr_affine_sum(g: &ExactThresholdGate, affines: &[AffineForm]) -> Result<Rational> {
    let (weights, target) = g.integer_parts().ok_or(Error::NonIntegerWeights)?;
    debug_assert_eq!(weights.len(), g.n());
    let (lo, hi) = linear_range(&weights);
    let index = WeightedIndex::build(&weights, affines)?;
    if target < lo || target > hi {
        return Ok(Rational::zero());
    }
    Ok(index.sum(&target))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gates::cube;
    use proptest::prelude::*;

    fn big(v: &[i64]) -> Vec<BigInt> {
        v.iter().map(|&x| x.into()).collect()
    }

    fn q(s: &str) -> Rational {
        s.parse().unwrap()
    }

    fn brute_count(w: &[i64], t: i64) -> u128 {
        cube(w.len())
            .filter(|&m| {
                (0..w.len())
                    .filter(|i| m >> i & 1 == 1)
                    .map(|i| w[i])
                    .sum::<i64>()
                    == t
            })
            .count() as u128
    }

    #[test]
    fn subset_sum_examples() {
        let c = |w: &[i64], t: i64| count_subset_sum(&big(w), &t.into()).unwrap().count;
        assert_eq!(c(&[1, 2, 3], 3), 2);
        assert_eq!(c(&[1, 1, 1, 1], 2), 6);
        assert_eq!(c(&[0, 0], 0), 4);
        assert_eq!(c(&[5], 4), 0);
        assert_eq!(c(&[], 0), 1);
    }

    #[test]
    fn partial_counter_is_the_split_size() {
        for n in 1..=17usize {
            let w: Vec<i64> = (0..n as i64).map(|i| 3 * i - 7).collect();
            let r = count_subset_sum(&big(&w), &BigInt::zero()).unwrap();
            let expect = (1u64 << n.div_ceil(2)) + (1u64 << (n / 2));
            assert_eq!(r.partials_enumerated, expect);
        }
    }

    #[test]
    fn half_table_aggregates_by_key() {
        let t = HalfTable::aggregate([(3, 1u64), (-1, 2), (3, 4), (0, 1)]);
        assert_eq!(t.entries(), &[(-1, 2), (0, 1), (3, 5)]);
        assert_eq!(t.get(3), Some(&5));
        assert_eq!(t.get(2), None);
    }

    #[test]
    fn oversized_keys_are_refused() {
        let huge = vec![BigInt::one() << 200u32, BigInt::one()];
        assert!(matches!(
            count_subset_sum(&huge, &BigInt::zero()),
            Err(Error::CapExceeded {
                resource: Resource::KeyWidth,
                ..
            })
        ));
    }

    #[test]
    fn weighted_examples() {
        let g = ExactThresholdGate::from_ints(&[1, 1], 1);
        let x1 = AffineForm::new(vec![q("1"), q("0")], q("0"));
        assert_eq!(weighted_ethr_affine_sum(&g, &[x1]).unwrap(), q("1"));
        assert_eq!(weighted_ethr_affine_sum(&g, &[]).unwrap(), q("2"));
        let unreachable = ExactThresholdGate::from_ints(&[1, 1], 3);
        let x2 = AffineForm::new(vec![q("0"), q("1")], q("5"));
        assert_eq!(weighted_ethr_affine_sum(&unreachable, &[x2]).unwrap(), q("0"));
    }

    #[test]
    fn weighted_with_fractional_forms() {
        // x in {(1,0),(0,1)}: (x1/2 + 1/3)(x2 - 1/4) = (5/6)(-1/4) + (1/3)(3/4) = 1/24
        let g = ExactThresholdGate::from_ints(&[1, 1], 1);
        let a = AffineForm::new(vec![q("1/2"), q("0")], q("1/3"));
        let b = AffineForm::new(vec![q("0"), q("1")], q("-1/4"));
        assert_eq!(weighted_ethr_affine_sum(&g, &[a, b]).unwrap(), q("1/24"));
    }

    fn brute_weighted(g: &ExactThresholdGate, forms: &[AffineForm]) -> Rational {
        cube(g.n())
            .filter(|&m| g.eval_mask(m))
            .map(|m| {
                forms
                    .iter()
                    .fold(Rational::one(), |acc, f| acc * f.eval_mask(m))
            })
            .sum()
    }

    fn frac() -> impl Strategy<Value = Rational> {
        (-6i64..=6, 1i64..=4).prop_map(|(a, b)| Rational::new(a.into(), b.into()))
    }

    fn weighted_instance() -> impl Strategy<Value = (ExactThresholdGate, Vec<AffineForm>)> {
        (1usize..=12, 0usize..=4).prop_flat_map(|(n, k)| {
            (
                (prop::collection::vec(-4i64..=4, n), -6i64..=6)
                    .prop_map(|(w, t)| ExactThresholdGate::from_ints(&w, t)),
                prop::collection::vec(
                    (prop::collection::vec(frac(), n), frac()).prop_map(|(w, b)| AffineForm::new(w, b)),
                    k,
                ),
            )
        })
    }

    proptest! {
        #[test]
        fn subset_sum_matches_enumeration(
            (w, t) in (1usize..=16).prop_flat_map(|n| (prop::collection::vec(-9i64..=9, n), -20i64..=20))
        ) {
            let r = count_subset_sum(&big(&w), &t.into()).unwrap();
            prop_assert_eq!(r.count, brute_count(&w, t));
        }

        #[test]
        fn weighted_matches_enumeration((g, forms) in weighted_instance()) {
            prop_assert_eq!(weighted_ethr_affine_sum(&g, &forms).unwrap(), brute_weighted(&g, &forms));
        }

        #[test]
        fn weighted_without_forms_counts((g, _) in weighted_instance()) {
            let (w, t) = g.integer_parts().unwrap();
            let count = count_subset_sum(&w, &t).unwrap().count;
            prop_assert_eq!(
                weighted_ethr_affine_sum(&g, &[]).unwrap(),
                Rational::from_integer(count.into())
            );
        }

        #[test]
        fn weighted_ignores_form_order((g, forms) in weighted_instance()) {
            let mut reversed = forms.clone();
            reversed.reverse();
            prop_assert_eq!(
                weighted_ethr_affine_sum(&g, &forms).unwrap(),
                weighted_ethr_affine_sum(&g, &reversed).unwrap()
            );
        }

        #[test]
        fn integer_forms_give_integers(
            (g, forms) in weighted_instance().prop_map(|(g, fs)| {
                let ints = fs.into_iter().map(|f| AffineForm::new(
                    f.weights.iter().map(|w| w.floor()).collect(),
                    f.bias.floor(),
                )).collect::<Vec<_>>();
                (g, ints)
            })
        ) {
            prop_assert!(weighted_ethr_affine_sum(&g, &forms).unwrap().is_integer());
        }
    }
}
