//! Structural gate rewrites used by the Sum-Product kernels.
//!
//! * a threshold gate as a disjoint sum of parallel exact-threshold gates,
//! * a conjunction of exact-threshold gates as one exact-threshold gate,
//! * a threshold gate as the difference of two ReLU gates.
//!
//! All of these expect integer weights; use `normalize_integer` first.

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Resource, Result};
use crate::gates::{linear_range, ExactThresholdGate, Gate, Rational, ReluGate, ThresholdGate};

/// Achievable targets `lo..=hi` of the exact-threshold decomposition of
/// `[<w, x> >= t]`, or `None` if the gate never fires.
pub(crate) fn decomposition_range(weights: &[BigInt], threshold: &BigInt) -> Option<(BigInt, BigInt)> {
    let (min, max) = linear_range(weights);
    let lo = if threshold > &min { threshold.clone() } else { min };
    (lo <= max).then_some((lo, max))
}

/// Rewrites `[<w, x> >= t]` as `sum_v [<w, x> == v]` over the achievable
/// values `v >= t`. At most one returned gate fires at any point.
pub fn thr_to_ethrs(g: &ThresholdGate, term_cap: u64) -> Result<Vec<ExactThresholdGate>> {
    let (weights, threshold) = g.integer_parts().ok_or(Error::NonIntegerWeights)?;
    let Some((lo, hi)) = decomposition_range(&weights, &threshold) else {
        return Ok(Vec::new());
    };
    let terms = &hi - &lo + 1u32;
    match terms.to_u64() {
        Some(t) if t <= term_cap => {}
        _ => return Err(Error::cap(Resource::DecompositionTerms, terms, term_cap)),
    }
    let mut out = Vec::new();
    let mut v = lo;
    while v <= hi {
        out.push(ExactThresholdGate::from_big(weights.clone(), v.clone()));
        v += 1u32;
    }
    Ok(out)
}

fn integer_ethrs(gs: &[ExactThresholdGate]) -> Result<Vec<(Vec<BigInt>, BigInt)>> {
    let first = gs.first().ok_or(Error::EmptyConjunction)?;
    gs.iter()
        .map(|g| {
            if g.n() != first.n() {
                return Err(Error::DimensionMismatch {
                    expected: first.n(),
                    found: g.n(),
                });
            }
            g.integer_parts().ok_or(Error::NonIntegerWeights)
        })
        .collect()
}

/// `2 * max_i (sum_j |w_ij| + |t_i|) + 1`: strictly larger than any
/// `|<w_i, x> - t_i|`, so the forms cannot interfere after scaling by powers
/// of it.
pub fn conjunction_base(gs: &[ExactThresholdGate]) -> Result<BigInt> {
    let parts = integer_ethrs(gs)?;
    let widest = parts
        .iter()
        .map(|(w, t)| w.iter().map(|x| x.abs()).sum::<BigInt>() + t.abs())
        .max()
        .unwrap_or_default();
    Ok(widest * 2u32 + 1u32)
}

/// Collapses `AND_i [<w_i, x> == t_i]` into `[<sum_i B^i w_i, x> == sum_i B^i t_i]`
/// with `B = conjunction_base(gs)`.
pub fn collapse_ethr_conjunction(gs: &[ExactThresholdGate]) -> Result<ExactThresholdGate> {
    let base = conjunction_base(gs)?;
    collapse_with_base(gs, &base)
}

/// Collapse with a caller-chosen base. The base must exceed
/// `|<w_i, x> - t_i|` for every gate and point; this is checked.
pub fn collapse_with_base(gs: &[ExactThresholdGate], base: &BigInt) -> Result<ExactThresholdGate> {
    let parts = integer_ethrs(gs)?;
    for (w, t) in &parts {
        let (lo, hi) = linear_range(w);
        let reach = (lo - t).abs().max((hi - t).abs());
        if base <= &reach {
            return Err(Error::Invariant(format!(
                "collapse base {base} does not exceed deviation {reach}"
            )));
        }
    }
    let n = parts[0].0.len();
    let mut weights = vec![BigInt::zero(); n];
    let mut target = BigInt::zero();
    let mut power = BigInt::one();
    for (w, t) in &parts {
        for (acc, wi) in weights.iter_mut().zip(w) {
            *acc += &power * wi;
        }
        target += &power * t;
        power *= base;
    }
    Ok(ExactThresholdGate::from_big(weights, target))
}

/// `[<w, x> >= t] = max{0, <w, x> - t + 1} - max{0, <w, x> - t}` on Boolean
/// points, since `<w, x> - t` is an integer there.
pub fn thr_to_relu_pair(g: &ThresholdGate) -> Result<(ReluGate, ReluGate)> {
    let (weights, threshold) = g.integer_parts().ok_or(Error::NonIntegerWeights)?;
    let w: Vec<Rational> = weights.into_iter().map(Rational::from_integer).collect();
    let upper = ReluGate::new(w.clone(), Rational::from_integer(1 - &threshold))?;
    let lower = ReluGate::new(w, Rational::from_integer(-threshold))?;
    Ok((upper, lower))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gates::cube;
    use proptest::prelude::*;

    const CAP: u64 = 1_000_000;

    fn targets(gs: &[ExactThresholdGate]) -> Vec<i64> {
        gs.iter()
            .map(|g| g.target().to_integer().to_i64().unwrap())
            .collect()
    }

    #[test]
    fn threshold_decomposition_examples() {
        let g = ThresholdGate::from_ints(&[1, 1], 1);
        let parts = thr_to_ethrs(&g, CAP).unwrap();
        assert_eq!(targets(&parts), vec![1, 2]);
        let sizes: Vec<usize> = parts
            .iter()
            .map(|e| cube(2).filter(|&m| e.eval_mask(m)).count())
            .collect();
        assert_eq!(sizes, vec![2, 1]);

        let neg = thr_to_ethrs(&ThresholdGate::from_ints(&[-1], 0), CAP).unwrap();
        assert_eq!(targets(&neg), vec![0]);

        let never = thr_to_ethrs(&ThresholdGate::from_ints(&[1, 2, 3], 7), CAP).unwrap();
        assert!(never.is_empty());
    }

    #[test]
    fn decomposition_prunes_below_minimum() {
        // every sum of (-3, 2) is >= -3, so the t = -10 gate is constant one
        let parts = thr_to_ethrs(&ThresholdGate::from_ints(&[-3, 2], -10), CAP).unwrap();
        assert_eq!(targets(&parts), vec![-3, -2, -1, 0, 1, 2]);
    }

    #[test]
    fn decomposition_respects_cap() {
        let g = ThresholdGate::from_ints(&[1000, 1000], 0);
        assert!(matches!(
            thr_to_ethrs(&g, 100),
            Err(Error::CapExceeded {
                resource: Resource::DecompositionTerms,
                ..
            })
        ));
        let frac = ThresholdGate::new(vec!["1/2".parse().unwrap()], Rational::zero()).unwrap();
        assert!(matches!(thr_to_ethrs(&frac, CAP), Err(Error::NonIntegerWeights)));
    }

    #[test]
    fn collapse_examples() {
        let a = ExactThresholdGate::from_ints(&[1, 0], 1);
        let b = ExactThresholdGate::from_ints(&[0, 1], 1);
        assert_eq!(conjunction_base(&[a.clone(), b.clone()]).unwrap(), BigInt::from(5));
        let both = collapse_ethr_conjunction(&[a.clone(), b]).unwrap();
        assert_eq!(both, ExactThresholdGate::from_ints(&[1, 5], 6));
        let fired: Vec<u64> = cube(2).filter(|&m| both.eval_mask(m)).collect();
        assert_eq!(fired, vec![0b11]);

        assert_eq!(collapse_ethr_conjunction(std::slice::from_ref(&a)).unwrap(), a);

        let one_of = ExactThresholdGate::from_ints(&[1, 1], 1);
        let c = collapse_ethr_conjunction(&[one_of, a]).unwrap();
        let fired: Vec<u64> = cube(2).filter(|&m| c.eval_mask(m)).collect();
        assert_eq!(fired, vec![0b01]);
    }

    #[test]
    fn collapse_errors() {
        assert!(matches!(collapse_ethr_conjunction(&[]), Err(Error::EmptyConjunction)));
        let a = ExactThresholdGate::from_ints(&[1, 0], 1);
        let b = ExactThresholdGate::from_ints(&[1], 1);
        assert!(matches!(
            collapse_ethr_conjunction(&[a.clone(), b]),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(matches!(
            collapse_with_base(&[a.clone(), a], &BigInt::from(1)),
            Err(Error::Invariant(_))
        ));
    }

    #[test]
    fn relu_pair_examples() {
        let (up, down) = thr_to_relu_pair(&ThresholdGate::from_ints(&[1], 1)).unwrap();
        assert_eq!(up, ReluGate::from_ints(&[1], 0));
        assert_eq!(down, ReluGate::from_ints(&[1], -1));
        for (m, expect) in [(1u64, 1), (0, 0)] {
            let diff = up.eval_mask(m) - down.eval_mask(m);
            assert_eq!(diff, Rational::from_integer(expect.into()));
        }
        let (up, down) = thr_to_relu_pair(&ThresholdGate::from_ints(&[0], 0)).unwrap();
        for m in cube(1) {
            assert_eq!(up.eval_mask(m) - down.eval_mask(m), Rational::one());
        }
    }

    fn int_thr() -> impl Strategy<Value = ThresholdGate> {
        (1usize..=10).prop_flat_map(|n| {
            (prop::collection::vec(-8i64..=8, n), -20i64..=20)
                .prop_map(|(w, t)| ThresholdGate::from_ints(&w, t))
        })
    }

    fn int_ethr_family() -> impl Strategy<Value = Vec<ExactThresholdGate>> {
        (1usize..=8, 1usize..=4).prop_flat_map(|(n, k)| {
            prop::collection::vec(
                (prop::collection::vec(-5i64..=5, n), -6i64..=6)
                    .prop_map(|(w, t)| ExactThresholdGate::from_ints(&w, t)),
                k,
            )
        })
    }

    proptest! {
        #[test]
        fn decomposition_is_disjoint_and_sound(g in int_thr()) {
            let parts = thr_to_ethrs(&g, CAP).unwrap();
            for m in cube(g.n()) {
                let fired = parts.iter().filter(|e| e.eval_mask(m)).count();
                prop_assert!(fired <= 1);
                prop_assert_eq!(fired == 1, g.eval_mask(m));
            }
        }

        #[test]
        fn collapse_is_the_conjunction(gs in int_ethr_family()) {
            let c = collapse_ethr_conjunction(&gs).unwrap();
            for m in cube(gs[0].n()) {
                prop_assert_eq!(c.eval_mask(m), gs.iter().all(|g| g.eval_mask(m)));
            }
        }

        #[test]
        fn collapse_weight_bound(gs in int_ethr_family()) {
            let base = conjunction_base(&gs).unwrap();
            let c = collapse_ethr_conjunction(&gs).unwrap();
            let widest = gs
                .iter()
                .map(|g| g.weights().iter().map(|w| w.to_integer().abs()).sum::<BigInt>())
                .max()
                .unwrap();
            let bound = num_traits::pow(base, gs.len()) * widest;
            for w in c.weights() {
                prop_assert!(w.to_integer().abs() <= bound);
            }
        }

        #[test]
        fn relu_pair_reproduces_threshold(g in int_thr()) {
            let (up, down) = thr_to_relu_pair(&g).unwrap();
            for m in cube(g.n()) {
                let expect = if g.eval_mask(m) { Rational::one() } else { Rational::zero() };
                prop_assert_eq!(up.eval_mask(m) - down.eval_mask(m), expect);
            }
        }
    }
}
