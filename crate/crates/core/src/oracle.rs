//! Brute-force `2^n` reference implementations.
//!
//! Every fast kernel in this crate is checked against these. They evaluate
//! gates point by point; threshold gates are pre-scaled to machine integers
//! when that is exact, purely to keep the enumeration loop cheap.

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::context::Caps;
use crate::error::{Error, Resource, Result};
use crate::gates::{
    bits_of, common_denominator, cube, scaled_integers, FpPolynomial, GateList, LinComb, Rational,
};

fn check_cap(n: usize, caps: &Caps) -> Result<()> {
    if n > caps.oracle_vars {
        return Err(Error::cap(Resource::OracleVariables, n, caps.oracle_vars as u64));
    }
    Ok(())
}

/// `[<w, x> >= t]` or `[<w, x> == t]` with weights scaled to `i128`.
struct IntIndicator {
    weights: Vec<i128>,
    rhs: i128,
    exact: bool,
}

impl IntIndicator {
    fn compile(weights: &[Rational], rhs: &Rational, exact: bool) -> Option<Self> {
        let scale = common_denominator(weights.iter().chain([rhs]));
        let w = scaled_integers(weights, &scale);
        let span: BigInt = w.iter().map(|x| x.abs()).sum();
        span.to_i128()?.checked_mul(4)?;
        let rhs = (rhs * Rational::from_integer(scale)).to_integer();
        Some(IntIndicator {
            weights: w.iter().map(|x| x.to_i128()).collect::<Option<_>>()?,
            rhs: rhs.to_i128()?,
            exact,
        })
    }

    #[inline]
    fn fires(&self, mask: u64) -> bool {
        let mut s = 0i128;
        let mut m = mask;
        while m != 0 {
            s += self.weights[m.trailing_zeros() as usize];
            m &= m - 1;
        }
        if self.exact {
            s == self.rhs
        } else {
            s >= self.rhs
        }
    }
}

fn indicators(gates: &GateList) -> Option<Vec<IntIndicator>> {
    match gates {
        GateList::Thr(g) => g
            .iter()
            .map(|g| IntIndicator::compile(g.weights(), g.threshold(), false))
            .collect(),
        GateList::Ethr(g) => g
            .iter()
            .map(|g| IntIndicator::compile(g.weights(), g.target(), true))
            .collect(),
        _ => None,
    }
}

/// `sum_x prod_i f_i(x)` by full enumeration.
pub fn oracle_sumprod(n: usize, gates: &GateList, caps: &Caps) -> Result<Rational> {
    gates.check(n)?;
    check_cap(n, caps)?;
    if let Some(ind) = indicators(gates) {
        let count = cube(n)
            .filter(|&m| ind.iter().all(|g| g.fires(m)))
            .count();
        return Ok(Rational::from_integer(count.into()));
    }
    if let GateList::Fp(polys) = gates {
        return Ok(Rational::from_integer(fp_sumprod(n, polys)));
    }
    let k = gates.len();
    Ok(cube(n)
        .map(|m| {
            (0..k).fold(Rational::one(), |acc, i| {
                if acc.is_zero() {
                    acc
                } else {
                    acc * gates.value_at(i, m)
                }
            })
        })
        .sum())
}

fn fp_sumprod(n: usize, polys: &[FpPolynomial]) -> BigInt {
    cube(n)
        .map(|m| {
            polys
                .iter()
                .fold(BigInt::one(), |acc, q| acc * BigInt::from(q.eval_mask(m)))
        })
        .sum()
}

/// Outcome of the brute-force Boolean check.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OracleVerdict {
    Boolean,
    /// First point (canonical order) whose value lies outside `{0, 1}`.
    NonBoolean { witness: Vec<bool>, value: Rational },
}

impl OracleVerdict {
    pub fn is_boolean(&self) -> bool {
        matches!(self, OracleVerdict::Boolean)
    }
}

fn is_bit(v: &Rational) -> bool {
    v.is_zero() || v.is_one()
}

pub fn oracle_check_boolean(c: &LinComb, caps: &Caps) -> Result<OracleVerdict> {
    check_cap(c.n(), caps)?;
    for m in cube(c.n()) {
        let v = c.eval_mask(m);
        if !is_bit(&v) {
            return Ok(OracleVerdict::NonBoolean {
                witness: bits_of(m, c.n()),
                value: v,
            });
        }
    }
    Ok(OracleVerdict::Boolean)
}

/// `sum_x f(x)^2 (1 - f(x))^2`, the deviation from Boolean-valuedness.
pub fn oracle_deviation(c: &LinComb, caps: &Caps) -> Result<Rational> {
    check_cap(c.n(), caps)?;
    Ok(cube(c.n())
        .map(|m| {
            let v = c.eval_mask(m);
            let w = Rational::one() - &v;
            &v * &v * &w * &w
        })
        .sum())
}

/// `sum_x (f1(x) - f2(x))^2`
pub fn oracle_squared_distance(a: &LinComb, b: &LinComb, caps: &Caps) -> Result<Rational> {
    if a.n() != b.n() {
        return Err(Error::DimensionMismatch {
            expected: a.n(),
            found: b.n(),
        });
    }
    check_cap(a.n(), caps)?;
    Ok(cube(a.n())
        .map(|m| {
            let d = a.eval_mask(m) - b.eval_mask(m);
            &d * &d
        })
        .sum())
}

/// `|{x : f(x) = 1}|`; fails on the first value outside `{0, 1}`.
pub fn oracle_count_sat(c: &LinComb, caps: &Caps) -> Result<u128> {
    check_cap(c.n(), caps)?;
    let mut count = 0u128;
    for m in cube(c.n()) {
        let v = c.eval_mask(m);
        if v.is_one() {
            count += 1;
        } else if !v.is_zero() {
            return Err(Error::NotBoolean(format!(
                "value {v} at point {:?}",
                bits_of(m, c.n())
            )));
        }
    }
    Ok(count)
}

/// `|{x : polys[i](x) = targets[i] for all i}|`
pub fn oracle_count_fp_system(
    n: usize,
    polys: &[FpPolynomial],
    targets: &[u64],
    caps: &Caps,
) -> Result<u128> {
    if polys.len() != targets.len() {
        return Err(Error::ArityMismatch {
            coefficients: targets.len(),
            gates: polys.len(),
        });
    }
    GateList::Fp(polys.to_vec()).check(n)?;
    check_cap(n, caps)?;
    Ok(cube(n)
        .filter(|&m| {
            polys
                .iter()
                .zip(targets)
                .all(|(q, &t)| q.eval_mask(m) == t % q.prime())
        })
        .count() as u128)
}

/// Value histogram of one polynomial: entry `a` counts the points where `q(x) = a`.
pub fn oracle_value_histogram(q: &FpPolynomial, caps: &Caps) -> Result<Vec<u128>> {
    use crate::gates::Gate;
    check_cap(q.n(), caps)?;
    let mut hist = vec![0u128; q.prime() as usize];
    for m in cube(q.n()) {
        hist[q.eval_mask(m) as usize] += 1;
    }
    Ok(hist)
}
