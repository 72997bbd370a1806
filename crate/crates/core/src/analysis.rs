//! Boolean-valuedness, satisfying-assignment counts and equality for sparse
//! linear combinations of gates, all reduced to Sum-Products of at most four
//! factors.
//!
//! For `f = sum_i alpha_i g_i`, the sum `sum_x f(x)^r` expands into one
//! Sum-Product per multiset of `r` gate indices. `f^2 (1 - f)^2` is
//! nonnegative and vanishes exactly on `{0, 1}`, so its sum over the cube is
//! zero iff `f` is Boolean.

use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::context::Context;
use crate::error::{Error, Result};
use crate::gates::{LinComb, Rational};
use crate::sumprod::sumprod;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BooleanVerdict {
    Boolean,
    /// `deviation = sum_x f(x)^2 (1 - f(x))^2 > 0`
    NonBoolean { deviation: Rational },
}

impl BooleanVerdict {
    pub fn is_boolean(&self) -> bool {
        matches!(self, BooleanVerdict::Boolean)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EqualityVerdict {
    Equal,
    /// `deviation = sum_x (f1(x) - f2(x))^2 > 0`
    Different { deviation: Rational },
}

impl EqualityVerdict {
    pub fn is_equal(&self) -> bool {
        matches!(self, EqualityVerdict::Equal)
    }
}

/// Whether [`count_sat`] first confirms the input is Boolean-valued.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SatCheck {
    Verify,
    /// The caller vouches for Boolean-valuedness; only the range of the
    /// result is checked.
    Trusted,
}

fn factorial(r: usize) -> u64 {
    (1..=r as u64).product()
}

/// Calls `visit(indices, multinomial)` for every nondecreasing `r`-tuple
/// drawn from `0..s`.
fn for_each_multiset(s: usize, r: usize, visit: &mut impl FnMut(&[usize], u64) -> Result<()>) -> Result<()> {
    fn go(
        s: usize,
        r: usize,
        start: usize,
        picked: &mut Vec<usize>,
        visit: &mut impl FnMut(&[usize], u64) -> Result<()>,
    ) -> Result<()> {
        if picked.len() == r {
            let mut ways = factorial(r);
            let mut run = 1;
            for w in picked.windows(2) {
                if w[0] == w[1] {
                    run += 1;
                } else {
                    ways /= factorial(run);
                    run = 1;
                }
            }
            ways /= factorial(run);
            return visit(picked, ways);
        }
        for i in start..s {
            picked.push(i);
            go(s, r, i, picked, visit)?;
            picked.pop();
        }
        Ok(())
    }
    go(s, r, 0, &mut Vec::with_capacity(r), visit)
}

/// `sum_r weight_r * sum_x f(x)^r` for the `(r, weight_r)` pairs given.
/// Each Sum-Product over a multiset of gates is issued once.
fn weighted_power_sums(ctx: &mut Context, c: &LinComb, powers: &[(usize, i64)]) -> Result<Rational> {
    let active: Vec<usize> = (0..c.sparsity())
        .filter(|&i| !c.coefficients()[i].is_zero())
        .collect();
    let mut total = Rational::zero();
    for &(r, weight) in powers {
        for_each_multiset(active.len(), r, &mut |picked, ways| {
            let gates: Vec<usize> = picked.iter().map(|&j| active[j]).collect();
            let coeff = gates
                .iter()
                .fold(Rational::from_integer((weight * ways as i64).into()), |acc, &g| {
                    acc * &c.coefficients()[g]
                });
            let value = sumprod(ctx, c.n(), &c.gates().select(&gates))?;
            total += coeff * value;
            Ok(())
        })?;
    }
    Ok(total)
}

/// Decides whether `c` takes only the values 0 and 1 on the cube.
pub fn check_boolean(ctx: &mut Context, c: &LinComb) -> Result<BooleanVerdict> {
    // f^2 (1 - f)^2 = f^2 - 2 f^3 + f^4
    let deviation = weighted_power_sums(ctx, c, &[(2, 1), (3, -2), (4, 1)])?;
    if deviation.is_negative() {
        return Err(Error::Invariant(format!("negative deviation {deviation}")));
    }
    Ok(if deviation.is_zero() {
        BooleanVerdict::Boolean
    } else {
        BooleanVerdict::NonBoolean { deviation }
    })
}

/// `|{x : f(x) = 1}|` as `sum_i alpha_i * sum_x g_i(x)`.
pub fn count_sat(ctx: &mut Context, c: &LinComb, check: SatCheck) -> Result<u128> {
    if check == SatCheck::Verify {
        if let BooleanVerdict::NonBoolean { deviation } = check_boolean(ctx, c)? {
            return Err(Error::NotBoolean(format!("deviation {deviation}")));
        }
    }
    let mut total = Rational::zero();
    for (i, alpha) in c.coefficients().iter().enumerate() {
        if alpha.is_zero() {
            continue;
        }
        total += alpha * sumprod(ctx, c.n(), &c.gates().select(&[i]))?;
    }
    let limit = Rational::from_integer(num_bigint::BigInt::one() << c.n());
    if !total.is_integer() || total.is_negative() || total > limit {
        return Err(Error::NotBoolean(format!("satisfying count {total} is not in 0..=2^{}", c.n())));
    }
    Ok(total.to_integer().to_u128().expect("bounded by 2^n"))
}

/// Compares two combinations of the same family on the same variables.
pub fn check_equal(ctx: &mut Context, a: &LinComb, b: &LinComb) -> Result<EqualityVerdict> {
    if a.n() != b.n() {
        return Err(Error::DimensionMismatch {
            expected: a.n(),
            found: b.n(),
        });
    }
    let gates = a.gates().concat(b.gates())?;
    let coefficients = a
        .coefficients()
        .iter()
        .cloned()
        .chain(b.coefficients().iter().map(|x| -x))
        .collect();
    let diff = LinComb::new(a.n(), coefficients, gates)?;
    let deviation = weighted_power_sums(ctx, &diff, &[(2, 1)])?;
    if deviation.is_negative() {
        return Err(Error::Invariant(format!("negative squared distance {deviation}")));
    }
    Ok(if deviation.is_zero() {
        EqualityVerdict::Equal
    } else {
        EqualityVerdict::Different { deviation }
    })
}
