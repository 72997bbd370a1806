//! Sum-Products of threshold, exact-threshold and ReLU gates.
//!
//! Each factor's indicator `[<w, x> >= t]` is split into disjoint parallel
//! exact thresholds `[<w, x> == v]`. The product of the factors then expands
//! into one term per tuple `(v_1, ..., v_k)`, and each term is a conjunction
//! of exact thresholds, collapsed into a single one and counted (or weighted)
//! by meet-in-the-middle.
//!
//! All tuples share one collapse base, chosen from the factors' value ranges,
//! so the collapsed weight vector is the same for every tuple and only the
//! target changes. The half tables are therefore built once per call. Tuples
//! are walked depth-first and a prefix `(v_1, ..., v_j)` is abandoned as soon
//! as no point satisfies its conjunction.

use num_bigint::BigInt;
use num_traits::{One, ToPrimitive, Zero};

use crate::context::Context;
use crate::error::{Error, Resource, Result};
use crate::gates::{linear_range, ExactThresholdGate, Gate, GateList, Rational, ReluGate, ThresholdGate};
use crate::mitm::{narrow_keys, AffineForm, SubsetSumIndex, WeightedIndex};
use crate::transforms::{collapse_ethr_conjunction, collapse_with_base, thr_to_ethrs};

fn check_arity<G: Gate>(n: usize, gates: &[G]) -> Result<()> {
    for g in gates {
        if g.n() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: g.n(),
            });
        }
    }
    if n >= crate::gates::MAX_VARS {
        return Err(Error::TooManyVariables(n));
    }
    Ok(())
}

/// One factor's indicator, decomposed into parallel exact thresholds.
struct Decomposed {
    ethrs: Vec<ExactThresholdGate>,
    targets: Vec<i128>,
    span: BigInt,
}

/// `None` when the indicator never fires.
fn decompose(ctx: &Context, g: &ThresholdGate) -> Result<Option<Decomposed>> {
    let normalized = g.normalize_integer().gate;
    let ethrs = thr_to_ethrs(&normalized, ctx.caps.decomposition_terms)?;
    if ethrs.is_empty() {
        return Ok(None);
    }
    let (weights, _) = normalized.integer_parts().expect("normalized gate");
    let (lo, hi) = linear_range(&weights);
    let targets = ethrs
        .iter()
        .map(|e| {
            e.target().to_integer().to_i128().ok_or_else(|| {
                Error::cap(Resource::KeyWidth, e.target(), i128::MAX as u64)
            })
        })
        .collect::<Result<_>>()?;
    Ok(Some(Decomposed {
        ethrs,
        targets,
        span: hi - lo,
    }))
}

/// Shared state for walking the target tuples of `k` decomposed factors.
struct TupleWalk {
    parts: Vec<Decomposed>,
    /// `B^i` for factor `i`.
    powers: Vec<i128>,
    /// `prefixes[j]` counts solutions of the collapsed first `j + 1` factors.
    prefixes: Vec<SubsetSumIndex>,
    /// Weights of the full collapsed conjunction.
    collapsed: Vec<BigInt>,
    partials: u64,
}

impl TupleWalk {
    fn new(mut parts: Vec<Decomposed>) -> Result<Self> {
        // fewest targets first prunes the most
        parts.sort_by_key(|p| p.targets.len());
        let widest = parts.iter().map(|p| p.span.clone()).max().unwrap_or_default();
        // targets lie inside each factor's value range, so every deviation
        // |<w_i, x> - v_i| is at most the range width
        let base = widest * 2u32 + 1u32;
        let k = parts.len();
        let reach = num_traits::pow(base.clone(), k);
        if reach.bits() > 120 {
            return Err(Error::cap(
                Resource::KeyWidth,
                format!("{} bits", reach.bits()),
                120,
            ));
        }
        let mut powers = Vec::with_capacity(k);
        let mut p = BigInt::one();
        for _ in 0..k {
            powers.push(p.to_i128().expect("checked above"));
            p *= &base;
        }
        let leaders: Vec<ExactThresholdGate> = parts.iter().map(|d| d.ethrs[0].clone()).collect();
        let mut prefixes = Vec::with_capacity(k.saturating_sub(1));
        let mut partials = 0u64;
        for j in 1..k {
            let c = collapse_with_base(&leaders[..j], &base)?;
            let (w, _) = c.integer_parts().expect("integer collapse");
            let index = SubsetSumIndex::build(&w)?;
            partials += index.partials_enumerated();
            prefixes.push(index);
        }
        let full = collapse_with_base(&leaders, &base)?;
        let (collapsed, _) = full.integer_parts().expect("integer collapse");
        narrow_keys(&collapsed)?;
        Ok(TupleWalk {
            parts,
            powers,
            prefixes,
            collapsed,
            partials,
        })
    }

    /// Calls `leaf` with the collapsed target of every tuple whose proper
    /// prefixes are all satisfiable.
    fn run(&self, ctx: &mut Context, mut leaf: impl FnMut(i128)) -> Result<()> {
        let cap = ctx.caps.tuples;
        let mut visited = 0u64;
        let result = self.visit(0, 0, cap, &mut visited, &mut leaf);
        let work = ctx.work_mut();
        work.tuples += visited;
        work.partial_assignments += self.partials;
        result
    }

    fn visit(
        &self,
        depth: usize,
        partial: i128,
        cap: u64,
        visited: &mut u64,
        leaf: &mut impl FnMut(i128),
    ) -> Result<()> {
        let last = depth + 1 == self.parts.len();
        for &t in &self.parts[depth].targets {
            *visited += 1;
            if *visited > cap {
                return Err(Error::cap(Resource::Tuples, format!("more than {cap}"), cap));
            }
            let next = partial + self.powers[depth] * t;
            if last {
                leaf(next);
            } else if self.prefixes[depth].count_i128(next) > 0 {
                self.visit(depth + 1, next, cap, visited, leaf)?;
            }
        }
        Ok(())
    }
}

fn full_cube(n: usize) -> u128 {
    1u128 << n
}

/// `sum_x prod_i [<w_i, x> >= t_i]`
pub fn sumprod_thr(ctx: &mut Context, n: usize, gates: &[ThresholdGate]) -> Result<u128> {
    check_arity(n, gates)?;
    if gates.is_empty() {
        return Ok(full_cube(n));
    }
    let mut parts = Vec::with_capacity(gates.len());
    for g in gates {
        match decompose(ctx, g)? {
            Some(d) => parts.push(d),
            None => return Ok(0),
        }
    }
    let walk = TupleWalk::new(parts)?;
    let leaf_index = SubsetSumIndex::build(&walk.collapsed)?;
    ctx.work_mut().partial_assignments += leaf_index.partials_enumerated();
    let mut total = 0u128;
    walk.run(ctx, |target| total += leaf_index.count_i128(target))?;
    Ok(total)
}

/// `sum_x prod_i [<w_i, x> == t_i]`: one collapse, one count.
pub fn sumprod_ethr(ctx: &mut Context, n: usize, gates: &[ExactThresholdGate]) -> Result<u128> {
    check_arity(n, gates)?;
    if gates.is_empty() {
        return Ok(full_cube(n));
    }
    let normalized: Vec<ExactThresholdGate> =
        gates.iter().map(|g| g.normalize_integer().gate).collect();
    let single = collapse_ethr_conjunction(&normalized)?;
    let (weights, target) = single.integer_parts().expect("integer collapse");
    let index = SubsetSumIndex::build(&weights)?;
    let work = ctx.work_mut();
    work.partial_assignments += index.partials_enumerated();
    work.tuples += 1;
    Ok(index.count(&target))
}

/// `sum_x prod_i max{0, <w_i, x> + a_i}`, via
/// `max{0, y} = [y >= 0] * y` on each factor.
pub fn sumprod_relu(ctx: &mut Context, n: usize, gates: &[ReluGate]) -> Result<Rational> {
    check_arity(n, gates)?;
    if gates.is_empty() {
        return Ok(Rational::from_integer(full_cube(n).into()));
    }
    let mut parts = Vec::with_capacity(gates.len());
    for g in gates {
        let indicator = ThresholdGate::new(g.weights().to_vec(), -g.bias())?;
        match decompose(ctx, &indicator)? {
            Some(d) => parts.push(d),
            None => return Ok(Rational::zero()),
        }
    }
    let affines: Vec<AffineForm> = gates.iter().map(AffineForm::of_relu).collect();
    let walk = TupleWalk::new(parts)?;
    let leaf_index = WeightedIndex::build(&walk.collapsed, &affines)?;
    ctx.work_mut().partial_assignments += leaf_index.partials_enumerated();
    let mut total = BigInt::zero();
    walk.run(ctx, |target| total += leaf_index.scaled_sum_i128(target))?;
    Ok(Rational::new(total, leaf_index.denominator().clone()))
}

/// Family dispatch. Polynomial values are lifted to `{0, ..., p-1}`.
pub fn sumprod(ctx: &mut Context, n: usize, gates: &GateList) -> Result<Rational> {
    let int = |v: u128| Rational::from_integer(v.into());
    match gates {
        GateList::Thr(g) => sumprod_thr(ctx, n, g).map(int),
        GateList::Ethr(g) => sumprod_ethr(ctx, n, g).map(int),
        GateList::Relu(g) => sumprod_relu(ctx, n, g),
        GateList::Fp(g) => crate::fppoly::sumprod_fp(ctx, n, g).map(Rational::from_integer),
    }
}
