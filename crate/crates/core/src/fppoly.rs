//! Sum-Products of low-degree polynomials over a prime field.
//!
//! Root counting splits the variables into a prefix and a short suffix of
//! `m` variables. For each suffix assignment `a`, `1 - q(., a)^{p-1}` is 1 at
//! prefix roots and 0 elsewhere (mod p); a modulus-amplifying polynomial
//! lifts that indicator to a residue mod `p^ell`, and summing over the `2^m`
//! suffixes gives a multilinear polynomial `Q` whose value at each prefix is
//! the number of completing roots. `Q` is then evaluated on every prefix with
//! a dense zeta transform.
//!
//! Systems of equations reduce to single root counts by averaging over all
//! linear combinations, and Sum-Products reduce to systems by distributing
//! over the possible nonzero values of each factor.

use std::collections::{BTreeMap, HashMap};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};

use crate::context::Context;
use crate::error::{Error, Resource, Result};
use crate::gates::{cube, FpPolynomial, Gate, GateList};

/// Largest variable count for which `ml_multiply` switches to a dense
/// transform when the sparse product would be more expensive.
const DENSE_PRODUCT_VARS: usize = 20;

/// Ring moduli are kept below `2^63` so residues fit `u64` and products `u128`.
const MODULUS_BITS: u64 = 63;

/// `P_ell(y) = 1 - (1 - y)^ell * sum_{j<ell} C(ell+j-1, j) y^j`.
///
/// `y = 0 (mod r)` implies `P_ell(y) = 0 (mod r^ell)`, and `y = 1 (mod r)`
/// implies `P_ell(y) = 1 (mod r^ell)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModAmplifier {
    ell: usize,
    coefficients: Vec<BigInt>,
}

impl ModAmplifier {
    pub fn ell(&self) -> usize {
        self.ell
    }

    /// Dense coefficients, constant term first.
    pub fn coefficients(&self) -> &[BigInt] {
        &self.coefficients
    }

    pub fn degree(&self) -> usize {
        self.coefficients.len() - 1
    }

    pub fn eval(&self, y: &BigInt) -> BigInt {
        self.coefficients
            .iter()
            .rev()
            .fold(BigInt::zero(), |acc, c| acc * y + c)
    }
}

fn poly_mul(a: &[BigInt], b: &[BigInt]) -> Vec<BigInt> {
    let mut out = vec![BigInt::zero(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// Panics if `ell == 0`.
pub fn mod_amplifier(ell: usize) -> ModAmplifier {
    assert!(ell >= 1, "amplification level must be positive");
    let one_minus_y = [BigInt::one(), -BigInt::one()];
    let mut power = vec![BigInt::one()];
    for _ in 0..ell {
        power = poly_mul(&power, &one_minus_y);
    }
    // C(ell+j-1, j) built incrementally
    let mut series = Vec::with_capacity(ell);
    let mut binom = BigInt::one();
    for j in 0..ell {
        if j > 0 {
            binom = binom * (ell + j - 1) / j;
        }
        series.push(binom.clone());
    }
    let mut coefficients: Vec<BigInt> = poly_mul(&power, &series).into_iter().map(|c| -c).collect();
    coefficients[0] += 1;
    while coefficients.len() > 1 && coefficients.last().is_some_and(Zero::is_zero) {
        coefficients.pop();
    }
    ModAmplifier { ell, coefficients }
}

/// A multilinear polynomial with coefficients in `Z / modulus`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MultilinearRingPoly {
    modulus: u64,
    n_vars: usize,
    coeffs: BTreeMap<u64, u64>,
}

fn reduce_signed(c: &BigInt, modulus: u64) -> u64 {
    c.mod_floor(&BigInt::from(modulus))
        .to_u64()
        .expect("residue below modulus")
}

#[inline]
fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    (a as u128 * b as u128 % m as u128) as u64
}

#[inline]
fn add_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 + b as u128) % m as u128) as u64
}

impl MultilinearRingPoly {
    /// Sums repeated masks and reduces. Panics on a zero modulus or a mask
    /// outside the variable range.
    pub fn new(modulus: u64, n_vars: usize, terms: impl IntoIterator<Item = (u64, u64)>) -> Self {
        assert!(modulus >= 1, "modulus must be positive");
        let mut coeffs = BTreeMap::new();
        for (mask, c) in terms {
            assert!(
                n_vars >= 64 || mask >> n_vars == 0,
                "monomial outside the variable range"
            );
            let slot = coeffs.entry(mask).or_insert(0);
            *slot = add_mod(*slot, c % modulus, modulus);
        }
        coeffs.retain(|_, c| *c != 0);
        MultilinearRingPoly {
            modulus,
            n_vars,
            coeffs,
        }
    }

    pub fn constant(modulus: u64, n_vars: usize, c: u64) -> Self {
        Self::new(modulus, n_vars, [(0, c)])
    }

    /// Reads field coefficients `{0, ..., p-1}` as integers mod `modulus`.
    pub fn lift(q: &FpPolynomial, modulus: u64) -> Self {
        Self::new(modulus, q.n(), q.monomials().iter().map(|(&m, &c)| (m, c)))
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    pub fn coeffs(&self) -> &BTreeMap<u64, u64> {
        &self.coeffs
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn degree(&self) -> usize {
        self.coeffs
            .keys()
            .map(|m| m.count_ones() as usize)
            .max()
            .unwrap_or(0)
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.modulus != other.modulus {
            return Err(Error::ModulusMismatch(self.modulus, other.modulus));
        }
        if self.n_vars != other.n_vars {
            return Err(Error::DimensionMismatch {
                expected: self.n_vars,
                found: other.n_vars,
            });
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        let mut out = self.clone();
        out.add_assign(other);
        Ok(out)
    }

    fn add_assign(&mut self, other: &Self) {
        let m = self.modulus;
        for (&mask, &c) in &other.coeffs {
            let slot = self.coeffs.entry(mask).or_insert(0);
            *slot = add_mod(*slot, c, m);
            if *slot == 0 {
                self.coeffs.remove(&mask);
            }
        }
    }

    fn add_constant(&mut self, c: u64) {
        self.add_assign(&Self::constant(self.modulus, self.n_vars, c));
    }

    pub fn eval_mask(&self, mask: u64) -> u64 {
        self.coeffs
            .iter()
            .filter(|(s, _)| *s & mask == **s)
            .fold(0, |acc, (_, &c)| add_mod(acc, c, self.modulus))
    }

    fn to_dense(&self) -> Vec<u64> {
        let mut table = vec![0u64; 1usize << self.n_vars];
        for (&mask, &c) in &self.coeffs {
            table[mask as usize] = c;
        }
        table
    }
}

fn zeta(table: &mut [u64], n_vars: usize, modulus: u64) {
    for i in 0..n_vars {
        let bit = 1usize << i;
        for mask in 0..table.len() {
            if mask & bit != 0 {
                table[mask] = add_mod(table[mask], table[mask ^ bit], modulus);
            }
        }
    }
}

fn mobius(table: &mut [u64], n_vars: usize, modulus: u64) {
    for i in 0..n_vars {
        let bit = 1usize << i;
        for mask in 0..table.len() {
            if mask & bit != 0 {
                let lower = table[mask ^ bit];
                table[mask] = add_mod(table[mask], modulus - lower % modulus, modulus);
            }
        }
    }
}

/// Product with `x_i^2 = x_i`, i.e. the subset-union convolution of the
/// coefficient maps.
pub fn ml_multiply(a: &MultilinearRingPoly, b: &MultilinearRingPoly) -> Result<MultilinearRingPoly> {
    a.check_compatible(b)?;
    let modulus = a.modulus;
    let n = a.n_vars;
    let sparse_cost = a.len() as u128 * b.len() as u128;
    let dense_cost = ((n as u128) * 3 + 1) << n;
    if n <= DENSE_PRODUCT_VARS && sparse_cost > dense_cost {
        // multilinear polynomials are determined by their cube values
        let mut x = a.to_dense();
        let mut y = b.to_dense();
        zeta(&mut x, n, modulus);
        zeta(&mut y, n, modulus);
        for (u, v) in x.iter_mut().zip(&y) {
            *u = mul_mod(*u, *v, modulus);
        }
        mobius(&mut x, n, modulus);
        let terms = x.into_iter().enumerate().map(|(m, c)| (m as u64, c));
        return Ok(MultilinearRingPoly::new(modulus, n, terms));
    }
    let mut out: BTreeMap<u64, u64> = BTreeMap::new();
    for (&s, &c) in &a.coeffs {
        for (&t, &d) in &b.coeffs {
            let slot = out.entry(s | t).or_insert(0);
            *slot = add_mod(*slot, mul_mod(c, d, modulus), modulus);
        }
    }
    out.retain(|_, c| *c != 0);
    Ok(MultilinearRingPoly {
        modulus,
        n_vars: n,
        coeffs: out,
    })
}

/// Values at all `2^n_vars` points, in canonical mask order.
pub fn eval_all_points(ctx: &mut Context, poly: &MultilinearRingPoly) -> Result<Vec<u64>> {
    let cap = ctx.caps.dense_vars;
    if poly.n_vars > cap {
        return Err(Error::cap(Resource::DenseTable, poly.n_vars, cap as u64));
    }
    let mut table = poly.to_dense();
    zeta(&mut table, poly.n_vars, poly.modulus);
    ctx.work_mut().points += table.len() as u64;
    Ok(table)
}

/// Parameters of the root-counting reduction for one call.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FpSumProdParams {
    pub p: u64,
    /// Degree bound, at least 1.
    pub d: usize,
    pub k: usize,
    pub n: usize,
    /// Number of suffix variables summed inside `Q`.
    pub m: usize,
    /// Amplification level; `Q` lives mod `p^ell`.
    pub ell: usize,
}

impl FpSumProdParams {
    /// `m = floor(n / (6 d p))`.
    pub fn new(p: u64, d: usize, k: usize, n: usize) -> Self {
        let d = d.max(1);
        let m = (n as u128 / (6 * d as u128 * p as u128)) as usize;
        FpSumProdParams {
            p,
            d,
            k,
            n,
            m,
            ell: Self::default_ell(p, m),
        }
    }

    /// The smallest level with `p^ell > 2^m`, so that a suffix count of
    /// `2^m` is not read back as 0. That is `m` for odd `p` and `m + 1` for 2.
    pub fn default_ell(p: u64, m: usize) -> usize {
        if p == 2 {
            m + 1
        } else {
            m
        }
    }

    /// Overrides the suffix length (and resets `ell` to its default).
    pub fn with_suffix(mut self, m: usize) -> Self {
        self.m = m.min(self.n);
        self.ell = Self::default_ell(self.p, self.m);
        self
    }

    pub fn with_amplification(mut self, ell: usize) -> Self {
        self.ell = ell;
        self
    }

    /// `p^ell`, if it fits the ring representation.
    pub fn modulus(&self) -> Result<u64> {
        let modulus = num_traits::pow(BigInt::from(self.p), self.ell);
        if modulus.bits() > MODULUS_BITS {
            return Err(Error::cap(
                Resource::ModulusWidth,
                format!("{} bits", modulus.bits()),
                MODULUS_BITS,
            ));
        }
        Ok(modulus.to_u64().expect("checked width"))
    }

    /// Largest possible degree of `Q`: `(2 ell - 1) d (p - 1)`.
    pub fn q_degree_bound(&self) -> usize {
        (2 * self.ell).saturating_sub(1) * self.d * (self.p as usize - 1)
    }
}

fn params_for(q: &FpPolynomial, k: usize) -> FpSumProdParams {
    FpSumProdParams::new(q.prime(), q.degree_bound(), k, q.n())
}

/// `Q(prefix) = sum_a P_ell(1 - q(prefix, a)^{p-1})` over the `2^m` suffix
/// assignments, as a multilinear polynomial mod `p^ell`.
pub fn build_q(q: &FpPolynomial, params: &FpSumProdParams) -> Result<MultilinearRingPoly> {
    if params.m == 0 || params.ell == 0 {
        return Err(Error::NoSuffix);
    }
    if q.n() != params.n {
        return Err(Error::DimensionMismatch {
            expected: params.n,
            found: q.n(),
        });
    }
    if q.prime() != params.p {
        return Err(Error::PrimeMismatch(params.p, q.prime()));
    }
    let modulus = params.modulus()?;
    let amplifier = mod_amplifier(params.ell);
    let coeffs: Vec<u64> = amplifier
        .coefficients()
        .iter()
        .map(|c| reduce_signed(c, modulus))
        .collect();
    let keep = params.n - params.m;
    let mut total = MultilinearRingPoly::new(modulus, keep, []);
    for suffix in cube(params.m) {
        let restricted = MultilinearRingPoly::lift(&q.restrict_suffix(params.m, suffix), modulus);
        let mut power = restricted.clone();
        for _ in 2..params.p {
            power = ml_multiply(&power, &restricted)?;
        }
        // y = 1 - q^{p-1}
        let mut y = MultilinearRingPoly::new(
            modulus,
            keep,
            power.coeffs.iter().map(|(&s, &c)| (s, modulus - c)),
        );
        y.add_constant(1);
        let (top, rest) = coeffs.split_last().expect("nonempty amplifier");
        let mut acc = MultilinearRingPoly::constant(modulus, keep, *top);
        for &c in rest.iter().rev() {
            acc = ml_multiply(&acc, &y)?;
            acc.add_constant(c);
        }
        total.add_assign(&acc);
    }
    Ok(total)
}

fn count_by_enumeration(ctx: &mut Context, q: &FpPolynomial) -> Result<u128> {
    let n = q.n();
    if n <= ctx.caps.dense_vars {
        let values = eval_all_points(ctx, &MultilinearRingPoly::lift(q, q.prime()))?;
        return Ok(values.iter().filter(|&&v| v == 0).count() as u128);
    }
    ctx.work_mut().points += 1u64 << n;
    Ok(cube(n).filter(|&x| q.eval_mask(x) == 0).count() as u128)
}

/// `|{x : q(x) = 0}|`
pub fn count_roots(ctx: &mut Context, q: &FpPolynomial) -> Result<u128> {
    count_roots_with(ctx, q, &params_for(q, 1))
}

/// Root count with explicit reduction parameters. `m = 0` enumerates directly.
pub fn count_roots_with(ctx: &mut Context, q: &FpPolynomial, params: &FpSumProdParams) -> Result<u128> {
    if params.m == 0 {
        return count_by_enumeration(ctx, q);
    }
    let modulus = params.modulus()?;
    if (modulus as u128) <= 1u128 << params.m {
        return Err(Error::Invariant(format!(
            "modulus {modulus} cannot hold suffix counts up to 2^{}",
            params.m
        )));
    }
    let big_q = build_q(q, params)?;
    let values = eval_all_points(ctx, &big_q)?;
    Ok(values.iter().map(|&v| v as u128).sum())
}

/// Result of [`count_system`], with the pre-division accumulator exposed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SystemCount {
    pub count: u128,
    /// `sum_b [roots(L_b - c_b) - roots(L_b - c_b - 1)]`, which equals
    /// `p^k * count`.
    pub accumulator: i128,
}

/// Memoizes root counts of `sum_j b_j p_j - c` across systems that share
/// the same polynomials.
struct SystemSolver<'a> {
    polys: &'a [FpPolynomial],
    params: FpSumProdParams,
    combos: Vec<(Vec<u64>, FpPolynomial)>,
    roots: HashMap<(usize, u64), u128>,
}

impl<'a> SystemSolver<'a> {
    fn new(ctx: &Context, n: usize, polys: &'a [FpPolynomial]) -> Result<Self> {
        GateList::Fp(polys.to_vec()).check(n)?;
        let p = polys.first().map_or(2, FpPolynomial::prime);
        let d = polys.iter().map(FpPolynomial::degree_bound).max().unwrap_or(0);
        let k = polys.len();
        let vectors = (p as u128).checked_pow(k as u32).unwrap_or(u128::MAX);
        if vectors > ctx.caps.tuples as u128 {
            return Err(Error::cap(Resource::Tuples, vectors, ctx.caps.tuples));
        }
        let mut combos = Vec::with_capacity(vectors as usize);
        let zero = FpPolynomial::new(p, n, d, [])?;
        for index in 0..vectors as u64 {
            // lexicographic: first coefficient is the most significant digit
            let mut b = vec![0u64; k];
            let mut rest = index;
            for slot in b.iter_mut().rev() {
                *slot = rest % p;
                rest /= p;
            }
            let mut combo = zero.clone();
            for (q, &bj) in polys.iter().zip(&b) {
                if bj != 0 {
                    combo = combo.add_scaled(q, bj)?;
                }
            }
            combos.push((b, combo));
        }
        Ok(SystemSolver {
            polys,
            params: FpSumProdParams::new(p, d, k, n),
            combos,
            roots: HashMap::new(),
        })
    }

    fn roots(&mut self, ctx: &mut Context, combo: usize, value: u64) -> Result<u128> {
        if let Some(&r) = self.roots.get(&(combo, value)) {
            return Ok(r);
        }
        let shifted = self.combos[combo].1.sub_constant(value);
        let r = count_roots_with(ctx, &shifted, &self.params)?;
        self.roots.insert((combo, value), r);
        Ok(r)
    }

    fn solve(&mut self, ctx: &mut Context, targets: &[u64]) -> Result<SystemCount> {
        if targets.len() != self.polys.len() {
            return Err(Error::ArityMismatch {
                coefficients: targets.len(),
                gates: self.polys.len(),
            });
        }
        let p = self.params.p;
        let mut accumulator = 0i128;
        for combo in 0..self.combos.len() {
            let c = self.combos[combo]
                .0
                .iter()
                .zip(targets)
                .fold(0u64, |acc, (&b, &a)| add_mod(acc, mul_mod(b, a % p, p), p));
            let zeros = self.roots(ctx, combo, c)?;
            let ones = self.roots(ctx, combo, add_mod(c, 1, p))?;
            accumulator += zeros as i128 - ones as i128;
        }
        ctx.work_mut().tuples += self.combos.len() as u64;
        let scale = (p as i128).pow(self.polys.len() as u32);
        let (count, rem) = accumulator.div_rem(&scale);
        if rem != 0 || count < 0 {
            return Err(Error::Invariant(format!(
                "system accumulator {accumulator} is not a nonnegative multiple of {scale}"
            )));
        }
        Ok(SystemCount {
            count: count as u128,
            accumulator,
        })
    }
}

/// `|{x : polys[j](x) = targets[j] for all j}|` via root counts of all
/// `p^k` linear combinations.
pub fn count_system(
    ctx: &mut Context,
    n: usize,
    polys: &[FpPolynomial],
    targets: &[u64],
) -> Result<SystemCount> {
    SystemSolver::new(ctx, n, polys)?.solve(ctx, targets)
}

/// `sum_x prod_j polys[j](x)`, values lifted to `{0, ..., p-1}`.
pub fn sumprod_fp(ctx: &mut Context, n: usize, polys: &[FpPolynomial]) -> Result<BigInt> {
    if polys.is_empty() {
        GateList::Fp(Vec::new()).check(n)?;
        return Ok(BigInt::one() << n);
    }
    let mut solver = SystemSolver::new(ctx, n, polys)?;
    let p = solver.params.p;
    let k = polys.len();
    let mut total = BigInt::zero();
    let mut values = vec![1u64; k];
    loop {
        let count = solver.solve(ctx, &values)?.count;
        if count > 0 {
            let weight: BigInt = values.iter().map(|&v| BigInt::from(v)).product();
            total += weight * count;
        }
        // next tuple in (F_p^*)^k, lexicographic
        let Some(pos) = values.iter().rposition(|&v| v + 1 < p) else {
            break;
        };
        values[pos] += 1;
        values[pos + 1..].iter_mut().for_each(|v| *v = 1);
    }
    Ok(total)
}
