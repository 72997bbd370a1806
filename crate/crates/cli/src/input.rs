//! JSON instance files.
//!
//! ```json
//! {"n": 2, "family": "thr", "coefficients": ["1", "-1/2"],
//!  "gates": [{"weights": ["1", "1"], "threshold": "1"}, ...]}
//! ```
//!
//! ReLU gates carry `bias` instead of `threshold`; `fp` instances carry a
//! prime `p` and gates `{"monomials": [{"vars": [1, 3], "coeff": 2}]}` with
//! 1-based variables. `targets` lists right-hand sides for `count-system`.

use std::fs;
use std::path::Path;
use std::str::FromStr;

use hypersum::{ExactThresholdGate, Family, FpPolynomial, GateList, LinComb, Rational, ReluGate, ThresholdGate};
use num_bigint::BigInt;
use num_traits::Signed;
use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum Number {
    Text(String),
    Int(i64),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMonomial {
    vars: Vec<usize>,
    coeff: i64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGate {
    weights: Option<Vec<Number>>,
    threshold: Option<Number>,
    bias: Option<Number>,
    monomials: Option<Vec<RawMonomial>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawInstance {
    n: usize,
    family: String,
    p: Option<u64>,
    /// Degree bound for `fp`; defaults to the largest monomial degree.
    d: Option<usize>,
    coefficients: Option<Vec<Number>>,
    gates: Vec<RawGate>,
    targets: Option<Vec<u64>>,
}

/// A parsed instance: the gates as a linear combination plus optional
/// system targets.
#[derive(Debug, Clone)]
pub struct Instance {
    pub comb: LinComb,
    pub targets: Option<Vec<u64>>,
}

impl Instance {
    pub fn n(&self) -> usize {
        self.comb.n()
    }

    pub fn gates(&self) -> &GateList {
        self.comb.gates()
    }

    pub fn polynomials(&self) -> Result<&[FpPolynomial], CliError> {
        match self.gates() {
            GateList::Fp(p) => Ok(p),
            other => Err(CliError::Input(format!(
                "this command needs family \"fp\", found \"{}\"",
                other.family()
            ))),
        }
    }
}

fn bad(msg: impl Into<String>) -> CliError {
    CliError::Input(msg.into())
}

fn rational(x: &Number, what: &str) -> Result<Rational, CliError> {
    match x {
        Number::Int(v) => Ok(Rational::from_integer((*v).into())),
        Number::Text(s) => {
            let invalid = || bad(format!("{what}: invalid rational \"{s}\""));
            let (num, den) = s.trim().split_once('/').unwrap_or((s.trim(), "1"));
            let num = BigInt::from_str(num).map_err(|_| invalid())?;
            let den = BigInt::from_str(den).map_err(|_| invalid())?;
            if !den.is_positive() {
                return Err(invalid());
            }
            Ok(Rational::new(num, den))
        }
    }
}

fn family(name: &str) -> Result<Family, CliError> {
    match name {
        "thr" => Ok(Family::Thr),
        "ethr" => Ok(Family::Ethr),
        "relu" => Ok(Family::Relu),
        "fp" => Ok(Family::FpPoly),
        other => Err(bad(format!(
            "unknown family \"{other}\" (expected thr, ethr, relu or fp)"
        ))),
    }
}

fn linear_part(g: &RawGate, i: usize, n: usize) -> Result<Vec<Rational>, CliError> {
    let w = g
        .weights
        .as_ref()
        .ok_or_else(|| bad(format!("gate {i}: missing \"weights\"")))?;
    if w.len() != n {
        return Err(bad(format!("gate {i}: expected {n} weights, found {}", w.len())));
    }
    w.iter()
        .enumerate()
        .map(|(j, x)| rational(x, &format!("gate {i} weight {j}")))
        .collect()
}

fn rhs(x: &Option<Number>, field: &str, i: usize) -> Result<Rational, CliError> {
    let x = x
        .as_ref()
        .ok_or_else(|| bad(format!("gate {i}: missing \"{field}\"")))?;
    rational(x, &format!("gate {i} {field}"))
}

fn forbid(present: bool, field: &str, i: usize, fam: Family) -> Result<(), CliError> {
    if present {
        return Err(bad(format!("gate {i}: field \"{field}\" is not used by family {fam}")));
    }
    Ok(())
}

fn polynomial(g: &RawGate, i: usize, n: usize, p: u64, d: Option<usize>) -> Result<FpPolynomial, CliError> {
    let monomials = g
        .monomials
        .as_ref()
        .ok_or_else(|| bad(format!("gate {i}: missing \"monomials\"")))?;
    let mut terms = Vec::with_capacity(monomials.len());
    for (j, m) in monomials.iter().enumerate() {
        let mut mask = 0u64;
        for &v in &m.vars {
            if v == 0 || v > n {
                return Err(bad(format!(
                    "gate {i} monomial {j}: variable {v} outside 1..={n}"
                )));
            }
            mask |= 1 << (v - 1);
        }
        terms.push((mask, m.coeff.rem_euclid(p as i64) as u64));
    }
    let degree = terms.iter().map(|(m, _)| m.count_ones() as usize).max().unwrap_or(0);
    FpPolynomial::new(p, n, d.unwrap_or(degree), terms).map_err(|e| bad(format!("gate {i}: {e}")))
}

pub fn parse(text: &str) -> Result<Instance, CliError> {
    let raw: RawInstance = serde_json::from_str(text).map_err(|e| bad(format!("malformed JSON: {e}")))?;
    let fam = family(&raw.family)?;
    let n = raw.n;
    if n >= 64 {
        return Err(bad(format!("n = {n} is too large (at most 63)")));
    }
    if fam != Family::FpPoly && (raw.p.is_some() || raw.d.is_some()) {
        return Err(bad("\"p\" and \"d\" apply only to family fp"));
    }
    let gates = match fam {
        Family::Thr | Family::Ethr => {
            let mut thr = Vec::new();
            let mut ethr = Vec::new();
            for (i, g) in raw.gates.iter().enumerate() {
                forbid(g.bias.is_some(), "bias", i, fam)?;
                forbid(g.monomials.is_some(), "monomials", i, fam)?;
                let w = linear_part(g, i, n)?;
                let t = rhs(&g.threshold, "threshold", i)?;
                if fam == Family::Thr {
                    thr.push(ThresholdGate::new(w, t).map_err(|e| bad(format!("gate {i}: {e}")))?);
                } else {
                    ethr.push(ExactThresholdGate::new(w, t).map_err(|e| bad(format!("gate {i}: {e}")))?);
                }
            }
            if fam == Family::Thr {
                GateList::Thr(thr)
            } else {
                GateList::Ethr(ethr)
            }
        }
        Family::Relu => {
            let mut out = Vec::new();
            for (i, g) in raw.gates.iter().enumerate() {
                forbid(g.threshold.is_some(), "threshold", i, fam)?;
                forbid(g.monomials.is_some(), "monomials", i, fam)?;
                let w = linear_part(g, i, n)?;
                let a = rhs(&g.bias, "bias", i)?;
                out.push(ReluGate::new(w, a).map_err(|e| bad(format!("gate {i}: {e}")))?);
            }
            GateList::Relu(out)
        }
        Family::FpPoly => {
            let p = raw.p.ok_or_else(|| bad("family fp needs a prime \"p\""))?;
            FpPolynomial::zero(p, n).map_err(|e| bad(e.to_string()))?;
            let mut out = Vec::new();
            for (i, g) in raw.gates.iter().enumerate() {
                forbid(g.weights.is_some(), "weights", i, fam)?;
                forbid(g.threshold.is_some() || g.bias.is_some(), "threshold/bias", i, fam)?;
                out.push(polynomial(g, i, n, p, raw.d)?);
            }
            GateList::Fp(out)
        }
    };
    let coefficients = match &raw.coefficients {
        None => vec![Rational::from_integer(1.into()); gates.len()],
        Some(c) => {
            if c.len() != gates.len() {
                return Err(bad(format!(
                    "{} coefficients for {} gates",
                    c.len(),
                    gates.len()
                )));
            }
            c.iter()
                .enumerate()
                .map(|(i, x)| rational(x, &format!("coefficient {i}")))
                .collect::<Result<_, _>>()?
        }
    };
    if let Some(t) = &raw.targets {
        if fam != Family::FpPoly {
            return Err(bad("\"targets\" applies only to family fp"));
        }
        if t.len() != gates.len() {
            return Err(bad(format!("{} targets for {} gates", t.len(), gates.len())));
        }
    }
    let comb = LinComb::new(n, coefficients, gates).map_err(|e| bad(e.to_string()))?;
    Ok(Instance {
        comb,
        targets: raw.targets,
    })
}

pub fn load(path: &Path) -> Result<Instance, CliError> {
    let text = fs::read_to_string(path).map_err(|e| bad(format!("{}: {e}", path.display())))?;
    parse(&text).map_err(|e| match e {
        CliError::Input(msg) => CliError::Input(format!("{}: {msg}", path.display())),
        other => other,
    })
}
