//! Seeded benchmark runs, one CSV row per trial.

use std::fmt::Write;
use std::time::Instant;

use clap::Args;
use hypersum::oracle::oracle_sumprod;
use hypersum::sumprod::sumprod;
use hypersum::{Caps, Context, ExactThresholdGate, FpPolynomial, GateList, Rational, ReluGate, ThresholdGate};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::CliError;

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// thr, ethr, relu or fp
    #[arg(long, value_parser = ["thr", "ethr", "relu", "fp"])]
    family: String,
    /// A single n, or an inclusive range such as 20..36
    #[arg(long, value_parser = parse_range)]
    n: (usize, usize),
    /// Factors per Sum-Product
    #[arg(long, default_value_t = 1)]
    k: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Instances per n
    #[arg(long, default_value_t = 1)]
    trials: usize,
    /// Time the brute-force oracle instead
    #[arg(long)]
    oracle: bool,
    /// Largest weight magnitude (numerator for relu)
    #[arg(long, default_value_t = 10)]
    max_weight: i64,
    /// Prime for fp
    #[arg(long, default_value_t = 3)]
    p: u64,
    /// Degree bound for fp
    #[arg(long, default_value_t = 2)]
    d: usize,
}

fn parse_range(s: &str) -> Result<(usize, usize), String> {
    let parse = |t: &str| t.trim().parse::<usize>().map_err(|e| format!("{t:?}: {e}"));
    let (lo, hi) = match s.split_once("..") {
        Some((a, b)) => (parse(a)?, parse(b.trim_start_matches('='))?),
        None => {
            let v = parse(s)?;
            (v, v)
        }
    };
    if lo > hi {
        return Err(format!("empty range {s}"));
    }
    Ok((lo, hi))
}

fn weights(r: &mut ChaCha8Rng, n: usize, bound: i64) -> Vec<i64> {
    (0..n).map(|_| r.gen_range(-bound..=bound)).collect()
}

fn instance(args: &BenchArgs, r: &mut ChaCha8Rng, n: usize) -> Result<GateList, CliError> {
    let bound = args.max_weight.max(0);
    Ok(match args.family.as_str() {
        "thr" => GateList::Thr(
            (0..args.k)
                .map(|_| {
                    let w = weights(r, n, bound);
                    ThresholdGate::from_ints(&w, r.gen_range(-bound..=bound))
                })
                .collect(),
        ),
        "ethr" => GateList::Ethr(
            (0..args.k)
                .map(|_| {
                    // target hit by at least one point
                    let w = weights(r, n, bound);
                    let t = w.iter().filter(|_| r.gen_bool(0.5)).sum();
                    ExactThresholdGate::from_ints(&w, t)
                })
                .collect(),
        ),
        "relu" => {
            let frac = |r: &mut ChaCha8Rng| {
                Rational::new(r.gen_range(-bound..=bound).into(), r.gen_range(1i64..=4).into())
            };
            let mut gates = Vec::with_capacity(args.k);
            for _ in 0..args.k {
                let w = (0..n).map(|_| frac(r)).collect();
                gates.push(ReluGate::new(w, frac(r))?);
            }
            GateList::Relu(gates)
        }
        _ => {
            let mut polys = Vec::with_capacity(args.k);
            for _ in 0..args.k {
                let terms: Vec<(u64, u64)> = (0..n + 4)
                    .map(|_| {
                        let mut mask = 0u64;
                        for _ in 0..r.gen_range(0..=args.d.min(n)) {
                            mask |= 1 << r.gen_range(0..n.max(1));
                        }
                        (mask & ((1u64 << n) - 1), r.gen_range(0..args.p))
                    })
                    .collect();
                polys.push(FpPolynomial::new(args.p, n, args.d, terms)?);
            }
            GateList::Fp(polys)
        }
    })
}

pub fn run(args: &BenchArgs, caps: Caps) -> Result<String, CliError> {
    let mut r = ChaCha8Rng::seed_from_u64(args.seed);
    let mut out = String::from("family,n,k,trial,result,partials_enumerated,wall_ns\n");
    for n in args.n.0..=args.n.1 {
        if n >= 64 {
            return Err(CliError::Input(format!("n = {n} is too large (at most 63)")));
        }
        for trial in 0..args.trials {
            let gates = instance(args, &mut r, n)?;
            let mut ctx = Context::new(caps);
            let start = Instant::now();
            let result = if args.oracle {
                oracle_sumprod(n, &gates, &caps)?
            } else {
                sumprod(&mut ctx, n, &gates)?
            };
            let wall = start.elapsed().as_nanos();
            let partials = ctx.work().partial_assignments;
            writeln!(out, "{},{n},{},{trial},{result},{partials},{wall}", args.family, args.k)
                .expect("writing to a String");
        }
    }
    Ok(out)
}
