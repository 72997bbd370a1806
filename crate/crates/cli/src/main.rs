//! `hypersum`: exact Sum-Products, Boolean checks and root counts from JSON
//! instance files.
//!
//! Exit codes: 0 success, 1 malformed input or unusable instance, 2 resource
//! cap exceeded, 3 internal invariant violated.

mod bench;
mod input;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hypersum::analysis::{check_boolean, check_equal, count_sat, BooleanVerdict, EqualityVerdict, SatCheck};
use hypersum::fppoly::{count_roots, count_system};
use hypersum::oracle::{
    oracle_check_boolean, oracle_count_fp_system, oracle_count_sat, oracle_deviation, oracle_squared_distance,
    oracle_sumprod, OracleVerdict,
};
use hypersum::sumprod::sumprod;
use hypersum::{Caps, Context, Rational};
use num_traits::Zero;

use crate::input::{load, Instance};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error(transparent)]
    Core(#[from] hypersum::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 1,
            CliError::Core(hypersum::Error::CapExceeded { .. }) => 2,
            CliError::Core(hypersum::Error::Invariant(_)) => 3,
            CliError::Core(_) => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "hypersum", version, about = "Exact Sum-Products of gates over the Boolean hypercube")]
struct Cli {
    #[command(flatten)]
    caps: CapArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct CapArgs {
    /// Largest n the brute-force oracle enumerates
    #[arg(long, global = true, env = "HYPERSUM_CAP_ORACLE_N", value_name = "N")]
    cap_oracle_n: Option<usize>,
    /// Largest number of exact-threshold terms per threshold gate
    #[arg(long, global = true, env = "HYPERSUM_CAP_TERMS", value_name = "COUNT")]
    cap_terms: Option<u64>,
    /// Largest number of target tuples (or F_p coefficient vectors) per Sum-Product
    #[arg(long, global = true, env = "HYPERSUM_CAP_TUPLES", value_name = "COUNT")]
    cap_tuples: Option<u64>,
    /// Largest variable count of a dense evaluation table
    #[arg(long, global = true, env = "HYPERSUM_CAP_DENSE_VARS", value_name = "N")]
    cap_dense_vars: Option<usize>,
}

impl CapArgs {
    fn caps(&self) -> Caps {
        let base = Caps::default();
        Caps {
            oracle_vars: self.cap_oracle_n.unwrap_or(base.oracle_vars),
            decomposition_terms: self.cap_terms.unwrap_or(base.decomposition_terms),
            tuples: self.cap_tuples.unwrap_or(base.tuples),
            dense_vars: self.cap_dense_vars.unwrap_or(base.dense_vars),
        }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    #[command(flatten)]
    Query(Query),
    /// Brute-force counterpart of any query (enumerates all 2^n points)
    Oracle {
        #[command(subcommand)]
        query: Query,
    },
    /// Time random instances and print CSV
    Bench(bench::BenchArgs),
}

#[derive(Debug, Subcommand)]
enum Query {
    /// Sum over the cube of the product of all gates
    Sumprod { file: PathBuf },
    /// Number of roots of a single F_p polynomial
    CountRoots { file: PathBuf },
    /// Number of common solutions of an F_p system (right-hand sides from "targets")
    CountSystem { file: PathBuf },
    /// Whether the linear combination takes only values 0 and 1
    CheckBoolean { file: PathBuf },
    /// Number of points where the combination equals 1
    CountSat {
        file: PathBuf,
        /// Skip the Boolean-valuedness pre-check
        #[arg(long)]
        unchecked: bool,
    },
    /// Whether two combinations agree on every point
    CheckEqual { first: PathBuf, second: PathBuf },
}

/// Lines for stdout and stderr.
struct Report {
    out: String,
    note: Option<String>,
}

impl From<String> for Report {
    fn from(out: String) -> Self {
        Report { out, note: None }
    }
}

fn single_polynomial(inst: &Instance) -> Result<&hypersum::FpPolynomial, CliError> {
    match inst.polynomials()? {
        [q] => Ok(q),
        other => Err(CliError::Input(format!(
            "count-roots needs exactly one polynomial, found {}",
            other.len()
        ))),
    }
}

fn system_targets(inst: &Instance) -> Vec<u64> {
    inst.targets
        .clone()
        .unwrap_or_else(|| vec![0; inst.gates().len()])
}

fn deviation_line(deviation: &Rational) -> String {
    if deviation.is_zero() {
        "boolean".to_string()
    } else {
        format!("non-boolean deviation={deviation}")
    }
}

fn distance_line(deviation: &Rational) -> String {
    if deviation.is_zero() {
        "equal".to_string()
    } else {
        format!("different deviation={deviation}")
    }
}

fn run_query(ctx: &mut Context, query: &Query) -> Result<Report, CliError> {
    Ok(match query {
        Query::Sumprod { file } => {
            let inst = load(file)?;
            sumprod(ctx, inst.n(), inst.gates())?.to_string().into()
        }
        Query::CountRoots { file } => {
            let inst = load(file)?;
            count_roots(ctx, single_polynomial(&inst)?)?.to_string().into()
        }
        Query::CountSystem { file } => {
            let inst = load(file)?;
            let polys = inst.polynomials()?;
            count_system(ctx, inst.n(), polys, &system_targets(&inst))?
                .count
                .to_string()
                .into()
        }
        Query::CheckBoolean { file } => {
            let inst = load(file)?;
            match check_boolean(ctx, &inst.comb)? {
                BooleanVerdict::Boolean => "boolean".to_string().into(),
                BooleanVerdict::NonBoolean { deviation } => deviation_line(&deviation).into(),
            }
        }
        Query::CountSat { file, unchecked } => {
            let inst = load(file)?;
            let check = if *unchecked { SatCheck::Trusted } else { SatCheck::Verify };
            count_sat(ctx, &inst.comb, check)?.to_string().into()
        }
        Query::CheckEqual { first, second } => {
            let (a, b) = (load(first)?, load(second)?);
            match check_equal(ctx, &a.comb, &b.comb)? {
                EqualityVerdict::Equal => "equal".to_string().into(),
                EqualityVerdict::Different { deviation } => distance_line(&deviation).into(),
            }
        }
    })
}

fn run_oracle(caps: &Caps, query: &Query) -> Result<Report, CliError> {
    Ok(match query {
        Query::Sumprod { file } => {
            let inst = load(file)?;
            oracle_sumprod(inst.n(), inst.gates(), caps)?.to_string().into()
        }
        Query::CountRoots { file } => {
            let inst = load(file)?;
            let q = single_polynomial(&inst)?;
            oracle_count_fp_system(inst.n(), std::slice::from_ref(q), &[0], caps)?
                .to_string()
                .into()
        }
        Query::CountSystem { file } => {
            let inst = load(file)?;
            oracle_count_fp_system(inst.n(), inst.polynomials()?, &system_targets(&inst), caps)?
                .to_string()
                .into()
        }
        Query::CheckBoolean { file } => {
            let inst = load(file)?;
            let verdict = oracle_check_boolean(&inst.comb, caps)?;
            let deviation = oracle_deviation(&inst.comb, caps)?;
            let note = match verdict {
                OracleVerdict::Boolean => None,
                OracleVerdict::NonBoolean { witness, value } => {
                    let bits: String = witness.iter().map(|&b| if b { '1' } else { '0' }).collect();
                    Some(format!("witness x={bits} value={value}"))
                }
            };
            Report {
                out: deviation_line(&deviation),
                note,
            }
        }
        // the oracle always checks every point, so --unchecked changes nothing
        Query::CountSat { file, .. } => {
            let inst = load(file)?;
            oracle_count_sat(&inst.comb, caps)?.to_string().into()
        }
        Query::CheckEqual { first, second } => {
            let (a, b) = (load(first)?, load(second)?);
            if a.comb.family() != b.comb.family() {
                return Err(hypersum::Error::FamilyMismatch(a.comb.family(), b.comb.family()).into());
            }
            distance_line(&oracle_squared_distance(&a.comb, &b.comb, caps)?).into()
        }
    })
}

fn execute(cli: &Cli) -> Result<Report, CliError> {
    let caps = cli.caps.caps();
    match &cli.command {
        Command::Query(q) => run_query(&mut Context::new(caps), q),
        Command::Oracle { query } => run_oracle(&caps, query),
        Command::Bench(args) => bench::run(args, caps).map(Report::from),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match execute(&cli) {
        Ok(report) => {
            if let Some(note) = report.note {
                eprintln!("{note}");
            }
            let mut stdout = std::io::stdout().lock();
            let _ = writeln!(stdout, "{}", report.out.trim_end());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
