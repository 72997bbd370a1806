use std::fmt;

/// A bounded resource guarded by a configurable cap.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Resource {
    /// Variable count accepted by the brute-force oracle.
    OracleVariables,
    /// Exact-threshold terms produced by one threshold decomposition.
    DecompositionTerms,
    /// Target tuples visited while enumerating a decomposition product.
    Tuples,
    /// Variables of a dense 2^n coefficient table.
    DenseTable,
    /// Variables on one side of a meet-in-the-middle split.
    HalfTable,
    /// Magnitude of a collapsed linear form; keys are held in `i128`.
    KeyWidth,
    /// Size of the residue ring modulus; residues are held in `u64`.
    ModulusWidth,
}

impl fmt::Display for Resource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Resource::OracleVariables => "oracle variable",
            Resource::DecompositionTerms => "decomposition term",
            Resource::Tuples => "tuple",
            Resource::DenseTable => "dense table",
            Resource::HalfTable => "half table",
            Resource::KeyWidth => "key width",
            Resource::ModulusWidth => "modulus width",
        };
        f.write_str(name)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected} variables, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("a gate needs at least one variable")]
    NoVariables,
    #[error("{0} variables requested, at most 64 are supported")]
    TooManyVariables(usize),
    #[error("{0} is not a prime")]
    NotPrime(u64),
    #[error("polynomials over different primes: {0} and {1}")]
    PrimeMismatch(u64, u64),
    #[error("monomial of degree {degree} exceeds the degree bound {bound}")]
    DegreeBound { degree: usize, bound: usize },
    #[error("variable index {index} out of range for {n} variables")]
    VariableOutOfRange { index: usize, n: usize },
    #[error("integer weights required; normalize the gate first")]
    NonIntegerWeights,
    #[error("cannot collapse an empty conjunction")]
    EmptyConjunction,
    #[error("{coefficients} coefficients supplied for {gates} gates")]
    ArityMismatch { coefficients: usize, gates: usize },
    #[error("gate families differ: {0} and {1}")]
    FamilyMismatch(crate::gates::Family, crate::gates::Family),
    #[error("residue ring moduli differ: {0} and {1}")]
    ModulusMismatch(u64, u64),
    #[error("suffix size must be at least 1 to build the reduced polynomial")]
    NoSuffix,
    #[error("{resource} cap exceeded: need {needed}, limit {limit}")]
    CapExceeded {
        resource: Resource,
        needed: String,
        limit: u64,
    },
    #[error("combination is not Boolean-valued: {0}")]
    NotBoolean(String),
    #[error("internal invariant violated: {0}")]
    Invariant(String),
}

impl Error {
    pub(crate) fn cap(resource: Resource, needed: impl fmt::Display, limit: u64) -> Self {
        Error::CapExceeded {
            resource,
            needed: needed.to_string(),
            limit,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
