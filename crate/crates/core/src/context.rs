//! Resource caps and work counters shared by the kernels.

/// Upper limits on the work a single computation may perform.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Caps {
    /// Largest `n` the brute-force oracle will enumerate.
    pub oracle_vars: usize,
    /// Largest number of exact-threshold terms one threshold gate may expand into.
    pub decomposition_terms: u64,
    /// Largest number of target tuples visited by one Sum-Product call.
    pub tuples: u64,
    /// Largest variable count of a dense coefficient or evaluation table.
    pub dense_vars: usize,
}

impl Default for Caps {
    fn default() -> Self {
        Caps {
            oracle_vars: 24,
            decomposition_terms: 1_000_000,
            tuples: 10_000_000,
            dense_vars: 26,
        }
    }
}

/// Deterministic operation counts, independent of timing noise.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Work {
    /// Partial assignments enumerated on either side of a meet-in-the-middle split.
    pub partial_assignments: u64,
    /// Target tuples visited (including pruned prefixes).
    pub tuples: u64,
    /// Hypercube points evaluated by dense transforms or direct enumeration.
    pub points: u64,
}

/// Caps plus a running work tally. Kernels borrow it mutably.
#[derive(Debug, Clone, Default)]
pub struct Context {
    pub caps: Caps,
    work: Work,
}

impl Context {
    pub fn new(caps: Caps) -> Self {
        Context {
            caps,
            work: Work::default(),
        }
    }

    pub fn work(&self) -> Work {
        self.work
    }

    pub fn reset_work(&mut self) {
        self.work = Work::default();
    }

    pub(crate) fn work_mut(&mut self) -> &mut Work {
        &mut self.work
    }
}
