//! Baby-step giant-step discrete logarithm for small exponent ranges.
//!
//! Aggregate decryption recovers one exponent per model coordinate, all from
//! the same base and the same `[0, bound)` window, so the baby-step table is
//! built once per decryption and shared read-only across coordinates.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::suite::GroupElem;

/// Precomputed baby steps for a fixed base and bound.
pub struct BsgsTable<G: GroupElem> {
    base: G,
    /// Number of baby steps, ceil(sqrt(bound)).
    m: u64,
    /// Canonical encoding of j*base -> j for j in [0, m).
    baby: HashMap<Vec<u8>, u64>,
    /// -(m * base), added once per giant step.
    giant_step: G,
    bound: u64,
}

impl<G: GroupElem> BsgsTable<G> {
    /// Build the table for solutions in `[0, bound)`.
    pub fn new(base: G, bound: u64) -> Result<Self> {
        if bound == 0 {
            return Err(Error::InvalidInput("bsgs bound must be >= 1".into()));
        }
        let m = (bound as f64).sqrt().ceil() as u64;
        let m = m.max(1);
        let mut baby = HashMap::with_capacity(m as usize);
        let mut acc = G::identity();
        for j in 0..m {
            // First insertion wins; with a base of prime order and
            // m < order, all m encodings are distinct anyway.
            baby.entry(acc.to_bytes()).or_insert(j);
            acc += base;
        }
        // acc now holds m * base.
        let giant_step = -acc;
        Ok(BsgsTable { base, m, baby, giant_step, bound })
    }

    pub fn base(&self) -> &G {
        &self.base
    }

    pub fn bound(&self) -> u64 {
        self.bound
    }

    /// Find x in `[0, bound)` with `x * base = target`.
    pub fn solve(&self, target: &G) -> Result<u64> {
        let mut gamma = *target;
        let giant_count = self.bound.div_ceil(self.m);
        for i in 0..giant_count {
            if let Some(&j) = self.baby.get(&gamma.to_bytes()) {
                let x = i * self.m + j;
                if x < self.bound {
                    return Ok(x);
                }
            }
            gamma += self.giant_step;
        }
        Err(Error::DlogNotFound { bound: self.bound })
    }
}

/// One-shot discrete log: builds a throwaway table.
pub fn bsgs_dlog<G: GroupElem>(target: &G, base: &G, bound: u64) -> Result<u64> {
    BsgsTable::new(*base, bound)?.solve(target)
}
