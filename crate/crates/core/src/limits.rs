use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Caps on the exhaustive and dense computations.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Budget {
    /// Largest joint state simulated densely (reference plus shares, or
    /// secret plus reference plus shares for the protocol).
    pub max_amplitudes: u128,
    /// Largest register whose stabilizer projector is diagonalized.
    pub max_codespace_dim: u128,
    /// Largest code enumerated word by word.
    pub max_codewords: u128,
    /// Largest `n` for which all `2^n` share sets are visited.
    pub max_subset_universe: usize,
}

impl Default for Budget {
    fn default() -> Self {
        Budget {
            max_amplitudes: 1_000_000,
            max_codespace_dim: 10_000_000,
            max_codewords: 10_000_000,
            max_subset_universe: 20,
        }
    }
}

/// `base^exp`, saturating at `u128::MAX`.
pub fn saturating_pow(base: u32, exp: usize) -> u128 {
    (base as u128).checked_pow(exp as u32).unwrap_or(u128::MAX)
}

pub(crate) fn ensure(what: impl Into<String>, needed: u128, limit: u128) -> Result<()> {
    if needed > limit {
        return Err(Error::Resource {
            what: what.into(),
            needed,
            limit,
        });
    }
    Ok(())
}
