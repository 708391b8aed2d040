use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Size parameters of a regular k-SAT instance.
///
/// Every variable occurs exactly `d` times positively and `d` times
/// negatively, clauses have width `k`, so the clause count is forced to
/// `m = 2dn/k`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ModelParams {
    pub n: usize,
    pub d: usize,
    pub k: usize,
    pub m: usize,
}

impl ModelParams {
    /// Validates the divisibility and range constraints and derives `m`.
    pub fn new(n: usize, d: usize, k: usize) -> Result<Self> {
        if k < 2 {
            return Err(Error::Domain(format!("k must be at least 2, got {k}")));
        }
        if d < 1 {
            return Err(Error::Domain("d must be at least 1".into()));
        }
        if n < k {
            return Err(Error::Domain(format!(
                "n must be at least k so a simple clause exists (n={n}, k={k})"
            )));
        }
        if !(2 * d * n).is_multiple_of(k) {
            return Err(Error::Domain(format!(
                "k must divide 2dn (2*{d}*{n} = {} is not divisible by {k})",
                2 * d * n
            )));
        }
        let m = 2 * d * n / k;
        Ok(ModelParams { n, d, k, m })
    }

    /// Total number of literal slots, `m * k = 2dn`.
    pub fn slot_count(&self) -> usize {
        self.m * self.k
    }

    /// Re-checks the stored fields (used when deserializing).
    pub fn validate(&self) -> Result<()> {
        let fresh = ModelParams::new(self.n, self.d, self.k)?;
        if fresh.m != self.m {
            return Err(Error::Format(format!(
                "inconsistent clause count: stated m={}, 2dn/k={}",
                self.m, fresh.m
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derives_clause_count() {
        let p = ModelParams::new(15, 2, 3).unwrap();
        assert_eq!(p.m, 20);
        assert_eq!(p.slot_count(), 60);
    }

    #[test]
    fn rejects_bad_divisibility() {
        let err = ModelParams::new(5, 2, 3).unwrap_err();
        assert!(err.to_string().contains("k must divide 2dn"));
    }

    #[test]
    fn rejects_small_k_and_n() {
        assert!(ModelParams::new(10, 1, 1).is_err());
        assert!(ModelParams::new(2, 1, 4).is_err());
    }
}
