use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Per-bucket sample counts for one experiment on one plane.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<u64>", into = "Vec<u64>")]
pub struct BucketCounts {
    counts: Vec<u64>,
    total: u64,
}

impl BucketCounts {
    pub fn new(counts: Vec<u64>) -> Result<Self> {
        if counts.len() < 2 {
            return Err(Error::domain(format!(
                "need at least 2 buckets, got {}",
                counts.len()
            )));
        }
        let total = counts
            .iter()
            .try_fold(0u64, |acc, &c| acc.checked_add(c))
            .ok_or_else(|| Error::domain("bucket total overflows u64"))?;
        Ok(Self { counts, total })
    }

    /// `b` buckets of `per_bucket` samples each.
    pub fn uniform(buckets: usize, per_bucket: u64) -> Result<Self> {
        Self::new(vec![per_bucket; buckets])
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn buckets(&self) -> usize {
        self.counts.len()
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    /// Empirical proportions `n_b / n`. All zero when `n = 0`.
    pub fn proportions(&self) -> Vec<f64> {
        if self.total == 0 {
            return vec![0.0; self.counts.len()];
        }
        let n = self.total as f64;
        self.counts.iter().map(|&c| c as f64 / n).collect()
    }

    pub fn scaled(&self, factor: u64) -> Result<Self> {
        Self::new(self.counts.iter().map(|c| c * factor).collect())
    }

    pub fn into_inner(self) -> Vec<u64> {
        self.counts
    }
}

impl TryFrom<Vec<u64>> for BucketCounts {
    type Error = Error;

    fn try_from(counts: Vec<u64>) -> Result<Self> {
        Self::new(counts)
    }
}

impl From<BucketCounts> for Vec<u64> {
    fn from(c: BucketCounts) -> Vec<u64> {
        c.counts
    }
}
