use std::collections::BTreeSet;

use md5::{Digest, Md5};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::validate::BucketCounts;

pub const DEFAULT_BUCKETS: u32 = 100;

/// Bucket of `user_id` on the plane keyed by `seed`.
///
/// The first 8 bytes of `MD5(user_id ":" seed)`, read as a big-endian `u64`,
/// reduced modulo `buckets`.
pub fn assign_bucket(user_id: &str, seed: &str, buckets: u32) -> Result<u32> {
    if buckets == 0 {
        return Err(Error::domain("bucket count must be positive"));
    }
    if user_id.is_empty() || seed.is_empty() {
        return Err(Error::domain("user id and seed must be non-empty"));
    }
    let mut hasher = Md5::new();
    hasher.update(user_id.as_bytes());
    hasher.update(b":");
    hasher.update(seed.as_bytes());
    let digest = hasher.finalize();
    let mut head = [0u8; 8];
    head.copy_from_slice(&digest[..8]);
    Ok((u64::from_be_bytes(head) % u64::from(buckets)) as u32)
}

/// A hashing namespace. Experiments sharing a plane are mutually exclusive;
/// experiments on different planes are orthogonal.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Plane {
    seed: String,
    buckets: u32,
}

impl Plane {
    pub fn new(seed: impl Into<String>, buckets: u32) -> Result<Self> {
        let seed = seed.into();
        if seed.is_empty() {
            return Err(Error::domain("plane seed must be non-empty"));
        }
        if buckets < 2 {
            return Err(Error::domain("a plane needs at least 2 buckets"));
        }
        Ok(Self { seed, buckets })
    }

    pub fn seed(&self) -> &str {
        &self.seed
    }

    pub fn buckets(&self) -> u32 {
        self.buckets
    }

    pub fn assign(&self, user_id: &str) -> Result<u32> {
        assign_bucket(user_id, &self.seed, self.buckets)
    }

    /// Tally the buckets of a stream of user ids.
    pub fn bucket_counts<'a>(&self, user_ids: impl IntoIterator<Item = &'a str>) -> Result<BucketCounts> {
        let mut counts = vec![0u64; self.buckets as usize];
        for id in user_ids {
            counts[self.assign(id)? as usize] += 1;
        }
        BucketCounts::new(counts)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Arm {
    Test,
    Control,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentDef {
    pub plane: Plane,
    pub test_buckets: BTreeSet<u32>,
    pub control_buckets: BTreeSet<u32>,
    /// Probability that an assigned user visits and triggers.
    pub trigger_rate: f64,
}

impl ExperimentDef {
    pub fn new(
        plane: Plane,
        test_buckets: BTreeSet<u32>,
        control_buckets: BTreeSet<u32>,
        trigger_rate: f64,
    ) -> Result<Self> {
        if let Some(b) = test_buckets.intersection(&control_buckets).next() {
            return Err(Error::spec(format!(
                "bucket {b} assigned to both test and control"
            )));
        }
        if let Some(b) = test_buckets
            .iter()
            .chain(&control_buckets)
            .find(|&&b| b >= plane.buckets())
        {
            return Err(Error::spec(format!(
                "bucket {b} outside plane with {} buckets",
                plane.buckets()
            )));
        }
        if !(0.0..=1.0).contains(&trigger_rate) {
            return Err(Error::spec(format!("trigger rate {trigger_rate} outside [0, 1]")));
        }
        Ok(Self {
            plane,
            test_buckets,
            control_buckets,
            trigger_rate,
        })
    }

    /// Swim lanes from contiguous bucket ranges, e.g. control `0..10`, test `10..20`.
    pub fn with_lanes(
        plane: Plane,
        control: std::ops::Range<u32>,
        test: std::ops::Range<u32>,
        trigger_rate: f64,
    ) -> Result<Self> {
        Self::new(plane, test.collect(), control.collect(), trigger_rate)
    }

    pub fn arm_of(&self, user_id: &str) -> Result<Option<Arm>> {
        let b = self.plane.assign(user_id)?;
        Ok(if self.test_buckets.contains(&b) {
            Some(Arm::Test)
        } else if self.control_buckets.contains(&b) {
            Some(Arm::Control)
        } else {
            None
        })
    }

    /// Designed test:control traffic ratio, proportional to bucket counts.
    pub fn design_shares(&self) -> (f64, f64) {
        (self.test_buckets.len() as f64, self.control_buckets.len() as f64)
    }
}
