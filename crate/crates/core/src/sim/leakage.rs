use rand::Rng;

use super::rng::sample_multinomial;
use crate::error::{Error, Result};
use crate::validate::BucketCounts;

/// Add `round(leak_fraction * n)` extra samples spread uniformly over `targets`.
///
/// Models users that are tracked under an id the hash did not assign, landing
/// in buckets they were never routed to.
pub fn inject_ghost_leakage<R: Rng + ?Sized>(
    counts: &BucketCounts,
    leak_fraction: f64,
    targets: &[usize],
    rng: &mut R,
) -> Result<BucketCounts> {
    if !(0.0..1.0).contains(&leak_fraction) {
        return Err(Error::domain(format!("leak fraction {leak_fraction} outside [0, 1)")));
    }
    if targets.is_empty() {
        return Err(Error::spec("ghost leakage needs at least one target bucket"));
    }
    if let Some(&b) = targets.iter().find(|&&b| b >= counts.buckets()) {
        return Err(Error::spec(format!(
            "target bucket {b} outside {} buckets",
            counts.buckets()
        )));
    }
    let extra = (leak_fraction * counts.total() as f64).round() as u64;
    let probs = vec![1.0 / targets.len() as f64; targets.len()];
    let draw = sample_multinomial(rng, extra, &probs)?;
    let mut out = counts.counts().to_vec();
    for (&b, d) in targets.iter().zip(draw) {
        out[b] += d;
    }
    BucketCounts::new(out)
}
