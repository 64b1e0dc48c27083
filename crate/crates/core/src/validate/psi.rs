//! Population stability index tests.

use super::{uniform_deviation, BucketCounts, Method, Status, ValidationConfig, ValidationResult, ZeroPolicy};
use crate::error::{Error, Result};
use crate::stats::{chi_square_critical, chi_square_sf, DegreesOfFreedom, Probability};

const SMOOTHING: f64 = 0.5;

fn proportions(counts: &BucketCounts, policy: ZeroPolicy) -> Vec<f64> {
    match policy {
        ZeroPolicy::InfiniteStatistic => counts.proportions(),
        ZeroPolicy::Smoothing => {
            let n = counts.total() as f64 + SMOOTHING * counts.buckets() as f64;
            counts
                .counts()
                .iter()
                .map(|&c| (c as f64 + SMOOTHING) / n)
                .collect()
        }
    }
}

/// `sum_b (p_b - q_b) ln(p_b / q_b)` over two proportion vectors.
///
/// A bucket empty on both sides contributes nothing; empty on one side only
/// makes the sum infinite.
fn psi_from_proportions(p: &[f64], q: &[f64]) -> f64 {
    p.iter()
        .zip(q)
        .map(|(&pb, &qb)| match (pb == 0.0, qb == 0.0) {
            (true, true) => 0.0,
            (false, false) => (pb - qb) * (pb.ln() - qb.ln()),
            _ => f64::INFINITY,
        })
        .sum()
}

/// Two-sample population stability index between bucket distributions.
pub fn psi_statistic(p: &BucketCounts, q: &BucketCounts, policy: ZeroPolicy) -> Result<f64> {
    if p.buckets() != q.buckets() {
        return Err(Error::shape(format!(
            "bucket cardinality differs: {} vs {}",
            p.buckets(),
            q.buckets()
        )));
    }
    if p.total() == 0 || q.total() == 0 {
        return Err(Error::domain("PSI needs both totals to be positive"));
    }
    Ok(psi_from_proportions(
        &proportions(p, policy),
        &proportions(q, policy),
    ))
}

/// Two-sample PSI test: `PSI / (1/n + 1/m)` is approximately chi-square with
/// `B - 1` degrees of freedom under equal distributions.
pub fn psi_two_sample_test(
    p: &BucketCounts,
    q: &BucketCounts,
    alpha: Probability,
    policy: ZeroPolicy,
) -> Result<ValidationResult> {
    let psi = psi_statistic(p, q, policy)?;
    let scale = 1.0 / p.total() as f64 + 1.0 / q.total() as f64;
    let scaled = psi / scale;
    let df = DegreesOfFreedom::new(p.buckets() as u32 - 1)?;
    let critical = chi_square_critical(alpha.get(), df)?;
    let p_value = if scaled.is_finite() {
        chi_square_sf(scaled, df)?
    } else {
        0.0
    };
    let deviation = p
        .proportions()
        .iter()
        .zip(q.proportions())
        .map(|(a, b)| a - b)
        .collect();
    Ok(ValidationResult {
        method: Method::PsiK,
        status: Status::Evaluated,
        statistic: scaled,
        threshold: Some(critical),
        p_value: Some(p_value),
        alert: scaled > critical,
        total: p.total(),
        buckets: p.buckets(),
        per_bucket_deviation: deviation,
        conservative_for_discrete: false,
    })
}

/// `PSI_k` test of observed counts against a uniform reference of size `k n`.
///
/// The statistic is `sum_b (n_b/n - 1/B)(ln(n_b/n) - ln(1/B))`, and the test
/// alerts when it exceeds `(k + 1) / (k n) * chi2_{alpha, B-1}`. Larger `k`
/// lowers the threshold.
pub fn psi_k_uniform_test(
    counts: &BucketCounts,
    k: u32,
    alpha: Probability,
    config: &ValidationConfig,
) -> Result<ValidationResult> {
    if k == 0 {
        return Err(Error::domain("k must be a positive integer"));
    }
    let buckets = counts.buckets();
    if counts.total() == 0 || counts.total() < config.min_total_for(buckets) {
        return Ok(ValidationResult::insufficient(Method::PsiK, counts));
    }

    let observed = proportions(counts, config.zero_policy);
    let reference = vec![1.0 / buckets as f64; buckets];
    let statistic = psi_from_proportions(&observed, &reference);

    let n = match config.zero_policy {
        ZeroPolicy::InfiniteStatistic => counts.total() as f64,
        ZeroPolicy::Smoothing => counts.total() as f64 + SMOOTHING * buckets as f64,
    };
    let df = DegreesOfFreedom::new(buckets as u32 - 1)?;
    let factor = f64::from(k + 1) / (f64::from(k) * n);
    let threshold = factor * chi_square_critical(alpha.get(), df)?;
    let p_value = if statistic.is_finite() {
        chi_square_sf(statistic / factor, df)?
    } else {
        0.0
    };

    Ok(ValidationResult {
        method: Method::PsiK,
        status: Status::Evaluated,
        statistic,
        threshold: Some(threshold),
        p_value: Some(p_value),
        alert: statistic > threshold,
        total: counts.total(),
        buckets,
        per_bucket_deviation: uniform_deviation(counts),
        conservative_for_discrete: false,
    })
}
