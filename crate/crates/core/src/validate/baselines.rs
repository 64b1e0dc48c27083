//! Standard goodness-of-fit baselines against a uniform bucket split.
//!
//! KS and AD are applied to bucket indices in recorded order.

use super::{uniform_deviation, BucketCounts, Method, Status, ValidationResult};
use crate::error::{Error, Result};
use crate::stats::{
    anderson_darling_sf, chi_square_critical, chi_square_sf, kolmogorov_sf, DegreesOfFreedom,
    Probability,
};

fn require_samples(counts: &BucketCounts) -> Result<()> {
    if counts.total() == 0 {
        Err(Error::domain("uniformity test needs at least one sample"))
    } else {
        Ok(())
    }
}

fn empirical_cdf(counts: &BucketCounts) -> Vec<f64> {
    let n = counts.total() as f64;
    let mut acc = 0u64;
    counts
        .counts()
        .iter()
        .map(|&c| {
            acc += c;
            acc as f64 / n
        })
        .collect()
}

/// Pearson `T = sum_b (n_b - n/B)^2 / (n/B)` against chi-square with `B - 1` df.
pub fn pearson_chi2_uniform_test(
    counts: &BucketCounts,
    alpha: Probability,
) -> Result<ValidationResult> {
    require_samples(counts)?;
    let expected = counts.total() as f64 / counts.buckets() as f64;
    let statistic: f64 = counts
        .counts()
        .iter()
        .map(|&c| {
            let d = c as f64 - expected;
            d * d / expected
        })
        .sum();
    let df = DegreesOfFreedom::new(counts.buckets() as u32 - 1)?;
    let p_value = chi_square_sf(statistic, df)?;
    Ok(ValidationResult {
        method: Method::PearsonChi2,
        status: Status::Evaluated,
        statistic,
        threshold: Some(chi_square_critical(alpha.get(), df)?),
        p_value: Some(p_value),
        alert: p_value < alpha.get(),
        total: counts.total(),
        buckets: counts.buckets(),
        per_bucket_deviation: uniform_deviation(counts),
        conservative_for_discrete: false,
    })
}

/// Kolmogorov-Smirnov `D = max_b |F_hat(b) - (b+1)/B|` with the asymptotic
/// Kolmogorov tail at `sqrt(n) D`. Conservative for discrete data.
pub fn ks_uniform_test(counts: &BucketCounts, alpha: Probability) -> Result<ValidationResult> {
    require_samples(counts)?;
    let b = counts.buckets() as f64;
    let d = empirical_cdf(counts)
        .into_iter()
        .enumerate()
        .map(|(i, f)| (f - (i as f64 + 1.0) / b).abs())
        .fold(0.0, f64::max);
    let p_value = kolmogorov_sf((counts.total() as f64).sqrt() * d);
    Ok(ValidationResult {
        method: Method::Ks,
        status: Status::Evaluated,
        statistic: d,
        threshold: None,
        p_value: Some(p_value),
        alert: p_value < alpha.get(),
        total: counts.total(),
        buckets: counts.buckets(),
        per_bucket_deviation: uniform_deviation(counts),
        conservative_for_discrete: true,
    })
}

/// Discrete one-sample Anderson-Darling statistic
/// `A^2 = n sum_{b=0}^{B-2} (F_hat(b) - F(b))^2 (F(b+1) - F(b)) / (F(b)(1 - F(b)))`
/// with `F(b) = (b+1)/B`. The last bucket is skipped since `F(B-1) = 1`.
pub fn ad_uniform_test(counts: &BucketCounts, alpha: Probability) -> Result<ValidationResult> {
    require_samples(counts)?;
    if counts.buckets() < 3 {
        return Err(Error::domain("Anderson-Darling test needs at least 3 buckets"));
    }
    let b = counts.buckets() as f64;
    let ecdf = empirical_cdf(counts);
    let cdf = |i: usize| (i as f64 + 1.0) / b;
    let sum: f64 = (0..counts.buckets() - 1)
        .map(|i| {
            let f = cdf(i);
            let diff = ecdf[i] - f;
            diff * diff * (cdf(i + 1) - f) / (f * (1.0 - f))
        })
        .sum();
    let statistic = counts.total() as f64 * sum;
    let p_value = anderson_darling_sf(statistic);
    Ok(ValidationResult {
        method: Method::Ad,
        status: Status::Evaluated,
        statistic,
        threshold: None,
        p_value: Some(p_value),
        alert: p_value < alpha.get(),
        total: counts.total(),
        buckets: counts.buckets(),
        per_bucket_deviation: uniform_deviation(counts),
        conservative_for_discrete: false,
    })
}
