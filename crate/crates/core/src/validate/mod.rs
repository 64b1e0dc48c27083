//! In-flight randomization validation.
//!
//! Hash-mod assignment should spread traffic over `B` buckets as a uniform
//! multinomial. Each test here takes the observed [`BucketCounts`] and decides
//! whether that hypothesis still holds. `PSI_k` is the primary detector; the
//! Pearson, Kolmogorov-Smirnov and Anderson-Darling tests are baselines.

mod baselines;
mod counts;
mod psi;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::Probability;

pub use baselines::{ad_uniform_test, ks_uniform_test, pearson_chi2_uniform_test};
pub use counts::BucketCounts;
pub use psi::{psi_k_uniform_test, psi_statistic, psi_two_sample_test};

pub const DEFAULT_ALPHA: f64 = 0.001;
pub const DEFAULT_K: u32 = 2;
/// Samples per bucket required before any verdict.
pub const MIN_SAMPLES_PER_BUCKET: u64 = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    PsiK,
    PearsonChi2,
    Ks,
    Ad,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::PearsonChi2, Method::Ad, Method::Ks, Method::PsiK];

    pub fn label(self) -> &'static str {
        match self {
            Method::PsiK => "psi_k",
            Method::PearsonChi2 => "pearson_chi2",
            Method::Ks => "ks",
            Method::Ad => "ad",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "psi" | "psi_k" | "psik" => Ok(Method::PsiK),
            "chi2" | "pearson" | "pearson_chi2" => Ok(Method::PearsonChi2),
            "ks" => Ok(Method::Ks),
            "ad" => Ok(Method::Ad),
            other => Err(Error::domain(format!("unknown validation method `{other}`"))),
        }
    }
}

/// How empty buckets are treated by the PSI statistics.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ZeroPolicy {
    /// An empty bucket makes the statistic `+inf`, which always alerts.
    #[default]
    InfiniteStatistic,
    /// Add 0.5 to every bucket before computing proportions.
    Smoothing,
}

impl FromStr for ZeroPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "infinite" | "infinite_statistic" => Ok(ZeroPolicy::InfiniteStatistic),
            "smoothing" => Ok(ZeroPolicy::Smoothing),
            other => Err(Error::domain(format!("unknown zero policy `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValidationConfig {
    pub method: Method,
    pub alpha: Probability,
    /// Reference-to-observed sample size ratio for `PSI_k`.
    pub k: u32,
    /// Minimum total before a verdict; `None` means `10 * B`.
    pub min_total: Option<u64>,
    pub zero_policy: ZeroPolicy,
}

impl Default for ValidationConfig {
    fn default() -> Self {
        Self {
            method: Method::PsiK,
            alpha: Probability::significance(DEFAULT_ALPHA).expect("valid default"),
            k: DEFAULT_K,
            min_total: None,
            zero_policy: ZeroPolicy::default(),
        }
    }
}

impl ValidationConfig {
    pub fn new(method: Method, alpha: f64, k: u32) -> Result<Self> {
        let cfg = Self {
            method,
            alpha: Probability::significance(alpha)?,
            k,
            ..Self::default()
        };
        cfg.check()?;
        Ok(cfg)
    }

    pub fn with_zero_policy(mut self, policy: ZeroPolicy) -> Self {
        self.zero_policy = policy;
        self
    }

    pub fn with_min_total(mut self, min_total: u64) -> Self {
        self.min_total = Some(min_total);
        self
    }

    pub fn check(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::domain("k must be a positive integer"));
        }
        Probability::significance(self.alpha.get())?;
        Ok(())
    }

    pub fn min_total_for(&self, buckets: usize) -> u64 {
        self.min_total
            .unwrap_or(MIN_SAMPLES_PER_BUCKET * buckets as u64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Evaluated,
    /// Fewer samples than the configured minimum; never alerts.
    InsufficientData,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationResult {
    pub method: Method,
    pub status: Status,
    #[serde(with = "crate::serde_float")]
    pub statistic: f64,
    /// Critical value the statistic is compared against, when the test has one.
    #[serde(with = "crate::serde_float::option")]
    pub threshold: Option<f64>,
    #[serde(with = "crate::serde_float::option")]
    pub p_value: Option<f64>,
    pub alert: bool,
    pub total: u64,
    pub buckets: usize,
    /// `p_hat_b - 1/B` for uniformity tests, `p_hat_b - q_hat_b` for two-sample PSI.
    pub per_bucket_deviation: Vec<f64>,
    /// Set for tests whose asymptotic p-value is conservative on discrete data.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub conservative_for_discrete: bool,
}

impl ValidationResult {
    pub(crate) fn insufficient(method: Method, counts: &BucketCounts) -> Self {
        Self {
            method,
            status: Status::InsufficientData,
            statistic: 0.0,
            threshold: None,
            p_value: None,
            alert: false,
            total: counts.total(),
            buckets: counts.buckets(),
            per_bucket_deviation: uniform_deviation(counts),
            conservative_for_discrete: false,
        }
    }

    pub fn evaluated(&self) -> bool {
        self.status == Status::Evaluated
    }
}

pub(crate) fn uniform_deviation(counts: &BucketCounts) -> Vec<f64> {
    let expected = 1.0 / counts.buckets() as f64;
    if counts.total() == 0 {
        return vec![0.0; counts.buckets()];
    }
    counts
        .proportions()
        .into_iter()
        .map(|p| p - expected)
        .collect()
}

/// Run the configured uniformity test, honouring the `min_total` guard.
pub fn validate(counts: &BucketCounts, config: &ValidationConfig) -> Result<ValidationResult> {
    config.check()?;
    if counts.total() < config.min_total_for(counts.buckets()) || counts.total() == 0 {
        return Ok(ValidationResult::insufficient(config.method, counts));
    }
    let alpha = config.alpha;
    match config.method {
        Method::PsiK => psi_k_uniform_test(counts, config.k, alpha, config),
        Method::PearsonChi2 => pearson_chi2_uniform_test(counts, alpha),
        Method::Ks => ks_uniform_test(counts, alpha),
        Method::Ad => ad_uniform_test(counts, alpha),
    }
}
