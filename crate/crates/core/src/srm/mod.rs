//! Sample ratio mismatch detection.
//!
//! Observed cumulative test/control counts are compared with the designed
//! split through two one-sided Wald SPRTs: test A looks for an inflated test
//! share (`p - p0 >= delta`), test B for a deflated one. Each is compared
//! with `ln((1 - beta) / alpha)`; the first crossing raises an alert and the
//! experiment stays alerted from then on.

mod baselines;
mod monitor;
mod sprt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::Probability;

pub use baselines::{
    chi2_detector, srm_label_rule, srm_label_rule_for_split, t_test_detector, BaselineOutcome,
};
pub use monitor::{
    aggregate_segments, monitor_series, resume_series, segmented_monitor,
    segmented_monitor_resume, validate_series, MonitorReport, SegmentedReport, AGGREGATE_SEGMENT,
};
pub use sprt::{
    evaluate_snapshot, sprt_exact_stats, sprt_gaussian_stats, sprt_step, wald_thresholds,
    Direction, MonitorState, Outcome, SprtDecision, WaldThresholds,
};

pub const DEFAULT_ALPHA: f64 = 0.05;
pub const DEFAULT_BETA: f64 = 0.0;
pub const DEFAULT_MIN_TOTAL: u64 = 100;

/// Designed traffic shares of the test and control arms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpectedSplit {
    r_t: f64,
    r_c: f64,
}

impl ExpectedSplit {
    pub fn new(r_t: f64, r_c: f64) -> Result<Self> {
        if !(r_t > 0.0 && r_c > 0.0 && r_t.is_finite() && r_c.is_finite()) {
            return Err(Error::domain(format!(
                "traffic shares must be positive and finite, got r_t={r_t}, r_c={r_c}"
            )));
        }
        Ok(Self { r_t, r_c })
    }

    pub fn even() -> Self {
        Self { r_t: 1.0, r_c: 1.0 }
    }

    /// A split with expected test share `p0`.
    pub fn from_p0(p0: f64) -> Result<Self> {
        if !(p0 > 0.0 && p0 < 1.0) {
            return Err(Error::domain(format!("p0 must lie in (0, 1), got {p0}")));
        }
        Self::new(p0, 1.0 - p0)
    }

    pub fn r_t(&self) -> f64 {
        self.r_t
    }

    pub fn r_c(&self) -> f64 {
        self.r_c
    }

    /// Expected test share `r_t / (r_t + r_c)`.
    pub fn p0(&self) -> f64 {
        self.r_t / (self.r_t + self.r_c)
    }
}

/// `min(1%, 5% * min(p0, 1 - p0))`.
pub fn default_delta(split: &ExpectedSplit) -> f64 {
    let p0 = split.p0();
    0.01f64.min(0.05 * p0.min(1.0 - p0))
}

/// Cumulative arm counts observed at day `day`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SrmSnapshot {
    pub day: u32,
    pub x_t: u64,
    pub x_c: u64,
}

impl SrmSnapshot {
    pub fn new(day: u32, x_t: u64, x_c: u64) -> Self {
        Self { day, x_t, x_c }
    }

    pub fn total(&self) -> u64 {
        self.x_t + self.x_c
    }

    /// Observed test share; `None` when both arms are empty.
    pub fn p_hat(&self) -> Option<f64> {
        let n = self.total();
        (n > 0).then(|| self.x_t as f64 / n as f64)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    /// Normal approximation with plug-in variance.
    Gaussian,
    /// Binomial likelihood ratio.
    #[default]
    Exact,
}

impl std::str::FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian" => Ok(Variant::Gaussian),
            "exact" => Ok(Variant::Exact),
            other => Err(Error::domain(format!("unknown SPRT variant `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SprtConfig {
    /// Error tolerance; `None` resolves to [`default_delta`].
    pub delta: Option<f64>,
    pub alpha: Probability,
    pub beta: Probability,
    pub variant: Variant,
    pub min_total: u64,
}

impl Default for SprtConfig {
    fn default() -> Self {
        Self {
            delta: None,
            alpha: Probability::significance(DEFAULT_ALPHA).expect("valid default"),
            beta: Probability::new(DEFAULT_BETA).expect("valid default"),
            variant: Variant::default(),
            min_total: DEFAULT_MIN_TOTAL,
        }
    }
}

impl SprtConfig {
    pub fn new(variant: Variant, alpha: f64, beta: f64, delta: Option<f64>) -> Result<Self> {
        let cfg = Self {
            delta,
            alpha: Probability::significance(alpha)?,
            beta: Probability::new(beta)?,
            variant,
            ..Self::default()
        };
        cfg.check()?;
        Ok(cfg)
    }

    pub fn with_min_total(mut self, min_total: u64) -> Self {
        self.min_total = min_total;
        self
    }

    pub fn check(&self) -> Result<()> {
        Probability::significance(self.alpha.get())?;
        if !(self.beta.get() >= 0.0 && self.beta.get() < 1.0) {
            return Err(Error::domain(format!(
                "beta must lie in [0, 1), got {}",
                self.beta.get()
            )));
        }
        if let Some(d) = self.delta {
            if !(d > 0.0 && d < 0.5) {
                return Err(Error::domain(format!("delta must lie in (0, 0.5), got {d}")));
            }
        }
        Ok(())
    }

    /// Explicit delta if configured, otherwise the split's default.
    pub fn resolve_delta(&self, split: &ExpectedSplit) -> Result<f64> {
        let p0 = split.p0();
        match self.delta {
            Some(d) if d > 0.0 && d < p0.min(1.0 - p0) => Ok(d),
            Some(d) => Err(Error::domain(format!(
                "delta {d} must lie in (0, min(p0, 1 - p0)) = (0, {})",
                p0.min(1.0 - p0)
            ))),
            None => Ok(default_delta(split)),
        }
    }
}
