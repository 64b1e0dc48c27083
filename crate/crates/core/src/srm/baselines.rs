//! Fixed-horizon baselines and the rule-based labeler.

use serde::{Deserialize, Serialize};

use super::{ExpectedSplit, SrmSnapshot};
use crate::stats::{chi_square_sf, normal_sf, DegreesOfFreedom, Probability};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaselineOutcome {
    pub statistic: f64,
    pub p_value: f64,
    pub alert: bool,
}

fn evaluable(snapshot: &SrmSnapshot, min_total: u64) -> bool {
    snapshot.total() > 0 && snapshot.total() >= min_total
}

/// Two-sided one-proportion z-test with null variance `p0 (1 - p0) / n`.
///
/// `None` when `n` is below `min_total` (or zero).
pub fn t_test_detector(
    snapshot: &SrmSnapshot,
    split: &ExpectedSplit,
    alpha: Probability,
    min_total: u64,
) -> Option<BaselineOutcome> {
    if !evaluable(snapshot, min_total) {
        return None;
    }
    let p0 = split.p0();
    let n = snapshot.total() as f64;
    let z = (snapshot.p_hat()? - p0) / (p0 * (1.0 - p0) / n).sqrt();
    let p_value = (2.0 * normal_sf(z.abs())).min(1.0);
    Some(BaselineOutcome {
        statistic: z,
        p_value,
        alert: p_value < alpha.get(),
    })
}

/// Pearson chi-square on the two arms with expected `(n p0, n (1 - p0))`, 1 df.
pub fn chi2_detector(
    snapshot: &SrmSnapshot,
    split: &ExpectedSplit,
    alpha: Probability,
    min_total: u64,
) -> Option<BaselineOutcome> {
    if !evaluable(snapshot, min_total) {
        return None;
    }
    let p0 = split.p0();
    let n = snapshot.total() as f64;
    let (et, ec) = (n * p0, n * (1.0 - p0));
    let dt = snapshot.x_t as f64 - et;
    let dc = snapshot.x_c as f64 - ec;
    let statistic = dt * dt / et + dc * dc / ec;
    let df = DegreesOfFreedom::new(1).expect("1 df");
    let p_value = chi_square_sf(statistic, df).expect("statistic is non-negative");
    Some(BaselineOutcome {
        statistic,
        p_value,
        alert: p_value < alpha.get(),
    })
}

/// Label rule for even splits: `|x_t - x_c| / x_c > 1%`.
///
/// Evaluated in integers, so the 1% boundary is exact. An empty control arm
/// is positive when the test arm is not, and unlabeled when both are empty.
pub fn srm_label_rule(snapshot: &SrmSnapshot) -> Option<bool> {
    let (xt, xc) = (snapshot.x_t, snapshot.x_c);
    if xc == 0 {
        return (xt > 0).then_some(true);
    }
    Some(u128::from(xt.abs_diff(xc)) * 100 > u128::from(xc))
}

/// Generalization to uneven designs: `|x_t r_c - x_c r_t| / (x_c r_t) > 1%`.
/// Agrees with [`srm_label_rule`] when `r_t = r_c`.
pub fn srm_label_rule_for_split(snapshot: &SrmSnapshot, split: &ExpectedSplit) -> Option<bool> {
    if split.r_t() == split.r_c() {
        return srm_label_rule(snapshot);
    }
    let (xt, xc) = (snapshot.x_t as f64, snapshot.x_c as f64);
    if snapshot.x_c == 0 {
        return (snapshot.x_t > 0).then_some(true);
    }
    Some((xt * split.r_c() - xc * split.r_t()).abs() / (xc * split.r_t()) > 0.01)
}
