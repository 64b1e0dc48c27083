use serde::{Deserialize, Serialize};

use super::{ExpectedSplit, SprtConfig, SrmSnapshot, Variant};
use crate::error::{Error, Result};
use crate::stats::Probability;

/// Wald boundaries on the log-likelihood ratio.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaldThresholds {
    /// `ln(beta / (1 - alpha))`; `-inf` when `beta = 0`.
    pub lower: f64,
    /// `ln((1 - beta) / alpha)`.
    pub upper: f64,
}

pub fn wald_thresholds(alpha: Probability, beta: Probability) -> WaldThresholds {
    let (a, b) = (alpha.get(), beta.get());
    let lower = if b == 0.0 {
        f64::NEG_INFINITY
    } else {
        (b / (1.0 - a)).ln()
    };
    WaldThresholds {
        lower,
        upper: ((1.0 - b) / a).ln(),
    }
}

/// Gaussian SPRT statistics `(t_a, t_b)` with plug-in variance
/// `p_hat (1 - p_hat) / n`.
///
/// `None` when the variance degenerates (`p_hat` in `{0, 1}` or `n = 0`).
pub fn sprt_gaussian_stats(
    snapshot: &SrmSnapshot,
    split: &ExpectedSplit,
    delta: f64,
) -> Option<(f64, f64)> {
    let p_hat = snapshot.p_hat()?;
    if p_hat <= 0.0 || p_hat >= 1.0 {
        return None;
    }
    let variance = p_hat * (1.0 - p_hat) / snapshot.total() as f64;
    let shift = 2.0 * delta * (p_hat - split.p0());
    let d2 = delta * delta;
    Some((-(d2 - shift) / (2.0 * variance), -(d2 + shift) / (2.0 * variance)))
}

/// Binomial SPRT statistics `(t_a, t_b)`:
///
/// ```text
/// t_a = x_t ln((p0 + d) / p0) + x_c ln((1 - p0 - d) / (1 - p0))
/// t_b = x_t ln((p0 - d) / p0) + x_c ln((1 - p0 + d) / (1 - p0))
/// ```
pub fn sprt_exact_stats(
    snapshot: &SrmSnapshot,
    split: &ExpectedSplit,
    delta: f64,
) -> Result<(f64, f64)> {
    let p0 = split.p0();
    if !(delta > 0.0 && delta < p0.min(1.0 - p0)) {
        return Err(Error::domain(format!(
            "delta {delta} must lie in (0, {})",
            p0.min(1.0 - p0)
        )));
    }
    let (xt, xc) = (snapshot.x_t as f64, snapshot.x_c as f64);
    let q0 = 1.0 - p0;
    // ln_1p keeps the per-sample increments exact for small delta.
    let t_a = xt * (delta / p0).ln_1p() + xc * (-delta / q0).ln_1p();
    let t_b = xt * (-delta / p0).ln_1p() + xc * (delta / q0).ln_1p();
    Ok((t_a, t_b))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// Test share above the design.
    High,
    /// Test share below the design.
    Low,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    AlertHigh,
    AlertLow,
    Continue,
    /// Both statistics fell below the lower Wald bound. Informational only:
    /// monitoring continues. Never produced when `beta = 0`.
    AcceptNull,
    NotEvaluated,
    /// The experiment alerted on an earlier day; the state is frozen.
    AlreadyFired,
}

impl Outcome {
    pub fn direction(self) -> Option<Direction> {
        match self {
            Outcome::AlertHigh => Some(Direction::High),
            Outcome::AlertLow => Some(Direction::Low),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SprtDecision {
    pub day: u32,
    #[serde(with = "crate::serde_float::option")]
    pub t_a: Option<f64>,
    #[serde(with = "crate::serde_float::option")]
    pub t_b: Option<f64>,
    #[serde(with = "crate::serde_float")]
    pub upper_threshold: f64,
    #[serde(with = "crate::serde_float")]
    pub lower_threshold: f64,
    pub outcome: Outcome,
}

/// Per-experiment alert state. `fired` is absorbing.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MonitorState {
    pub fired: bool,
    pub first_alert_day: Option<u32>,
    pub direction: Option<Direction>,
    /// Last day folded into this state.
    pub last_day: Option<u32>,
}

/// Evaluate one snapshot in isolation. Statistics depend only on the
/// cumulative counts, so this is also how replayed days are scored.
pub fn evaluate_snapshot(
    snapshot: &SrmSnapshot,
    split: &ExpectedSplit,
    config: &SprtConfig,
) -> Result<SprtDecision> {
    let delta = config.resolve_delta(split)?;
    let bounds = wald_thresholds(config.alpha, config.beta);
    let mut decision = SprtDecision {
        day: snapshot.day,
        t_a: None,
        t_b: None,
        upper_threshold: bounds.upper,
        lower_threshold: bounds.lower,
        outcome: Outcome::NotEvaluated,
    };
    if snapshot.total() == 0 || snapshot.total() < config.min_total {
        return Ok(decision);
    }
    let stats = match config.variant {
        Variant::Gaussian => sprt_gaussian_stats(snapshot, split, delta),
        Variant::Exact => Some(sprt_exact_stats(snapshot, split, delta)?),
    };
    let Some((t_a, t_b)) = stats else {
        return Ok(decision);
    };
    decision.t_a = Some(t_a);
    decision.t_b = Some(t_b);
    decision.outcome = if t_a > bounds.upper {
        Outcome::AlertHigh
    } else if t_b > bounds.upper {
        Outcome::AlertLow
    } else if t_a < bounds.lower && t_b < bounds.lower {
        Outcome::AcceptNull
    } else {
        Outcome::Continue
    };
    Ok(decision)
}

/// Fold one snapshot into the monitor state.
///
/// Days must strictly increase. After the first alert the state is frozen
/// and later decisions carry [`Outcome::AlreadyFired`].
pub fn sprt_step(
    state: MonitorState,
    snapshot: &SrmSnapshot,
    split: &ExpectedSplit,
    config: &SprtConfig,
) -> Result<(MonitorState, SprtDecision)> {
    if let Some(last) = state.last_day {
        if snapshot.day <= last {
            return Err(Error::Sequencing(format!(
                "day {} does not follow day {last}",
                snapshot.day
            )));
        }
    }
    let mut decision = evaluate_snapshot(snapshot, split, config)?;
    let mut next = state;
    next.last_day = Some(snapshot.day);
    if state.fired {
        decision.outcome = Outcome::AlreadyFired;
    } else if let Some(direction) = decision.outcome.direction() {
        next.fired = true;
        next.first_alert_day = Some(snapshot.day);
        next.direction = Some(direction);
    }
    Ok((next, decision))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(v: f64) -> Probability {
        Probability::new(v).unwrap()
    }

    #[test]
    fn wald_closed_forms() {
        let w = wald_thresholds(p(0.05), p(0.0));
        assert!((w.upper - 20f64.ln()).abs() < 1e-15);
        assert_eq!(w.lower, f64::NEG_INFINITY);
        let w = wald_thresholds(p(0.05), p(0.2));
        assert!((w.upper - 16f64.ln()).abs() < 1e-15);
        assert!((w.lower - (0.2f64 / 0.95).ln()).abs() < 1e-15);
        assert!((w.upper - 2.7726).abs() < 1e-4);
        assert!((w.lower + 1.5581).abs() < 1e-4);
    }

    #[test]
    fn gaussian_null_is_negative() {
        let split = ExpectedSplit::even();
        let s = SrmSnapshot::new(1, 5_000, 5_000);
        let (a, b) = sprt_gaussian_stats(&s, &split, 0.01).unwrap();
        let variance = 0.25 / 10_000.0;
        assert!((a + 1e-4 / (2.0 * variance)).abs() < 1e-12);
        assert_eq!(a, b);
        assert!(a < 0.0);
    }

    #[test]
    fn gaussian_degenerate_variance() {
        let split = ExpectedSplit::even();
        assert!(sprt_gaussian_stats(&SrmSnapshot::new(1, 500, 0), &split, 0.01).is_none());
        assert!(sprt_gaussian_stats(&SrmSnapshot::new(1, 0, 0), &split, 0.01).is_none());
        let cfg = SprtConfig::new(Variant::Gaussian, 0.05, 0.0, None).unwrap();
        let d = evaluate_snapshot(&SrmSnapshot::new(1, 500, 0), &split, &cfg).unwrap();
        assert_eq!(d.outcome, Outcome::NotEvaluated);
        // the exact variant stays total
        let cfg = SprtConfig::new(Variant::Exact, 0.05, 0.0, None).unwrap();
        let d = evaluate_snapshot(&SrmSnapshot::new(1, 500, 0), &split, &cfg).unwrap();
        assert_eq!(d.outcome, Outcome::AlertHigh);
    }

    #[test]
    fn exact_empty_is_zero() {
        let (a, b) =
            sprt_exact_stats(&SrmSnapshot::new(1, 0, 0), &ExpectedSplit::even(), 0.01).unwrap();
        assert_eq!((a, b), (0.0, 0.0));
    }

    #[test]
    fn exact_domain() {
        let split = ExpectedSplit::from_p0(0.1).unwrap();
        assert!(sprt_exact_stats(&SrmSnapshot::new(1, 1, 1), &split, 0.1).is_err());
        assert!(sprt_exact_stats(&SrmSnapshot::new(1, 1, 1), &split, 0.0).is_err());
    }

    #[test]
    fn exact_mirror_symmetry() {
        let s = SrmSnapshot::new(1, 700, 1_300);
        let mirrored = SrmSnapshot::new(1, 1_300, 700);
        let (a, b) = sprt_exact_stats(&s, &ExpectedSplit::from_p0(0.3).unwrap(), 0.01).unwrap();
        let (ma, mb) =
            sprt_exact_stats(&mirrored, &ExpectedSplit::from_p0(0.7).unwrap(), 0.01).unwrap();
        assert!((a - mb).abs() < 1e-9 * a.abs().max(1.0));
        assert!((b - ma).abs() < 1e-9 * b.abs().max(1.0));
    }

    #[test]
    fn accept_null_needs_positive_beta() {
        let split = ExpectedSplit::even();
        let s = SrmSnapshot::new(1, 50_000, 50_000);
        let cfg = SprtConfig::new(Variant::Exact, 0.05, 0.2, None).unwrap();
        assert_eq!(
            evaluate_snapshot(&s, &split, &cfg).unwrap().outcome,
            Outcome::AcceptNull
        );
        let cfg = SprtConfig::new(Variant::Exact, 0.05, 0.0, None).unwrap();
        assert_eq!(
            evaluate_snapshot(&s, &split, &cfg).unwrap().outcome,
            Outcome::Continue
        );
    }

    #[test]
    fn step_rejects_out_of_order_days() {
        let split = ExpectedSplit::even();
        let cfg = SprtConfig::default();
        let (state, _) =
            sprt_step(MonitorState::default(), &SrmSnapshot::new(3, 10, 10), &split, &cfg).unwrap();
        let err = sprt_step(state, &SrmSnapshot::new(3, 20, 20), &split, &cfg).unwrap_err();
        assert!(matches!(err, Error::Sequencing(_)));
    }

    #[test]
    fn fired_state_is_absorbing() {
        let split = ExpectedSplit::even();
        let cfg = SprtConfig::default();
        let (state, d) = sprt_step(
            MonitorState::default(),
            &SrmSnapshot::new(1, 2_108, 3_183),
            &split,
            &cfg,
        )
        .unwrap();
        assert_eq!(d.outcome, Outcome::AlertLow);
        assert_eq!(state.first_alert_day, Some(1));
        // a perfectly balanced later day does not unfire
        let (state, d) =
            sprt_step(state, &SrmSnapshot::new(2, 50_000, 50_000), &split, &cfg).unwrap();
        assert_eq!(d.outcome, Outcome::AlreadyFired);
        assert!(state.fired);
        assert_eq!(state.first_alert_day, Some(1));
        assert_eq!(state.direction, Some(Direction::Low));
        assert_eq!(state.last_day, Some(2));
    }
}
