use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::sprt::{evaluate_snapshot, sprt_step, MonitorState, Outcome, SprtDecision};
use super::{ExpectedSplit, SprtConfig, SrmSnapshot};
use crate::error::{Error, Result};

/// Segment key of the aggregate series.
pub const AGGREGATE_SEGMENT: &str = "all";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonitorReport {
    pub state: MonitorState,
    pub decisions: Vec<SprtDecision>,
    pub final_x_t: u64,
    pub final_x_c: u64,
}

impl MonitorReport {
    pub fn fired(&self) -> bool {
        self.state.fired
    }
}

/// Days strictly increase and cumulative counts never decrease.
pub fn validate_series(snapshots: &[SrmSnapshot]) -> Result<()> {
    for pair in snapshots.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        if b.day <= a.day {
            return Err(Error::Sequencing(format!(
                "day {} follows day {}",
                b.day, a.day
            )));
        }
        if b.x_t < a.x_t || b.x_c < a.x_c {
            return Err(Error::Validation(format!(
                "cumulative counts decrease between day {} and day {}",
                a.day, b.day
            )));
        }
    }
    Ok(())
}

/// Fold [`sprt_step`] over a whole series from a fresh state.
pub fn monitor_series(
    snapshots: &[SrmSnapshot],
    split: &ExpectedSplit,
    config: &SprtConfig,
) -> Result<MonitorReport> {
    resume_series(MonitorState::default(), snapshots, split, config)
}

/// Continue monitoring from a persisted state.
///
/// Days at or before `prior.last_day` were folded in by an earlier run; they
/// are re-scored for the report but do not move the state. This makes a
/// rerun on the same input reproduce the same report and state.
pub fn resume_series(
    prior: MonitorState,
    snapshots: &[SrmSnapshot],
    split: &ExpectedSplit,
    config: &SprtConfig,
) -> Result<MonitorReport> {
    validate_series(snapshots)?;
    let mut state = prior;
    let mut decisions = Vec::with_capacity(snapshots.len());
    for snapshot in snapshots {
        let replay = prior.last_day.is_some_and(|last| snapshot.day <= last);
        let decision = if replay {
            let mut d = evaluate_snapshot(snapshot, split, config)?;
            if prior.first_alert_day.is_some_and(|first| snapshot.day > first) {
                d.outcome = Outcome::AlreadyFired;
            }
            d
        } else {
            let (next, d) = sprt_step(state, snapshot, split, config)?;
            state = next;
            d
        };
        decisions.push(decision);
    }
    let last = snapshots.last();
    Ok(MonitorReport {
        state,
        decisions,
        final_x_t: last.map_or(0, |s| s.x_t),
        final_x_c: last.map_or(0, |s| s.x_c),
    })
}

/// Sum segment series day by day. A segment with no snapshot on a given day
/// contributes its most recent cumulative counts.
pub fn aggregate_segments<'a>(
    segments: impl IntoIterator<Item = &'a [SrmSnapshot]>,
) -> Vec<SrmSnapshot> {
    let segments: Vec<&[SrmSnapshot]> = segments.into_iter().collect();
    let days: BTreeSet<u32> = segments
        .iter()
        .flat_map(|s| s.iter().map(|snap| snap.day))
        .collect();
    let mut cursors = vec![0usize; segments.len()];
    days.into_iter()
        .map(|day| {
            let mut total = SrmSnapshot::new(day, 0, 0);
            for (series, cursor) in segments.iter().zip(cursors.iter_mut()) {
                while *cursor < series.len() && series[*cursor].day <= day {
                    *cursor += 1;
                }
                if *cursor > 0 {
                    total.x_t += series[*cursor - 1].x_t;
                    total.x_c += series[*cursor - 1].x_c;
                }
            }
            total
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentedReport {
    pub aggregate: MonitorReport,
    pub segments: BTreeMap<String, MonitorReport>,
    /// Segments whose fired status differs from the aggregate.
    pub divergent_segments: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

/// Monitor every segment independently plus their aggregate.
pub fn segmented_monitor(
    rows: &BTreeMap<String, Vec<SrmSnapshot>>,
    split: &ExpectedSplit,
    config: &SprtConfig,
) -> Result<SegmentedReport> {
    segmented_monitor_resume(rows, split, config, &BTreeMap::new())
}

/// [`segmented_monitor`] starting from persisted per-segment states, keyed
/// like `rows` with [`AGGREGATE_SEGMENT`] for the aggregate.
pub fn segmented_monitor_resume(
    rows: &BTreeMap<String, Vec<SrmSnapshot>>,
    split: &ExpectedSplit,
    config: &SprtConfig,
    priors: &BTreeMap<String, MonitorState>,
) -> Result<SegmentedReport> {
    let mut notes = Vec::new();
    let mut segments = BTreeMap::new();
    for (key, series) in rows {
        if key == AGGREGATE_SEGMENT {
            return Err(Error::Validation(format!(
                "segment name `{AGGREGATE_SEGMENT}` is reserved for the aggregate"
            )));
        }
        if series.is_empty() {
            notes.push(format!("segment `{key}` has no snapshots and was omitted"));
            continue;
        }
        let prior = priors.get(key).copied().unwrap_or_default();
        segments.insert(key.clone(), resume_series(prior, series, split, config)?);
    }
    let combined = aggregate_segments(rows.values().map(Vec::as_slice));
    let prior = priors.get(AGGREGATE_SEGMENT).copied().unwrap_or_default();
    let aggregate = resume_series(prior, &combined, split, config)?;
    let divergent_segments = segments
        .iter()
        .filter(|(_, r)| r.fired() != aggregate.fired())
        .map(|(k, _)| k.clone())
        .collect();
    Ok(SegmentedReport {
        aggregate,
        segments,
        divergent_segments,
        notes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::srm::{Direction, Variant};

    fn balanced(days: u32, per_day: u64) -> Vec<SrmSnapshot> {
        (1..=days)
            .map(|d| SrmSnapshot::new(d, per_day * u64::from(d), per_day * u64::from(d)))
            .collect()
    }

    #[test]
    fn null_stream_never_fires() {
        let r = monitor_series(&balanced(29, 50_000), &ExpectedSplit::even(), &SprtConfig::default())
            .unwrap();
        assert!(!r.fired());
        assert_eq!(r.decisions.len(), 29);
        assert!(r.decisions.iter().all(|d| d.outcome == Outcome::Continue));
    }

    #[test]
    fn all_zero_and_empty_series() {
        let zeros: Vec<_> = (1..=5).map(|d| SrmSnapshot::new(d, 0, 0)).collect();
        let r = monitor_series(&zeros, &ExpectedSplit::even(), &SprtConfig::default()).unwrap();
        assert!(!r.fired());
        assert!(r.decisions.iter().all(|d| d.outcome == Outcome::NotEvaluated));
        let r = monitor_series(&[], &ExpectedSplit::even(), &SprtConfig::default()).unwrap();
        assert!(!r.fired() && r.decisions.is_empty());
    }

    #[test]
    fn desk_example_fires_day_one() {
        for variant in [Variant::Gaussian, Variant::Exact] {
            let cfg = SprtConfig::new(variant, 0.05, 0.0, None).unwrap();
            let series = vec![
                SrmSnapshot::new(1, 2_108, 3_183),
                SrmSnapshot::new(2, 4_000, 6_000),
                SrmSnapshot::new(3, 6_000, 6_100),
            ];
            let r = monitor_series(&series, &ExpectedSplit::even(), &cfg).unwrap();
            assert_eq!(r.state.first_alert_day, Some(1));
            assert_eq!(r.state.direction, Some(Direction::Low));
            assert_eq!(r.decisions[1].outcome, Outcome::AlreadyFired);
            assert_eq!(r.decisions[2].outcome, Outcome::AlreadyFired);
        }
    }

    #[test]
    fn invalid_series_rejected() {
        let dup = vec![SrmSnapshot::new(1, 1, 1), SrmSnapshot::new(1, 2, 2)];
        assert!(monitor_series(&dup, &ExpectedSplit::even(), &SprtConfig::default()).is_err());
        let dec = vec![SrmSnapshot::new(1, 5, 1), SrmSnapshot::new(2, 4, 2)];
        assert!(matches!(
            monitor_series(&dec, &ExpectedSplit::even(), &SprtConfig::default()),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn resume_is_idempotent() {
        let split = ExpectedSplit::even();
        let cfg = SprtConfig::default();
        let series = vec![
            SrmSnapshot::new(1, 500, 500),
            SrmSnapshot::new(2, 2_108, 3_183),
            SrmSnapshot::new(3, 3_000, 3_300),
        ];
        let first = monitor_series(&series, &split, &cfg).unwrap();
        let second = resume_series(first.state, &series, &split, &cfg).unwrap();
        assert_eq!(first, second);
    }

    #[test]
    fn resume_with_new_days_keeps_first_alert() {
        let split = ExpectedSplit::even();
        let cfg = SprtConfig::default();
        let head = vec![SrmSnapshot::new(1, 2_108, 3_183)];
        let first = monitor_series(&head, &split, &cfg).unwrap();
        let tail = vec![SrmSnapshot::new(2, 5_000, 5_100), SrmSnapshot::new(3, 8_000, 8_000)];
        let later = resume_series(first.state, &tail, &split, &cfg).unwrap();
        assert_eq!(later.state.first_alert_day, Some(1));
        assert_eq!(later.state.last_day, Some(3));
        assert!(later.decisions.iter().all(|d| d.outcome == Outcome::AlreadyFired));
    }

    #[test]
    fn aggregate_sums_with_carry_forward() {
        let a = vec![SrmSnapshot::new(1, 10, 10), SrmSnapshot::new(3, 30, 30)];
        let b = vec![SrmSnapshot::new(2, 5, 7)];
        let agg = aggregate_segments([a.as_slice(), b.as_slice()]);
        assert_eq!(
            agg,
            vec![
                SrmSnapshot::new(1, 10, 10),
                SrmSnapshot::new(2, 15, 17),
                SrmSnapshot::new(3, 35, 37),
            ]
        );
    }

    #[test]
    fn identical_segments_agree() {
        let mut rows = BTreeMap::new();
        for seg in ["ios", "android", "web"] {
            rows.insert(seg.to_string(), balanced(10, 1_000));
        }
        let r = segmented_monitor(&rows, &ExpectedSplit::even(), &SprtConfig::default()).unwrap();
        let first = &r.segments["ios"];
        assert!(r.segments.values().all(|s| s.decisions == first.decisions));
        assert_eq!(r.aggregate.final_x_t, 30_000);
        assert!(r.divergent_segments.is_empty());
    }

    #[test]
    fn empty_segment_noted_and_reserved_name_rejected() {
        let mut rows = BTreeMap::new();
        rows.insert("web".to_string(), balanced(3, 100));
        rows.insert("ghost".to_string(), vec![]);
        let r = segmented_monitor(&rows, &ExpectedSplit::even(), &SprtConfig::default()).unwrap();
        assert!(!r.segments.contains_key("ghost"));
        assert_eq!(r.notes.len(), 1);
        rows.insert(AGGREGATE_SEGMENT.to_string(), balanced(3, 100));
        assert!(segmented_monitor(&rows, &ExpectedSplit::even(), &SprtConfig::default()).is_err());
    }
}
