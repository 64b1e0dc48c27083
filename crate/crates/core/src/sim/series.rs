use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::rng::{binomial, derive_seed, poisson, stream_rng};
use crate::error::{Error, Result};
use crate::srm::{srm_label_rule_for_split, ExpectedSplit, SrmSnapshot};

const SERIES: u64 = 0x5345_5249;
const SUITE: u64 = 0x5355_4954;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SrmSeriesSpec {
    pub days: u32,
    /// Poisson mean of each day's triggered users.
    pub daily_volume: f64,
    /// Designed test share.
    pub p0: f64,
    /// Additive shift of the true test share from `shift_start_day` on.
    pub injected_shift: f64,
    pub shift_start_day: u32,
    pub rng_seed: u64,
}

impl SrmSeriesSpec {
    pub fn check(&self) -> Result<()> {
        if self.days == 0 {
            return Err(Error::spec("series needs at least one day"));
        }
        if !(self.daily_volume.is_finite() && self.daily_volume >= 0.0) {
            return Err(Error::spec(format!(
                "daily volume {} must be non-negative",
                self.daily_volume
            )));
        }
        for share in [self.p0, self.p0 + self.injected_shift] {
            if !(share > 0.0 && share < 1.0) {
                return Err(Error::spec(format!("test share {share} outside (0, 1)")));
            }
        }
        Ok(())
    }

    pub fn split(&self) -> Result<ExpectedSplit> {
        ExpectedSplit::from_p0(self.p0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SrmSeries {
    /// Cumulative counts, days `1..=days`.
    pub snapshots: Vec<SrmSnapshot>,
    /// Whether a mismatch was injected.
    pub truth: bool,
    /// Count-ratio rule at the final day; `None` when the control arm is empty.
    pub rule_label: Option<bool>,
}

pub fn generate_srm_series(spec: &SrmSeriesSpec) -> Result<SrmSeries> {
    spec.check()?;
    let split = spec.split()?;
    let mut rng = stream_rng(spec.rng_seed, SERIES, 0);
    let mut snapshots = Vec::with_capacity(spec.days as usize);
    let (mut x_t, mut x_c) = (0u64, 0u64);
    for day in 1..=spec.days {
        let share = if day >= spec.shift_start_day {
            spec.p0 + spec.injected_shift
        } else {
            spec.p0
        };
        let n = poisson(&mut rng, spec.daily_volume)?;
        let t = binomial(&mut rng, n, share)?;
        x_t += t;
        x_c += n - t;
        snapshots.push(SrmSnapshot::new(day, x_t, x_c));
    }
    let rule_label = srm_label_rule_for_split(snapshots.last().expect("days >= 1"), &split);
    Ok(SrmSeries {
        snapshots,
        truth: spec.injected_shift != 0.0,
        rule_label,
    })
}

/// A population of experiments with varied traffic volume and mismatch size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SrmSuiteSpec {
    pub series: usize,
    pub days: u32,
    pub p0: f64,
    /// Daily volume is log-uniform on `[min_daily_volume, max_daily_volume]`.
    pub min_daily_volume: f64,
    pub max_daily_volume: f64,
    /// Fraction of series with no injected shift.
    pub null_fraction: f64,
    /// Shift magnitude is log-uniform on `[min_shift, max_shift]` with a random sign.
    pub min_shift: f64,
    pub max_shift: f64,
    pub rng_seed: u64,
}

impl Default for SrmSuiteSpec {
    fn default() -> Self {
        Self {
            series: 519,
            days: 29,
            p0: 0.5,
            min_daily_volume: 1e2,
            max_daily_volume: 1e5,
            null_fraction: 0.5,
            min_shift: 5e-4,
            max_shift: 0.03,
            rng_seed: 20_220_814,
        }
    }
}

impl SrmSuiteSpec {
    pub fn check(&self) -> Result<()> {
        if !(self.min_daily_volume > 0.0 && self.min_daily_volume <= self.max_daily_volume) {
            return Err(Error::spec("daily volume range must be positive and ordered"));
        }
        if !(0.0..=1.0).contains(&self.null_fraction) {
            return Err(Error::spec("null fraction outside [0, 1]"));
        }
        if !(self.min_shift > 0.0 && self.min_shift <= self.max_shift) {
            return Err(Error::spec("shift range must be positive and ordered"));
        }
        if self.p0 - self.max_shift <= 0.0 || self.p0 + self.max_shift >= 1.0 {
            return Err(Error::spec("largest shift pushes the test share outside (0, 1)"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SrmSuiteCase {
    pub id: String,
    pub spec: SrmSeriesSpec,
    pub series: SrmSeries,
}

pub fn generate_srm_suite(spec: &SrmSuiteSpec) -> Result<Vec<SrmSuiteCase>> {
    spec.check()?;
    (0..spec.series)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(spec.rng_seed, SUITE, i as u64);
            let (lo, hi) = (spec.min_daily_volume.ln(), spec.max_daily_volume.ln());
            let daily_volume = (lo + (hi - lo) * rng.random::<f64>()).exp();
            let injected_shift = if rng.random::<f64>() < spec.null_fraction {
                0.0
            } else {
                let (lo, hi) = (spec.min_shift.ln(), spec.max_shift.ln());
                let magnitude = (lo + (hi - lo) * rng.random::<f64>()).exp();
                if rng.random::<bool>() {
                    magnitude
                } else {
                    -magnitude
                }
            };
            let series_spec = SrmSeriesSpec {
                days: spec.days,
                daily_volume,
                p0: spec.p0,
                injected_shift,
                shift_start_day: 1,
                rng_seed: derive_seed(spec.rng_seed, SERIES, i as u64),
            };
            let series = generate_srm_series(&series_spec)?;
            Ok(SrmSuiteCase {
                id: format!("exp-{i:04}"),
                spec: series_spec,
                series,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(shift: f64) -> SrmSeriesSpec {
        SrmSeriesSpec {
            days: 10,
            daily_volume: 1000.0,
            p0: 0.5,
            injected_shift: shift,
            shift_start_day: 1,
            rng_seed: 3,
        }
    }

    #[test]
    fn cumulative_and_labelled() {
        let s = generate_srm_series(&spec(0.0)).unwrap();
        assert!(!s.truth);
        assert_eq!(s.snapshots.len(), 10);
        for w in s.snapshots.windows(2) {
            assert!(w[1].x_t >= w[0].x_t && w[1].x_c >= w[0].x_c);
            assert_eq!(w[1].day, w[0].day + 1);
        }
        assert!(generate_srm_series(&spec(0.01)).unwrap().truth);
    }

    #[test]
    fn zero_volume_is_empty() {
        let s = generate_srm_series(&SrmSeriesSpec {
            days: 1,
            daily_volume: 0.0,
            ..spec(0.0)
        })
        .unwrap();
        assert_eq!(s.snapshots[0].total(), 0);
        assert_eq!(s.rule_label, None);
    }

    #[test]
    fn share_out_of_range() {
        assert!(generate_srm_series(&spec(0.5)).is_err());
        assert!(generate_srm_series(&SrmSeriesSpec { days: 0, ..spec(0.0) }).is_err());
    }

    #[test]
    fn shift_starts_late() {
        let s = generate_srm_series(&SrmSeriesSpec {
            days: 4,
            daily_volume: 1e6,
            injected_shift: 0.2,
            shift_start_day: 3,
            ..spec(0.0)
        })
        .unwrap();
        let day2 = s.snapshots[1];
        let p2 = day2.x_t as f64 / day2.total() as f64;
        assert!((p2 - 0.5).abs() < 0.01);
        let last = s.snapshots[3];
        let t = (last.x_t - day2.x_t) as f64 / (last.total() - day2.total()) as f64;
        assert!((t - 0.7).abs() < 0.01);
    }

    #[test]
    fn suite_is_deterministic() {
        let spec = SrmSuiteSpec {
            series: 40,
            ..SrmSuiteSpec::default()
        };
        let a = generate_srm_suite(&spec).unwrap();
        assert_eq!(a, generate_srm_suite(&spec).unwrap());
        assert!(a.iter().any(|c| c.series.truth));
        assert!(a.iter().any(|c| !c.series.truth));
    }
}
