use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{ConfusionMatrix, MetricsReport};
use crate::error::{Error, Result};
use crate::sim::SrmSuiteCase;
use crate::srm::{
    chi2_detector, sprt_step, t_test_detector, validate_series, ExpectedSplit, MonitorState,
    SprtConfig, SrmSnapshot, Variant, DEFAULT_ALPHA, DEFAULT_BETA, DEFAULT_MIN_TOTAL,
};
use crate::stats::Probability;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Detector {
    TTest,
    Chi2,
    Sprt,
    SprtExact,
}

impl Detector {
    pub const ALL: [Detector; 4] = [Detector::TTest, Detector::Chi2, Detector::Sprt, Detector::SprtExact];

    pub fn label(self) -> &'static str {
        match self {
            Detector::TTest => "t-test",
            Detector::Chi2 => "chi2",
            Detector::Sprt => "SPRT",
            Detector::SprtExact => "SPRT-EXACT",
        }
    }
}

impl std::str::FromStr for Detector {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "t-test" | "ttest" | "t_test" | "z" => Ok(Detector::TTest),
            "chi2" | "chi-square" => Ok(Detector::Chi2),
            "sprt" | "gaussian" => Ok(Detector::Sprt),
            "sprt-exact" | "sprt_exact" | "exact" => Ok(Detector::SprtExact),
            other => Err(Error::spec(format!("unknown detector {other:?}"))),
        }
    }
}

/// Which label each series is scored against.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelSource {
    /// Count-ratio rule at the final day, as an operator would label real data.
    #[default]
    Rule,
    /// Whether a mismatch was injected.
    Truth,
}

impl std::str::FromStr for LabelSource {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rule" => Ok(LabelSource::Rule),
            "truth" => Ok(LabelSource::Truth),
            other => Err(Error::spec(format!("unknown label source {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SrmEvalConfig {
    pub detectors: Vec<Detector>,
    pub sprt_alpha: f64,
    pub sprt_beta: f64,
    pub delta: Option<f64>,
    pub baseline_alpha: f64,
    pub min_total: u64,
    pub label_source: LabelSource,
    pub size_bins: usize,
}

impl Default for SrmEvalConfig {
    fn default() -> Self {
        Self {
            detectors: Detector::ALL.to_vec(),
            sprt_alpha: DEFAULT_ALPHA,
            sprt_beta: DEFAULT_BETA,
            delta: None,
            baseline_alpha: 0.01,
            min_total: DEFAULT_MIN_TOTAL,
            label_source: LabelSource::Rule,
            size_bins: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectorRow {
    pub detector: Detector,
    pub confusion: ConfusionMatrix,
    pub metrics: MetricsReport,
}

/// Series-level recall within one band of final sample size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecallBin {
    pub bin: usize,
    /// Inclusive bounds on final total.
    pub min_total: u64,
    pub max_total: u64,
    pub positives: usize,
    pub recall: Vec<(Detector, Option<f64>)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SrmEvalReport {
    pub config: SrmEvalConfig,
    pub series: usize,
    /// Series skipped because their label is undefined.
    pub unlabeled: usize,
    /// Baselines per `(series, day)`, SPRT variants per series.
    pub primary: Vec<DetectorRow>,
    pub day_level: Vec<DetectorRow>,
    pub series_level: Vec<DetectorRow>,
    /// Share of series where both SPRT variants reach the same fired decision.
    pub sprt_agreement: Option<f64>,
    pub recall_by_size: Vec<RecallBin>,
}

impl SrmEvalReport {
    pub fn series_row(&self, d: Detector) -> Option<&DetectorRow> {
        self.series_level.iter().find(|r| r.detector == d)
    }

    pub fn primary_row(&self, d: Detector) -> Option<&DetectorRow> {
        self.primary.iter().find(|r| r.detector == d)
    }

    pub fn day_row(&self, d: Detector) -> Option<&DetectorRow> {
        self.day_level.iter().find(|r| r.detector == d)
    }
}

/// A monitored series with its labels, independent of how it was produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledSeries {
    pub id: String,
    pub p0: f64,
    pub snapshots: Vec<SrmSnapshot>,
    pub truth: Option<bool>,
    pub rule_label: Option<bool>,
}

impl From<&SrmSuiteCase> for LabeledSeries {
    fn from(c: &SrmSuiteCase) -> Self {
        Self {
            id: c.id.clone(),
            p0: c.spec.p0,
            snapshots: c.series.snapshots.clone(),
            truth: Some(c.series.truth),
            rule_label: c.series.rule_label,
        }
    }
}

struct SeriesOutcome {
    label: bool,
    final_total: u64,
    /// Per detector: one prediction per evaluable day.
    days: Vec<Vec<bool>>,
    fired: Vec<bool>,
}

fn run_series(
    case: &LabeledSeries,
    config: &SrmEvalConfig,
    label: bool,
) -> Result<SeriesOutcome> {
    let snapshots = &case.snapshots;
    validate_series(snapshots)?;
    let split = ExpectedSplit::from_p0(case.p0)?;
    let baseline_alpha = Probability::significance(config.baseline_alpha)?;
    let sprt = |variant| {
        SprtConfig::new(variant, config.sprt_alpha, config.sprt_beta, config.delta)
            .map(|c| c.with_min_total(config.min_total))
    };
    let gaussian = sprt(Variant::Gaussian)?;
    let exact = sprt(Variant::Exact)?;

    let mut days = vec![Vec::new(); config.detectors.len()];
    let mut fired = vec![false; config.detectors.len()];
    let mut states = [MonitorState::default(); 2];
    for snap in snapshots {
        let (g, _) = sprt_step(states[0], snap, &split, &gaussian)?;
        let (e, _) = sprt_step(states[1], snap, &split, &exact)?;
        states = [g, e];
        if snap.total() == 0 || snap.total() < config.min_total {
            continue;
        }
        for (i, d) in config.detectors.iter().enumerate() {
            let alert = match d {
                Detector::TTest => t_test_detector(snap, &split, baseline_alpha, config.min_total)
                    .is_some_and(|o| o.alert),
                Detector::Chi2 => chi2_detector(snap, &split, baseline_alpha, config.min_total)
                    .is_some_and(|o| o.alert),
                Detector::Sprt => states[0].fired,
                Detector::SprtExact => states[1].fired,
            };
            days[i].push(alert);
            fired[i] |= alert;
        }
    }
    Ok(SeriesOutcome {
        label,
        final_total: snapshots.last().map_or(0, |s| s.total()),
        days,
        fired,
    })
}

fn rows(detectors: &[Detector], confusions: Vec<ConfusionMatrix>) -> Vec<DetectorRow> {
    detectors
        .iter()
        .zip(confusions)
        .map(|(&detector, confusion)| DetectorRow {
            detector,
            confusion,
            metrics: confusion.metrics(),
        })
        .collect()
}

fn recall_bins(outcomes: &[SeriesOutcome], detectors: &[Detector], bins: usize) -> Vec<RecallBin> {
    let mut sizes: Vec<u64> = outcomes.iter().map(|o| o.final_total).collect();
    if sizes.is_empty() || bins == 0 {
        return Vec::new();
    }
    sizes.sort_unstable();
    // Equal-count bins over all labelled series.
    let edge = |j: usize| sizes[(j * sizes.len() / bins).min(sizes.len() - 1)];
    (0..bins)
        .map(|j| {
            let lo = edge(j);
            let hi = if j + 1 == bins { *sizes.last().unwrap() } else { edge(j + 1) };
            let members: Vec<&SeriesOutcome> = outcomes
                .iter()
                .filter(|o| {
                    o.label
                        && o.final_total >= lo
                        && (o.final_total < hi || (j + 1 == bins && o.final_total <= hi))
                })
                .collect();
            let recall = detectors
                .iter()
                .enumerate()
                .map(|(i, &d)| {
                    let hits = members.iter().filter(|o| o.fired[i]).count();
                    (d, (!members.is_empty()).then(|| hits as f64 / members.len() as f64))
                })
                .collect();
            RecallBin {
                bin: j,
                min_total: lo,
                max_total: hi,
                positives: members.len(),
                recall,
            }
        })
        .collect()
}

/// Series without a label under `config.label_source` are counted in
/// `unlabeled` and otherwise skipped.
pub fn evaluate_srm_detectors(cases: &[LabeledSeries], config: &SrmEvalConfig) -> Result<SrmEvalReport> {
    let labelled: Vec<(&LabeledSeries, bool)> = cases
        .iter()
        .filter_map(|c| {
            let label = match config.label_source {
                LabelSource::Rule => c.rule_label,
                LabelSource::Truth => c.truth,
            };
            label.map(|l| (c, l))
        })
        .collect();
    let outcomes = labelled
        .par_iter()
        .map(|&(c, l)| run_series(c, config, l))
        .collect::<Result<Vec<_>>>()?;

    let n = config.detectors.len();
    let mut day_cm = vec![ConfusionMatrix::default(); n];
    let mut series_cm = vec![ConfusionMatrix::default(); n];
    for o in &outcomes {
        for i in 0..n {
            for &p in &o.days[i] {
                day_cm[i].record(p, o.label);
            }
            series_cm[i].record(o.fired[i], o.label);
        }
    }
    let pos = |d| config.detectors.iter().position(|&x| x == d);
    let sprt_agreement = match (pos(Detector::Sprt), pos(Detector::SprtExact)) {
        (Some(g), Some(e)) if !outcomes.is_empty() => {
            let same = outcomes.iter().filter(|o| o.fired[g] == o.fired[e]).count();
            Some(same as f64 / outcomes.len() as f64)
        }
        _ => None,
    };
    let primary_cm = config
        .detectors
        .iter()
        .enumerate()
        .map(|(i, d)| match d {
            Detector::TTest | Detector::Chi2 => day_cm[i],
            Detector::Sprt | Detector::SprtExact => series_cm[i],
        })
        .collect();
    Ok(SrmEvalReport {
        config: config.clone(),
        series: cases.len(),
        unlabeled: cases.len() - labelled.len(),
        primary: rows(&config.detectors, primary_cm),
        day_level: rows(&config.detectors, day_cm),
        series_level: rows(&config.detectors, series_cm),
        sprt_agreement,
        recall_by_size: recall_bins(&outcomes, &config.detectors, config.size_bins),
    })
}
