use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::parse::{parse_bucket_csv, parse_snapshot_jsonl, ExperimentSeries};
use super::state::PersistedMonitorState;
use super::{
    EvaluateArgs, MonitorArgs, SimKind, SimulateArgs, ValidateArgs, EXIT_ALERT, EXIT_OK,
};
use crate::eval::{
    evaluate_srm_detectors, k_sweep, noise_sweep_eval_datasets, recall_bins_csv,
    render_srm_report, render_validator_table, evaluate_validators, LabeledSeries,
    NoiseSweepReport, SrmEvalConfig, SrmEvalReport, ValidatorTable,
};
use crate::sim::{
    generate_bucket_dataset, generate_srm_suite, BucketCase, BucketDataset, BucketDatasetSpec,
    SrmSuiteSpec, RNG_ALGORITHM,
};
use crate::srm::{
    resume_series, segmented_monitor_resume, MonitorReport, SprtConfig, AGGREGATE_SEGMENT,
};
use crate::validate::{self as checks, BucketCounts, ValidationConfig, ValidationResult};

const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Serialize)]
struct Report<'a, C, R> {
    tool: &'static str,
    version: &'static str,
    command: &'static str,
    config: &'a C,
    result: R,
}

impl<'a, C: Serialize, R: Serialize> Report<'a, C, R> {
    fn new(command: &'static str, config: &'a C, result: R) -> Self {
        Self {
            tool: "abguard",
            version: VERSION,
            command,
            config,
            result,
        }
    }

    fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    std::fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

/// JSON goes to `report` when given (with `summary` on stdout), else to stdout.
fn emit(json: &str, report: Option<&Path>, summary: &str) -> Result<()> {
    match report {
        Some(path) => {
            write_file(path, json)?;
            print!("{summary}");
        }
        None => print!("{json}"),
    }
    Ok(())
}

pub(super) fn validate(args: &ValidateArgs) -> Result<i32> {
    let counts = parse_bucket_csv(&args.input, args.buckets)?;
    let mut config = ValidationConfig::new(args.method, args.alpha, args.k)?
        .with_zero_policy(args.zero_policy);
    if let Some(m) = args.min_total {
        config = config.with_min_total(m);
    }
    let result = checks::validate(&counts, &config)?;
    let summary = validation_summary(&result);
    emit(
        &Report::new("validate", args, &result).to_json()?,
        args.report.as_deref(),
        &summary,
    )?;
    Ok(if result.alert { EXIT_ALERT } else { EXIT_OK })
}

fn validation_summary(r: &ValidationResult) -> String {
    let mut s = format!(
        "{}: {:?}, statistic {:.6}, alert {}\n",
        r.method, r.status, r.statistic, r.alert
    );
    if r.alert {
        let mut worst: Vec<(usize, f64)> = r.per_bucket_deviation.iter().copied().enumerate().collect();
        worst.sort_by(|a, b| b.1.abs().total_cmp(&a.1.abs()).then(a.0.cmp(&b.0)));
        for (b, d) in worst.into_iter().take(5) {
            let _ = writeln!(s, "  bucket {b}: deviation {d:+.6}");
        }
    }
    s
}

#[derive(Debug, Serialize)]
struct ExperimentReport {
    p0: f64,
    delta: f64,
    aggregate: MonitorReport,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    segments: BTreeMap<String, MonitorReport>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    divergent_segments: Vec<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    notes: Vec<String>,
}

impl ExperimentReport {
    fn fired(&self) -> bool {
        self.aggregate.fired() || self.segments.values().any(MonitorReport::fired)
    }
}

#[derive(Debug, Serialize)]
struct MonitorOutput {
    experiments: BTreeMap<String, ExperimentReport>,
    fired: Vec<String>,
}

fn monitor_experiment(
    series: &ExperimentSeries,
    priors: &BTreeMap<String, crate::srm::MonitorState>,
    config: &SprtConfig,
    by_segment: bool,
) -> crate::Result<ExperimentReport> {
    let delta = config.resolve_delta(&series.split)?;
    let parts = series.parts();
    if by_segment && !parts.is_empty() {
        let r = segmented_monitor_resume(&parts, &series.split, config, priors)?;
        return Ok(ExperimentReport {
            p0: series.split.p0(),
            delta,
            aggregate: r.aggregate,
            segments: r.segments,
            divergent_segments: r.divergent_segments,
            notes: r.notes,
        });
    }
    let prior = priors.get(AGGREGATE_SEGMENT).copied().unwrap_or_default();
    Ok(ExperimentReport {
        p0: series.split.p0(),
        delta,
        aggregate: resume_series(prior, series.aggregate(), &series.split, config)?,
        segments: BTreeMap::new(),
        divergent_segments: Vec::new(),
        notes: Vec::new(),
    })
}

pub(super) fn monitor(args: &MonitorArgs) -> Result<i32> {
    let config = SprtConfig::new(args.variant, args.alpha, args.beta, args.delta.0)?
        .with_min_total(args.min_total);
    // Load state before touching input so a corrupt state file aborts early.
    let mut state = match &args.state {
        Some(p) => PersistedMonitorState::load(p)?,
        None => PersistedMonitorState::new(),
    };
    let input = parse_snapshot_jsonl(&args.input)?;
    let empty = BTreeMap::new();
    let experiments: BTreeMap<String, ExperimentReport> = input
        .par_iter()
        .map(|(id, series)| {
            let priors = state.experiments.get(id).unwrap_or(&empty);
            monitor_experiment(series, priors, &config, args.by_segment)
                .map(|r| (id.clone(), r))
                .with_context(|| format!("experiment `{id}`"))
        })
        .collect::<Result<_>>()?;

    for (id, r) in &experiments {
        state.set(id, AGGREGATE_SEGMENT, r.aggregate.state);
        for (seg, sr) in &r.segments {
            state.set(id, seg, sr.state);
        }
    }
    if let Some(p) = &args.state {
        state.save(p)?;
    }
    let fired: Vec<String> = experiments
        .iter()
        .filter(|(_, r)| r.fired())
        .map(|(id, _)| id.clone())
        .collect();
    let mut summary = format!("{} experiments, {} fired\n", experiments.len(), fired.len());
    for id in &fired {
        let s = experiments[id].aggregate.state;
        let _ = writeln!(
            summary,
            "  {id}: first alert day {}, direction {}",
            s.first_alert_day.map_or("-".to_string(), |d| d.to_string()),
            s.direction.map_or("-".to_string(), |d| format!("{d:?}").to_lowercase()),
        );
    }
    let code = if fired.is_empty() { EXIT_OK } else { EXIT_ALERT };
    let output = MonitorOutput { experiments, fired };
    emit(
        &Report::new("monitor", args, &output).to_json()?,
        args.report.as_deref(),
        &summary,
    )?;
    Ok(code)
}

/// `a..b` (inclusive integer range) or a comma-separated list.
fn parse_list(text: &str) -> Result<Vec<f64>> {
    if let Some((a, b)) = text.split_once("..") {
        let (a, b): (i64, i64) = (a.trim().parse()?, b.trim().parse()?);
        ensure!(a <= b, "empty range `{text}`");
        return Ok((a..=b).map(|x| x as f64).collect());
    }
    text.split(',')
        .map(|s| s.trim().parse::<f64>().with_context(|| format!("bad number `{s}`")))
        .collect()
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
enum Manifest {
    Buckets {
        version: String,
        rng: String,
        spec: BucketDatasetSpec,
        cases: usize,
        labels: String,
    },
    NoiseSweep {
        version: String,
        rng: String,
        lambdas: Vec<f64>,
        datasets: Vec<String>,
    },
    SrmSeries {
        version: String,
        rng: String,
        spec: SrmSuiteSpec,
        series: usize,
        snapshots: String,
        labels: String,
    },
}

impl Manifest {
    fn rng(&self) -> &str {
        match self {
            Manifest::Buckets { rng, .. }
            | Manifest::NoiseSweep { rng, .. }
            | Manifest::SrmSeries { rng, .. } => rng,
        }
    }
}

fn write_manifest(path: &Path, m: &Manifest) -> Result<()> {
    let mut s = serde_json::to_string_pretty(m)?;
    s.push('\n');
    write_file(path, &s)
}

fn counts_csv(counts: &BucketCounts) -> String {
    let mut s = String::from("bucket,count\n");
    for (b, c) in counts.counts().iter().enumerate() {
        let _ = writeln!(s, "{b},{c}");
    }
    s
}

fn write_bucket_dataset(dir: &Path, ds: &BucketDataset) -> Result<()> {
    let mut labels = String::from("case,file,label\n");
    for (i, case) in ds.cases.iter().enumerate() {
        let file = format!("cases/case-{i:04}.csv");
        write_file(&dir.join(&file), &counts_csv(&case.counts))?;
        let _ = writeln!(labels, "{i},{file},{}", u8::from(case.label));
    }
    write_file(&dir.join("labels.csv"), &labels)?;
    write_manifest(
        &dir.join("manifest.json"),
        &Manifest::Buckets {
            version: VERSION.to_string(),
            rng: RNG_ALGORITHM.to_string(),
            spec: ds.spec.clone(),
            cases: ds.cases.len(),
            labels: "labels.csv".to_string(),
        },
    )
}

pub(super) fn simulate(args: &SimulateArgs) -> Result<i32> {
    let bucket_spec = BucketDatasetSpec {
        negatives: args.negatives,
        positives: args.positives,
        buckets: args.buckets,
        mean_total: args.mean_total,
        noise_lambda: args.lambda,
        max_anomalous_buckets: args.max_anomalous,
        rng_seed: args.seed,
    };
    match args.kind {
        SimKind::Buckets => {
            let ds = generate_bucket_dataset(&bucket_spec)?;
            write_bucket_dataset(&args.out, &ds)?;
            println!("wrote {} cases to {}", ds.cases.len(), args.out.display());
        }
        SimKind::NoiseSweep => {
            let lambdas = parse_list(&args.lambdas)?;
            let mut datasets = Vec::new();
            for &lambda in &lambdas {
                let sub = format!("lambda-{lambda}");
                let ds = generate_bucket_dataset(&BucketDatasetSpec {
                    noise_lambda: lambda,
                    ..bucket_spec.clone()
                })?;
                write_bucket_dataset(&args.out.join(&sub), &ds)?;
                datasets.push(format!("{sub}/manifest.json"));
            }
            write_manifest(
                &args.out.join("manifest.json"),
                &Manifest::NoiseSweep {
                    version: VERSION.to_string(),
                    rng: RNG_ALGORITHM.to_string(),
                    lambdas: lambdas.clone(),
                    datasets,
                },
            )?;
            println!("wrote {} datasets to {}", lambdas.len(), args.out.display());
        }
        SimKind::SrmSeries => {
            let spec = SrmSuiteSpec {
                series: args.series,
                days: args.days,
                p0: args.p0,
                min_daily_volume: args.min_volume,
                max_daily_volume: args.max_volume,
                null_fraction: args.null_fraction,
                min_shift: args.min_shift,
                max_shift: args.max_shift,
                rng_seed: args.seed,
            };
            let suite = generate_srm_suite(&spec)?;
            let mut jsonl = String::new();
            let mut labels = String::from("experiment_id,truth,rule_label\n");
            for case in &suite {
                for s in &case.series.snapshots {
                    let row = serde_json::json!({
                        "experiment_id": case.id,
                        "day": s.day,
                        "x_t": s.x_t,
                        "x_c": s.x_c,
                        "r_t": spec.p0,
                        "r_c": 1.0 - spec.p0,
                    });
                    let _ = writeln!(jsonl, "{row}");
                }
                let rule = case.series.rule_label.map_or(String::new(), |l| u8::from(l).to_string());
                let _ = writeln!(labels, "{},{},{rule}", case.id, u8::from(case.series.truth));
            }
            write_file(&args.out.join("snapshots.jsonl"), &jsonl)?;
            write_file(&args.out.join("labels.csv"), &labels)?;
            write_manifest(
                &args.out.join("manifest.json"),
                &Manifest::SrmSeries {
                    version: VERSION.to_string(),
                    rng: RNG_ALGORITHM.to_string(),
                    spec,
                    series: suite.len(),
                    snapshots: "snapshots.jsonl".to_string(),
                    labels: "labels.csv".to_string(),
                },
            )?;
            println!("wrote {} series to {}", suite.len(), args.out.display());
        }
    }
    Ok(EXIT_OK)
}

fn read_manifest(path: &Path) -> Result<Manifest> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing manifest {}", path.display()))
}

fn base_dir(manifest: &Path) -> PathBuf {
    manifest.parent().map_or_else(|| PathBuf::from("."), Path::to_path_buf)
}

fn parse_flag(text: &str, path: &Path, line: usize) -> Result<bool> {
    match text {
        "0" => Ok(false),
        "1" => Ok(true),
        other => bail!("{}:{line}: expected 0 or 1, got `{other}`", path.display()),
    }
}

fn csv_rows(path: &Path, header: &[&str]) -> Result<Vec<(usize, csv::StringRecord)>> {
    let mut reader = csv::ReaderBuilder::new()
        .from_path(path)
        .with_context(|| format!("reading {}", path.display()))?;
    let found = reader.headers()?.clone();
    ensure!(
        found.iter().eq(header.iter().copied()),
        "{}: expected header `{}`",
        path.display(),
        header.join(",")
    );
    reader
        .records()
        .map(|r| {
            let r = r.with_context(|| format!("reading {}", path.display()))?;
            let line = r.position().map_or(0, |p| p.line() as usize);
            Ok((line, r))
        })
        .collect()
}

fn load_bucket_dataset(manifest_path: &Path) -> Result<BucketDataset> {
    let Manifest::Buckets { spec, cases, labels, .. } = read_manifest(manifest_path)? else {
        bail!("{} is not a bucket dataset manifest", manifest_path.display());
    };
    let dir = base_dir(manifest_path);
    let labels_path = dir.join(&labels);
    let rows = csv_rows(&labels_path, &["case", "file", "label"])?;
    ensure!(
        rows.len() == cases && cases == spec.negatives + spec.positives,
        "{}: manifest declares {cases} cases ({} + {}), labels file has {}",
        manifest_path.display(),
        spec.negatives,
        spec.positives,
        rows.len()
    );
    let loaded = rows
        .par_iter()
        .enumerate()
        .map(|(i, (line, r))| {
            let index: usize = r[0].parse().with_context(|| {
                format!("{}:{line}: bad case index", labels_path.display())
            })?;
            ensure!(
                index == i,
                "{}:{line}: case {index} out of order",
                labels_path.display()
            );
            let label = parse_flag(&r[2], &labels_path, *line)?;
            let counts = parse_bucket_csv(&dir.join(&r[1]), Some(spec.buckets))?;
            Ok(BucketCase {
                index,
                label,
                counts,
                anomalous_buckets: Vec::new(),
                injected: Vec::new(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BucketDataset { spec, cases: loaded })
}

fn load_srm_suite(manifest_path: &Path) -> Result<(SrmSuiteSpec, Vec<LabeledSeries>)> {
    let Manifest::SrmSeries { spec, series, snapshots, labels, .. } = read_manifest(manifest_path)? else {
        bail!("{} is not an SRM series manifest", manifest_path.display());
    };
    let dir = base_dir(manifest_path);
    let mut data = parse_snapshot_jsonl(&dir.join(&snapshots))?;
    let labels_path = dir.join(&labels);
    let rows = csv_rows(&labels_path, &["experiment_id", "truth", "rule_label"])?;
    ensure!(
        rows.len() == series && data.len() == series,
        "{}: manifest declares {series} series, labels file has {}, snapshots have {}",
        manifest_path.display(),
        rows.len(),
        data.len()
    );
    let mut out = Vec::with_capacity(series);
    for (line, r) in rows {
        let id = r[0].to_string();
        let Some(s) = data.remove(&id) else {
            bail!("{}:{line}: no snapshots for `{id}`", labels_path.display());
        };
        let rule_label = match &r[2] {
            "" => None,
            t => Some(parse_flag(t, &labels_path, line)?),
        };
        out.push(LabeledSeries {
            id,
            p0: s.split.p0(),
            snapshots: s.aggregate().to_vec(),
            truth: Some(parse_flag(&r[1], &labels_path, line)?),
            rule_label,
        });
    }
    Ok((spec, out))
}

#[derive(Debug, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
enum EvaluateOutput {
    Buckets {
        rng: String,
        rng_seed: u64,
        table: ValidatorTable,
        #[serde(skip_serializing_if = "Option::is_none")]
        k_sweep: Option<ValidatorTable>,
    },
    NoiseSweep {
        rng: String,
        rng_seed: u64,
        sweep: NoiseSweepReport,
    },
    SrmSeries {
        rng: String,
        rng_seed: u64,
        protocol: &'static str,
        report: SrmEvalReport,
    },
}

const SRM_PROTOCOL: &str = "primary: baselines one prediction per (series, evaluable day), SPRT variants one prediction per series (fired or not); day_level: every detector per (series, evaluable day), SPRT positive once fired; series_level: baselines positive if any day alerts";

pub(super) fn evaluate(args: &EvaluateArgs) -> Result<i32> {
    let manifest = read_manifest(&args.manifest)?;
    let rng = manifest.rng().to_string();
    let mut text = String::new();
    let output = match manifest {
        Manifest::Buckets { .. } => {
            let ds = load_bucket_dataset(&args.manifest)?;
            let table = evaluate_validators(&ds, &args.methods, args.alpha, args.k)?;
            text.push_str(&render_validator_table(&table));
            let sweep = match &args.k_sweep {
                Some(ks) => {
                    let ks = parse_list(ks)?
                        .into_iter()
                        .map(|k| {
                            ensure!(k >= 1.0 && k.fract() == 0.0, "k must be a positive integer, got {k}");
                            Ok(k as u32)
                        })
                        .collect::<Result<Vec<_>>>()?;
                    let t = k_sweep(&ds, &ks, args.alpha)?;
                    text.push_str("\nk sweep\n");
                    text.push_str(&render_validator_table(&t));
                    Some(t)
                }
                None => None,
            };
            EvaluateOutput::Buckets {
                rng,
                rng_seed: ds.spec.rng_seed,
                table,
                k_sweep: sweep,
            }
        }
        Manifest::NoiseSweep { lambdas, datasets, .. } => {
            ensure!(
                lambdas.len() == datasets.len(),
                "{}: {} lambdas but {} datasets",
                args.manifest.display(),
                lambdas.len(),
                datasets.len()
            );
            let dir = base_dir(&args.manifest);
            let mut loaded = Vec::new();
            for (lambda, sub) in lambdas.iter().zip(&datasets) {
                let ds = load_bucket_dataset(&dir.join(sub))?;
                ensure!(
                    ds.spec.noise_lambda == *lambda,
                    "{sub}: noise level {} does not match manifest entry {lambda}",
                    ds.spec.noise_lambda
                );
                loaded.push(ds);
            }
            let rng_seed = loaded.first().map_or(0, |d| d.spec.rng_seed);
            let sweep = noise_sweep_eval_datasets(&loaded, &args.methods, args.alpha, args.k)?;
            for row in &sweep.rows {
                let _ = writeln!(text, "lambda = {}", row.lambda);
                text.push_str(&render_validator_table(&row.table));
                text.push('\n');
            }
            EvaluateOutput::NoiseSweep { rng, rng_seed, sweep }
        }
        Manifest::SrmSeries { .. } => {
            let (spec, series) = load_srm_suite(&args.manifest)?;
            let config = SrmEvalConfig {
                detectors: args.detectors.clone(),
                sprt_alpha: args.srm_alpha,
                sprt_beta: args.srm_beta,
                delta: args.delta.0,
                baseline_alpha: args.baseline_alpha,
                min_total: args.min_total,
                label_source: args.label_source,
                size_bins: args.size_bins,
            };
            let report = evaluate_srm_detectors(&series, &config)?;
            text.push_str(&render_srm_report(&report));
            if let Some(path) = &args.csv {
                write_file(path, &recall_bins_csv(&report))?;
            }
            EvaluateOutput::SrmSeries {
                rng,
                rng_seed: spec.rng_seed,
                protocol: SRM_PROTOCOL,
                report,
            }
        }
    };
    if let Some(path) = &args.report {
        write_file(path, &Report::new("evaluate", args, &output).to_json()?)?;
    }
    print!("{text}");
    Ok(EXIT_OK)
}
