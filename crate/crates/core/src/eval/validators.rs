use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{ConfusionMatrix, MetricsReport};
use crate::error::Result;
use crate::sim::{generate_noise_sweep, BucketDataset, BucketDatasetSpec};
use crate::validate::{validate, Method, ValidationConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodRow {
    pub method: Method,
    /// Reference-size multiplier; set for PSI rows only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<u32>,
    pub confusion: ConfusionMatrix,
    pub metrics: MetricsReport,
    /// Indices of alerted cases, ascending.
    pub alerts: Vec<usize>,
}

impl MethodRow {
    pub fn label(&self) -> String {
        match self.k {
            Some(k) => format!("{}(k={k})", self.method.label()),
            None => self.method.label().to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidatorTable {
    pub alpha: f64,
    pub cases: usize,
    pub rows: Vec<MethodRow>,
}

impl ValidatorTable {
    pub fn row(&self, method: Method) -> Option<&MethodRow> {
        self.rows.iter().find(|r| r.method == method)
    }
}

fn evaluate_config(dataset: &BucketDataset, config: &ValidationConfig) -> Result<MethodRow> {
    let predictions = dataset
        .cases
        .par_iter()
        .map(|case| validate(&case.counts, config).map(|r| r.alert))
        .collect::<Result<Vec<bool>>>()?;
    let mut confusion = ConfusionMatrix::default();
    let mut alerts = Vec::new();
    for (i, (&p, case)) in predictions.iter().zip(&dataset.cases).enumerate() {
        confusion.record(p, case.label);
        if p {
            alerts.push(i);
        }
    }
    Ok(MethodRow {
        method: config.method,
        k: (config.method == Method::PsiK).then_some(config.k),
        confusion,
        metrics: confusion.metrics(),
        alerts,
    })
}

/// Score each method on every case of `dataset`.
pub fn evaluate_validators(
    dataset: &BucketDataset,
    methods: &[Method],
    alpha: f64,
    k: u32,
) -> Result<ValidatorTable> {
    let rows = methods
        .iter()
        .map(|&m| evaluate_config(dataset, &ValidationConfig::new(m, alpha, k)?))
        .collect::<Result<_>>()?;
    Ok(ValidatorTable {
        alpha,
        cases: dataset.cases.len(),
        rows,
    })
}

/// PSI test at each reference multiplier in `ks`.
pub fn k_sweep(dataset: &BucketDataset, ks: &[u32], alpha: f64) -> Result<ValidatorTable> {
    let rows = ks
        .iter()
        .map(|&k| evaluate_config(dataset, &ValidationConfig::new(Method::PsiK, alpha, k)?))
        .collect::<Result<_>>()?;
    Ok(ValidatorTable {
        alpha,
        cases: dataset.cases.len(),
        rows,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseSweepRow {
    pub lambda: f64,
    pub table: ValidatorTable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseSweepReport {
    pub rows: Vec<NoiseSweepRow>,
}

pub fn noise_sweep_eval_datasets(
    datasets: &[BucketDataset],
    methods: &[Method],
    alpha: f64,
    k: u32,
) -> Result<NoiseSweepReport> {
    let rows = datasets
        .iter()
        .map(|ds| {
            Ok(NoiseSweepRow {
                lambda: ds.spec.noise_lambda,
                table: evaluate_validators(ds, methods, alpha, k)?,
            })
        })
        .collect::<Result<_>>()?;
    Ok(NoiseSweepReport { rows })
}

pub fn noise_sweep_eval(
    lambdas: &[f64],
    base: &BucketDatasetSpec,
    methods: &[Method],
    alpha: f64,
    k: u32,
) -> Result<NoiseSweepReport> {
    noise_sweep_eval_datasets(&generate_noise_sweep(lambdas, base)?, methods, alpha, k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::generate_bucket_dataset;

    fn dataset() -> BucketDataset {
        generate_bucket_dataset(&BucketDatasetSpec {
            negatives: 30,
            positives: 10,
            buckets: 20,
            mean_total: 2e5,
            noise_lambda: 10.0,
            max_anomalous_buckets: 3,
            rng_seed: 5,
        })
        .unwrap()
    }

    #[test]
    fn table_covers_every_case() {
        let ds = dataset();
        let t = evaluate_validators(&ds, &Method::ALL, 0.01, 1).unwrap();
        assert_eq!(t.rows.len(), 4);
        for r in &t.rows {
            assert_eq!(r.confusion.total(), 40);
        }
        assert_eq!(t.row(Method::PsiK).unwrap().k, Some(1));
        assert_eq!(t.row(Method::Ks).unwrap().k, None);
    }

    #[test]
    fn empty_dataset() {
        let mut ds = dataset();
        ds.cases.clear();
        let t = evaluate_validators(&ds, &Method::ALL, 0.01, 1).unwrap();
        assert!(t.rows.iter().all(|r| r.confusion.total() == 0));
    }

    #[test]
    fn k_sweep_nests() {
        let t = k_sweep(&dataset(), &[1, 2, 4, 8], 0.01).unwrap();
        for w in t.rows.windows(2) {
            assert!(w[0].alerts.iter().all(|i| w[1].alerts.contains(i)));
        }
    }
}
