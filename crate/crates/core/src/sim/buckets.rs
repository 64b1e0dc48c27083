use rand::seq::index::sample;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::rng::{poisson, sample_multinomial, stream_rng};
use crate::error::{Error, Result};
use crate::validate::BucketCounts;

const NEGATIVE: u64 = 0x4e45_4741;
const POSITIVE_STRUCTURE: u64 = 0x504f_5353;
const POSITIVE_NOISE: u64 = 0x504f_534e;
const POSITIVE_DRAW: u64 = 0x504f_5344;

/// Base extra probability per anomalous bucket (0.05%), plus 0.01% per noise unit.
const BASE_EXTRA: f64 = 0.05e-2;
const EXTRA_PER_UNIT: f64 = 0.01e-2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BucketDatasetSpec {
    pub negatives: usize,
    pub positives: usize,
    pub buckets: usize,
    /// Poisson mean of each case's total sample size.
    pub mean_total: f64,
    /// Poisson mean of the per-bucket noise units.
    pub noise_lambda: f64,
    pub max_anomalous_buckets: usize,
    pub rng_seed: u64,
}

impl Default for BucketDatasetSpec {
    fn default() -> Self {
        Self {
            negatives: 500,
            positives: 100,
            buckets: 100,
            mean_total: 3e6,
            noise_lambda: 4.0,
            max_anomalous_buckets: 5,
            rng_seed: 20_220_814,
        }
    }
}

impl BucketDatasetSpec {
    pub fn check(&self) -> Result<()> {
        if self.buckets < 2 {
            return Err(Error::spec("dataset needs at least 2 buckets"));
        }
        if !(self.mean_total.is_finite() && self.mean_total > 0.0) {
            return Err(Error::spec(format!("mean_total {} must be positive", self.mean_total)));
        }
        if !(self.noise_lambda.is_finite() && self.noise_lambda >= 0.0) {
            return Err(Error::spec(format!(
                "noise_lambda {} must be non-negative",
                self.noise_lambda
            )));
        }
        if self.max_anomalous_buckets == 0 || self.max_anomalous_buckets > self.buckets {
            return Err(Error::spec(format!(
                "max_anomalous_buckets {} must lie in 1..={}",
                self.max_anomalous_buckets, self.buckets
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BucketCase {
    pub index: usize,
    pub label: bool,
    pub counts: BucketCounts,
    /// Buckets whose probability was inflated, ascending. Empty for negatives.
    pub anomalous_buckets: Vec<usize>,
    /// Extra probability added to each anomalous bucket, aligned with `anomalous_buckets`.
    pub injected: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BucketDataset {
    pub spec: BucketDatasetSpec,
    pub cases: Vec<BucketCase>,
}

impl BucketDataset {
    pub fn labels(&self) -> Vec<bool> {
        self.cases.iter().map(|c| c.label).collect()
    }
}

fn draw_total<R: Rng + ?Sized>(rng: &mut R, mean: f64) -> Result<u64> {
    poisson(rng, mean)
}

/// Inflated probability vector for a positive case. Sums to 1.
fn positive_probabilities(
    buckets: usize,
    anomalous: &[usize],
    injected: &[f64],
) -> Result<Vec<f64>> {
    let base = 1.0 / buckets as f64;
    let mut probs = vec![base; buckets];
    let mut extra_total = 0.0;
    for (&b, &extra) in anomalous.iter().zip(injected) {
        probs[b] = base + extra;
        extra_total += extra;
    }
    let anomalous_mass: f64 = anomalous.iter().map(|&b| probs[b]).sum();
    if anomalous_mass > 1.0 {
        return Err(Error::spec(format!(
            "inflated probabilities sum to {anomalous_mass} > 1"
        )));
    }
    let residual = 1.0 - anomalous_mass;
    let normal_mass = base * (buckets - anomalous.len()) as f64;
    if normal_mass > 0.0 {
        let scale = residual / normal_mass;
        for (b, p) in probs.iter_mut().enumerate() {
            if !anomalous.contains(&b) {
                *p = base * scale;
            }
        }
    } else if extra_total > 0.0 {
        return Err(Error::spec("every bucket is anomalous, nothing left to compensate"));
    }
    let sum: f64 = probs.iter().sum();
    if (sum - 1.0).abs() > 1e-12 {
        return Err(Error::spec(format!("case probabilities sum to {sum}")));
    }
    Ok(probs)
}

pub fn generate_bucket_case(
    positive: bool,
    spec: &BucketDatasetSpec,
    case_index: usize,
) -> Result<BucketCase> {
    spec.check()?;
    let idx = case_index as u64;
    if !positive {
        let mut rng = stream_rng(spec.rng_seed, NEGATIVE, idx);
        let n = draw_total(&mut rng, spec.mean_total)?;
        let probs = vec![1.0 / spec.buckets as f64; spec.buckets];
        let counts = sample_multinomial(&mut rng, n, &probs)?;
        return Ok(BucketCase {
            index: case_index,
            label: false,
            counts: BucketCounts::new(counts)?,
            anomalous_buckets: Vec::new(),
            injected: Vec::new(),
        });
    }

    // Size, anomaly count and anomaly placement do not depend on the noise
    // level, so sweeps over lambda share them.
    let mut structure = stream_rng(spec.rng_seed, POSITIVE_STRUCTURE, idx);
    let n = draw_total(&mut structure, spec.mean_total)?;
    let m = structure.random_range(1..=spec.max_anomalous_buckets);
    let mut anomalous = sample(&mut structure, spec.buckets, m).into_vec();
    anomalous.sort_unstable();

    let mut noise = stream_rng(
        spec.rng_seed,
        POSITIVE_NOISE ^ spec.noise_lambda.to_bits(),
        idx,
    );
    let injected = anomalous
        .iter()
        .map(|_| poisson(&mut noise, spec.noise_lambda).map(|x| BASE_EXTRA + x as f64 * EXTRA_PER_UNIT))
        .collect::<Result<Vec<_>>>()?;

    let probs = positive_probabilities(spec.buckets, &anomalous, &injected)?;
    let mut draw = stream_rng(spec.rng_seed, POSITIVE_DRAW, idx);
    let counts = sample_multinomial(&mut draw, n, &probs)?;
    Ok(BucketCase {
        index: case_index,
        label: true,
        counts: BucketCounts::new(counts)?,
        anomalous_buckets: anomalous,
        injected,
    })
}

/// Negatives first, then positives. Cases are generated in parallel.
pub fn generate_bucket_dataset(spec: &BucketDatasetSpec) -> Result<BucketDataset> {
    spec.check()?;
    let negatives = (0..spec.negatives)
        .into_par_iter()
        .map(|i| generate_bucket_case(false, spec, i));
    let positives = (0..spec.positives)
        .into_par_iter()
        .map(|i| generate_bucket_case(true, spec, i));
    let mut cases: Vec<BucketCase> = negatives.collect::<Result<_>>()?;
    let pos: Vec<BucketCase> = positives.collect::<Result<_>>()?;
    cases.extend(pos);
    Ok(BucketDataset {
        spec: spec.clone(),
        cases,
    })
}

/// One dataset per noise level; everything else comes from `base`.
pub fn generate_noise_sweep(lambdas: &[f64], base: &BucketDatasetSpec) -> Result<Vec<BucketDataset>> {
    lambdas
        .iter()
        .map(|&lambda| {
            generate_bucket_dataset(&BucketDatasetSpec {
                noise_lambda: lambda,
                ..base.clone()
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> BucketDatasetSpec {
        BucketDatasetSpec {
            negatives: 20,
            positives: 10,
            buckets: 20,
            mean_total: 1e5,
            noise_lambda: 4.0,
            max_anomalous_buckets: 5,
            rng_seed: 9,
        }
    }

    #[test]
    fn dataset_shape_and_labels() {
        let ds = generate_bucket_dataset(&small()).unwrap();
        assert_eq!(ds.cases.len(), 30);
        assert!(ds.cases[..20].iter().all(|c| !c.label));
        assert!(ds.cases[20..].iter().all(|c| c.label));
        for c in &ds.cases[20..] {
            assert!((1..=5).contains(&c.anomalous_buckets.len()));
            assert!(c.injected.iter().all(|&e| e >= BASE_EXTRA));
        }
    }

    #[test]
    fn deterministic_and_order_independent() {
        let spec = small();
        let a = generate_bucket_dataset(&spec).unwrap();
        let b = generate_bucket_dataset(&spec).unwrap();
        assert_eq!(a, b);
        assert_eq!(generate_bucket_case(true, &spec, 7).unwrap(), a.cases[27]);
    }

    #[test]
    fn lambda_zero_injects_base_only() {
        let spec = BucketDatasetSpec {
            noise_lambda: 0.0,
            ..small()
        };
        let case = generate_bucket_case(true, &spec, 3).unwrap();
        assert!(case.injected.iter().all(|&e| e == BASE_EXTRA));
    }

    #[test]
    fn probabilities_sum_to_one() {
        let p = positive_probabilities(100, &[3, 50], &[0.0009, 0.0015]).unwrap();
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!((p[3] - 0.0109).abs() < 1e-15);
        assert!(p[0] < 0.01);
    }

    #[test]
    fn overflowing_injection_is_spec_error() {
        assert!(positive_probabilities(2, &[0], &[0.6]).is_err());
    }

    #[test]
    fn invalid_spec() {
        let mut s = small();
        s.max_anomalous_buckets = 21;
        assert!(generate_bucket_dataset(&s).is_err());
        s = small();
        s.noise_lambda = -1.0;
        assert!(s.check().is_err());
    }

    #[test]
    fn sweep_shares_negatives_and_structure() {
        let sweep = generate_noise_sweep(&[0.0, 5.0], &small()).unwrap();
        assert_eq!(sweep.len(), 2);
        assert_eq!(sweep[0].cases[..20], sweep[1].cases[..20]);
        for (a, b) in sweep[0].cases[20..].iter().zip(&sweep[1].cases[20..]) {
            assert_eq!(a.anomalous_buckets, b.anomalous_buckets);
            assert_eq!(a.counts.total(), b.counts.total());
        }
    }
}
