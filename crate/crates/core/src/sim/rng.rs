use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Binomial, Distribution, Poisson};

use crate::error::{Error, Result};

/// Recorded in report metadata so runs can be reproduced.
pub const RNG_ALGORITHM: &str = "ChaCha20 (rand_chacha 0.9), per-case seeds via SplitMix64";

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for stream `index` within `domain` under a run-level seed.
pub fn derive_seed(seed: u64, domain: u64, index: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(seed) ^ domain) ^ index)
}

pub fn stream_rng(seed: u64, domain: u64, index: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(derive_seed(seed, domain, index))
}

pub(crate) fn poisson<R: Rng + ?Sized>(rng: &mut R, lambda: f64) -> Result<u64> {
    if lambda == 0.0 {
        return Ok(0);
    }
    let dist = Poisson::new(lambda)
        .map_err(|e| Error::domain(format!("poisson mean {lambda}: {e}")))?;
    Ok(dist.sample(rng) as u64)
}

pub(crate) fn binomial<R: Rng + ?Sized>(rng: &mut R, n: u64, p: f64) -> Result<u64> {
    if n == 0 || p <= 0.0 {
        return Ok(0);
    }
    if p >= 1.0 {
        return Ok(n);
    }
    let dist =
        Binomial::new(n, p).map_err(|e| Error::domain(format!("binomial({n}, {p}): {e}")))?;
    Ok(dist.sample(rng))
}

/// Multinomial draw of `n` trials over `probs` by sequential conditional
/// binomials. `probs` must be non-negative and sum to 1 within 1e-9.
pub fn sample_multinomial<R: Rng + ?Sized>(rng: &mut R, n: u64, probs: &[f64]) -> Result<Vec<u64>> {
    if probs.is_empty() {
        return Err(Error::domain("multinomial needs at least one category"));
    }
    if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
        return Err(Error::domain("multinomial probabilities must be finite and non-negative"));
    }
    let sum: f64 = probs.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(Error::domain(format!("multinomial probabilities sum to {sum}")));
    }
    let mut out = Vec::with_capacity(probs.len());
    let mut left = n;
    let mut mass = 1.0;
    let last = probs.len() - 1;
    for (i, &p) in probs.iter().enumerate() {
        let draw = if i == last || left == 0 {
            left
        } else {
            binomial(rng, left, (p / mass).min(1.0))?
        };
        out.push(draw);
        left -= draw;
        mass -= p;
        if mass <= 0.0 {
            mass = f64::MIN_POSITIVE;
        }
    }
    Ok(out)
}
