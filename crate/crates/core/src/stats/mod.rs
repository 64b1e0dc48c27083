//! Distribution functions used by every detector.
//!
//! Chi-square probabilities go through the regularized incomplete gamma
//! function. The normal CDF reuses the same machinery through
//! `erfc(x) = Q(1/2, x^2)`, so both tails stay accurate far from the centre.
//! Kolmogorov and Anderson-Darling tails are the asymptotic (large-n) forms.
//!
//! All logarithms are natural logarithms.

mod chi_square;
mod gamma;
mod tails;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use chi_square::{
    chi_square_cdf, chi_square_critical, chi_square_pdf, chi_square_quantile, chi_square_sf,
};
pub use gamma::{ln_gamma, regularized_gamma_p, regularized_gamma_q};
pub use tails::{anderson_darling_sf, kolmogorov_sf, normal_cdf, normal_sf};

/// A probability or significance level in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Probability(f64);

impl Probability {
    pub fn new(value: f64) -> Result<Self> {
        if (0.0..=1.0).contains(&value) {
            Ok(Self(value))
        } else {
            Err(Error::domain(format!("probability {value} outside [0, 1]")))
        }
    }

    /// A significance level: strictly inside `(0, 1)`.
    pub fn significance(value: f64) -> Result<Self> {
        if value > 0.0 && value < 1.0 {
            Ok(Self(value))
        } else {
            Err(Error::domain(format!(
                "significance level {value} outside (0, 1)"
            )))
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for Probability {
    type Error = Error;

    fn try_from(value: f64) -> Result<Self> {
        Self::new(value)
    }
}

impl From<Probability> for f64 {
    fn from(p: Probability) -> f64 {
        p.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub struct DegreesOfFreedom(u32);

impl DegreesOfFreedom {
    pub fn new(df: u32) -> Result<Self> {
        if df == 0 {
            Err(Error::domain("degrees of freedom must be at least 1"))
        } else {
            Ok(Self(df))
        }
    }

    pub fn get(self) -> u32 {
        self.0
    }

    /// Gamma shape parameter `df / 2`.
    pub(crate) fn half(self) -> f64 {
        f64::from(self.0) / 2.0
    }
}

impl TryFrom<u32> for DegreesOfFreedom {
    type Error = Error;

    fn try_from(df: u32) -> Result<Self> {
        Self::new(df)
    }
}

impl From<DegreesOfFreedom> for u32 {
    fn from(df: DegreesOfFreedom) -> u32 {
        df.0
    }
}
