use super::gamma::{gamma_pair, ln_gamma};
use super::DegreesOfFreedom;
use crate::error::{Error, Result};

fn check_x(x: f64) -> Result<()> {
    if x >= 0.0 {
        Ok(())
    } else {
        Err(Error::domain(format!(
            "chi-square argument must be non-negative, got {x}"
        )))
    }
}

/// `P(chi2_df <= x)`.
pub fn chi_square_cdf(x: f64, df: DegreesOfFreedom) -> Result<f64> {
    check_x(x)?;
    Ok(gamma_pair(df.half(), x / 2.0).0.clamp(0.0, 1.0))
}

/// Upper tail `P(chi2_df > x)`, accurate in relative terms far into the tail.
pub fn chi_square_sf(x: f64, df: DegreesOfFreedom) -> Result<f64> {
    check_x(x)?;
    Ok(gamma_pair(df.half(), x / 2.0).1.clamp(0.0, 1.0))
}

pub fn chi_square_pdf(x: f64, df: DegreesOfFreedom) -> Result<f64> {
    check_x(x)?;
    Ok(ln_pdf(x, df).exp())
}

fn ln_pdf(x: f64, df: DegreesOfFreedom) -> f64 {
    let k = df.half();
    if x == 0.0 {
        return match df.get() {
            1 => f64::INFINITY,
            2 => 0.5f64.ln(),
            _ => f64::NEG_INFINITY,
        };
    }
    (k - 1.0) * x.ln() - x / 2.0 - k * 2f64.ln() - ln_gamma(k)
}

/// Inverse CDF: the `x` with `chi_square_cdf(x, df) = p`.
pub fn chi_square_quantile(p: f64, df: DegreesOfFreedom) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::domain(format!("quantile level {p} outside (0, 1)")));
    }
    Ok(if p <= 0.5 {
        invert(p, Tail::Lower, df)
    } else {
        invert(1.0 - p, Tail::Upper, df)
    })
}

/// Critical value `chi2_{alpha, df}`: the point with upper-tail area `alpha`.
pub fn chi_square_critical(alpha: f64, df: DegreesOfFreedom) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::domain(format!(
            "significance level {alpha} outside (0, 1)"
        )));
    }
    Ok(if alpha <= 0.5 {
        invert(alpha, Tail::Upper, df)
    } else {
        invert(1.0 - alpha, Tail::Lower, df)
    })
}

#[derive(Clone, Copy)]
enum Tail {
    Lower,
    Upper,
}

/// Safeguarded Newton iteration on `ln tail(x) - ln target` inside a
/// bracket that shrinks every step.
fn invert(target: f64, tail: Tail, df: DegreesOfFreedom) -> f64 {
    let ln_target = target.ln();
    let residual = |x: f64| -> (f64, f64) {
        let (p, q) = gamma_pair(df.half(), x / 2.0);
        let t = match tail {
            Tail::Lower => p,
            Tail::Upper => q,
        };
        // d/dx ln tail(x) = +-pdf(x) / tail(x)
        let slope = (ln_pdf(x, df) - t.ln()).exp();
        match tail {
            Tail::Lower => (t.ln() - ln_target, slope),
            Tail::Upper => (ln_target - t.ln(), slope),
        }
    };

    // residual(x) is increasing in x for both tails by construction.
    let mut lo = 0.0;
    let mut hi = f64::from(df.get()).max(1.0);
    while residual(hi).0 < 0.0 {
        lo = hi;
        hi *= 2.0;
    }

    let mut x = 0.5 * (lo + hi);
    for _ in 0..500 {
        let (r, slope) = residual(x);
        if r == 0.0 {
            return x;
        }
        if r < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let newton = x - r / slope;
        let next = if newton.is_finite() && newton > lo && newton < hi {
            newton
        } else if lo > 0.0 {
            (lo * hi).sqrt()
        } else {
            0.5 * (lo + hi)
        };
        if (next - x).abs() <= 1e-15 * x || hi - lo <= 1e-15 * hi {
            return next;
        }
        x = next;
    }
    x
}
