//! Positive Gaussian quadratic forms Q = Σ αᵢ Zᵢ²: moments, chi-squared and
//! Pearson type III tails, the quadratic-form tail bounds and x₀(α).

mod inversion;

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;
use statrs::function::gamma::{gamma_lr, gamma_ur};

use crate::error::{Error, Result};
use crate::moments::QFormMoments;

pub use inversion::qform_exact_tail;

/// Below this value of statistic/mean the tail bounds are not guaranteed.
pub const BOUND_THRESHOLD: f64 = 1.5365;

#[derive(Debug, Clone, PartialEq)]
pub struct AlphaSpectrum {
    alphas: Vec<f64>,
}

impl AlphaSpectrum {
    pub fn new(alphas: Vec<f64>) -> Result<Self> {
        if alphas.is_empty() {
            return Err(Error::Domain("empty spectrum".into()));
        }
        if alphas.iter().any(|a| !(a.is_finite() && *a >= 0.0)) {
            return Err(Error::Domain("coefficients must be finite and nonnegative".into()));
        }
        Ok(Self { alphas })
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    pub fn sum(&self) -> f64 {
        self.alphas.iter().sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PValueResult {
    pub p: f64,
    pub valid: bool,
    pub note: String,
}

impl PValueResult {
    fn new(p: f64, valid: bool, note: impl Into<String>) -> Self {
        Self { p: p.clamp(0.0, 1.0), valid, note: note.into() }
    }
}

/// Mean, variance, third and fourth central moments of Σ αᵢ Zᵢ².
pub fn qform_moments(spectrum: &AlphaSpectrum) -> QFormMoments {
    let p = |k: i32| spectrum.alphas.iter().map(|a| a.powi(k)).sum::<f64>();
    let variance = 2.0 * p(2);
    QFormMoments {
        mean: p(1),
        variance,
        central3: Some(8.0 * p(3)),
        central4: Some(48.0 * p(4) + 3.0 * variance * variance),
        second_moment: None,
    }
}

/// P(Y ≥ x) for Y chi-squared with (possibly fractional) `df` degrees of
/// freedom.
pub fn chisq_upper_tail(df: f64, x: f64) -> Result<f64> {
    if !(df > 0.0) || !df.is_finite() {
        return Err(Error::Domain(format!("degrees of freedom must be positive, got {df}")));
    }
    Ok(gamma_upper(0.5 * df, 0.5 * x))
}

/// P(Y ≤ x), the complement of [`chisq_upper_tail`].
pub fn chisq_cdf(df: f64, x: f64) -> Result<f64> {
    if !(df > 0.0) || !df.is_finite() {
        return Err(Error::Domain(format!("degrees of freedom must be positive, got {df}")));
    }
    if !(x > 0.0) {
        return Ok(0.0);
    }
    if x.is_infinite() {
        return Ok(1.0);
    }
    Ok(gamma_lr(0.5 * df, 0.5 * x))
}

/// Regularized upper incomplete gamma Q(a, x) with the conventions
/// Q(a, x ≤ 0) = 1 and Q(a, ∞) = 0.
fn gamma_upper(a: f64, x: f64) -> f64 {
    if !(x > 0.0) {
        1.0
    } else if x.is_infinite() {
        0.0
    } else {
        gamma_ur(a, x)
    }
}

/// Standard normal upper tail P(Z ≥ z).
pub fn normal_upper_tail(z: f64) -> f64 {
    0.5 * erfc(z / std::f64::consts::SQRT_2)
}

fn check_mean(mean: f64) -> Result<()> {
    if !(mean > 0.0) || !mean.is_finite() {
        return Err(Error::Degenerate(format!("mean must be positive, got {mean}")));
    }
    Ok(())
}

fn bound_validity(statistic: f64, mean: f64) -> (bool, &'static str) {
    if statistic / mean >= BOUND_THRESHOLD {
        (true, "")
    } else {
        (false, "statistic/mean below 1.5365: tail bound not guaranteed")
    }
}

/// The distribution-free bound P(Y₁ ≥ statistic/mean).
pub fn pvalue_classical(statistic: f64, mean: f64) -> Result<PValueResult> {
    check_mean(mean)?;
    let (valid, note) = bound_validity(statistic, mean);
    Ok(PValueResult::new(gamma_upper(0.5, 0.5 * statistic / mean), valid, note))
}

/// The bound P(α·Y_{1/α} ≥ statistic/mean) with α = √(Var/(2·mean²)).
pub fn pvalue_variance(statistic: f64, mean: f64, variance: f64) -> Result<PValueResult> {
    check_mean(mean)?;
    if variance < 0.0 || variance.is_nan() {
        return Err(Error::Degenerate(format!("variance must be nonnegative, got {variance}")));
    }
    let (valid, note) = bound_validity(statistic, mean);
    if variance == 0.0 {
        let p = if statistic <= mean { 1.0 } else { 0.0 };
        return Ok(PValueResult::new(p, valid, "zero variance: point mass at the mean"));
    }
    let alpha = (variance / (2.0 * mean * mean)).sqrt().min(1.0);
    let p = gamma_upper(0.5 / alpha, 0.5 * statistic / (mean * alpha));
    Ok(PValueResult::new(p, valid, note))
}

/// Three-parameter gamma law with density ∝ (x−c)^{a−1} e^{−(x−c)/b}.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PearsonIII {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl PearsonIII {
    pub fn from_moments(mean: f64, variance: f64, skewness: f64) -> Result<Self> {
        if !(variance > 0.0) || !(skewness > 0.0) {
            return Err(Error::Degenerate("Pearson III needs positive variance and skewness".into()));
        }
        let a = 4.0 / (skewness * skewness);
        let b = (variance / a).sqrt();
        Ok(Self { a, b, c: mean - a * b })
    }

    pub fn mean(&self) -> f64 {
        self.c + self.a * self.b
    }

    pub fn variance(&self) -> f64 {
        self.a * self.b * self.b
    }

    pub fn skewness(&self) -> f64 {
        2.0 / self.a.sqrt()
    }

    pub fn upper_tail(&self, x: f64) -> f64 {
        gamma_upper(self.a, (x - self.c) / self.b)
    }
}

/// Pearson three-moment approximation; falls back to the normal
/// approximation when the skewness is not positive.
pub fn pvalue_pearson(statistic: f64, mean: f64, variance: f64, skewness: f64) -> Result<PValueResult> {
    if !(variance > 0.0) {
        return Err(Error::Degenerate(format!("variance must be positive, got {variance}")));
    }
    if !(skewness > 0.0) || !skewness.is_finite() {
        let mut r = pvalue_clt(statistic, mean, variance)?;
        r.note = "non-positive skewness: normal approximation used".into();
        return Ok(r);
    }
    let law = PearsonIII::from_moments(mean, variance, skewness)?;
    Ok(PValueResult::new(law.upper_tail(statistic), true, ""))
}

pub fn pvalue_clt(statistic: f64, mean: f64, variance: f64) -> Result<PValueResult> {
    if !(variance > 0.0) {
        return Err(Error::Degenerate(format!("variance must be positive, got {variance}")));
    }
    Ok(PValueResult::new(normal_upper_tail((statistic - mean) / variance.sqrt()), true, ""))
}

/// The crossing point of the CDFs of Y_m/m and Y_{m+1}/(m+1), m = ⌈1/α⌉.
pub fn compute_x0(alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::Domain(format!("alpha must lie in (0, 1], got {alpha}")));
    }
    let m = (1.0 / alpha).ceil();
    let diff = |x: f64| gamma_lr(0.5 * m, 0.5 * m * x) - gamma_lr(0.5 * (m + 1.0), 0.5 * (m + 1.0) * x);
    // The difference is positive near 0 and changes sign once; both CDFs
    // saturate far out, so the bracket is searched from the left.
    let mut lo = 1e-3;
    let step = 0.01;
    let mut hi = lo + step;
    while diff(hi) > 0.0 {
        lo = hi;
        hi += step;
        if hi > 10.0 {
            return Err(Error::Numeric(format!("no crossing found for alpha = {alpha}")));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if diff(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-14 {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests;
