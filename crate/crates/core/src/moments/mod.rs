//! Moment estimators for the null distribution of the test statistics.
//!
//! Per-variable parameters are estimated from [`MatrixStats`]; the moments of
//! the statistic are then assembled with the subset-family sums g_C and G_C,
//! either for the N → ∞ limit or for the exact finite sample size.

pub mod coefficients;
pub mod subsets;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::psi::MatrixStats;
use crate::statistics::{Family, StatisticKind};

pub use coefficients::CoefficientTable;
pub use subsets::{big_gc_eval, gc_eval};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Bias {
    Biased,
    Unbiased,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Horizon {
    Limit,
    FiniteSample,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EstimatorConfig {
    pub bias: Bias,
    pub horizon: Horizon,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self { bias: Bias::Unbiased, horizon: Horizon::FiniteSample }
    }
}

/// Parameters of one marginal.
///
/// `mu1..mu4` are the eigenvalue power sums μ⁽ᵏ⁾; with m = Eψ(X−X'),
/// b = Eψ(X−X')², c = Eψ(X−X')ψ(X'−X''), d = m², e and f are the cycle and
/// path triple products, y = m·c and u = m³.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarginalMoments {
    pub mu1: f64,
    pub mu2: f64,
    pub mu3: f64,
    pub mu4: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub e: f64,
    pub f: f64,
    pub y: f64,
    pub u: f64,
    pub bias: Bias,
    /// Set when `mu4` is the biased estimate inside an unbiased set.
    pub mu4_biased_fallback: bool,
}

impl MarginalMoments {
    /// A variable with zero mean distance, i.e. a constant one.
    pub fn is_constant(&self) -> bool {
        self.mu1 == 0.0
    }

    pub fn mu(&self, k: usize) -> f64 {
        match k {
            1 => self.mu1,
            2 => self.mu2,
            3 => self.mu3,
            4 => self.mu4,
            _ => panic!("moment order {k} is not available"),
        }
    }
}

/// Mean and central moments of a (limit or finite-sample) null distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QFormMoments {
    pub mean: f64,
    pub variance: f64,
    pub central3: Option<f64>,
    pub central4: Option<f64>,
    /// E(T²), reported by the finite-sample formulas.
    pub second_moment: Option<f64>,
}

impl QFormMoments {
    pub fn skewness(&self) -> Option<f64> {
        self.central3.map(|c3| c3 / self.variance.powf(1.5))
    }

    pub fn excess_kurtosis(&self) -> Option<f64> {
        self.central4.map(|c4| c4 / (self.variance * self.variance) - 3.0)
    }
}

pub fn marginal_moments_biased(s: &MatrixStats) -> MarginalMoments {
    let n = s.n as f64;
    let (n2, n3, n4, n5) = (n * n, n * n * n, n.powi(4), n.powi(5));
    let m = s.abs_b / n2;
    let b = s.abs_bhb / n2;
    let c = s.abs_b2 / n3;
    let e = s.abs_b2hb / n3;
    let f = s.abs_b3 / n4;
    let y = c * m;
    let u = m * m * m;
    let mu4 = s.abs_b3hb / n4 - 4.0 * s.abs_b4 / n5 + 4.0 * f * m + 2.0 * c * c
        - 4.0 * c * m * m
        + m.powi(4);
    MarginalMoments {
        mu1: m,
        mu2: b - 2.0 * c + m * m,
        mu3: -e + 3.0 * f - 3.0 * y + u,
        mu4,
        b,
        c,
        d: m * m,
        e,
        f,
        y,
        u,
        bias: Bias::Biased,
        mu4_biased_fallback: false,
    }
}

/// N(N−1)···(N−k+1).
fn falling(n: usize, k: usize) -> f64 {
    (0..k).map(|i| (n - i) as f64).product()
}

pub fn marginal_moments_unbiased(s: &MatrixStats) -> Result<MarginalMoments> {
    let n = s.n;
    for (field, required) in [("d", 4), ("f", 4), ("y", 5), ("u", 6)] {
        if n < required {
            return Err(Error::Precondition { field, required, got: n });
        }
    }
    let mu1 = s.abs_b / falling(n, 2);
    let b = s.abs_bhb / falling(n, 2);
    let c = (s.abs_b2 - s.abs_bhb) / falling(n, 3);
    let d = (s.abs_b * s.abs_b + 2.0 * s.abs_bhb - 4.0 * s.abs_b2) / falling(n, 4);
    let e = s.abs_b2hb / falling(n, 3);
    let f = (s.abs_b3 - s.abs_b2hb - 2.0 * s.abs_bhb_dot_b + s.abs_bhbhb) / falling(n, 4);
    let y = (s.abs_b2 * s.abs_b - s.abs_bhb * s.abs_b - 2.0 * s.abs_colsum3 - 4.0 * s.abs_bhbhb
        - 4.0 * s.abs_b3
        + 2.0 * s.abs_b2hb
        + 10.0 * s.abs_bhb_dot_b)
        / falling(n, 5);
    let u = (s.abs_b.powi(3) + 16.0 * s.abs_bhbhb - 48.0 * s.abs_bhb_dot_b - 8.0 * s.abs_b2hb
        + 6.0 * s.abs_b * s.abs_bhb
        + 24.0 * s.abs_b3
        + 16.0 * s.abs_colsum3
        - 12.0 * s.abs_b2 * s.abs_b)
        / falling(n, 6);
    Ok(MarginalMoments {
        mu1,
        mu2: b - 2.0 * c + d,
        mu3: -e + 3.0 * f - 3.0 * y + u,
        mu4: marginal_moments_biased(s).mu4,
        b,
        c,
        d,
        e,
        f,
        y,
        u,
        bias: Bias::Unbiased,
        mu4_biased_fallback: true,
    })
}

pub fn marginal_moments(s: &MatrixStats, bias: Bias) -> Result<MarginalMoments> {
    match bias {
        Bias::Biased => Ok(marginal_moments_biased(s)),
        Bias::Unbiased => marginal_moments_unbiased(s),
    }
}

fn collect(per_variable: &[MarginalMoments], k: usize) -> Vec<f64> {
    per_variable.iter().map(|m| m.mu(k)).collect()
}

fn limit_from_mu(mu: [Vec<f64>; 4], family: Family) -> QFormMoments {
    let g2 = gc_eval(&mu[1], family);
    let variance = 2.0 * g2;
    // The limit is a sum of independent Gaussian quadratic forms, one per
    // subset, so its fourth cumulant adds up over the whole spectrum.
    let central4 = 48.0 * gc_eval(&mu[3], family) + 3.0 * variance * variance;
    QFormMoments {
        mean: gc_eval(&mu[0], family),
        variance,
        central3: Some(8.0 * gc_eval(&mu[2], family)),
        central4: Some(central4),
        second_moment: None,
    }
}

/// Moments of the N → ∞ limit of the raw statistic.
pub fn joint_limit_moments(per_variable: &[MarginalMoments], family: Family) -> QFormMoments {
    limit_from_mu(
        [1, 2, 3, 4].map(|k| collect(per_variable, k)),
        family,
    )
}

/// Moments of the N → ∞ limit of the normalized statistic: each μᵢ⁽ᵏ⁾ is
/// divided by (μᵢ⁽¹⁾)ᵏ and the sum is divided by the family size.
pub fn normalized_limit_moments(per_variable: &[MarginalMoments], family: Family) -> QFormMoments {
    let mu = [1, 2, 3, 4].map(|k| {
        per_variable
            .iter()
            .map(|m| if m.is_constant() { 0.0 } else { m.mu(k) / m.mu1.powi(k as i32) })
            .collect::<Vec<f64>>()
    });
    scale(limit_from_mu(mu, family), family.size(per_variable.len()))
}

fn scale(q: QFormMoments, size: f64) -> QFormMoments {
    QFormMoments {
        mean: q.mean / size,
        variance: q.variance / (size * size),
        central3: q.central3.map(|v| v / size.powi(3)),
        central4: q.central4.map(|v| v / size.powi(4)),
        second_moment: q.second_moment.map(|v| v / (size * size)),
    }
}

/// Finite-sample mean, second moment and variance of the raw statistic under
/// independence.
pub fn finite_sample_moments(
    per_variable: &[MarginalMoments],
    n_samples: usize,
    family: Family,
) -> Result<QFormMoments> {
    if n_samples < 2 {
        return Err(Error::Size { required: 2, got: n_samples });
    }
    let t = CoefficientTable::new(n_samples);
    let nf = n_samples as f64;
    let mu = collect(per_variable, 1);
    let scaled = |f: f64| mu.iter().map(|m| f * m).collect::<Vec<f64>>();
    let mean = gc_eval(&scaled(1.0 - 1.0 / nf), family) + (nf - 1.0) * gc_eval(&scaled(-1.0 / nf), family);

    let n4 = nf.powi(4);
    let mut second = 0.0;
    let mut mean_sq = 0.0;
    for k in 0..7 {
        let u = scaled(t.e1[k]);
        let v = scaled(t.e2[k]);
        let w: Vec<f64> = per_variable
            .iter()
            .map(|m| (t.b[k] * m.b + t.c[k] * m.c + t.d[k] * m.d) / n4)
            .collect();
        let wd: Vec<f64> = per_variable.iter().map(|m| t.e1[k] * t.e2[k] * m.d).collect();
        second += t.count[k] * big_gc_eval(&u, &v, &w, family);
        mean_sq += t.count[k] * big_gc_eval(&u, &v, &wd, family);
    }
    second /= nf * nf;
    mean_sq /= nf * nf;
    Ok(QFormMoments {
        mean,
        variance: second - mean_sq,
        central3: None,
        central4: None,
        second_moment: Some(second),
    })
}

/// Finite-sample mean and variance of the normalized statistic.
///
/// The mean is exact. The second moment replaces E(ψψ'/ĥ²) by the quotient
/// of expectations, with E(ĥ²) expressed through b, c and d.
pub fn normalized_finite_sample_moments(
    per_variable: &[MarginalMoments],
    n_samples: usize,
    family: Family,
) -> Result<QFormMoments> {
    if n_samples < 2 {
        return Err(Error::Size { required: 2, got: n_samples });
    }
    let t = CoefficientTable::new(n_samples);
    let nf = n_samples as f64;
    let ones: Vec<f64> = per_variable.iter().map(|m| if m.is_constant() { 0.0 } else { 1.0 }).collect();
    let scaled = |f: f64| ones.iter().map(|o| f * o).collect::<Vec<f64>>();
    let size = family.size(per_variable.len());
    let mean = (gc_eval(&ones, family) + (nf - 1.0) * gc_eval(&scaled(-1.0 / (nf - 1.0)), family)) / size;

    let quotients: Vec<(f64, f64, f64)> = per_variable
        .iter()
        .map(|m| {
            let h2 = t.expected_h_squared(m.b, m.c, m.d);
            if m.is_constant() || h2 <= 0.0 {
                (0.0, 0.0, 0.0)
            } else {
                (m.b / h2, m.c / h2, m.d / h2)
            }
        })
        .collect();
    let n4 = nf.powi(4);
    let mut second = 0.0;
    for k in 0..7 {
        let w: Vec<f64> = quotients
            .iter()
            .map(|(b, c, d)| (t.b[k] * b + t.c[k] * c + t.d[k] * d) / n4)
            .collect();
        second += t.count[k] * big_gc_eval(&scaled(t.f1[k]), &scaled(t.f2[k]), &w, family);
    }
    second /= nf * nf * size * size;
    Ok(QFormMoments {
        mean,
        variance: second - mean * mean,
        central3: None,
        central4: None,
        second_moment: Some(second),
    })
}

/// Null moments of the statistic described by `kind`. Finite-sample results
/// carry the limit third and fourth moments, since no finite-sample skewness
/// is available.
pub fn null_moments(
    per_variable: &[MarginalMoments],
    n_samples: usize,
    kind: StatisticKind,
    horizon: Horizon,
) -> Result<QFormMoments> {
    kind.family.validate(per_variable.len())?;
    let limit = if kind.normalized {
        normalized_limit_moments(per_variable, kind.family)
    } else {
        joint_limit_moments(per_variable, kind.family)
    };
    match horizon {
        Horizon::Limit => Ok(limit),
        Horizon::FiniteSample => {
            let mut q = if kind.normalized {
                normalized_finite_sample_moments(per_variable, n_samples, kind.family)?
            } else {
                finite_sample_moments(per_variable, n_samples, kind.family)?
            };
            q.central3 = limit.central3;
            q.central4 = limit.central4;
            Ok(q)
        }
    }
}

pub fn standardize(statistic: f64, mean: f64, variance: f64) -> Result<f64> {
    if !(variance > 0.0) {
        return Err(Error::Degenerate(format!("variance must be positive, got {variance}")));
    }
    Ok((statistic - mean) / variance.sqrt())
}
