//! Test orchestration: statistic, null moments and p-value method, plus
//! resampling tests and Monte Carlo benchmarks.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use nalgebra::SymmetricEigen;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::moments::{gc_eval, marginal_moments, null_moments, EstimatorConfig, Horizon};
use crate::psi::{matrix_statistics, matrix_statistics_second_order, DistanceMatrix};
use crate::qform::{
    pvalue_classical, pvalue_clt, pvalue_pearson, pvalue_variance, qform_exact_tail, AlphaSpectrum,
    PValueResult,
};
use crate::spectral::product_eigenvalues;
use crate::statistics::{centered, statistic_from_matrices, Dataset, Family, StatisticKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Classical,
    Variance,
    Pearson,
    Clt,
    Eigenvalue,
    Permutation,
    Bootstrap,
    #[serde(rename = "montecarlo")]
    MonteCarlo,
}

impl Method {
    pub const ALL: [Method; 8] = [
        Method::Classical,
        Method::Variance,
        Method::Pearson,
        Method::Clt,
        Method::Eigenvalue,
        Method::Permutation,
        Method::Bootstrap,
        Method::MonteCarlo,
    ];

    pub fn label(&self) -> &'static str {
        match self {
            Method::Classical => "classical",
            Method::Variance => "variance",
            Method::Pearson => "pearson",
            Method::Clt => "clt",
            Method::Eigenvalue => "eigenvalue",
            Method::Permutation => "permutation",
            Method::Bootstrap => "bootstrap",
            Method::MonteCarlo => "montecarlo",
        }
    }

    pub fn is_resampling(&self) -> bool {
        matches!(self, Method::Permutation | Method::Bootstrap | Method::MonteCarlo)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.label() == s)
            .ok_or_else(|| Error::Config(format!("unknown method `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestSpec {
    pub kind: StatisticKind,
    pub method: Method,
    pub estimator: EstimatorConfig,
    pub resamples: usize,
    pub rng_seed: u64,
}

impl Default for TestSpec {
    fn default() -> Self {
        Self {
            kind: StatisticKind::multivariance(true),
            method: Method::Pearson,
            estimator: EstimatorConfig::default(),
            resamples: 999,
            rng_seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub statistic: f64,
    pub p: f64,
    pub valid: bool,
    pub method: String,
    pub parameters: BTreeMap<String, f64>,
    pub warnings: Vec<String>,
}

impl TestResult {
    fn new(statistic: f64, method: Method) -> Self {
        Self {
            statistic,
            p: 1.0,
            valid: true,
            method: method.label().to_string(),
            parameters: BTreeMap::new(),
            warnings: Vec::new(),
        }
    }

    fn absorb(&mut self, r: PValueResult) {
        self.p = r.p;
        self.valid = r.valid;
        if !r.note.is_empty() {
            self.warnings.push(r.note);
        }
    }
}

/// Cap on the number of product eigenvalues in the eigenvalue method.
pub const EIGEN_CAP: usize = 10_000;
/// Largest subset family the eigenvalue method enumerates.
const MAX_SUBSETS: usize = 4096;

/// Independent stream for replicate `index` under `seed`.
pub fn replicate_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

fn validate_spec(n_vars: usize, spec: &TestSpec) -> Result<()> {
    spec.kind.family.validate(n_vars).map_err(|e| Error::Config(e.to_string()))?;
    if spec.method.is_resampling() && spec.resamples == 0 {
        return Err(Error::Config("resampling methods need at least one resample".into()));
    }
    Ok(())
}

/// Index sets of the subsets summed over by `family`.
pub fn family_members(n: usize, family: Family) -> Result<Vec<Vec<usize>>> {
    family.validate(n)?;
    if n >= 63 {
        return Err(Error::Config(format!("too many variables ({n}) to enumerate subsets")));
    }
    let keep = |size: usize| match family {
        Family::Multivariance => size == n,
        Family::Total => size >= 2,
        Family::M(m) => size == m,
    };
    let count: f64 = match family {
        Family::Multivariance => 1.0,
        _ => family.size(n),
    };
    if count > MAX_SUBSETS as f64 {
        return Err(Error::Config(format!("{count} subsets exceed the enumeration limit {MAX_SUBSETS}")));
    }
    if family == Family::Multivariance {
        return Ok(vec![(0..n).collect()]);
    }
    Ok((0u64..(1 << n))
        .filter(|mask| keep(mask.count_ones() as usize))
        .map(|mask| (0..n).filter(|i| mask >> i & 1 == 1).collect())
        .collect())
}

/// True when the null distribution is a point mass at 0, i.e. every subset
/// of the family contains a constant variable.
fn null_is_degenerate(bs: &[DistanceMatrix], family: Family) -> bool {
    let live: Vec<f64> = bs.iter().map(|b| if b.is_zero() { 0.0 } else { 1.0 }).collect();
    gc_eval(&live, family) == 0.0
}

pub fn run_test(data: &Dataset, spec: &TestSpec) -> Result<TestResult> {
    validate_spec(data.n_vars(), spec)?;
    if spec.method.is_resampling() {
        return resample_pvalue(data, spec);
    }
    let bs = data.distance_matrices()?;
    let statistic = statistic_from_matrices(&bs, spec.kind)?;
    let mut result = TestResult::new(statistic, spec.method);
    if null_is_degenerate(&bs, spec.kind.family) {
        result.warnings.push("constant variables: the null distribution is a point mass, p = 1".into());
        return Ok(result);
    }
    if spec.method == Method::Clt && !matches!(spec.kind.family, Family::M(_)) {
        result
            .warnings
            .push("the normal approximation is only justified for m-multivariance with many variables".into());
    }
    match spec.method {
        Method::Eigenvalue => eigenvalue_pvalue(&bs, spec.kind, &mut result)?,
        _ => moment_pvalue(&bs, spec, &mut result)?,
    }
    Ok(result)
}

fn moment_pvalue(bs: &[DistanceMatrix], spec: &TestSpec, result: &mut TestResult) -> Result<()> {
    let n = bs[0].n();
    // Only Pearson uses the third moment; the others skip the O(N³) product.
    let stats = if spec.method == Method::Pearson { matrix_statistics } else { matrix_statistics_second_order };
    let per = bs
        .iter()
        .map(|b| marginal_moments(&stats(b), spec.estimator.bias))
        .collect::<Result<Vec<_>>>()?;
    let q = null_moments(&per, n, spec.kind, spec.estimator.horizon)?;
    let limit = match spec.estimator.horizon {
        Horizon::Limit => q,
        Horizon::FiniteSample => null_moments(&per, n, spec.kind, Horizon::Limit)?,
    };
    let skewness = limit.skewness();
    result.parameters.insert("mean".into(), q.mean);
    result.parameters.insert("variance".into(), q.variance);
    if let Some(s) = skewness.filter(|s| s.is_finite()) {
        result.parameters.insert("skewness".into(), s);
    }
    if !(q.mean > 0.0) {
        result.warnings.push(format!("non-positive mean estimate {}: p = 1", q.mean));
        return Ok(());
    }
    let stat = result.statistic;
    let needs_variance = matches!(spec.method, Method::Variance | Method::Pearson | Method::Clt);
    if needs_variance && !(q.variance > 0.0) {
        result.warnings.push("non-positive variance estimate: classical bound used instead".into());
        result.absorb(pvalue_classical(stat, q.mean)?);
        return Ok(());
    }
    let r = match spec.method {
        Method::Classical => pvalue_classical(stat, q.mean)?,
        Method::Variance => pvalue_variance(stat, q.mean, q.variance)?,
        Method::Pearson => pvalue_pearson(stat, q.mean, q.variance, skewness.unwrap_or(f64::NAN))?,
        Method::Clt => pvalue_clt(stat, q.mean, q.variance)?,
        _ => unreachable!("dispatched elsewhere"),
    };
    result.absorb(r);
    Ok(())
}

/// Spectrum of the empirical covariance operator of one variable: the
/// eigenvalues of A/N, descending and clipped at 0.
pub fn empirical_spectrum(b: &DistanceMatrix, normalized: bool) -> Vec<f64> {
    let n = b.n() as f64;
    let a = centered(b, normalized) / n;
    let mut ev: Vec<f64> = SymmetricEigen::new(a).eigenvalues.iter().map(|v| v.max(0.0)).collect();
    ev.sort_by(|x, y| y.total_cmp(x));
    let top = ev.first().copied().unwrap_or(0.0);
    ev.retain(|v| *v > 1e-13 * top);
    ev
}

/// Coefficients α of the limit quadratic form: the largest products of the
/// marginal spectra over the family, capped at `cap`, with the truncated
/// mass placed on one extra coefficient so that Σα is exact.
pub fn limit_spectrum(spectra: &[Vec<f64>], family: Family, cap: usize) -> Result<Vec<f64>> {
    let members = family_members(spectra.len(), family)?;
    let traces: Vec<f64> = spectra.iter().map(|s| s.iter().sum()).collect();
    let mut all = Vec::new();
    let mut mean = 0.0;
    for set in &members {
        let lists: Vec<Vec<f64>> = set.iter().map(|&i| spectra[i].clone()).collect();
        if lists.iter().any(Vec::is_empty) {
            continue;
        }
        mean += set.iter().map(|&i| traces[i]).product::<f64>();
        all.extend(product_eigenvalues(&lists, cap));
    }
    all.sort_by(|x, y| y.total_cmp(x));
    all.truncate(cap);
    let kept: f64 = all.iter().sum();
    let residual = mean - kept;
    if residual > 1e-14 * mean {
        all.push(residual);
    }
    Ok(all)
}

fn eigenvalue_pvalue(bs: &[DistanceMatrix], kind: StatisticKind, result: &mut TestResult) -> Result<()> {
    let spectra: Vec<Vec<f64>> = bs.iter().map(|b| empirical_spectrum(b, kind.normalized)).collect();
    let mut alphas = limit_spectrum(&spectra, kind.family, EIGEN_CAP)?;
    if kind.normalized {
        let size = kind.family.size(bs.len());
        alphas.iter_mut().for_each(|a| *a /= size);
    }
    let spectrum = AlphaSpectrum::new(alphas)?;
    let mean = spectrum.sum();
    result.parameters.insert("mean".into(), mean);
    result.parameters.insert("variance".into(), 2.0 * spectrum.alphas().iter().map(|a| a * a).sum::<f64>());
    result.parameters.insert("alphas".into(), spectrum.alphas().len() as f64);
    result.p = qform_exact_tail(&spectrum, result.statistic)?.clamp(0.0, 1.0);
    Ok(())
}

/// Values within this relative distance of x count as ties with x. The
/// statistic of discrete data takes few distinct values, and the same value
/// summed in a different order differs in the last bits.
const TIE_TOLERANCE: f64 = 1e-10;

fn tie_threshold(x: f64) -> f64 {
    x - TIE_TOLERANCE * x.abs()
}

/// Indices of one resample of size n.
fn resample_indices(rng: &mut ChaCha8Rng, n: usize, with_replacement: bool) -> Vec<usize> {
    if with_replacement {
        (0..n).map(|_| rng.random_range(0..n)).collect()
    } else {
        let mut idx: Vec<usize> = (0..n).collect();
        idx.shuffle(rng);
        idx
    }
}

/// Resampling p-value (1 + #{T* ≥ T})/(1 + R). Each variable's rows are
/// resampled independently; permutation draws without, bootstrap and
/// montecarlo (draws from the product of the empirical marginals) with
/// replacement.
pub fn resample_pvalue(data: &Dataset, spec: &TestSpec) -> Result<TestResult> {
    validate_spec(data.n_vars(), spec)?;
    if !spec.method.is_resampling() {
        return Err(Error::Config(format!("{} is not a resampling method", spec.method)));
    }
    let bs = data.distance_matrices()?;
    let observed = statistic_from_matrices(&bs, spec.kind)?;
    let n = data.n_samples();
    let with_replacement = spec.method != Method::Permutation;
    let stats = (0..spec.resamples)
        .into_par_iter()
        .map(|r| {
            let mut rng = replicate_rng(spec.rng_seed, r as u64);
            let resampled: Vec<DistanceMatrix> =
                bs.iter().map(|b| b.resampled(&resample_indices(&mut rng, n, with_replacement))).collect();
            statistic_from_matrices(&resampled, spec.kind)
        })
        .collect::<Result<Vec<f64>>>()?;
    let threshold = tie_threshold(observed);
    let count = stats.iter().filter(|s| **s >= threshold).count();
    let mut result = TestResult::new(observed, spec.method);
    result.p = (1 + count) as f64 / (1 + spec.resamples) as f64;
    result.parameters.insert("resamples".into(), spec.resamples as f64);
    if null_is_degenerate(&bs, spec.kind.family) {
        result.warnings.push("constant variables: the null distribution is a point mass".into());
    }
    Ok(result)
}

/// Statistics of M samples drawn under H₀, sorted ascending.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloBenchmark {
    statistics: Vec<f64>,
}

impl MonteCarloBenchmark {
    pub fn from_statistics(mut statistics: Vec<f64>) -> Result<Self> {
        if statistics.is_empty() {
            return Err(Error::Config("a benchmark needs at least one sample".into()));
        }
        statistics.sort_by(f64::total_cmp);
        Ok(Self { statistics })
    }

    pub fn statistics(&self) -> &[f64] {
        &self.statistics
    }

    pub fn len(&self) -> usize {
        self.statistics.len()
    }

    pub fn is_empty(&self) -> bool {
        self.statistics.is_empty()
    }

    /// (1 + #{T ≥ x})/(1 + M), with ties up to rounding counted.
    pub fn pvalue(&self, x: f64) -> f64 {
        let threshold = tie_threshold(x);
        let below = self.statistics.partition_point(|s| *s < threshold);
        (1 + self.statistics.len() - below) as f64 / (1 + self.statistics.len()) as f64
    }
}

/// Runs `m` H₀ draws of `generator` (replicate i uses stream i of the spec
/// seed) and records the statistic of `spec.kind`.
pub fn montecarlo_benchmark<G>(generator: G, spec: &TestSpec, m: usize) -> Result<MonteCarloBenchmark>
where
    G: Fn(&mut ChaCha8Rng) -> Result<Dataset> + Sync,
{
    if m == 0 {
        return Err(Error::Config("the Monte Carlo sample size must be positive".into()));
    }
    let stats = (0..m)
        .into_par_iter()
        .map(|i| {
            let mut rng = replicate_rng(spec.rng_seed, i as u64);
            let data = generator(&mut rng)?;
            statistic_from_matrices(&data.distance_matrices()?, spec.kind)
        })
        .collect::<Result<Vec<f64>>>()?;
    MonteCarloBenchmark::from_statistics(stats)
}
