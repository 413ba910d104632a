//! Covariance kernels built from characteristic functions, Nyström
//! eigenvalues, quadrature of the moment sums μ⁽ᵏ⁾ = Σ αᵏ and products of
//! marginal spectra.

pub mod quadrature;

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashSet};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::psi::{ObservationBlock, PsiFunction};
pub use quadrature::{
    gauss_hermite_normal, gauss_laguerre_exponential, gauss_legendre, levy_constant, levy_rule,
    QuadratureRule,
};

/// Univariate distributions with closed-form characteristic functions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum Distribution {
    /// Values 0 and 1, P(1) = p.
    Bernoulli { p: f64 },
    Uniform { low: f64, high: f64 },
    Normal { mean: f64, sd: f64 },
    Exponential { rate: f64 },
}

impl Distribution {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            Distribution::Bernoulli { p } => (0.0..=1.0).contains(&p),
            Distribution::Uniform { low, high } => low < high && low.is_finite() && high.is_finite(),
            Distribution::Normal { mean, sd } => mean.is_finite() && sd > 0.0 && sd.is_finite(),
            Distribution::Exponential { rate } => rate > 0.0 && rate.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Domain(format!("invalid distribution parameters: {self:?}")))
        }
    }

    pub fn cf(&self, t: f64) -> Complex64 {
        let i = Complex64::i();
        match *self {
            Distribution::Bernoulli { p } => (1.0 - p) + p * (i * t).exp(),
            Distribution::Uniform { low, high } => {
                // e^{it(a+b)/2} sin(h)/h with h = t(b−a)/2, free of cancellation
                let h = 0.5 * t * (high - low);
                let sinc = if h == 0.0 { 1.0 } else { h.sin() / h };
                (i * t * 0.5 * (low + high)).exp() * sinc
            }
            Distribution::Normal { mean, sd } => (i * t * mean - 0.5 * sd * sd * t * t).exp(),
            Distribution::Exponential { rate } => rate / (rate - i * t),
        }
    }

    /// Rule for E g(X) adapted to the distribution. Exact for Bernoulli.
    pub fn expectation_rule(&self, n: usize) -> QuadratureRule {
        match *self {
            Distribution::Bernoulli { p } => QuadratureRule { nodes: vec![vec![0.0], vec![1.0]], weights: vec![1.0 - p, p] },
            Distribution::Uniform { low, high } => {
                let mut r = gauss_legendre(n, low, high);
                r.weights.iter_mut().for_each(|w| *w /= high - low);
                r
            }
            Distribution::Normal { mean, sd } => quantile_rule(n, |u| {
                mean + sd * statrs::distribution::ContinuousCDF::inverse_cdf(&statrs::distribution::Normal::standard(), u)
            }),
            Distribution::Exponential { rate } => quantile_rule(n, |u| -(-u).ln_1p() / rate),
        }
    }

    /// Published (μ⁽¹⁾, μ⁽²⁾, μ⁽³⁾) for ψ = |·| and the standard parameters.
    pub fn golden_moments(&self) -> Option<[f64; 3]> {
        let pi = std::f64::consts::PI;
        match *self {
            Distribution::Bernoulli { p: 0.5 } => Some([0.5, 0.25, 0.125]),
            Distribution::Uniform { low, high } if low == 0.0 && high == 1.0 => {
                Some([1.0 / 3.0, 2.0 / 45.0, 8.0 / 945.0])
            }
            Distribution::Normal { mean, sd } if mean == 0.0 && sd == 1.0 => Some([
                2.0 / pi.sqrt(),
                (4.0 * pi + 12.0 * (1.0 - 3f64.sqrt())) / (3.0 * pi),
                (8.0 * (1.0 - pi) + 12.0 * (2f64.sqrt() - 3f64.sqrt()) + 18.0 * 8f64.sqrt().atan())
                    / (pi * pi.sqrt()),
            ]),
            Distribution::Exponential { rate: 1.0 } => Some([1.0, 1.0 / 3.0, 1.0 / 6.0]),
            _ => None,
        }
    }
}

/// Gauss–Legendre on (0, 1) pushed through a quantile function.
fn quantile_rule(n: usize, quantile: impl Fn(f64) -> f64) -> QuadratureRule {
    let base = gauss_legendre(n, 0.0, 1.0);
    QuadratureRule { nodes: base.nodes.iter().map(|u| vec![quantile(u[0])]).collect(), weights: base.weights }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CfSource {
    Empirical(ObservationBlock),
    Known(Distribution),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CharFunction {
    pub source: CfSource,
}

impl CharFunction {
    pub fn empirical(block: ObservationBlock) -> Self {
        Self { source: CfSource::Empirical(block) }
    }

    pub fn known(dist: Distribution) -> Result<Self> {
        dist.validate()?;
        Ok(Self { source: CfSource::Known(dist) })
    }

    pub fn dim(&self) -> usize {
        match &self.source {
            CfSource::Empirical(b) => b.dim(),
            CfSource::Known(_) => 1,
        }
    }

    pub fn eval(&self, t: &[f64]) -> Result<Complex64> {
        match &self.source {
            CfSource::Empirical(b) => empirical_cf(b, t),
            CfSource::Known(d) => {
                if t.len() != 1 {
                    return Err(Error::Shape(format!("expected a 1-dimensional argument, got {}", t.len())));
                }
                Ok(d.cf(t[0]))
            }
        }
    }
}

/// (1/N) Σ_l exp(i x⁽ˡ⁾·t).
pub fn empirical_cf(block: &ObservationBlock, t: &[f64]) -> Result<Complex64> {
    if t.len() != block.dim() {
        return Err(Error::Shape(format!("argument has dimension {}, sample has {}", t.len(), block.dim())));
    }
    let n = block.n_samples();
    let sum: Complex64 = (0..n)
        .map(|l| {
            let phase: f64 = block.row(l).iter().zip(t).map(|(x, s)| x * s).sum();
            Complex64::from_polar(1.0, phase)
        })
        .sum();
    Ok(sum / n as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CovKernel {
    pub cf: CharFunction,
}

impl CovKernel {
    pub fn new(cf: CharFunction) -> Self {
        Self { cf }
    }
}

/// K(s, t) = f(s − t) − f(s) f(−t).
pub fn cov_kernel_eval(kernel: &CovKernel, s: &[f64], t: &[f64]) -> Result<Complex64> {
    if s.len() != t.len() {
        return Err(Error::Shape("kernel arguments differ in dimension".into()));
    }
    let diff: Vec<f64> = s.iter().zip(t).map(|(a, b)| a - b).collect();
    let fs = kernel.cf.eval(s)?;
    let ft = kernel.cf.eval(t)?;
    Ok(kernel.cf.eval(&diff)? - fs * ft.conj())
}

/// The hermitian matrix √wⱼ K(tⱼ, tₖ) √wₖ.
pub fn nystrom_matrix(kernel: &CovKernel, rule: &QuadratureRule) -> Result<DMatrix<Complex64>> {
    let n = rule.len();
    if n == 0 {
        return Err(Error::Shape("empty quadrature rule".into()));
    }
    if rule.nodes.iter().any(|t| t.len() != kernel.cf.dim()) {
        return Err(Error::Shape("quadrature nodes do not match the kernel dimension".into()));
    }
    let f: Vec<Complex64> = rule.nodes.iter().map(|t| kernel.cf.eval(t)).collect::<Result<_>>()?;
    let sw: Vec<f64> = rule.weights.iter().map(|w| w.sqrt()).collect();
    let rows: Vec<Vec<Complex64>> = (0..n)
        .into_par_iter()
        .map(|j| {
            (0..n)
                .map(|k| {
                    if k < j {
                        return Complex64::new(0.0, 0.0);
                    }
                    let diff: Vec<f64> = rule.nodes[j].iter().zip(&rule.nodes[k]).map(|(a, b)| a - b).collect();
                    let fd = kernel.cf.eval(&diff).expect("dimension checked");
                    sw[j] * sw[k] * (fd - f[j] * f[k].conj())
                })
                .collect()
        })
        .collect();
    Ok(DMatrix::from_fn(n, n, |j, k| if k >= j { rows[j][k] } else { rows[k][j].conj() }))
}

/// Eigenvalues of a hermitian matrix, descending, without clipping.
pub fn hermitian_eigenvalues(m: DMatrix<Complex64>) -> Result<Vec<f64>> {
    if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Numeric("non-finite kernel matrix".into()));
    }
    let mut ev: Vec<f64> = SymmetricEigen::new(m).eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| b.total_cmp(a));
    Ok(ev)
}

/// Leading `count` Nyström eigenvalues, descending, rounding negatives
/// clipped to zero.
pub fn nystrom_eigenvalues(kernel: &CovKernel, rule: &QuadratureRule, count: usize) -> Result<Vec<f64>> {
    if count > rule.len() {
        return Err(Error::Domain(format!("requested {count} eigenvalues from a {}-node rule", rule.len())));
    }
    let ev = hermitian_eigenvalues(nystrom_matrix(kernel, rule)?)?;
    Ok(ev.into_iter().take(count).map(|v| v.max(0.0)).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MomentMode {
    /// Iterated integrals of the covariance kernel against the Lévy measure.
    KernelIntegral,
    /// Expectations of ψ-products under the sampling distribution.
    Expectation,
}

fn check_k(k: usize) -> Result<()> {
    if (1..=4).contains(&k) {
        Ok(())
    } else {
        Err(Error::Domain(format!("moment order must be in 1..=4, got {k}")))
    }
}

/// μ⁽ᵏ⁾ = ∫…∫ K(t₁,t₂)K(t₂,t₃)…K(t_k,t₁) ρ(dt₁)…ρ(dt_k), i.e. tr(Mᵏ) of the
/// Nyström matrix of the same rule.
pub fn kernel_integral_moment(kernel: &CovKernel, rule: &QuadratureRule, k: usize) -> Result<f64> {
    check_k(k)?;
    if k == 1 {
        let mut sum = 0.0;
        for (t, w) in rule.nodes.iter().zip(&rule.weights) {
            sum += w * cov_kernel_eval(kernel, t, t)?.re;
        }
        return Ok(sum);
    }
    let m = nystrom_matrix(kernel, rule)?;
    let m2 = &m * &m;
    let tr = match k {
        2 => m.iter().map(|z| z.norm_sqr()).sum::<f64>(),
        3 => m2.iter().zip(m.transpose().iter()).map(|(a, b)| (a * b).re).sum::<f64>(),
        _ => m2.iter().map(|z| z.norm_sqr()).sum::<f64>(),
    };
    Ok(tr)
}

/// μ⁽¹⁾..μ⁽⁴⁾ for the discrete law Σ pⱼ δ_{xⱼ} (the rule), from the
/// expectation representation: μ⁽¹⁾ = m, μ⁽²⁾ = b − 2c + m²,
/// μ⁽³⁾ = −e + 3f − 3cm + m³ and the analogous fourth-order expansion.
pub fn expectation_moments(psi: &PsiFunction, rule: &QuadratureRule) -> Result<[f64; 4]> {
    let n = rule.len();
    let mut p = DMatrix::zeros(n, n);
    for j in 0..n {
        for k in (j + 1)..n {
            let d: Vec<f64> = rule.nodes[j].iter().zip(&rule.nodes[k]).map(|(a, b)| a - b).collect();
            let v = psi.eval(&d)?;
            p[(j, k)] = v;
            p[(k, j)] = v;
        }
    }
    let w = DVector::from_column_slice(&rule.weights);
    let sw = w.map(f64::sqrt);
    // Q = W^{1/2} P W^{1/2}
    let q = DMatrix::from_fn(n, n, |j, k| sw[j] * p[(j, k)] * sw[k]);
    let s = &p * &w;
    let ws = w.component_mul(&s);
    let q2 = &q * &q;

    let m = w.dot(&s);
    let b = q.iter().map(|x| x * x).sum::<f64>();
    let c = w.dot(&s.component_mul(&s));
    let e = q2.iter().zip(q.iter()).map(|(a, b)| a * b).sum::<f64>();
    let f = ws.dot(&(&p * &ws));
    let cyc4 = q2.iter().map(|x| x * x).sum::<f64>();
    let pws = &p * &ws;
    let path4 = w.dot(&pws.component_mul(&pws));
    Ok([
        m,
        b - 2.0 * c + m * m,
        -e + 3.0 * f - 3.0 * c * m + m.powi(3),
        cyc4 - 4.0 * path4 + 4.0 * f * m + 2.0 * c * c - 4.0 * c * m * m + m.powi(4),
    ])
}

/// Default node count for the quadratures.
pub const DEFAULT_NODES: usize = 100;
/// Node count for expectation mode on continuous laws.
pub const EXPECTATION_NODES: usize = 400;

/// μ⁽ᵏ⁾ of a known marginal under ψ = |·|^β with the default rules.
pub fn kernel_moment_quadrature(dist: &Distribution, beta: f64, k: usize, mode: MomentMode) -> Result<f64> {
    check_k(k)?;
    dist.validate()?;
    match mode {
        MomentMode::KernelIntegral => {
            let kernel = CovKernel::new(CharFunction::known(*dist)?);
            kernel_integral_moment(&kernel, &levy_rule(DEFAULT_NODES, beta)?, k)
        }
        MomentMode::Expectation => {
            let psi = PsiFunction::euclidean_power(beta)?;
            Ok(expectation_moments(&psi, &dist.expectation_rule(EXPECTATION_NODES))?[k - 1])
        }
    }
}

#[derive(PartialEq)]
struct Candidate {
    value: f64,
    index: Vec<usize>,
}

impl Eq for Candidate {}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.value.total_cmp(&other.value).then_with(|| other.index.cmp(&self.index))
    }
}

/// The `cap` largest products Π αᵢ⁽ʲⁱ⁾ over multi-indices, descending.
pub fn product_eigenvalues(per_variable: &[Vec<f64>], cap: usize) -> Vec<f64> {
    if per_variable.is_empty() || per_variable.iter().any(Vec::is_empty) || cap == 0 {
        return Vec::new();
    }
    let sorted: Vec<Vec<f64>> = per_variable
        .iter()
        .map(|v| {
            let mut v: Vec<f64> = v.iter().map(|x| x.max(0.0)).collect();
            v.sort_by(|a, b| b.total_cmp(a));
            v
        })
        .collect();
    let value = |idx: &[usize]| idx.iter().zip(&sorted).map(|(&j, v)| v[j]).product::<f64>();

    let start = vec![0; sorted.len()];
    let mut heap = BinaryHeap::new();
    let mut seen = HashSet::new();
    heap.push(Candidate { value: value(&start), index: start.clone() });
    seen.insert(start);
    let mut out = Vec::with_capacity(cap.min(1 << 16));
    while let Some(Candidate { value: v, index }) = heap.pop() {
        out.push(v);
        if out.len() == cap {
            break;
        }
        for i in 0..index.len() {
            if index[i] + 1 < sorted[i].len() {
                let mut next = index.clone();
                next[i] += 1;
                if seen.insert(next.clone()) {
                    heap.push(Candidate { value: value(&next), index: next });
                }
            }
        }
    }
    out
}
