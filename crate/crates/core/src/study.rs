//! Scenario generators and the comparative study: method p-values against a
//! Monte Carlo benchmark, relative MSE, conservativeness and rejection rates.

use std::fmt;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Exp, Normal, Poisson, StudentT};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::engine::{montecarlo_benchmark, replicate_rng, run_test, MonteCarloBenchmark, Method, TestSpec};
use crate::error::{Error, Result};
use crate::moments::{Bias, EstimatorConfig, Horizon};
use crate::psi::ObservationBlock;
use crate::statistics::{Dataset, Family, StatisticKind};

/// Faces of the tetrahedron die: red, green, blue, and the face with all
/// three colours.
pub const TETRAHEDRON_FACES: [[f64; 3]; 4] = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [1.0, 1.0, 1.0]];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Generator {
    Bernoulli,
    Uniform,
    Normal,
    StudentT { df: f64 },
    /// Exponential(1), normal, Bernoulli, uniform, Poisson(1), Binomial(10, ½).
    Mixed,
    /// Tetrahedron indicators plus r times standard normal noise.
    Tetrahedron { r: f64 },
    /// Two d-dimensional normal vectors, componentwise correlation `corr`.
    Srb1a { corr: f64 },
    /// X₁ = Y, X₂ = Y∘Z with Y, Z standard normal vectors.
    Srb2,
    /// X₁ = Y, X₂ = log(Y²) componentwise.
    Srb3,
    /// Consecutive pairs of normal variables with correlation `corr`.
    MvBlock { corr: f64 },
    /// Fair 0/1 coins in triples (a, b, a xor b): pairwise independent,
    /// dependent in each triple.
    Coins,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub id: String,
    pub generator: Generator,
    pub n_vars: usize,
    pub n_samples: usize,
    pub dim: usize,
    pub family: Family,
    /// Draw each variable from an independent copy (the H₀ counterpart).
    pub independent: bool,
}

impl Scenario {
    pub fn new(generator: Generator, n_vars: usize, n_samples: usize) -> Result<Self> {
        let family = match generator {
            Generator::MvBlock { .. } => Family::M(2),
            Generator::Coins => Family::M(3),
            _ => Family::Multivariance,
        };
        let dim = match generator {
            Generator::Srb1a { .. } | Generator::Srb2 | Generator::Srb3 => 5,
            _ => 1,
        };
        let s = Self { id: String::new(), generator, n_vars, n_samples, dim, family, independent: false };
        s.validated()
    }

    fn validated(mut self) -> Result<Self> {
        let fixed = match self.generator {
            Generator::Mixed => Some(6),
            Generator::Tetrahedron { .. } => Some(3),
            Generator::Srb1a { .. } | Generator::Srb2 | Generator::Srb3 => Some(2),
            _ => None,
        };
        if let Some(n) = fixed {
            if self.n_vars != n {
                return Err(Error::Config(format!("{} needs n = {n}", self.name())));
            }
        }
        if self.n_vars < 2 || self.n_samples < 2 || self.dim == 0 {
            return Err(Error::Config("scenarios need n >= 2, N >= 2 and d >= 1".into()));
        }
        match self.generator {
            Generator::Coins if !self.n_vars.is_multiple_of(3) => {
                return Err(Error::Config("coins needs n divisible by 3".into()))
            }
            Generator::MvBlock { .. } if !self.n_vars.is_multiple_of(2) => {
                return Err(Error::Config("mv_block needs an even n".into()))
            }
            Generator::StudentT { df } if !(df > 0.0) => {
                return Err(Error::Config("student_t needs df > 0".into()))
            }
            Generator::Tetrahedron { r } if !(r >= 0.0) => {
                return Err(Error::Config("tetrahedron needs r >= 0".into()))
            }
            Generator::Srb1a { corr } | Generator::MvBlock { corr } if !(corr.abs() < 1.0) => {
                return Err(Error::Config("correlation must lie in (-1, 1)".into()))
            }
            _ => {}
        }
        self.family.validate(self.n_vars).map_err(|e| Error::Config(e.to_string()))?;
        self.id = self.label();
        Ok(self)
    }

    fn name(&self) -> String {
        match self.generator {
            Generator::Bernoulli => "bernoulli".into(),
            Generator::Uniform => "uniform".into(),
            Generator::Normal => "normal".into(),
            Generator::StudentT { df } => format!("student_t({df})"),
            Generator::Mixed => "mixed".into(),
            Generator::Tetrahedron { r } => format!("tetrahedron({r})"),
            Generator::Srb1a { corr } => format!("srb1a({corr})"),
            Generator::Srb2 => "srb2".into(),
            Generator::Srb3 => "srb3".into(),
            Generator::MvBlock { corr } => format!("mv_block({corr})"),
            Generator::Coins => "coins".into(),
        }
    }

    fn label(&self) -> String {
        let mut s = format!("{},n={},N={}", self.name(), self.n_vars, self.n_samples);
        if self.dim != 1 {
            s.push_str(&format!(",d={}", self.dim));
        }
        s.push_str(&format!(",family={}", self.family.label()));
        if self.independent {
            s.push_str(",indep=1");
        }
        s
    }

    /// Parses `name[(param)][,key=value]*` with keys n, N, d, family
    /// (multivariance, total, m2, m3, ...) and indep (0/1), e.g.
    /// `tetrahedron(0.5),N=100` or `bernoulli,n=5,family=total`.
    pub fn parse(text: &str) -> Result<Self> {
        let mut parts = text.split(',').map(str::trim);
        let head = parts.next().unwrap_or_default();
        let (name, param) = match head.split_once('(') {
            Some((n, rest)) => {
                let inner = rest
                    .strip_suffix(')')
                    .ok_or_else(|| Error::Config(format!("unbalanced parentheses in `{head}`")))?;
                let v: f64 = inner
                    .trim()
                    .trim_start_matches("r=")
                    .trim_start_matches("corr=")
                    .trim_start_matches("df=")
                    .trim_start_matches("n=")
                    .parse()
                    .map_err(|_| Error::Config(format!("bad parameter in `{head}`")))?;
                (n.trim(), Some(v))
            }
            None => (head, None),
        };
        let mut n_vars = None;
        let mut n_samples = 100;
        let mut dim = None;
        let mut family = None;
        let mut independent = false;
        for kv in parts {
            let (k, v) = kv.split_once('=').ok_or_else(|| Error::Config(format!("expected key=value, got `{kv}`")))?;
            let int = || v.parse::<usize>().map_err(|_| Error::Config(format!("bad value for {k}: `{v}`")));
            match k {
                "n" => n_vars = Some(int()?),
                "N" => n_samples = int()?,
                "d" => dim = Some(int()?),
                "indep" => independent = int()? != 0,
                "family" => family = Some(parse_family(v)?),
                _ => return Err(Error::Config(format!("unknown scenario key `{k}`"))),
            }
        }
        let generator = match name {
            "bernoulli" => Generator::Bernoulli,
            "uniform" => Generator::Uniform,
            "normal" => Generator::Normal,
            "student_t" => Generator::StudentT { df: param.unwrap_or(1.0) },
            "mixed" => Generator::Mixed,
            "tetrahedron" => Generator::Tetrahedron { r: param.unwrap_or(0.5) },
            "srb1a" => Generator::Srb1a { corr: param.unwrap_or(0.1) },
            "srb2" => Generator::Srb2,
            "srb3" => Generator::Srb3,
            "mv_block" => Generator::MvBlock { corr: param.unwrap_or(0.3) },
            "coins" => Generator::Coins,
            _ => return Err(Error::Config(format!("unknown scenario `{name}`"))),
        };
        let default_n = match generator {
            Generator::Mixed => 6,
            Generator::Tetrahedron { .. } => 3,
            Generator::MvBlock { .. } => 4,
            Generator::Coins => param.map(|p| p as usize).unwrap_or(6),
            _ => 2,
        };
        let mut s = Scenario::new(generator, n_vars.unwrap_or(default_n), n_samples)?;
        if let Some(d) = dim {
            s.dim = d;
        }
        if let Some(f) = family {
            s.family = f;
        }
        s.independent = independent;
        s.validated()
    }

    /// Whether the variables are independent.
    pub fn h0(&self) -> bool {
        self.independent
            || match self.generator {
                Generator::Bernoulli
                | Generator::Uniform
                | Generator::Normal
                | Generator::StudentT { .. }
                | Generator::Mixed => true,
                Generator::Srb1a { corr } | Generator::MvBlock { corr } => corr == 0.0,
                Generator::Tetrahedron { .. } => self.family == Family::M(2),
                Generator::Coins => self.family == Family::M(2),
                Generator::Srb2 | Generator::Srb3 => false,
            }
    }

    /// Marginals without a finite first moment break the theory.
    pub fn assumption_violating(&self) -> bool {
        matches!(self.generator, Generator::StudentT { df } if df <= 1.0)
    }

    pub fn kind(&self, normalized: bool) -> StatisticKind {
        StatisticKind { family: self.family, normalized }
    }

    /// The same scenario with every variable drawn from an independent copy.
    pub fn null_counterpart(&self) -> Self {
        let mut s = self.clone();
        s.independent = true;
        s.id = s.label();
        s
    }

    /// One draw of the scenario.
    pub fn generate(&self, rng: &mut ChaCha8Rng) -> Result<Dataset> {
        let columns = if self.independent {
            (0..self.n_vars).map(|i| self.draw(rng).map(|mut v| v.swap_remove(i))).collect::<Result<Vec<_>>>()?
        } else {
            self.draw(rng)?
        };
        let blocks = columns
            .into_iter()
            .map(|v| ObservationBlock::new(v, self.dim))
            .collect::<Result<Vec<_>>>()?;
        Dataset::with_beta(blocks, 1.0)
    }

    /// Row-major values of every variable.
    fn draw(&self, rng: &mut ChaCha8Rng) -> Result<Vec<Vec<f64>>> {
        let (n, big_n, d) = (self.n_vars, self.n_samples, self.dim);
        let len = big_n * d;
        let std = Normal::new(0.0, 1.0).expect("valid");
        let iid = |rng: &mut ChaCha8Rng, f: &dyn Fn(&mut ChaCha8Rng) -> f64| -> Vec<Vec<f64>> {
            (0..n).map(|_| (0..len).map(|_| f(rng)).collect()).collect()
        };
        let out = match self.generator {
            Generator::Bernoulli => iid(rng, &|r| f64::from(u8::from(r.random::<bool>()))),
            Generator::Uniform => iid(rng, &|r| r.random::<f64>()),
            Generator::Normal => iid(rng, &|r| std.sample(r)),
            Generator::StudentT { df } => {
                let t = StudentT::new(df).map_err(|e| Error::Config(e.to_string()))?;
                iid(rng, &|r| t.sample(r))
            }
            Generator::Mixed => {
                let exp = Exp::new(1.0).expect("valid");
                let pois = Poisson::new(1.0).expect("valid");
                let bin = Binomial::new(10, 0.5).expect("valid");
                let mut cols = vec![Vec::new(); 6];
                for _ in 0..len {
                    cols[0].push(exp.sample(rng));
                    cols[1].push(std.sample(rng));
                    cols[2].push(f64::from(u8::from(rng.random::<bool>())));
                    cols[3].push(rng.random::<f64>());
                    cols[4].push(pois.sample(rng));
                    cols[5].push(bin.sample(rng) as f64);
                }
                cols
            }
            Generator::Tetrahedron { r } => {
                let mut cols = vec![Vec::new(); 3];
                for _ in 0..len {
                    let face = TETRAHEDRON_FACES[rng.random_range(0..4)];
                    for (c, y) in cols.iter_mut().zip(face) {
                        let z: f64 = std.sample(rng);
                        c.push(y + r * z);
                    }
                }
                cols
            }
            Generator::Srb1a { corr } => {
                let s = (1.0 - corr * corr).sqrt();
                let mut cols = vec![Vec::new(); 2];
                for _ in 0..len {
                    let (a, b): (f64, f64) = (std.sample(rng), std.sample(rng));
                    cols[0].push(a);
                    cols[1].push(corr * a + s * b);
                }
                cols
            }
            Generator::Srb2 | Generator::Srb3 => {
                let mut cols = vec![Vec::new(); 2];
                for _ in 0..len {
                    let y: f64 = std.sample(rng);
                    cols[0].push(y);
                    if self.generator == Generator::Srb2 {
                        let z: f64 = std.sample(rng);
                        cols[1].push(y * z);
                    } else {
                        cols[1].push((y * y).ln());
                    }
                }
                cols
            }
            Generator::MvBlock { corr } => {
                let s = (1.0 - corr * corr).sqrt();
                let mut cols = vec![Vec::with_capacity(len); n];
                for _ in 0..len {
                    for pair in 0..n / 2 {
                        let (a, b): (f64, f64) = (std.sample(rng), std.sample(rng));
                        cols[2 * pair].push(a);
                        cols[2 * pair + 1].push(corr * a + s * b);
                    }
                }
                cols
            }
            Generator::Coins => {
                let mut cols = vec![Vec::with_capacity(len); n];
                for _ in 0..len {
                    for t in 0..n / 3 {
                        let (a, b) = (rng.random::<bool>(), rng.random::<bool>());
                        cols[3 * t].push(f64::from(u8::from(a)));
                        cols[3 * t + 1].push(f64::from(u8::from(b)));
                        cols[3 * t + 2].push(f64::from(u8::from(a ^ b)));
                    }
                }
                cols
            }
        };
        Ok(out)
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.id)
    }
}

pub fn parse_family(text: &str) -> Result<Family> {
    match text {
        "multivariance" => Ok(Family::Multivariance),
        "total" => Ok(Family::Total),
        _ => text
            .strip_prefix('m')
            .and_then(|m| m.parse::<usize>().ok())
            .filter(|m| *m >= 2)
            .map(Family::M)
            .ok_or_else(|| Error::Config(format!("unknown statistic family `{text}`"))),
    }
}

/// A p-value method together with its estimator settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StudyMethod {
    pub method: Method,
    pub estimator: EstimatorConfig,
    pub normalized: bool,
    pub resamples: usize,
}

impl StudyMethod {
    pub fn new(method: Method) -> Self {
        Self { method, estimator: EstimatorConfig::default(), normalized: true, resamples: 199 }
    }

    /// `method[:biased|unbiased][:limit|finite][:raw|normalized]`.
    pub fn parse(text: &str) -> Result<Self> {
        let mut parts = text.split(':');
        let mut m = Self::new(parts.next().unwrap_or_default().parse()?);
        for p in parts {
            match p {
                "biased" => m.estimator.bias = Bias::Biased,
                "unbiased" => m.estimator.bias = Bias::Unbiased,
                "limit" => m.estimator.horizon = Horizon::Limit,
                "finite" => m.estimator.horizon = Horizon::FiniteSample,
                "raw" => m.normalized = false,
                "normalized" => m.normalized = true,
                _ => return Err(Error::Config(format!("unknown method option `{p}`"))),
            }
        }
        Ok(m)
    }

    pub fn label(&self) -> String {
        let mut s = self.method.label().to_string();
        if !self.method.is_resampling() && self.method != Method::Eigenvalue {
            s.push_str(match self.estimator.bias {
                Bias::Biased => ":biased",
                Bias::Unbiased => ":unbiased",
            });
            s.push_str(match self.estimator.horizon {
                Horizon::Limit => ":limit",
                Horizon::FiniteSample => ":finite",
            });
        }
        s.push_str(if self.normalized { ":normalized" } else { ":raw" });
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StudyConfig {
    pub reps: usize,
    pub benchmark_samples: usize,
    pub seed: u64,
    pub level: f64,
}

impl Default for StudyConfig {
    fn default() -> Self {
        Self { reps: 500, benchmark_samples: 2000, seed: 0, level: 0.05 }
    }
}

/// Skip rule: both p-values above this are not compared.
pub const SKIP_ABOVE: f64 = 0.21;
/// Zero rule: both p-values below this count as equal.
pub const ZERO_BELOW: f64 = 0.001;
/// A cell is flagged liberal when more than this share of p-values exceeds
/// the benchmark by more than the margin.
pub const LIBERAL_SHARE: f64 = 0.3;

/// Mean squared relative error of p against the benchmark b, each term
/// capped at 1, with the skip and zero rules applied.
pub fn relative_mse(p: &[f64], bench: &[f64]) -> f64 {
    let errs: Vec<f64> = p
        .iter()
        .zip(bench)
        .filter(|(p, b)| !(**p > SKIP_ABOVE && **b > SKIP_ABOVE))
        .map(|(p, b)| {
            if *p < ZERO_BELOW && *b < ZERO_BELOW {
                0.0
            } else {
                ((p - b) / b).powi(2).min(1.0)
            }
        })
        .collect();
    if errs.is_empty() {
        0.0
    } else {
        errs.iter().sum::<f64>() / errs.len() as f64
    }
}

/// Share of p-values below b - min(0.05, b/2), i.e. too small to be conservative.
pub fn violation_rate(p: &[f64], bench: &[f64]) -> f64 {
    if p.is_empty() {
        return 0.0;
    }
    let n = p.iter().zip(bench).filter(|(p, b)| **p < **b - (0.05f64).min(0.5 * **b)).count();
    n as f64 / p.len() as f64
}

pub fn rejection_rate(p: &[f64], level: f64) -> f64 {
    if p.is_empty() {
        return 0.0;
    }
    p.iter().filter(|v| **v < level).count() as f64 / p.len() as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyRow {
    pub scenario: String,
    pub method: String,
    pub metric: String,
    pub value: f64,
}

/// Per-cell p-values kept alongside the long-format table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyCell {
    pub scenario: String,
    pub method: String,
    pub h0: bool,
    pub assumption_violating: bool,
    pub pvalues: Vec<f64>,
    pub benchmark: Vec<f64>,
    pub relative_mse: f64,
    pub violation_rate: f64,
    pub liberal: bool,
    pub rejection_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyMetrics {
    pub cells: Vec<StudyCell>,
}

impl StudyMetrics {
    /// Long format: scenario, method, metric, value. The benchmark's own
    /// rejection rate appears under method `benchmark:<normalized|raw>`.
    pub fn rows(&self) -> Vec<StudyRow> {
        let mut rows = Vec::new();
        let mut seen = std::collections::BTreeSet::new();
        for c in &self.cells {
            let row = |metric: &str, value: f64| StudyRow {
                scenario: c.scenario.clone(),
                method: c.method.clone(),
                metric: metric.into(),
                value,
            };
            rows.push(row("relative_mse", c.relative_mse));
            rows.push(row("violation_rate", c.violation_rate));
            rows.push(row("liberal", f64::from(u8::from(c.liberal))));
            rows.push(row(if c.h0 { "size" } else { "power" }, c.rejection_rate));
            let tag = if c.method.ends_with(":raw") { "benchmark:raw" } else { "benchmark:normalized" };
            if seen.insert((c.scenario.clone(), tag)) {
                rows.push(StudyRow {
                    scenario: c.scenario.clone(),
                    method: tag.into(),
                    metric: (if c.h0 { "size" } else { "power" }).into(),
                    value: rejection_rate(&c.benchmark, 0.05),
                });
            }
        }
        rows
    }

    /// Cells flagged liberal, excluding assumption-violating scenarios.
    pub fn liberal_cells(&self) -> Vec<&StudyCell> {
        self.cells.iter().filter(|c| c.liberal && !c.assumption_violating).collect()
    }
}

/// RNG stream layout: replicate data, benchmark draws and per-replicate
/// resampling seeds never share a stream.
fn data_rng(seed: u64, scenario: usize, rep: usize) -> ChaCha8Rng {
    replicate_rng(seed, ((scenario as u64) << 32) | rep as u64)
}

fn benchmark_seed(seed: u64, scenario: usize, normalized: bool) -> u64 {
    seed ^ (0x9E37_79B9_7F4A_7C15u64.wrapping_mul(2 * scenario as u64 + 1 + u64::from(normalized)))
}

pub fn run_study(scenarios: &[Scenario], methods: &[StudyMethod], config: &StudyConfig) -> Result<StudyMetrics> {
    if methods.is_empty() {
        return Err(Error::Config("the study needs at least one method".into()));
    }
    if scenarios.is_empty() {
        return Err(Error::Config("the study needs at least one scenario".into()));
    }
    if config.reps == 0 {
        return Err(Error::Config("the study needs at least one replicate".into()));
    }
    let mut cells = Vec::new();
    for (si, scenario) in scenarios.iter().enumerate() {
        let null = scenario.null_counterpart();
        let mut benches: [Option<MonteCarloBenchmark>; 2] = [None, None];
        for m in methods {
            let slot = usize::from(m.normalized);
            if benches[slot].is_none() {
                let spec = TestSpec {
                    kind: scenario.kind(m.normalized),
                    rng_seed: benchmark_seed(config.seed, si, m.normalized),
                    ..TestSpec::default()
                };
                benches[slot] = Some(montecarlo_benchmark(|rng| null.generate(rng), &spec, config.benchmark_samples)?);
            }
        }
        // Each replicate: one dataset, every method on it.
        let per_rep: Vec<Vec<(f64, f64)>> = (0..config.reps)
            .into_par_iter()
            .map(|rep| {
                let data = scenario.generate(&mut data_rng(config.seed, si, rep))?;
                methods
                    .iter()
                    .map(|m| {
                        let spec = TestSpec {
                            kind: scenario.kind(m.normalized),
                            method: m.method,
                            estimator: m.estimator,
                            resamples: m.resamples,
                            rng_seed: config.seed.wrapping_add(rep as u64 + 1),
                        };
                        let r = run_test(&data, &spec)?;
                        let bench = benches[usize::from(m.normalized)].as_ref().expect("built above");
                        Ok((r.p, bench.pvalue(r.statistic)))
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        for (mi, m) in methods.iter().enumerate() {
            let p: Vec<f64> = per_rep.iter().map(|r| r[mi].0).collect();
            let b: Vec<f64> = per_rep.iter().map(|r| r[mi].1).collect();
            let v = violation_rate(&p, &b);
            cells.push(StudyCell {
                scenario: scenario.id.clone(),
                method: m.label(),
                h0: scenario.h0(),
                assumption_violating: scenario.assumption_violating(),
                relative_mse: relative_mse(&p, &b),
                violation_rate: v,
                liberal: v > LIBERAL_SHARE,
                rejection_rate: rejection_rate(&p, config.level),
                pvalues: p,
                benchmark: b,
            });
        }
    }
    Ok(StudyMetrics { cells })
}

#[cfg(test)]
mod tests;
