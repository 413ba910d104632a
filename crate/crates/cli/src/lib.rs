//! Command-line surface for the multidep toolkit: CSV ingestion, variable
//! grouping, tests, moment inspection, quadratic-form tail queries and the
//! comparative study.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod input;

use std::collections::BTreeMap;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use multidep_core::engine::{run_test, Method, TestSpec};
use multidep_core::moments::{marginal_moments, null_moments, Bias, EstimatorConfig, Horizon, MarginalMoments};
use multidep_core::psi::{matrix_statistics, ObservationBlock, PsiFunction};
use multidep_core::qform::{
    pvalue_classical, pvalue_clt, pvalue_pearson, pvalue_variance, qform_exact_tail, qform_moments,
    AlphaSpectrum, PValueResult,
};
use multidep_core::statistics::{Dataset, StatisticKind};
use multidep_core::study::{parse_family, run_study, Scenario, StudyConfig, StudyMethod};

pub use error::{CliError, CliResult};
pub use input::{parse_variable_spec, read_table, Table, VariableSpec};

/// Environment variable that overrides `--threads`.
pub const THREADS_ENV: &str = "MULTIDEP_THREADS";

#[derive(Debug, Parser)]
#[command(name = "multidep", version, about = "Distance multivariance independence tests")]
pub struct Cli {
    /// Worker threads (default: available cores; MULTIDEP_THREADS overrides).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Test the variables of a CSV file for independence.
    Test(TestArgs),
    /// Print the estimated marginal parameters and null moments.
    Moments(MomentsArgs),
    /// Tail probabilities of a Gaussian quadratic form.
    Qform(QformArgs),
    /// Run the comparative study and emit long-format CSV.
    Study(StudyArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Human,
}

#[derive(Debug, Clone, Args)]
pub struct DataArgs {
    /// Comma-separated numeric file; a non-numeric first line is a header.
    pub input: PathBuf,
    /// Column groups, e.g. "1-5,6-10" (default: one variable per column).
    #[arg(long)]
    pub vars: Option<String>,
    /// Exponent β of ψ(x) = |x|^β, one value or one per variable.
    #[arg(long, default_value = "1", value_delimiter = ',')]
    pub beta: Vec<f64>,
    /// Statistic family: multivariance, total, m2, m3, ...
    #[arg(long, default_value = "multivariance")]
    pub family: String,
    #[arg(long, overrides_with = "normalized")]
    pub raw: bool,
    #[arg(long, overrides_with = "raw")]
    pub normalized: bool,
    #[arg(long, overrides_with = "unbiased")]
    pub biased: bool,
    #[arg(long, overrides_with = "biased")]
    pub unbiased: bool,
    #[arg(long, overrides_with = "finite_sample")]
    pub limit: bool,
    #[arg(long, overrides_with = "limit")]
    pub finite_sample: bool,
}

impl DataArgs {
    fn kind(&self) -> CliResult<StatisticKind> {
        let family = parse_family(&self.family)?;
        Ok(StatisticKind { family, normalized: !self.raw })
    }

    fn estimator(&self) -> EstimatorConfig {
        EstimatorConfig {
            bias: if self.biased { Bias::Biased } else { Bias::Unbiased },
            horizon: if self.limit { Horizon::Limit } else { Horizon::FiniteSample },
        }
    }

    /// Reads the file and assembles the variables.
    pub fn dataset(&self) -> CliResult<(Dataset, Vec<f64>)> {
        let spec = match &self.vars {
            Some(text) => Some(parse_variable_spec(text)?),
            None => None,
        };
        let table = read_table(&self.input)?;
        let spec = spec.unwrap_or_else(|| VariableSpec::per_column(table.n_columns()));
        spec.check_bounds(table.n_columns())?;
        if spec.groups.len() < 2 {
            return Err(CliError::Config("at least two variables are needed".into()));
        }
        let betas = match self.beta.len() {
            1 => vec![self.beta[0]; spec.groups.len()],
            k if k == spec.groups.len() => self.beta.clone(),
            k => {
                return Err(CliError::Config(format!(
                    "{k} beta values given for {} variables",
                    spec.groups.len()
                )))
            }
        };
        let psis = betas.iter().map(|b| PsiFunction::euclidean_power(*b)).collect::<Result<Vec<_>, _>>()?;
        let blocks = spec
            .groups
            .iter()
            .map(|g| ObservationBlock::new(table.block_values(g), g.len()))
            .collect::<Result<Vec<_>, _>>()?;
        Ok((Dataset::new(blocks, psis)?, betas))
    }
}

#[derive(Debug, Clone, Args)]
pub struct TestArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// classical, variance, pearson, clt, eigenvalue, permutation, bootstrap, montecarlo
    #[arg(long, default_value = "pearson")]
    pub method: String,
    #[arg(long, default_value_t = 999)]
    pub resamples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
}

#[derive(Debug, Clone, Args)]
pub struct MomentsArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
}

#[derive(Debug, Clone, Args)]
pub struct QformArgs {
    /// Point(s) x at which P(Q ≥ x) is evaluated.
    #[arg(long, required = true, value_delimiter = ',')]
    pub x: Vec<f64>,
    /// Explicit coefficients α of Q = Σ αᵢ Zᵢ².
    #[arg(long, value_delimiter = ',', conflicts_with_all = ["mean", "variance", "skewness"])]
    pub alphas: Option<Vec<f64>>,
    #[arg(long, required_unless_present = "alphas")]
    pub mean: Option<f64>,
    #[arg(long)]
    pub variance: Option<f64>,
    #[arg(long)]
    pub skewness: Option<f64>,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
}

#[derive(Debug, Clone, Args)]
pub struct StudyArgs {
    /// Scenario, e.g. "tetrahedron(0.5),N=100" (repeatable).
    #[arg(long = "scenario", required = true)]
    pub scenarios: Vec<String>,
    /// Method with options, e.g. "pearson:unbiased:finite:normalized" (repeatable).
    #[arg(long = "method", default_values_t = ["pearson".to_string(), "variance".to_string(), "classical".to_string()])]
    pub methods: Vec<String>,
    #[arg(long, default_value_t = 500)]
    pub reps: usize,
    #[arg(long, default_value_t = 2000)]
    pub benchmark: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.05)]
    pub level: f64,
    /// Write the CSV here instead of stdout.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KindReport {
    pub family: String,
    pub normalized: bool,
}

/// The JSON report of `multidep test` (see docs/schema.md).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    pub statistic: f64,
    pub p_value: f64,
    pub valid: bool,
    pub method: String,
    pub parameters: BTreeMap<String, f64>,
    pub warnings: Vec<String>,
    pub n: usize,
    #[serde(rename = "N")]
    pub n_samples: usize,
    pub kind: KindReport,
    pub estimator: EstimatorConfig,
    pub beta: Vec<f64>,
    pub seed: u64,
}

pub fn cmd_test(args: &TestArgs) -> CliResult<TestReport> {
    let method: Method = args.method.parse()?;
    let kind = args.data.kind()?;
    let (data, beta) = args.data.dataset()?;
    let spec = TestSpec {
        kind,
        method,
        estimator: args.data.estimator(),
        resamples: args.resamples,
        rng_seed: args.seed,
    };
    let r = run_test(&data, &spec)?;
    Ok(TestReport {
        statistic: r.statistic,
        p_value: r.p,
        valid: r.valid,
        method: r.method,
        parameters: r.parameters.into_iter().filter(|(_, v)| v.is_finite()).collect(),
        warnings: r.warnings,
        n: data.n_vars(),
        n_samples: data.n_samples(),
        kind: KindReport { family: kind.family.label(), normalized: kind.normalized },
        estimator: spec.estimator,
        beta,
        seed: args.seed,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NullReport {
    pub mean: f64,
    pub variance: f64,
    pub skewness: Option<f64>,
    pub excess_kurtosis: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentsReport {
    pub n: usize,
    #[serde(rename = "N")]
    pub n_samples: usize,
    pub kind: KindReport,
    pub estimator: EstimatorConfig,
    pub variables: Vec<MarginalMoments>,
    pub null: NullReport,
}

pub fn cmd_moments(args: &MomentsArgs) -> CliResult<MomentsReport> {
    let kind = args.data.kind()?;
    let estimator = args.data.estimator();
    let (data, _) = args.data.dataset()?;
    let variables = data
        .distance_matrices()?
        .iter()
        .map(|b| marginal_moments(&matrix_statistics(b), estimator.bias))
        .collect::<Result<Vec<_>, _>>()?;
    let q = null_moments(&variables, data.n_samples(), kind, estimator.horizon)?;
    Ok(MomentsReport {
        n: data.n_vars(),
        n_samples: data.n_samples(),
        kind: KindReport { family: kind.family.label(), normalized: kind.normalized },
        estimator,
        variables,
        null: NullReport {
            mean: q.mean,
            variance: q.variance,
            skewness: q.skewness().filter(|v| v.is_finite()),
            excess_kurtosis: q.excess_kurtosis().filter(|v| v.is_finite()),
        },
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailReport {
    pub x: f64,
    pub classical: PValueResult,
    pub variance: Option<PValueResult>,
    pub pearson: Option<PValueResult>,
    pub clt: Option<PValueResult>,
    pub exact: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QformReport {
    pub mean: f64,
    pub variance: Option<f64>,
    pub skewness: Option<f64>,
    pub tails: Vec<TailReport>,
}

pub fn cmd_qform(args: &QformArgs) -> CliResult<QformReport> {
    let spectrum = match &args.alphas {
        Some(a) => Some(AlphaSpectrum::new(a.clone())?),
        None => None,
    };
    let (mean, variance, skewness) = match &spectrum {
        Some(s) => {
            let q = qform_moments(s);
            (q.mean, Some(q.variance), q.skewness())
        }
        None => (args.mean.expect("required by clap"), args.variance, args.skewness),
    };
    let tails = args
        .x
        .iter()
        .map(|&x| {
            Ok(TailReport {
                x,
                classical: pvalue_classical(x, mean)?,
                variance: variance.map(|v| pvalue_variance(x, mean, v)).transpose()?,
                pearson: match (variance, skewness) {
                    (Some(v), Some(s)) => Some(pvalue_pearson(x, mean, v, s)?),
                    _ => None,
                },
                clt: variance.map(|v| pvalue_clt(x, mean, v)).transpose()?,
                exact: spectrum.as_ref().map(|s| qform_exact_tail(s, x)).transpose()?,
            })
        })
        .collect::<CliResult<Vec<_>>>()?;
    Ok(QformReport { mean, variance, skewness, tails })
}

/// Runs the study and renders the long-format CSV.
pub fn cmd_study(args: &StudyArgs) -> CliResult<String> {
    let scenarios = args.scenarios.iter().map(|s| Scenario::parse(s)).collect::<Result<Vec<_>, _>>()?;
    let methods = args.methods.iter().map(|m| StudyMethod::parse(m)).collect::<Result<Vec<_>, _>>()?;
    let config = StudyConfig { reps: args.reps, benchmark_samples: args.benchmark, seed: args.seed, level: args.level };
    let metrics = run_study(&scenarios, &methods, &config)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in metrics.rows() {
        w.serialize(row).map_err(|e| CliError::Data(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Data(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Checks a `multidep test` JSON document against docs/schema.md.
pub fn check_report_schema(v: &serde_json::Value) -> Result<(), String> {
    use serde_json::Value;
    let obj = v.as_object().ok_or("report is not an object")?;
    let expect = |key: &str, ok: fn(&Value) -> bool| -> Result<(), String> {
        match obj.get(key) {
            Some(x) if ok(x) => Ok(()),
            Some(x) => Err(format!("field `{key}` has the wrong type: {x}")),
            None => Err(format!("missing field `{key}`")),
        }
    };
    expect("statistic", |x| x.as_f64().is_some_and(|s| s >= 0.0))?;
    expect("p_value", |x| x.as_f64().is_some_and(|p| (0.0..=1.0).contains(&p)))?;
    expect("valid", Value::is_boolean)?;
    expect("method", |x| x.as_str().is_some_and(|m| Method::ALL.iter().any(|k| k.label() == m)))?;
    expect("parameters", |x| x.as_object().is_some_and(|m| m.values().all(|v| v.as_f64().is_some())))?;
    expect("warnings", |x| x.as_array().is_some_and(|a| a.iter().all(Value::is_string)))?;
    expect("n", |x| x.as_u64().is_some_and(|n| n >= 2))?;
    expect("N", |x| x.as_u64().is_some_and(|n| n >= 1))?;
    expect("kind", |x| x["family"].is_string() && x["normalized"].is_boolean())?;
    expect("estimator", |x| {
        matches!(x["bias"].as_str(), Some("biased" | "unbiased"))
            && matches!(x["horizon"].as_str(), Some("limit" | "finite_sample"))
    })?;
    expect("beta", |x| x.as_array().is_some_and(|a| a.iter().all(|b| b.as_f64().is_some_and(|b| b > 0.0 && b <= 2.0))))?;
    expect("seed", Value::is_u64)?;
    let known = ["statistic", "p_value", "valid", "method", "parameters", "warnings", "n", "N", "kind", "estimator", "beta", "seed"];
    if let Some(k) = obj.keys().find(|k| !known.contains(&k.as_str())) {
        return Err(format!("unknown field `{k}`"));
    }
    Ok(())
}

/// x with 6 significant digits.
pub fn sig6(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let mag = x.abs().log10().floor() as i32;
    if !(-4..6).contains(&mag) {
        format!("{x:.5e}")
    } else {
        format!("{x:.*}", (5 - mag).max(0) as usize)
    }
}

fn human_test(r: &TestReport) -> String {
    let mut s = format!(
        "{} test, {} ({}), n = {}, N = {}\nstatistic  {}\np-value    {}{}\n",
        r.method,
        r.kind.family,
        if r.kind.normalized { "normalized" } else { "raw" },
        r.n,
        r.n_samples,
        sig6(r.statistic),
        sig6(r.p_value),
        if r.valid { "" } else { "  (outside the guaranteed range)" }
    );
    for (k, v) in &r.parameters {
        s.push_str(&format!("{k:<10} {}\n", sig6(*v)));
    }
    for w in &r.warnings {
        s.push_str(&format!("warning: {w}\n"));
    }
    s
}

fn human_moments(r: &MomentsReport) -> String {
    let mut s = String::from("variable  mu1  mu2  mu3  mu4\n");
    for (i, v) in r.variables.iter().enumerate() {
        s.push_str(&format!("{}  {}  {}  {}  {}\n", i + 1, sig6(v.mu1), sig6(v.mu2), sig6(v.mu3), sig6(v.mu4)));
    }
    s.push_str(&format!("null mean {}  variance {}\n", sig6(r.null.mean), sig6(r.null.variance)));
    s
}

fn human_qform(r: &QformReport) -> String {
    let opt = |p: &Option<PValueResult>| p.as_ref().map_or("-".to_string(), |p| sig6(p.p));
    let mut s = String::from("x  classical  variance  pearson  clt  exact\n");
    for t in &r.tails {
        s.push_str(&format!(
            "{}  {}  {}  {}  {}  {}\n",
            sig6(t.x),
            sig6(t.classical.p),
            opt(&t.variance),
            opt(&t.pearson),
            opt(&t.clt),
            t.exact.map_or("-".to_string(), sig6)
        ));
    }
    s
}

fn render<T: Serialize>(value: &T, format: Format, human: impl Fn(&T) -> String) -> CliResult<String> {
    match format {
        Format::Json => serde_json::to_string_pretty(value)
            .map(|s| s + "\n")
            .map_err(|e| CliError::Data(e.to_string())),
        Format::Human => Ok(human(value)),
    }
}

/// Thread count: MULTIDEP_THREADS, then --threads, then rayon's default.
pub fn thread_count(flag: Option<usize>) -> CliResult<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Ok(v) if !v.trim().is_empty() => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|n| *n > 0)
            .map(Some)
            .ok_or_else(|| CliError::Config(format!("{THREADS_ENV} must be a positive integer, got `{v}`"))),
        _ => Ok(flag),
    }
}

/// Executes a parsed command line; returns the text for stdout.
pub fn run(cli: &Cli) -> CliResult<String> {
    match &cli.command {
        Command::Test(a) => render(&cmd_test(a)?, a.format, human_test),
        Command::Moments(a) => render(&cmd_moments(a)?, a.format, human_moments),
        Command::Qform(a) => render(&cmd_qform(a)?, a.format, human_qform),
        Command::Study(a) => {
            let csv = cmd_study(a)?;
            match &a.output {
                Some(path) => {
                    std::fs::write(path, &csv)
                        .map_err(|e| CliError::Data(format!("cannot write {}: {e}", path.display())))?;
                    Ok(String::new())
                }
                None => Ok(csv),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn significant_digits() {
        assert_eq!(sig6(1.0 / 3.0), "0.333333");
        assert_eq!(sig6(1234.5678), "1234.57");
        assert_eq!(sig6(1.5e-7), "1.50000e-7");
        assert_eq!(sig6(0.0), "0");
    }
}
