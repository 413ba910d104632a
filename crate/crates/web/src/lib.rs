//! WebAssembly bindings for the demo page in `www/`. Each export returns a
//! JSON string; the plain Rust functions behind them are what the tests call.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use serde::Serialize;
use wasm_bindgen::prelude::*;

use multidep_core::engine::{replicate_rng, run_test, Method, TestSpec};
use multidep_core::qform::{
    chisq_upper_tail, compute_x0, pvalue_classical, pvalue_pearson, pvalue_variance, qform_exact_tail,
    qform_moments, AlphaSpectrum, BOUND_THRESHOLD,
};
use multidep_core::statistics::StatisticKind;
use multidep_core::study::{Generator, Scenario};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailCurves {
    pub x: Vec<f64>,
    pub exact: Vec<f64>,
    pub classical: Vec<f64>,
    pub variance: Vec<f64>,
    pub pearson: Vec<f64>,
    pub threshold: f64,
}

/// Tail probabilities of Σ αᵢZᵢ² on `points` values of x in (0, x_max],
/// with α rescaled to sum to 1.
pub fn tail_curves(alphas: &[f64], x_max: f64, points: usize) -> Result<TailCurves, String> {
    if points < 2 || !(x_max > 0.0) {
        return Err("need at least two points and a positive range".into());
    }
    let total: f64 = alphas.iter().sum();
    if !(total > 0.0) {
        return Err("coefficients must be positive".into());
    }
    let spectrum = AlphaSpectrum::new(alphas.iter().map(|a| a / total).collect()).map_err(|e| e.to_string())?;
    let q = qform_moments(&spectrum);
    let skew = q.skewness().unwrap_or(f64::NAN);
    let mut out = TailCurves {
        x: Vec::with_capacity(points),
        exact: Vec::with_capacity(points),
        classical: Vec::with_capacity(points),
        variance: Vec::with_capacity(points),
        pearson: Vec::with_capacity(points),
        threshold: BOUND_THRESHOLD,
    };
    for i in 1..=points {
        let x = x_max * i as f64 / points as f64;
        out.x.push(x);
        out.exact.push(qform_exact_tail(&spectrum, x).map_err(|e| e.to_string())?);
        out.classical.push(pvalue_classical(x, q.mean).map_err(|e| e.to_string())?.p);
        out.variance.push(pvalue_variance(x, q.mean, q.variance).map_err(|e| e.to_string())?.p);
        out.pearson.push(pvalue_pearson(x, q.mean, q.variance, skew).map(|r| r.p).unwrap_or(f64::NAN));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct X0Curve {
    pub alpha: Vec<f64>,
    pub x0: Vec<f64>,
    /// P(αY_{1/α} ≥ x₀(α)).
    pub tail: Vec<f64>,
}

pub fn x0_curve(points: usize) -> Result<X0Curve, String> {
    if points == 0 {
        return Err("need at least one point".into());
    }
    let mut out = X0Curve { alpha: Vec::new(), x0: Vec::new(), tail: Vec::new() };
    for i in 1..=points {
        let alpha = i as f64 / points as f64;
        let x0 = compute_x0(alpha).map_err(|e| e.to_string())?;
        out.alpha.push(alpha);
        out.x0.push(x0);
        out.tail.push(chisq_upper_tail(1.0 / alpha, x0 / alpha).map_err(|e| e.to_string())?);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MethodResult {
    pub method: String,
    pub p: f64,
    pub valid: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TetrahedronReport {
    pub statistic: f64,
    pub pairwise_statistic: f64,
    pub results: Vec<MethodResult>,
    pub pairwise: Vec<MethodResult>,
}

/// Draws N samples of the tetrahedron triple (pairwise independent, jointly
/// dependent) plus r times standard normal noise, then tests it with
/// multivariance and with 2-multivariance.
pub fn tetrahedron_test(r: f64, n_samples: usize, seed: u64) -> Result<TetrahedronReport, String> {
    let scenario = Scenario::new(Generator::Tetrahedron { r }, 3, n_samples).map_err(|e| e.to_string())?;
    let data = scenario.generate(&mut replicate_rng(seed, 0)).map_err(|e| e.to_string())?;
    let methods = [Method::Pearson, Method::Variance, Method::Classical, Method::Permutation];
    let run = |kind: StatisticKind| -> Result<(f64, Vec<MethodResult>), String> {
        let mut stat = 0.0;
        let results = methods
            .iter()
            .map(|&method| {
                let spec = TestSpec { kind, method, resamples: 199, rng_seed: seed, ..TestSpec::default() };
                let t = run_test(&data, &spec).map_err(|e| e.to_string())?;
                stat = t.statistic;
                Ok(MethodResult { method: method.label().into(), p: t.p, valid: t.valid })
            })
            .collect::<Result<Vec<_>, String>>()?;
        Ok((stat, results))
    };
    let (statistic, results) = run(StatisticKind::multivariance(true))?;
    let (pairwise_statistic, pairwise) = run(StatisticKind::m(2, true))?;
    Ok(TetrahedronReport { statistic, pairwise_statistic, results, pairwise })
}

fn to_js<T: Serialize>(r: Result<T, String>) -> Result<String, JsError> {
    r.and_then(|v| serde_json::to_string(&v).map_err(|e| e.to_string())).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = tailCurves)]
pub fn tail_curves_js(alphas: Vec<f64>, x_max: f64, points: usize) -> Result<String, JsError> {
    to_js(tail_curves(&alphas, x_max, points))
}

#[wasm_bindgen(js_name = x0Curve)]
pub fn x0_curve_js(points: usize) -> Result<String, JsError> {
    to_js(x0_curve(points))
}

#[wasm_bindgen(js_name = tetrahedronTest)]
pub fn tetrahedron_test_js(r: f64, n_samples: usize, seed: u64) -> Result<String, JsError> {
    to_js(tetrahedron_test(r, n_samples, seed))
}
