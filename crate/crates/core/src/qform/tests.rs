use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::*;

fn spec(a: &[f64]) -> AlphaSpectrum {
    AlphaSpectrum::new(a.to_vec()).unwrap()
}

/// Survival function of Σ αᵢ Zᵢ² by Monte Carlo, with its standard error.
fn mc_tail(alphas: &[f64], xs: &[f64], draws: usize, seed: u64) -> Vec<(f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts = vec![0usize; xs.len()];
    for _ in 0..draws {
        let q: f64 = alphas
            .iter()
            .map(|a| {
                let z: f64 = StandardNormal.sample(&mut rng);
                a * z * z
            })
            .sum();
        for (c, x) in counts.iter_mut().zip(xs) {
            if q >= *x {
                *c += 1;
            }
        }
    }
    counts
        .iter()
        .map(|&c| {
            let p = c as f64 / draws as f64;
            (p, (p * (1.0 - p) / draws as f64).sqrt())
        })
        .collect()
}

#[test]
fn moments_examples() {
    let q = qform_moments(&spec(&[1.0]));
    assert_eq!((q.mean, q.variance, q.central3, q.central4), (1.0, 2.0, Some(8.0), Some(60.0)));
    let q = qform_moments(&spec(&[0.5, 0.5]));
    assert_eq!((q.mean, q.variance, q.central3, q.central4), (1.0, 1.0, Some(2.0), Some(9.0)));
    assert!(AlphaSpectrum::new(vec![]).is_err());
    assert!(AlphaSpectrum::new(vec![-0.1]).is_err());
}

#[test]
fn moments_match_monte_carlo() {
    let alphas = [0.6, 0.3, 0.1];
    let draws = 1_000_000;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let samples: Vec<f64> = (0..draws)
        .map(|_| {
            alphas
                .iter()
                .map(|a| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    a * z * z
                })
                .sum()
        })
        .collect();
    let q = qform_moments(&spec(&alphas));
    let central = |k: i32| samples.iter().map(|s| (s - q.mean).powi(k)).collect::<Vec<f64>>();
    let targets = [(1, 0.0), (2, q.variance), (3, q.central3.unwrap()), (4, q.central4.unwrap())];
    for (k, target) in targets {
        let v = central(k);
        let mean = v.iter().sum::<f64>() / draws as f64;
        let se = (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / draws as f64).sqrt()
            / (draws as f64).sqrt();
        assert!((mean - target).abs() < 3.0 * se, "k={k}: {mean} vs {target} (se {se})");
    }
}

#[test]
fn chisq_closed_forms() {
    assert!((chisq_upper_tail(2.0, 2.0).unwrap() - (-1.0f64).exp()).abs() < 1e-15);
    assert_eq!(chisq_upper_tail(3.3, 0.0).unwrap(), 1.0);
    assert!(chisq_upper_tail(0.0, 1.0).is_err());
    for x in [0.01, 0.3, 1.0, 2.5, 7.0, 20.0, 60.0] {
        let df1 = statrs::function::erf::erfc((x / 2.0f64).sqrt());
        let df2 = (-x / 2.0f64).exp();
        let df4 = (-x / 2.0f64).exp() * (1.0 + x / 2.0);
        assert!((chisq_upper_tail(1.0, x).unwrap() - df1).abs() < 1e-10);
        assert!((chisq_upper_tail(2.0, x).unwrap() - df2).abs() < 1e-10);
        assert!((chisq_upper_tail(4.0, x).unwrap() - df4).abs() < 1e-10);
    }
}

#[test]
fn chisq_one_quantile_by_quadrature() {
    // ∫_x^∞ density of χ²₁ via the substitution t = s², density becomes
    // 2·φ(s) on s ≥ √x; integrate with composite Simpson out to s = 40.
    let x: f64 = 3.841459;
    let (a, b, n) = (x.sqrt(), 40.0, 200_000);
    let h = (b - a) / n as f64;
    let phi = |s: f64| 2.0 * (-0.5 * s * s).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let mut acc = phi(a) + phi(b);
    for i in 1..n {
        acc += phi(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    let integral = acc * h / 3.0;
    let p = chisq_upper_tail(1.0, x).unwrap();
    assert!((p - integral).abs() < 1e-9);
    assert!((p - 0.05).abs() < 1e-4);
}

#[test]
fn classical_examples() {
    let r = pvalue_classical(1.5365, 1.0).unwrap();
    assert!(r.valid);
    assert!((r.p - 0.2152).abs() < 1e-4, "{}", r.p);
    let r = pvalue_classical(1.0, 1.0).unwrap();
    assert!(!r.valid && !r.note.is_empty());
    let mut last = 1.0;
    for s in [2.0, 5.0, 10.0, 50.0, 500.0] {
        let p = pvalue_classical(s, 1.0).unwrap().p;
        assert!(p < last);
        last = p;
    }
    assert!(last < 1e-100);
    assert!(matches!(pvalue_classical(1.0, 0.0), Err(Error::Degenerate(_))));
}

#[test]
fn variance_bound_examples() {
    for s in [0.5, 1.6, 4.0] {
        let c = pvalue_classical(s, 2.0).unwrap();
        let v = pvalue_variance(s, 2.0, 8.0).unwrap();
        assert!((c.p - v.p).abs() < 1e-15 && c.valid == v.valid);
    }
    // Normalized Bernoulli limit: mean 1, variance 2·μ₂²/μ₁⁴ = 2.
    let (mean, var) = (1.0, 2.0 * 0.0625 / 0.0625);
    let v = pvalue_variance(3.0, mean, var).unwrap();
    assert_eq!(v.p, pvalue_classical(3.0, mean).unwrap().p);
    let s = spec(&[0.7, 0.3]);
    let q = qform_moments(&s);
    for i in 0..40 {
        let x = 1.5365 + 0.25 * i as f64;
        let bound = pvalue_variance(x, q.mean, q.variance).unwrap().p;
        let exact = qform_exact_tail(&s, x).unwrap();
        assert!(bound >= exact - 1e-9, "x={x}: {bound} < {exact}");
    }
    assert_eq!(pvalue_variance(0.5, 1.0, 0.0).unwrap().p, 1.0);
    assert_eq!(pvalue_variance(1.5, 1.0, 0.0).unwrap().p, 0.0);
}

#[test]
fn pearson_examples() {
    let skew = 8f64.sqrt();
    for x in [0.1, 1.0, 2.0, 5.0, 12.0] {
        let p = pvalue_pearson(x, 1.0, 2.0, skew).unwrap().p;
        let exact = chisq_upper_tail(1.0, x).unwrap();
        assert!((p - exact).abs() < 1e-8, "{p} vs {exact}");
        // β = 1: P(Y₁ ≥ 1 + √2(x − mean)/√var) with mean 3, var 5.
        let z = 2f64.sqrt() * (x - 3.0) / 5f64.sqrt();
        let reduced = chisq_upper_tail(1.0, 1.0 + z).unwrap();
        assert!((pvalue_pearson(x, 3.0, 5.0, skew).unwrap().p - reduced).abs() < 1e-12);
    }
    let s = spec(&[0.5, 0.3, 0.2]);
    let q = qform_moments(&s);
    let skew = q.skewness().unwrap();
    for i in 0..60 {
        let x = 0.5 + 0.2 * i as f64;
        let exact = qform_exact_tail(&s, x).unwrap();
        if !(0.001..=0.2).contains(&exact) {
            continue;
        }
        let p = pvalue_pearson(x, q.mean, q.variance, skew).unwrap().p;
        assert!((p - exact).abs() < 5e-3, "x={x}: {p} vs {exact}");
    }
    let fallback = pvalue_pearson(1.0, 1.0, 1.0, 0.0).unwrap();
    assert_eq!(fallback.p, 0.5);
    assert!(fallback.note.contains("normal"));
}

#[test]
fn pearson_iii_parameters() {
    let law = PearsonIII::from_moments(2.0, 3.0, 1.2).unwrap();
    assert!((law.mean() - 2.0).abs() < 1e-12);
    assert!((law.variance() - 3.0).abs() < 1e-12);
    assert!((law.skewness() - 1.2).abs() < 1e-12);
    assert_eq!(law.upper_tail(law.c - 1.0), 1.0);
}

#[test]
fn clt_examples() {
    assert_eq!(pvalue_clt(2.0, 2.0, 3.0).unwrap().p, 0.5);
    let p = pvalue_clt(1.0 + 1.644854 * 2.0, 1.0, 4.0).unwrap().p;
    assert!((p - 0.05).abs() < 1e-4);
    assert!(matches!(pvalue_clt(1.0, 1.0, 0.0), Err(Error::Degenerate(_))));
}

#[test]
fn exact_tail_closed_forms() {
    for x in [0.05, 0.5, 1.0, 3.0, 8.0, 15.0] {
        let single = qform_exact_tail(&spec(&[0.4]), x).unwrap();
        assert!((single - chisq_upper_tail(1.0, x / 0.4).unwrap()).abs() < 1e-12);
        let n = 5.0;
        let equal = qform_exact_tail(&spec(&[1.0 / n; 5]), x).unwrap();
        assert!((equal - chisq_upper_tail(n, n * x).unwrap()).abs() < 1e-12);
        // Force the inversion path with a negligible third coefficient.
        let expo = qform_exact_tail(&spec(&[0.5, 0.5, 1e-13]), x).unwrap();
        assert!((expo - (-x).exp()).abs() < 1e-7, "x={x}: {expo} vs {}", (-x).exp());
    }
    assert_eq!(qform_exact_tail(&spec(&[0.3, 0.2]), -1.0).unwrap(), 1.0);
    assert!(qform_exact_tail(&spec(&[0.0, 0.0]), 1.0).is_err());
}

#[test]
fn exact_tail_against_sum_of_two_exponentials() {
    // α = (a,a,b,b): sum of Exp(mean 2a) and Exp(mean 2b).
    let (a, b): (f64, f64) = (0.35, 0.15);
    for x in [0.1, 0.7, 1.5, 3.0, 6.0] {
        let (la, lb) = (1.0 / (2.0 * a), 1.0 / (2.0 * b));
        let want = (lb * (-la * x).exp() - la * (-lb * x).exp()) / (lb - la);
        let got = qform_exact_tail(&spec(&[a, a, b, b]), x).unwrap();
        assert!((got - want).abs() < 1e-7, "x={x}: {got} vs {want}");
    }
}

#[test]
fn exact_tail_matches_monte_carlo() {
    let spectra: [&[f64]; 3] = [&[0.6, 0.3, 0.1], &[0.2, 0.2, 0.15, 0.15, 0.2, 0.1], &[0.9, 0.05, 0.05]];
    let xs = [0.3, 1.0, 1.6, 2.5, 4.0];
    for (i, alphas) in spectra.iter().enumerate() {
        let mc = mc_tail(alphas, &xs, 1_000_000, 17 + i as u64);
        for (x, (p, se)) in xs.iter().zip(mc) {
            let exact = qform_exact_tail(&spec(alphas), *x).unwrap();
            assert!((exact - p).abs() <= 3.0 * se + 1e-6, "{alphas:?} x={x}: {exact} vs {p} ± {se}");
        }
    }
}

#[test]
fn x0_values() {
    let x1 = compute_x0(1.0).unwrap();
    assert!((x1 - 1.536404).abs() < 1e-4, "{x1}");
    let x_half = compute_x0(0.5).unwrap();
    let f2 = chisq_cdf(2.0, 2.0 * x_half).unwrap();
    let f3 = chisq_cdf(3.0, 3.0 * x_half).unwrap();
    assert!((f2 - f3).abs() < 1e-12);
    assert!(compute_x0(0.0).is_err() && compute_x0(1.5).is_err());
    let mut last = 0.0;
    for i in 1..=20 {
        let alpha = i as f64 / 20.0;
        let x0 = compute_x0(alpha).unwrap();
        assert!(x0 >= last - 1e-12);
        last = x0;
        let tail = chisq_upper_tail(1.0 / alpha, x0 / alpha).unwrap();
        assert!(tail > 0.215, "alpha={alpha}: {tail}");
    }
}
