//! Gaussian quadrature rules via the Golub–Welsch eigenvalue method, and a
//! rule for the Lévy measure of ψ(x) = |x|^β on the real line.

use nalgebra::{DMatrix, SymmetricEigen};
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub nodes: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn new(nodes: Vec<Vec<f64>>, weights: Vec<f64>) -> Result<Self> {
        if nodes.is_empty() || nodes.len() != weights.len() {
            return Err(Error::Shape("quadrature needs equally many nodes and weights".into()));
        }
        if weights.iter().any(|w| !(*w >= 0.0)) {
            return Err(Error::Domain("quadrature weights must be nonnegative".into()));
        }
        Ok(Self { nodes, weights })
    }

    fn scalar(nodes: Vec<f64>, weights: Vec<f64>) -> Self {
        Self { nodes: nodes.into_iter().map(|x| vec![x]).collect(), weights }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Σ wᵢ f(xᵢ).
    pub fn integrate(&self, f: impl Fn(&[f64]) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(x, w)| w * f(x)).sum()
    }
}

/// Nodes and weights from the Jacobi matrix with diagonal `a`, off-diagonal
/// `b` and total weight `mass`.
fn golub_welsch(a: &[f64], b: &[f64], mass: f64) -> (Vec<f64>, Vec<f64>) {
    let n = a.len();
    let j = DMatrix::from_fn(n, n, |r, c| {
        if r == c {
            a[r]
        } else if r + 1 == c {
            b[r]
        } else if c + 1 == r {
            b[c]
        } else {
            0.0
        }
    });
    let eig = SymmetricEigen::new(j);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|i| (eig.eigenvalues[i], mass * eig.eigenvectors[(0, i)].powi(2)))
        .collect();
    pairs.sort_by(|x, y| x.0.total_cmp(&y.0));
    pairs.into_iter().unzip()
}

/// Gauss–Legendre rule for ∫_a^b f(x) dx.
pub fn gauss_legendre(n: usize, a: f64, b: f64) -> QuadratureRule {
    let diag = vec![0.0; n];
    let off: Vec<f64> = (1..n).map(|k| k as f64 / ((4 * k * k - 1) as f64).sqrt()).collect();
    let (x, w) = golub_welsch(&diag, &off, 2.0);
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    QuadratureRule::scalar(x.iter().map(|t| mid + half * t).collect(), w.iter().map(|v| v * half).collect())
}

/// Gauss–Hermite rule for E f(X) with X ~ N(mean, sd²).
pub fn gauss_hermite_normal(n: usize, mean: f64, sd: f64) -> QuadratureRule {
    let diag = vec![0.0; n];
    let off: Vec<f64> = (1..n).map(|k| (k as f64 / 2.0).sqrt()).collect();
    let (x, w) = golub_welsch(&diag, &off, std::f64::consts::PI.sqrt());
    let scale = std::f64::consts::SQRT_2 * sd;
    let norm = std::f64::consts::PI.sqrt();
    QuadratureRule::scalar(x.iter().map(|z| mean + scale * z).collect(), w.iter().map(|v| v / norm).collect())
}

/// Gauss–Laguerre rule for E f(X) with X ~ Exp(rate).
pub fn gauss_laguerre_exponential(n: usize, rate: f64) -> QuadratureRule {
    let diag: Vec<f64> = (0..n).map(|k| (2 * k + 1) as f64).collect();
    let off: Vec<f64> = (1..n).map(|k| k as f64).collect();
    let (x, w) = golub_welsch(&diag, &off, 1.0);
    QuadratureRule::scalar(x.iter().map(|z| z / rate).collect(), w)
}

/// Density constant of the Lévy measure c_β|t|^{−1−β}dt with
/// ∫(1 − cos(xt)) c_β|t|^{−1−β} dt = |x|^β.
pub fn levy_constant(beta: f64) -> f64 {
    gamma(1.0 + beta) * (std::f64::consts::PI * beta / 2.0).sin() / std::f64::consts::PI
}

/// Inner and outer truncation of the Lévy measure at β = 1. For other β the
/// bounds become ε^{1/(2−β)} and T^{1/β}, which keeps the neglected mass
/// near 0 (∝ ε^{2−β}) and beyond T (∝ T^{−β}) at the β = 1 level.
pub const LEVY_EPS: f64 = 1e-4;
pub const LEVY_MAX: f64 = 1e4;

pub fn levy_bounds(beta: f64) -> (f64, f64) {
    (LEVY_EPS.ln() / (2.0 - beta), LEVY_MAX.ln() / beta)
}

/// Symmetric rule for the Lévy measure of |x|^β, β ∈ (0, 2): Gauss–Legendre
/// in u = ln|t| between the `levy_bounds` (where the measure becomes c_β e^{−βu} du),
/// mirrored to negative t. `n` is the total node count.
pub fn levy_rule(n: usize, beta: f64) -> Result<QuadratureRule> {
    if !(beta > 0.0 && beta < 2.0) {
        return Err(Error::Domain(format!("the Levy rule needs beta in (0, 2), got {beta}")));
    }
    if n < 2 || !n.is_multiple_of(2) {
        return Err(Error::Domain("the Levy rule needs an even, positive node count".into()));
    }
    let (lo, hi) = levy_bounds(beta);
    let base = gauss_legendre(n / 2, lo, hi);
    let c = levy_constant(beta);
    let mut nodes = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    for (u, w) in base.nodes.iter().zip(&base.weights) {
        let t = u[0].exp();
        let weight = w * c * (-beta * u[0]).exp();
        nodes.push(vec![-t]);
        weights.push(weight);
        nodes.push(vec![t]);
        weights.push(weight);
    }
    QuadratureRule::new(nodes, weights)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_integrates_polynomials() {
        let r = gauss_legendre(5, -1.0, 2.0);
        let got = r.integrate(|x| x[0].powi(9) - 2.0 * x[0].powi(4) + 1.0);
        let want = (2f64.powi(10) - 1.0) / 10.0 - 2.0 * (32.0 + 1.0) / 5.0 + 3.0;
        assert!((got - want).abs() < 1e-10);
    }

    #[test]
    fn hermite_moments() {
        let r = gauss_hermite_normal(20, 1.0, 2.0);
        assert!((r.integrate(|_| 1.0) - 1.0).abs() < 1e-12);
        assert!((r.integrate(|x| x[0]) - 1.0).abs() < 1e-12);
        assert!((r.integrate(|x| (x[0] - 1.0).powi(4)) - 3.0 * 16.0).abs() < 1e-9);
    }

    #[test]
    fn laguerre_moments() {
        let r = gauss_laguerre_exponential(20, 2.0);
        assert!((r.integrate(|_| 1.0) - 1.0).abs() < 1e-12);
        assert!((r.integrate(|x| x[0].powi(3)) - 6.0 / 8.0).abs() < 1e-10);
    }

    #[test]
    fn levy_constant_reproduces_psi() {
        assert!((levy_constant(1.0) - 1.0 / std::f64::consts::PI).abs() < 1e-15);
        // ∫(1 − e^{−x²t²/2}) ρ(dt) = E|xZ|^β for standard normal Z
        for beta in [0.5, 1.0, 1.5] {
            let r = levy_rule(100, beta).unwrap();
            let abs_moment = 2f64.powf(beta / 2.0) * gamma((1.0 + beta) / 2.0) / std::f64::consts::PI.sqrt();
            for x in [0.3f64, 1.0, 2.0] {
                let got = r.integrate(|t| -(-0.5 * (x * t[0]).powi(2)).exp_m1());
                let want = x.powf(beta) * abs_moment;
                assert!((got / want - 1.0).abs() < 1e-3, "beta={beta} x={x}: {got} vs {want}");
            }
        }
        assert!(levy_rule(100, 2.0).is_err());
        assert!(levy_rule(7, 1.0).is_err());
    }
}
