//! Sums over subset families: g_C(μ) = Σ_{S∈C} Π_{i∈S} μᵢ and the double
//! sum G_C(u, v, w) over pairs (S, S') ∈ C × C.

use crate::statistics::Family;

/// Elementary symmetric polynomials e₀..e_m of `mu`.
fn elementary(mu: &[f64], m: usize) -> Vec<f64> {
    let mut e = vec![0.0; m + 1];
    e[0] = 1.0;
    for &x in mu {
        for k in (1..=m).rev() {
            e[k] += x * e[k - 1];
        }
    }
    e
}

pub fn gc_eval(mu: &[f64], family: Family) -> f64 {
    let p1: f64 = mu.iter().sum();
    let p2: f64 = mu.iter().map(|x| x * x).sum();
    match family {
        Family::Multivariance => mu.iter().product(),
        Family::Total => mu.iter().map(|x| x + 1.0).product::<f64>() - p1 - 1.0,
        Family::M(2) => 0.5 * (p1 * p1 - p2),
        Family::M(3) => {
            let p3: f64 = mu.iter().map(|x| x * x * x).sum();
            (p1 * p1 * p1 - 3.0 * p1 * p2 + 2.0 * p3) / 6.0
        }
        Family::M(m) => {
            if m > mu.len() {
                0.0
            } else {
                elementary(mu, m)[m]
            }
        }
    }
}

/// Coefficients of Π_i (1 + uᵢx + vᵢy + wᵢxy): entry [a][b] collects the
/// pairs (S, S') with |S| = a and |S'| = b.
fn bivariate_table(u: &[f64], v: &[f64], w: &[f64]) -> Vec<Vec<f64>> {
    let n = u.len();
    let mut t = vec![vec![0.0; n + 1]; n + 1];
    t[0][0] = 1.0;
    for i in 0..n {
        for a in (0..=i + 1).rev() {
            for b in (0..=i + 1).rev() {
                let mut val = t[a][b];
                if a > 0 {
                    val += u[i] * t[a - 1][b];
                }
                if b > 0 {
                    val += v[i] * t[a][b - 1];
                }
                if a > 0 && b > 0 {
                    val += w[i] * t[a - 1][b - 1];
                }
                t[a][b] = val;
            }
        }
    }
    t
}

/// Σ_{S,S'∈C} Π_{S∖S'} uᵢ · Π_{S'∖S} vᵢ · Π_{S∩S'} wᵢ.
pub fn big_gc_eval(u: &[f64], v: &[f64], w: &[f64], family: Family) -> f64 {
    let n = u.len();
    assert!(v.len() == n && w.len() == n, "G_C arguments must have equal length");
    match family {
        Family::Multivariance => w.iter().product(),
        Family::Total => {
            let near_pole = u.iter().chain(v).any(|x| (1.0 + x).abs() < 1e-8);
            if near_pole {
                let t = bivariate_table(u, v, w);
                (2..=n).flat_map(|a| (2..=n).map(move |b| (a, b))).map(|(a, b)| t[a][b]).sum()
            } else {
                total_closed_form(u, v, w)
            }
        }
        Family::M(m) => {
            if m > n {
                return 0.0;
            }
            bivariate_table(u, v, w)[m][m]
        }
    }
}

/// The closed form of G_C for C = all subsets of size ≥ 2.
fn total_closed_form(u: &[f64], v: &[f64], w: &[f64]) -> f64 {
    let su: f64 = u.iter().sum();
    let sv: f64 = v.iter().sum();
    let suv: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
    let distinct_uv = su * sv - suv;
    let linear: f64 = u.iter().zip(v).zip(w).map(|((a, b), c)| a + b + c).sum();
    let full: f64 = u.iter().zip(v).zip(w).map(|((a, b), c)| a + b + c + 1.0).product();
    let pv: f64 = v.iter().map(|b| 1.0 + b).product();
    let pu: f64 = u.iter().map(|a| 1.0 + a).product();
    let rv: f64 = u.iter().zip(v).zip(w).map(|((a, b), c)| (a + c) / (1.0 + b)).sum();
    let ru: f64 = u.iter().zip(v).zip(w).map(|((a, b), c)| (b + c) / (1.0 + a)).sum();
    distinct_uv + linear + full - pv * (1.0 + rv) - pu * (1.0 + ru) + 1.0
}
