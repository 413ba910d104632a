//! Coefficients of the finite-sample second moment, indexed by the seven
//! coincidence patterns of an index quadruple (j, k, l, m).

/// Coincidence pattern of (j, k, l, m), numbered 1..=7.
pub fn classify(j: usize, k: usize, l: usize, m: usize) -> usize {
    let mut distinct = vec![j, k, l, m];
    distinct.sort_unstable();
    distinct.dedup();
    match distinct.len() {
        4 => 1,
        1 => 7,
        3 if j == k || l == m => 6,
        3 => 3,
        _ if j == k && l == m => 4,
        _ if j != k && l != m => 2,
        _ => 5,
    }
}

/// C(N,k), a(N,k), b(N,k), c(N,k), d(N,k) together with the expectation
/// factors e₁, e₂ (raw statistic) and f₁, f₂ (normalized statistic).
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientTable {
    pub n: usize,
    pub count: [f64; 7],
    pub a: [f64; 7],
    pub b: [f64; 7],
    pub c: [f64; 7],
    pub d: [f64; 7],
    pub e1: [f64; 7],
    pub e2: [f64; 7],
    pub f1: [f64; 7],
    pub f2: [f64; 7],
}

impl CoefficientTable {
    pub fn new(n: usize) -> Self {
        let x = n as f64;
        let (x2, x3, x4) = (x * x, x * x * x, x * x * x * x);
        let count = [
            x * (x - 1.0) * (x - 2.0) * (x - 3.0),
            2.0 * x * (x - 1.0),
            4.0 * x * (x - 1.0) * (x - 2.0),
            x * (x - 1.0),
            4.0 * x * (x - 1.0),
            2.0 * x * (x - 1.0) * (x - 2.0),
            x,
        ];
        let a = [-x2, -x2, -x2, -x2 + 2.0 * x3 - x4, -x2 + x3, -x2 + x3, -x2 + 2.0 * x3 - x4];
        let b = [
            6.0 * x + 2.0 * x2,
            6.0 * x - 2.0 * x2 - 2.0 * x3 + x4,
            6.0 * x - x3,
            6.0 * x - 2.0 * x2,
            6.0 * x - 4.0 * x2,
            6.0 * x,
            6.0 * x - 10.0 * x2 + 4.0 * x3,
        ];
        let c = [
            -24.0 * x - 4.0 * x2,
            -24.0 * x + 12.0 * x2 + 4.0 * x3 - 2.0 * x4,
            -24.0 * x + 4.0 * x2 + 2.0 * x3,
            -24.0 * x + 12.0 * x2,
            -24.0 * x + 20.0 * x2 - 4.0 * x3,
            -24.0 * x + 4.0 * x2,
            -24.0 * x + 44.0 * x2 - 24.0 * x3 + 4.0 * x4,
        ];
        let d = [
            18.0 * x + 3.0 * x2,
            18.0 * x - 9.0 * x2 - 2.0 * x3 + x4,
            18.0 * x - 3.0 * x2 - x3,
            18.0 * x - 9.0 * x2 - 2.0 * x3 + x4,
            18.0 * x - 15.0 * x2 + 3.0 * x3,
            18.0 * x - 3.0 * x2 - x3,
            18.0 * x - 33.0 * x2 + 18.0 * x3 - 3.0 * x4,
        ];
        let off = -1.0 / x;
        let on = 1.0 - 1.0 / x;
        let e1 = [off, off, off, on, on, on, on];
        let e2 = [off, off, off, on, off, off, on];
        let g = -1.0 / (x - 1.0);
        let f1 = [g, g, g, 1.0, 1.0, 1.0, 1.0];
        let f2 = [g, g, g, 1.0, g, g, 1.0];
        Self { n, count, a, b, c, d, e1, e2, f1, f2 }
    }

    /// E(ĥ²)·N⁴/N⁴ written through b, c, d: the expected squared normalizer.
    pub fn expected_h_squared(&self, b: f64, c: f64, d: f64) -> f64 {
        let n4 = (self.n as f64).powi(4);
        (self.count[1] * b + self.count[2] * c + self.count[0] * d) / n4
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// N²·Ψ(j,k) as integer coefficients on the entries B_pq.
    fn psi_coeffs(n: usize, j: usize, k: usize) -> Vec<i128> {
        let ni = n as i128;
        let mut out = vec![0i128; n * n];
        for p in 0..n {
            for q in 0..n {
                if p == q {
                    continue;
                }
                let mut v = -1;
                if p == j {
                    v += ni;
                }
                if q == k {
                    v += ni;
                }
                if p == j && q == k {
                    v -= ni * ni;
                }
                out[p * n + q] = v;
            }
        }
        out
    }

    /// Expands N⁴·E[Ψ(j,k)Ψ(l,m)] into counts of (0, b, c, d) type terms.
    fn expand(n: usize, j: usize, k: usize, l: usize, m: usize) -> [i128; 3] {
        let x = psi_coeffs(n, j, k);
        let y = psi_coeffs(n, l, m);
        let mut out = [0i128; 3];
        for p in 0..n {
            for q in 0..n {
                let cx = x[p * n + q];
                if cx == 0 {
                    continue;
                }
                for r in 0..n {
                    for s in 0..n {
                        let cy = y[r * n + s];
                        if cy == 0 {
                            continue;
                        }
                        let shared = usize::from(r == p || r == q) + usize::from(s == p || s == q);
                        let slot = match shared {
                            2 => 0,
                            1 => 1,
                            _ => 2,
                        };
                        out[slot] += cx * cy;
                    }
                }
            }
        }
        out
    }

    fn representative(n: usize, case: usize) -> (usize, usize, usize, usize) {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    for m in 0..n {
                        if classify(j, k, l, m) == case {
                            return (j, k, l, m);
                        }
                    }
                }
            }
        }
        unreachable!()
    }

    #[test]
    fn counts_match_classification() {
        for n in 4..=9 {
            let t = CoefficientTable::new(n);
            let mut counts = [0usize; 7];
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        for m in 0..n {
                            counts[classify(j, k, l, m) - 1] += 1;
                        }
                    }
                }
            }
            for case in 0..7 {
                assert_eq!(counts[case] as f64, t.count[case], "N={n} case {}", case + 1);
            }
        }
    }

    #[test]
    fn bcd_coefficients_match_expansion() {
        for n in 4..=8 {
            let t = CoefficientTable::new(n);
            for case in 1..=7 {
                let (j, k, l, m) = representative(n, case);
                let [b, c, d] = expand(n, j, k, l, m);
                assert_eq!(b as f64, t.b[case - 1], "b N={n} case {case}");
                assert_eq!(c as f64, t.c[case - 1], "c N={n} case {case}");
                assert_eq!(d as f64, t.d[case - 1], "d N={n} case {case}");
            }
        }
    }

    #[test]
    fn expansion_is_constant_within_a_case() {
        let n = 6;
        let mut seen: Vec<Option<[i128; 3]>> = vec![None; 7];
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    for m in 0..n {
                        let case = classify(j, k, l, m) - 1;
                        let v = expand(n, j, k, l, m);
                        match seen[case] {
                            None => seen[case] = Some(v),
                            Some(w) => assert_eq!(v, w),
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn limits() {
        let t = CoefficientTable::new(1_000_000);
        let n = 1e6f64;
        let n4 = n.powi(4);
        assert!((t.b[1] / n4 - 1.0).abs() < 1e-4);
        assert!((t.c[1] / n4 + 2.0).abs() < 1e-4);
        assert!((t.d[1] / n4 - 1.0).abs() < 1e-4);
        assert!((t.count[1] / (n * n) - 2.0).abs() < 1e-4);
        assert!((t.d[3] / n4 - 1.0).abs() < 1e-4);
        assert!((t.c[6] / n4 - 4.0).abs() < 1e-4);
        assert!((t.d[6] / n4 + 3.0).abs() < 1e-4);
        assert!((t.a[3] / n4 + 1.0).abs() < 1e-4);
    }

    #[test]
    fn hard_coded_values_at_small_n() {
        let t = CoefficientTable::new(5);
        assert_eq!(t.count, [120.0, 40.0, 240.0, 20.0, 80.0, 120.0, 5.0]);
        assert_eq!(t.b[1], 30.0 - 50.0 - 250.0 + 625.0);
        assert_eq!(t.c[6], -120.0 + 1100.0 - 3000.0 + 2500.0);
        assert_eq!(t.d[4], 90.0 - 375.0 + 375.0);
    }
}
