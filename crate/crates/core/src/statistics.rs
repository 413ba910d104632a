//! Sample distance multivariance, total multivariance and m-multivariance.
//!
//! Every statistic is returned with the factor N, i.e. as N·M̂², the
//! quantity whose null limit is a Gaussian quadratic form.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::psi::{
    distance_matrix, centered_scaled, DistanceMatrix, ObservationBlock,
    PsiFunction,
};

/// The n variables of a sample together with their distance functions.
#[derive(Debug, Clone)]
pub struct Dataset {
    blocks: Vec<ObservationBlock>,
    psis: Vec<PsiFunction>,
}

impl Dataset {
    pub fn new(blocks: Vec<ObservationBlock>, psis: Vec<PsiFunction>) -> Result<Self> {
        if blocks.len() < 2 {
            return Err(Error::Shape(format!("need at least 2 variables, got {}", blocks.len())));
        }
        if psis.len() != blocks.len() {
            return Err(Error::Shape(format!(
                "{} variables but {} distance functions",
                blocks.len(),
                psis.len()
            )));
        }
        let n = blocks[0].n_samples();
        if let Some(i) = blocks.iter().position(|b| b.n_samples() != n) {
            return Err(Error::Shape(format!(
                "variable {} has {} samples, expected {n}",
                i + 1,
                blocks[i].n_samples()
            )));
        }
        Ok(Self { blocks, psis })
    }

    /// All variables share ψ(x) = |x|^β.
    pub fn with_beta(blocks: Vec<ObservationBlock>, beta: f64) -> Result<Self> {
        let psi = PsiFunction::euclidean_power(beta)?;
        let n = blocks.len();
        Self::new(blocks, vec![psi; n])
    }

    pub fn blocks(&self) -> &[ObservationBlock] {
        &self.blocks
    }

    pub fn psis(&self) -> &[PsiFunction] {
        &self.psis
    }

    pub fn n_vars(&self) -> usize {
        self.blocks.len()
    }

    pub fn n_samples(&self) -> usize {
        self.blocks[0].n_samples()
    }

    pub fn distance_matrices(&self) -> Result<Vec<DistanceMatrix>> {
        self.blocks.iter().zip(&self.psis).map(|(b, p)| distance_matrix(b, p)).collect()
    }
}

/// Which subsets S of the variables are summed over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    /// The single subset of all n variables.
    Multivariance,
    /// All subsets of size at least 2.
    Total,
    /// All subsets of size exactly m.
    M(usize),
}

impl Family {
    pub fn validate(&self, n: usize) -> Result<()> {
        if n < 2 {
            return Err(Error::Domain(format!("need at least 2 variables, got {n}")));
        }
        if let Family::M(m) = *self {
            if m < 2 || m > n {
                return Err(Error::Domain(format!("m must satisfy 2 <= m <= {n}, got {m}")));
            }
        }
        Ok(())
    }

    /// Number of subsets in the family.
    pub fn size(&self, n: usize) -> f64 {
        match *self {
            Family::Multivariance => 1.0,
            Family::Total => 2f64.powi(n as i32) - n as f64 - 1.0,
            Family::M(m) => binomial(n, m),
        }
    }

    pub fn label(&self) -> String {
        match *self {
            Family::Multivariance => "multivariance".into(),
            Family::Total => "total".into(),
            Family::M(m) => format!("m{m}"),
        }
    }
}

pub(crate) fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StatisticKind {
    pub family: Family,
    pub normalized: bool,
}

impl StatisticKind {
    pub fn multivariance(normalized: bool) -> Self {
        Self { family: Family::Multivariance, normalized }
    }

    pub fn total(normalized: bool) -> Self {
        Self { family: Family::Total, normalized }
    }

    pub fn m(m: usize, normalized: bool) -> Self {
        Self { family: Family::M(m), normalized }
    }
}

/// Doubly centered matrix of B, or of B/(|B|/N²) when `normalized`.
pub fn centered(b: &DistanceMatrix, normalized: bool) -> DMatrix<f64> {
    let scale = if normalized { b.total() / (b.n() * b.n()) as f64 } else { 1.0 };
    centered_scaled(b.matrix(), if scale == 0.0 { 1.0 } else { scale })
}

/// The statistic N·M̂² computed from precomputed distance matrices.
pub fn statistic_from_matrices(bs: &[DistanceMatrix], kind: StatisticKind) -> Result<f64> {
    let n = bs.len();
    kind.family.validate(n)?;
    let size = bs[0].n();
    if bs.iter().any(|b| b.n() != size) {
        return Err(Error::Shape("distance matrices differ in size".into()));
    }
    // Centered entries are formed column by column, so no N×N matrix is
    // allocated beyond the inputs.
    let nf = size as f64;
    let prep: Vec<(&[f64], Vec<f64>, f64, f64)> = bs
        .iter()
        .map(|b| {
            let m = b.matrix().as_slice();
            let means: Vec<f64> = m.chunks_exact(size).map(|c| c.iter().sum::<f64>() / nf).collect();
            let grand = means.iter().sum::<f64>() / nf;
            let inv = if kind.normalized && grand > 0.0 { 1.0 / grand } else { 1.0 };
            (m, means, grand, inv)
        })
        .collect();
    let mut scratch = vec![vec![0.0; size]; n];
    let mut sum = 0.0;
    for k in 0..size {
        for (col, (m, means, grand, inv)) in scratch.iter_mut().zip(&prep) {
            let shift = grand - means[k];
            for ((v, x), mj) in col.iter_mut().zip(&m[k * size..(k + 1) * size]).zip(means) {
                *v = (mj - x - shift) * inv;
            }
        }
        let cols: Vec<&[f64]> = scratch.iter().map(Vec::as_slice).collect();
        sum += family_sum(&cols, kind.family);
    }
    let mut value = sum / nf;
    if kind.normalized {
        value /= kind.family.size(n);
    }
    Ok(value.max(0.0))
}

/// N·(1/N²)·Σ_jk of the family's symmetric polynomial in the entries of the
/// centered matrices, without the normalization by the family size.
pub fn statistic_from_centered(a: &[&DMatrix<f64>], family: Family) -> f64 {
    let cols: Vec<&[f64]> = a.iter().map(|m| m.as_slice()).collect();
    family_sum(&cols, family) / a[0].nrows() as f64
}

/// Σ over positions of the family polynomial in the per-variable values.
fn family_sum(a: &[&[f64]], family: Family) -> f64 {
    let len = a[0].len();
    match family {
        Family::Multivariance => {
            let mut acc = a[0].to_vec();
            for ai in &a[1..] {
                for (x, y) in acc.iter_mut().zip(ai.iter()) {
                    *x *= y;
                }
            }
            acc.iter().sum::<f64>()
        }
        Family::Total => {
            let mut prod = vec![1.0; len];
            let mut lin = vec![0.0; len];
            for ai in a {
                for ((p, l), y) in prod.iter_mut().zip(lin.iter_mut()).zip(ai.iter()) {
                    *p *= 1.0 + y;
                    *l += y;
                }
            }
            prod.iter().zip(&lin).map(|(p, l)| p - 1.0 - l).sum::<f64>()
        }
        Family::M(2) => {
            let mut p1 = vec![0.0; len];
            let mut p2 = vec![0.0; len];
            for ai in a {
                for ((s, q), y) in p1.iter_mut().zip(p2.iter_mut()).zip(ai.iter()) {
                    *s += y;
                    *q += y * y;
                }
            }
            p1.iter().zip(&p2).map(|(s, q)| 0.5 * (s * s - q)).sum::<f64>()
        }
        Family::M(m) => {
            // Elementary symmetric polynomials e_1..e_m per entry.
            let mut e = vec![vec![0.0; len]; m + 1];
            e[0].iter_mut().for_each(|v| *v = 1.0);
            for ai in a {
                for k in (1..=m).rev() {
                    let (lo, hi) = e.split_at_mut(k);
                    for ((dst, src), y) in hi[0].iter_mut().zip(&lo[k - 1]).zip(ai.iter()) {
                        *dst += y * src;
                    }
                }
            }
            e[m].iter().sum::<f64>()
        }
    }
}

pub fn sample_statistic(data: &Dataset, kind: StatisticKind) -> Result<f64> {
    statistic_from_matrices(&data.distance_matrices()?, kind)
}

pub fn sample_multivariance(data: &Dataset, normalized: bool) -> Result<f64> {
    sample_statistic(data, StatisticKind::multivariance(normalized))
}

pub fn sample_total_multivariance(data: &Dataset, normalized: bool) -> Result<f64> {
    sample_statistic(data, StatisticKind::total(normalized))
}

pub fn sample_m_multivariance(data: &Dataset, m: usize, normalized: bool) -> Result<f64> {
    sample_statistic(data, StatisticKind::m(m, normalized))
}

/// M̂² without the factor N.
pub fn unscaled(statistic: f64, n_samples: usize) -> f64 {
    statistic / n_samples as f64
}

/// A finite symmetric measure on ℝᵈ, used to cross-check the matrix form of
/// the statistic against the characteristic-function definition.
///
/// With `symmetric = false` each atom t stands for the pair ±t, each half of
/// the listed weight.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMeasure {
    pub atoms: Vec<(Vec<f64>, f64)>,
    pub symmetric: bool,
}

impl DiscreteMeasure {
    fn expanded(&self) -> Result<Vec<(Vec<f64>, f64)>> {
        if self.atoms.is_empty() {
            return Err(Error::Domain("empty measure".into()));
        }
        if self.atoms.iter().any(|(_, w)| !(*w > 0.0)) {
            return Err(Error::Domain("atom weights must be positive".into()));
        }
        if !self.symmetric {
            return Ok(self
                .atoms
                .iter()
                .flat_map(|(t, w)| {
                    let neg: Vec<f64> = t.iter().map(|v| -v).collect();
                    [(t.clone(), 0.5 * w), (neg, 0.5 * w)]
                })
                .collect());
        }
        for (t, w) in &self.atoms {
            let found = self.atoms.iter().any(|(s, v)| {
                v == w && s.len() == t.len() && s.iter().zip(t).all(|(a, b)| *a == -*b)
            });
            if !found {
                return Err(Error::Domain("measure flagged symmetric is not closed under t -> -t".into()));
            }
        }
        Ok(self.atoms.clone())
    }

    /// ψ(x) = Σ_t w_t (1 − cos(x·t)).
    pub fn induced_psi(&self, x: &[f64]) -> f64 {
        self.atoms.iter().map(|(t, w)| w * (1.0 - dot(x, t).cos())).sum()
    }

    pub fn distance_matrix(&self, block: &ObservationBlock) -> Result<DistanceMatrix> {
        let n = block.n_samples();
        let mut m = DMatrix::zeros(n, n);
        for j in 0..n {
            for k in 0..j {
                let diff: Vec<f64> = block.row(j).iter().zip(block.row(k)).map(|(a, b)| a - b).collect();
                let v = self.induced_psi(&diff).max(0.0);
                m[(j, k)] = v;
                m[(k, j)] = v;
            }
        }
        DistanceMatrix::from_matrix(m)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// N·‖Ẑ‖² with Ẑ(t) = (1/N) Σ_l Π_i (e^{i x_i⁽ˡ⁾·t_i} − f̂_i(t_i)), summed
/// over all atom tuples of the product measure.
pub fn statistic_cf_oracle(data: &Dataset, measures: &[DiscreteMeasure]) -> Result<f64> {
    if measures.len() != data.n_vars() {
        return Err(Error::Shape("one measure per variable is required".into()));
    }
    let expanded: Vec<Vec<(Vec<f64>, f64)>> =
        measures.iter().map(DiscreteMeasure::expanded).collect::<Result<_>>()?;
    for (block, atoms) in data.blocks().iter().zip(&expanded) {
        if atoms.iter().any(|(t, _)| t.len() != block.dim()) {
            return Err(Error::Shape("atom dimension differs from variable dimension".into()));
        }
    }
    let n = data.n_samples();
    // Per variable and atom: the centered exponentials e^{i x·t} − f̂(t).
    let centered: Vec<Vec<(Vec<Complex64>, f64)>> = data
        .blocks()
        .iter()
        .zip(&expanded)
        .map(|(block, atoms)| {
            atoms
                .iter()
                .map(|(t, w)| {
                    let e: Vec<Complex64> =
                        (0..n).map(|l| Complex64::cis(dot(block.row(l), t))).collect();
                    let mean = e.iter().sum::<Complex64>() / n as f64;
                    (e.into_iter().map(|z| z - mean).collect(), *w)
                })
                .collect()
        })
        .collect();

    let mut total = 0.0;
    let mut idx = vec![0usize; centered.len()];
    loop {
        let mut weight = 1.0;
        let mut prod = vec![Complex64::new(1.0, 0.0); n];
        for (var, &k) in centered.iter().zip(&idx) {
            let (e, w) = &var[k];
            weight *= w;
            for (p, z) in prod.iter_mut().zip(e) {
                *p *= z;
            }
        }
        let z = prod.iter().sum::<Complex64>() / n as f64;
        total += weight * z.norm_sqr();

        let mut pos = 0;
        loop {
            if pos == idx.len() {
                return Ok(n as f64 * total);
            }
            idx[pos] += 1;
            if idx[pos] < centered[pos].len() {
                break;
            }
            idx[pos] = 0;
            pos += 1;
        }
    }
}
