//! Distance functions ψ(x) = |x|^β, distance matrices, double centering and
//! the scalar matrix functionals consumed by the moment estimators.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PsiFamily {
    EuclideanPower,
}

/// A continuous negative definite function of the form ψ(x) = |x|^β.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PsiFunction {
    pub family: PsiFamily,
    pub beta: f64,
}

impl PsiFunction {
    pub fn euclidean_power(beta: f64) -> Result<Self> {
        if !(beta > 0.0 && beta <= 2.0) {
            return Err(Error::Domain(format!("beta must lie in (0, 2], got {beta}")));
        }
        Ok(Self { family: PsiFamily::EuclideanPower, beta })
    }

    /// ψ(x) = |x|^β with |·| the Euclidean norm.
    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("non-finite argument to psi".into()));
        }
        let sq: f64 = x.iter().map(|v| v * v).sum();
        Ok(self.of_squared_norm(sq))
    }

    #[inline]
    fn of_squared_norm(&self, sq: f64) -> f64 {
        if sq == 0.0 {
            0.0
        } else if self.beta == 2.0 {
            sq
        } else if self.beta == 1.0 {
            sq.sqrt()
        } else {
            sq.powf(0.5 * self.beta)
        }
    }
}

impl Default for PsiFunction {
    fn default() -> Self {
        Self { family: PsiFamily::EuclideanPower, beta: 1.0 }
    }
}

/// N samples of one d-dimensional variable, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationBlock {
    values: Vec<f64>,
    n: usize,
    dim: usize,
}

impl ObservationBlock {
    pub fn new(values: Vec<f64>, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Shape("dimension must be positive".into()));
        }
        if values.is_empty() || !values.len().is_multiple_of(dim) {
            return Err(Error::Shape(format!(
                "{} values cannot be split into rows of length {dim}",
                values.len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Domain(format!(
                "non-finite observation in row {}",
                pos / dim + 1
            )));
        }
        let n = values.len() / dim;
        Ok(Self { values, n, dim })
    }

    pub fn from_column(values: &[f64]) -> Result<Self> {
        Self::new(values.to_vec(), 1)
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::Shape("rows have different lengths".into()));
        }
        Self::new(rows.concat(), dim)
    }

    pub fn n_samples(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, l: usize) -> &[f64] {
        &self.values[l * self.dim..(l + 1) * self.dim]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// A new block made of the given rows (indices may repeat).
    pub fn select_rows(&self, idx: &[usize]) -> Self {
        let mut values = Vec::with_capacity(idx.len() * self.dim);
        for &i in idx {
            values.extend_from_slice(self.row(i));
        }
        Self { values, n: idx.len(), dim: self.dim }
    }

    pub fn is_constant(&self) -> bool {
        let first = self.row(0);
        (1..self.n).all(|l| self.row(l) == first)
    }
}

/// Symmetric, zero-diagonal matrix of pairwise ψ-distances.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix(DMatrix<f64>);

impl DistanceMatrix {
    /// Wraps an existing matrix after checking symmetry, zero diagonal and
    /// nonnegativity.
    pub fn from_matrix(m: DMatrix<f64>) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::Shape("distance matrix must be square".into()));
        }
        let n = m.nrows();
        for j in 0..n {
            if m[(j, j)] != 0.0 {
                return Err(Error::Domain("distance matrix diagonal must be zero".into()));
            }
            for k in 0..j {
                let (a, b) = (m[(j, k)], m[(k, j)]);
                if !(a >= 0.0) || a != b {
                    return Err(Error::Domain(
                        "distance matrix must be symmetric and nonnegative".into(),
                    ));
                }
            }
        }
        Ok(Self(m))
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn n(&self) -> usize {
        self.0.nrows()
    }

    pub fn total(&self) -> f64 {
        self.0.sum()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&v| v == 0.0)
    }

    /// The distance matrix of the rows `idx` of the underlying sample
    /// (repeats allowed), read off without recomputing ψ.
    pub fn resampled(&self, idx: &[usize]) -> Self {
        Self(DMatrix::from_fn(idx.len(), idx.len(), |j, k| self.0[(idx[j], idx[k])]))
    }
}

/// A doubly centered distance matrix A = −CBC.
#[derive(Debug, Clone, PartialEq)]
pub struct CenteredMatrix(DMatrix<f64>);

impl CenteredMatrix {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn n(&self) -> usize {
        self.0.nrows()
    }
}

pub fn eval_psi(psi: &PsiFunction, x: &[f64]) -> Result<f64> {
    psi.eval(x)
}

pub fn distance_matrix(block: &ObservationBlock, psi: &PsiFunction) -> Result<DistanceMatrix> {
    let n = block.n_samples();
    if n < 2 {
        return Err(Error::Size { required: 2, got: n });
    }
    let mut m = DMatrix::zeros(n, n);
    if block.dim() == 1 {
        let x = block.values();
        // Column-major fill; each entry is computed from both sides, which
        // is cheaper than the strided mirror write.
        for (k, col) in m.as_mut_slice().chunks_exact_mut(n).enumerate() {
            let xk = x[k];
            if psi.beta == 1.0 {
                for (v, xj) in col.iter_mut().zip(x) {
                    *v = (xj - xk).abs();
                }
            } else {
                for (v, xj) in col.iter_mut().zip(x) {
                    let d = xj - xk;
                    *v = psi.of_squared_norm(d * d);
                }
            }
        }
    } else {
        for j in 0..n {
            let xj = block.row(j);
            for k in 0..j {
                let sq: f64 = xj.iter().zip(block.row(k)).map(|(a, b)| (a - b) * (a - b)).sum();
                let v = psi.of_squared_norm(sq);
                m[(j, k)] = v;
                m[(k, j)] = v;
            }
        }
    }
    Ok(DistanceMatrix(m))
}

pub fn double_center(b: &DistanceMatrix) -> CenteredMatrix {
    CenteredMatrix(centered_scaled(b.matrix(), 1.0))
}

/// −(B − row means − column means + grand mean)/scale in one pass.
pub(crate) fn centered_scaled(m: &DMatrix<f64>, scale: f64) -> DMatrix<f64> {
    let n = m.nrows();
    let nf = n as f64;
    // B is symmetric, so row means equal column means.
    let means: Vec<f64> = m.as_slice().chunks_exact(n).map(|c| c.iter().sum::<f64>() / nf).collect();
    let grand = means.iter().sum::<f64>() / nf;
    let mut a = m.clone();
    for (col, mk) in a.as_mut_slice().chunks_exact_mut(n).zip(&means) {
        let shift = grand - mk;
        for (v, mj) in col.iter_mut().zip(&means) {
            *v = (mj - *v - shift) / scale;
        }
    }
    a
}

/// Returns B/(|B|/N²) and the scale |B|/N²; a zero matrix maps to itself
/// with scale 0.
pub fn normalize_distance_matrix(b: &DistanceMatrix) -> (DistanceMatrix, f64) {
    let n2 = (b.n() * b.n()) as f64;
    let scale = b.total() / n2;
    if scale == 0.0 {
        return (b.clone(), 0.0);
    }
    (DistanceMatrix(b.matrix() / scale), scale)
}

/// Entry sums of products and powers of B. Field names follow the notation
/// `h` = Hadamard product, `2`/`3`/`4` = matrix powers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatrixStats {
    pub abs_b: f64,
    pub abs_bhb: f64,
    pub abs_b2: f64,
    pub abs_b3: f64,
    pub abs_b4: f64,
    pub abs_b2hb: f64,
    pub abs_b3hb: f64,
    pub abs_bhb_dot_b: f64,
    pub abs_bhbhb: f64,
    pub abs_colsum3: f64,
    pub n: usize,
}

/// Computes all functionals with a single N×N matrix product.
///
/// With s the column-sum vector: |B²| = Σs², |B³| = sᵀBs, |B⁴| = |Bs|²,
/// |B³∘B| = ‖B²‖²_F (by symmetry) and |(B∘B)B| = Σ_k rowsum(B∘B)_k s_k.
pub fn matrix_statistics(b: &DistanceMatrix) -> MatrixStats {
    let m = b.matrix();
    let b2 = m * m;
    let mut stats = matrix_statistics_second_order(b);
    stats.abs_b2hb = m.iter().zip(b2.iter()).map(|(x, y)| x * y).sum();
    stats.abs_b3hb = b2.norm_squared();
    stats
}

/// Everything except |B²∘B| and |B³∘B| (left NaN), in O(N²). Enough for
/// the first two moments; the third and fourth need the matrix product.
pub fn matrix_statistics_second_order(b: &DistanceMatrix) -> MatrixStats {
    let m = b.matrix();
    let n = m.nrows();
    let s: DVector<f64> = m.column_sum();
    let mut hs = DVector::zeros(n);
    let mut abs_bhbhb = 0.0;
    for (col, h) in m.as_slice().chunks_exact(n).zip(hs.iter_mut()) {
        for x in col {
            let x2 = x * x;
            *h += x2;
            abs_bhbhb += x2 * x;
        }
    }
    let bs = m * &s;
    MatrixStats {
        abs_b: s.sum(),
        abs_bhb: hs.sum(),
        abs_b2: s.norm_squared(),
        abs_b3: s.dot(&bs),
        abs_b4: bs.norm_squared(),
        abs_b2hb: f64::NAN,
        abs_b3hb: f64::NAN,
        abs_bhb_dot_b: hs.dot(&s),
        abs_bhbhb,
        abs_colsum3: s.iter().map(|v| v * v * v).sum(),
        n,
    }
}
