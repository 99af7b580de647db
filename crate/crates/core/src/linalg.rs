//! Small dense linear algebra: symmetric matrices, packed lower-triangular
//! factors, Cholesky with diagonal regularization and triangular solves.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense row-major square matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    n: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(n: usize) -> Self {
        Matrix {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &v) in diag.iter().enumerate() {
            m.set(i, i, v);
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::usage("matrix rows must form a square matrix"));
        }
        Ok(Matrix {
            n,
            data: rows.iter().flatten().copied().collect(),
        })
    }

    pub fn from_fn(n: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m.data[i * n + j] = f(i, j);
            }
        }
        m
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.n).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    pub fn scale(&mut self, s: f64) {
        self.data.iter_mut().for_each(|v| *v *= s);
    }

    pub fn add_diagonal(&mut self, eps: f64) {
        for i in 0..self.n {
            self.data[i * self.n + i] += eps;
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Frobenius norm of `self - other`.
    pub fn frobenius_distance(&self, other: &Matrix) -> f64 {
        assert_eq!(self.n, other.n);
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    /// Largest absolute asymmetry `|a_ij - a_ji|`.
    pub fn asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.n {
            for j in 0..i {
                worst = worst.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        worst
    }

    pub fn mul_vec(&self, x: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            *o = dot(self.row(i), x);
        }
    }

    pub fn matmul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.n, other.n);
        let n = self.n;
        let mut out = Matrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += a * other.get(k, j);
                }
            }
        }
        out
    }
}

/// Lower-triangular matrix in packed row storage: row `i` holds `i + 1` entries.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LowerTriangular {
    n: usize,
    data: Vec<f64>,
}

#[inline]
fn packed_index(i: usize, j: usize) -> usize {
    i * (i + 1) / 2 + j
}

impl LowerTriangular {
    pub fn identity(n: usize) -> Self {
        let mut data = vec![0.0; n * (n + 1) / 2];
        for i in 0..n {
            data[packed_index(i, i)] = 1.0;
        }
        LowerTriangular { n, data }
    }

    /// Takes the lower triangle of `m`; entries above the diagonal are ignored.
    pub fn from_lower(m: &Matrix) -> Self {
        let n = m.dim();
        let mut data = Vec::with_capacity(n * (n + 1) / 2);
        for i in 0..n {
            data.extend_from_slice(&m.row(i)[..=i]);
        }
        LowerTriangular { n, data }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        if j > i {
            0.0
        } else {
            self.data[packed_index(i, j)]
        }
    }

    #[inline]
    fn row(&self, i: usize) -> &[f64] {
        let start = packed_index(i, 0);
        &self.data[start..start + i + 1]
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.data[packed_index(i, i)]).collect()
    }

    pub fn to_dense(&self) -> Matrix {
        Matrix::from_fn(self.n, |i, j| self.get(i, j))
    }

    /// `out = L y`.
    #[inline]
    pub fn mul_vec(&self, y: &[f64], out: &mut [f64]) {
        for i in 0..self.n {
            out[i] = dot(self.row(i), &y[..=i]);
        }
    }

    /// Solves `L y = b` by forward substitution.
    #[inline]
    pub fn solve(&self, b: &[f64], out: &mut [f64]) {
        for i in 0..self.n {
            let row = self.row(i);
            let s = dot(&row[..i], &out[..i]);
            out[i] = (b[i] - s) / row[i];
        }
    }

    /// `‖L⁻¹ b‖²`, using `scratch` for the solve.
    pub fn inverse_quadratic_form(&self, b: &[f64], scratch: &mut [f64]) -> f64 {
        self.solve(b, scratch);
        dot(scratch, scratch)
    }

    /// `‖L⁻¹ (x - center)‖²` with the difference fused into the substitution.
    #[inline]
    pub fn whitened_norm_sq(&self, x: &[f64], center: &[f64], scratch: &mut [f64]) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.n {
            let row = self.row(i);
            let s = dot(&row[..i], &scratch[..i]);
            let z = (x[i] - center[i] - s) / row[i];
            scratch[i] = z;
            acc += z * z;
        }
        acc
    }

    /// `log det(L L^T) = 2 Σ log l_ii`.
    pub fn log_det_gram(&self) -> f64 {
        2.0 * (0..self.n)
            .map(|i| self.data[packed_index(i, i)].ln())
            .sum::<f64>()
    }

    /// `L L^T` as a dense matrix.
    pub fn gram(&self) -> Matrix {
        let n = self.n;
        let mut out = Matrix::zeros(n);
        for i in 0..n {
            for j in 0..=i {
                let v = dot(&self.row(i)[..=j], &self.row(j)[..=j]);
                out.set(i, j, v);
                out.set(j, i, v);
            }
        }
        out
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Plain Cholesky factorization; `None` if `a` is not numerically positive definite.
///
/// A pivot counts as non-positive when it falls below `n·ε_mach·max_i a_ii`, so
/// rank-deficient inputs fail instead of producing a factor with round-off
/// pivots.
pub fn cholesky(a: &Matrix) -> Option<LowerTriangular> {
    let n = a.dim();
    let max_diag = (0..n).map(|i| a.get(i, i).abs()).fold(0.0, f64::max);
    let tol = n as f64 * f64::EPSILON * max_diag;
    let mut l = LowerTriangular {
        n,
        data: vec![0.0; n * (n + 1) / 2],
    };
    for i in 0..n {
        for j in 0..=i {
            let (ri, rj) = (packed_index(i, 0), packed_index(j, 0));
            let s = dot(&l.data[ri..ri + j], &l.data[rj..rj + j]);
            if i == j {
                let pivot = a.get(i, i) - s;
                if !pivot.is_finite() || pivot <= tol {
                    return None;
                }
                l.data[ri + i] = pivot.sqrt();
            } else {
                let v = (a.get(i, j) - s) / l.data[rj + j];
                if !v.is_finite() {
                    return None;
                }
                l.data[ri + j] = v;
            }
        }
    }
    Some(l)
}

/// Result of [`cholesky_regularized`].
#[derive(Clone, Debug)]
pub struct RegularizedCholesky {
    pub factor: LowerTriangular,
    /// Diagonal shift that was added; `0.0` when `Σ` factored as given.
    pub shift: f64,
}

/// Maximum number of ×10 escalations of the regularization shift.
pub const MAX_ESCALATIONS: u32 = 8;

/// Cholesky of a symmetric `sigma`, retrying on `Σ + εI` with `ε` growing by
/// ×10 up to [`MAX_ESCALATIONS`] times.
pub fn cholesky_regularized(sigma: &Matrix, eps: f64) -> Result<RegularizedCholesky> {
    let n = sigma.dim();
    let scale = (0..n).map(|i| sigma.get(i, i).abs()).fold(1.0, f64::max);
    if sigma.asymmetry() > 1e-9 * scale {
        return Err(Error::usage("cholesky input is not symmetric"));
    }
    if let Some(factor) = cholesky(sigma) {
        return Ok(RegularizedCholesky { factor, shift: 0.0 });
    }
    let mut shift = eps;
    for _ in 0..=MAX_ESCALATIONS {
        let mut shifted = sigma.clone();
        shifted.add_diagonal(shift);
        if let Some(factor) = cholesky(&shifted) {
            return Ok(RegularizedCholesky { factor, shift });
        }
        shift *= 10.0;
    }
    Err(Error::Numerical(format!(
        "Cholesky factorization failed even with diagonal shift {:.3e}",
        shift / 10.0
    )))
}
