use serde::{Deserialize, Serialize};

use crate::linalg::{LowerTriangular, Matrix};
use crate::rng::{chain_rng, fill_standard_normal, uniform};

/// `α(y) = W y + c`, with `W` the identity, a positive diagonal, or a
/// lower-triangular factor with positive diagonal.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AffineMap {
    Identity { dim: usize },
    Shift { c: Vec<f64> },
    Diagonal { c: Vec<f64>, v: Vec<f64> },
    General { c: Vec<f64>, w: LowerTriangular },
}

impl AffineMap {
    pub fn identity(dim: usize) -> Self {
        AffineMap::Identity { dim }
    }

    /// Build from an optional shift and optional linear part, collapsing to
    /// the simplest kind.
    pub fn from_parts(dim: usize, c: Option<Vec<f64>>, linear: Linear) -> Self {
        let c = c.unwrap_or_else(|| vec![0.0; dim]);
        match linear {
            Linear::Identity if c.iter().all(|&v| v == 0.0) => AffineMap::Identity { dim },
            Linear::Identity => AffineMap::Shift { c },
            Linear::Diagonal(v) => AffineMap::Diagonal { c, v },
            Linear::Lower(w) => AffineMap::General { c, w },
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            AffineMap::Identity { dim } => *dim,
            AffineMap::Shift { c } | AffineMap::Diagonal { c, .. } | AffineMap::General { c, .. } => {
                c.len()
            }
        }
    }

    pub fn is_identity(&self) -> bool {
        matches!(self, AffineMap::Identity { .. })
    }

    /// The shift `c`.
    pub fn shift(&self) -> Vec<f64> {
        match self {
            AffineMap::Identity { dim } => vec![0.0; *dim],
            AffineMap::Shift { c } | AffineMap::Diagonal { c, .. } | AffineMap::General { c, .. } => {
                c.clone()
            }
        }
    }

    /// The linear part `W` as a dense matrix.
    pub fn linear(&self) -> Matrix {
        match self {
            AffineMap::Identity { dim } => Matrix::identity(*dim),
            AffineMap::Shift { c } => Matrix::identity(c.len()),
            AffineMap::Diagonal { v, .. } => Matrix::from_diagonal(v),
            AffineMap::General { w, .. } => w.to_dense(),
        }
    }

    /// `W Wᵀ`, the covariance a standard-normal latent variable is mapped to.
    pub fn covariance(&self) -> Matrix {
        match self {
            AffineMap::Identity { dim } => Matrix::identity(*dim),
            AffineMap::Shift { c } => Matrix::identity(c.len()),
            AffineMap::Diagonal { v, .. } => {
                Matrix::from_diagonal(&v.iter().map(|s| s * s).collect::<Vec<_>>())
            }
            AffineMap::General { w, .. } => w.gram(),
        }
    }

    /// `out = W y + c`.
    #[inline]
    pub fn apply(&self, y: &[f64], out: &mut [f64]) {
        match self {
            AffineMap::Identity { .. } => out.copy_from_slice(y),
            AffineMap::Shift { c } => {
                for ((o, yi), ci) in out.iter_mut().zip(y).zip(c) {
                    *o = yi + ci;
                }
            }
            AffineMap::Diagonal { c, v } => {
                for (i, o) in out.iter_mut().enumerate() {
                    *o = v[i] * y[i] + c[i];
                }
            }
            AffineMap::General { c, w } => {
                w.mul_vec(y, out);
                for (o, ci) in out.iter_mut().zip(c) {
                    *o += ci;
                }
            }
        }
    }

    /// `out = W⁻¹ (x − c)`.
    #[inline]
    pub fn invert(&self, x: &[f64], out: &mut [f64]) {
        match self {
            AffineMap::Identity { .. } => out.copy_from_slice(x),
            AffineMap::Shift { c } => {
                for ((o, xi), ci) in out.iter_mut().zip(x).zip(c) {
                    *o = xi - ci;
                }
            }
            AffineMap::Diagonal { c, v } => {
                for (i, o) in out.iter_mut().enumerate() {
                    *o = (x[i] - c[i]) / v[i];
                }
            }
            AffineMap::General { c, w } => {
                let centered: Vec<f64> = x.iter().zip(c).map(|(a, b)| a - b).collect();
                w.solve(&centered, out);
            }
        }
    }

    pub fn apply_vec(&self, y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; y.len()];
        self.apply(y, &mut out);
        out
    }

    pub fn invert_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; x.len()];
        self.invert(x, &mut out);
        out
    }

    /// A random general map with well-conditioned factor, for tests.
    pub fn random_general(d: usize, seed: u64) -> Self {
        let mut rng = chain_rng(seed, 0);
        let mut c = vec![0.0; d];
        fill_standard_normal(&mut rng, &mut c);
        let mut m = Matrix::zeros(d);
        for i in 0..d {
            for j in 0..i {
                m.set(i, j, 0.5 * uniform(&mut rng, -1.0, 1.0));
            }
            m.set(i, i, uniform(&mut rng, 0.5, 2.0));
        }
        AffineMap::General {
            c,
            w: LowerTriangular::from_lower(&m),
        }
    }
}

/// Linear part passed to [`AffineMap::from_parts`].
#[derive(Clone, Debug)]
pub enum Linear {
    Identity,
    Diagonal(Vec<f64>),
    Lower(LowerTriangular),
}
