use rand::RngCore;

use super::{with_scratch, LogDensity};
use crate::error::{Error, Result};
use crate::linalg::{cholesky, norm, LowerTriangular, Matrix};
use crate::rng::fill_standard_normal;

/// Location τ and Cholesky factor of Π, shared by the elliptical families.
#[derive(Clone, Debug)]
struct Elliptical {
    location: Vec<f64>,
    chol: LowerTriangular,
}

impl Elliptical {
    fn new(location: Vec<f64>, scale: &Matrix) -> Result<Self> {
        if location.is_empty() {
            return Err(Error::usage("target dimension must be positive"));
        }
        if scale.dim() != location.len() {
            return Err(Error::usage(format!(
                "location has length {} but scale matrix is {}x{}",
                location.len(),
                scale.dim(),
                scale.dim()
            )));
        }
        let chol = cholesky(scale)
            .ok_or_else(|| Error::usage("scale matrix is not positive definite"))?;
        Ok(Elliptical { location, chol })
    }

    /// `(x-τ)^T Π⁻¹ (x-τ)` via triangular solve.
    #[inline]
    fn quadratic_form(&self, x: &[f64]) -> f64 {
        with_scratch(self.location.len(), |buf| {
            self.chol.whitened_norm_sq(x, &self.location, buf)
        })
    }
}

/// `N_d(τ, Π)`, unnormalized.
#[derive(Clone, Debug)]
pub struct GaussianTarget {
    inner: Elliptical,
}

impl GaussianTarget {
    pub fn new(mean: Vec<f64>, covariance: &Matrix) -> Result<Self> {
        Ok(GaussianTarget {
            inner: Elliptical::new(mean, covariance)?,
        })
    }

    pub fn standard(d: usize) -> Self {
        Self::new(vec![0.0; d], &Matrix::identity(d)).expect("identity is positive definite")
    }

    pub fn mean(&self) -> &[f64] {
        &self.inner.location
    }

    pub fn covariance(&self) -> Matrix {
        self.inner.chol.gram()
    }

    pub fn cholesky_factor(&self) -> &LowerTriangular {
        &self.inner.chol
    }

    /// Exact draw `τ + L z`.
    pub fn sample<R: RngCore>(&self, rng: &mut R) -> Vec<f64> {
        let d = self.inner.location.len();
        let mut z = vec![0.0; d];
        fill_standard_normal(rng, &mut z);
        let mut x = vec![0.0; d];
        self.inner.chol.mul_vec(&z, &mut x);
        for (xi, ti) in x.iter_mut().zip(&self.inner.location) {
            *xi += ti;
        }
        x
    }

    /// Normalized log density, used by mixtures.
    fn log_pdf(&self, x: &[f64]) -> f64 {
        let d = x.len() as f64;
        -0.5 * (self.inner.quadratic_form(x)
            + self.inner.chol.log_det_gram()
            + d * (2.0 * std::f64::consts::PI).ln())
    }
}

impl LogDensity for GaussianTarget {
    fn dim(&self) -> usize {
        self.inner.location.len()
    }

    fn log_density(&self, x: &[f64]) -> f64 {
        -0.5 * self.inner.quadratic_form(x)
    }
}

/// `Exp_d(x; τ, Π) = exp(-((x-τ)^T Π⁻¹ (x-τ))^{1/2})`.
#[derive(Clone, Debug)]
pub struct MultivariateExponentialTarget {
    inner: Elliptical,
}

impl MultivariateExponentialTarget {
    pub fn new(location: Vec<f64>, scale: &Matrix) -> Result<Self> {
        Ok(MultivariateExponentialTarget {
            inner: Elliptical::new(location, scale)?,
        })
    }
}

impl LogDensity for MultivariateExponentialTarget {
    fn dim(&self) -> usize {
        self.inner.location.len()
    }

    fn log_density(&self, x: &[f64]) -> f64 {
        -self.inner.quadratic_form(x).sqrt()
    }
}

/// Multivariate t with `dof` degrees of freedom, unnormalized so that the
/// value at the location is 0.
#[derive(Clone, Debug)]
pub struct MultivariateTTarget {
    dof: f64,
    inner: Elliptical,
}

impl MultivariateTTarget {
    pub fn new(dof: f64, location: Vec<f64>, scale: &Matrix) -> Result<Self> {
        if !(dof > 0.0 && dof.is_finite()) {
            return Err(Error::usage("degrees of freedom must be positive"));
        }
        Ok(MultivariateTTarget {
            dof,
            inner: Elliptical::new(location, scale)?,
        })
    }

    pub fn location(&self) -> &[f64] {
        &self.inner.location
    }
}

impl LogDensity for MultivariateTTarget {
    fn dim(&self) -> usize {
        self.inner.location.len()
    }

    fn log_density(&self, x: &[f64]) -> f64 {
        let d = self.inner.location.len() as f64;
        -0.5 * (d + self.dof) * (self.inner.quadratic_form(x) / self.dof).ln_1p()
    }
}

/// Finite mixture of Gaussians, `log Σ_k w_k N(x; μ_k, Σ_k)`.
#[derive(Clone, Debug)]
pub struct GaussianMixture {
    log_weights: Vec<f64>,
    components: Vec<GaussianTarget>,
}

impl GaussianMixture {
    pub fn new(weights: &[f64], components: Vec<GaussianTarget>) -> Result<Self> {
        if components.is_empty() || weights.len() != components.len() {
            return Err(Error::usage("mixture needs one positive weight per component"));
        }
        let d = components[0].dim();
        if components.iter().any(|c| c.dim() != d) {
            return Err(Error::usage("mixture components differ in dimension"));
        }
        if weights.iter().any(|w| !(*w > 0.0)) {
            return Err(Error::usage("mixture weights must be positive"));
        }
        let total: f64 = weights.iter().sum();
        Ok(GaussianMixture {
            log_weights: weights.iter().map(|w| (w / total).ln()).collect(),
            components,
        })
    }
}

impl LogDensity for GaussianMixture {
    fn dim(&self) -> usize {
        self.components[0].dim()
    }

    fn log_density(&self, x: &[f64]) -> f64 {
        let terms: Vec<f64> = self
            .components
            .iter()
            .zip(&self.log_weights)
            .map(|(c, lw)| lw + c.log_pdf(x))
            .collect();
        let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if max == f64::NEG_INFINITY {
            return max;
        }
        max + terms.iter().map(|t| (t - max).exp()).sum::<f64>().ln()
    }
}

/// Posterior with prior `Exp_d(0, I)` and likelihood factors
/// `Exp_d(z_m; x, Σ^(m))`, one per observation.
#[derive(Clone, Debug)]
pub struct MvExpPosterior {
    observations: Vec<Vec<f64>>,
    noise_factors: Vec<LowerTriangular>,
}

impl MvExpPosterior {
    pub fn new(observations: Vec<Vec<f64>>, noise_covariances: &[Matrix]) -> Result<Self> {
        if observations.is_empty() || observations.len() != noise_covariances.len() {
            return Err(Error::usage("need one noise covariance per observation"));
        }
        let d = observations[0].len();
        let mut noise_factors = Vec::with_capacity(observations.len());
        for (z, cov) in observations.iter().zip(noise_covariances) {
            if z.len() != d || cov.dim() != d {
                return Err(Error::usage("observation dimensions disagree"));
            }
            noise_factors.push(
                cholesky(cov)
                    .ok_or_else(|| Error::usage("noise covariance is not positive definite"))?,
            );
        }
        Ok(MvExpPosterior {
            observations,
            noise_factors,
        })
    }

    /// Noise covariance of the m-th measurement (1-based):
    /// `(m+1)²/d` on the diagonal and `m(m+1)/d` off it.
    pub fn noise_covariance(m: usize, d: usize) -> Matrix {
        let m = m as f64;
        let dd = d as f64;
        Matrix::from_fn(d, |i, j| {
            if i == j {
                (m + 1.0) * (m + 1.0) / dd
            } else {
                m * (m + 1.0) / dd
            }
        })
    }

    pub fn observations(&self) -> &[Vec<f64>] {
        &self.observations
    }
}

impl LogDensity for MvExpPosterior {
    fn dim(&self) -> usize {
        self.observations[0].len()
    }

    fn log_density(&self, x: &[f64]) -> f64 {
        let d = x.len();
        // Exp_d(z; x, Σ) is symmetric in (z, x).
        with_scratch(d, |buf| {
            let mut acc = -norm(x);
            for (z, l) in self.observations.iter().zip(&self.noise_factors) {
                acc -= l.whitened_norm_sq(z, x, buf).sqrt();
            }
            acc
        })
    }
}

/// User-supplied log density.
pub struct FnTarget<F> {
    dim: usize,
    f: F,
}

impl<F> FnTarget<F>
where
    F: Fn(&[f64]) -> f64 + Send + Sync,
{
    pub fn new(dim: usize, f: F) -> Self {
        FnTarget { dim, f }
    }
}

impl<F> LogDensity for FnTarget<F>
where
    F: Fn(&[f64]) -> f64 + Send + Sync,
{
    fn dim(&self) -> usize {
        self.dim
    }

    fn log_density(&self, x: &[f64]) -> f64 {
        (self.f)(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::chain_rng;
    use crate::transform::AffineMap;
    use proptest::prelude::*;

    fn g1_scale(d: usize) -> Matrix {
        Matrix::from_fn(d, |i, j| {
            let s = (((i + 1) * (j + 1)) as f64).sqrt();
            if i == j {
                s
            } else {
                0.5 * s
            }
        })
    }

    #[test]
    fn exponential_at_location_is_zero() {
        let t = MultivariateExponentialTarget::new(vec![0.0; 3], &Matrix::identity(3)).unwrap();
        assert_eq!(t.log_density(&[0.0; 3]), 0.0);
    }

    #[test]
    fn exponential_is_negative_norm_for_identity_scale() {
        let t = MultivariateExponentialTarget::new(vec![0.0; 2], &Matrix::identity(2)).unwrap();
        assert!((t.log_density(&[3.0, 4.0]) + 5.0).abs() < 1e-15);
    }

    #[test]
    fn t_at_location_is_zero() {
        let tau = vec![1.0, -2.0, 3.0];
        let t = MultivariateTTarget::new(10.0, tau.clone(), &g1_scale(3)).unwrap();
        assert_eq!(t.log_density(&tau), 0.0);
    }

    #[test]
    fn t_matches_explicit_inverse_in_2d() {
        // Π = [[2, 0.5], [0.5, 1]], Π⁻¹ = [[1, -0.5], [-0.5, 2]] / 1.75
        let pi = Matrix::from_rows(&[vec![2.0, 0.5], vec![0.5, 1.0]]).unwrap();
        let t = MultivariateTTarget::new(4.0, vec![0.0, 0.0], &pi).unwrap();
        let x = [1.0, 2.0];
        let q: f64 = (x[0] * x[0] - x[0] * x[1] + 2.0 * x[1] * x[1]) / 1.75;
        let expected = -(2.0 + 4.0) / 2.0 * (1.0f64 + q / 4.0).ln();
        assert!((t.log_density(&x) - expected).abs() < 1e-13);
    }

    #[test]
    fn gaussian_mixture_single_component_is_normalized_gaussian() {
        let g = GaussianTarget::standard(2);
        let m = GaussianMixture::new(&[1.0], vec![g]).unwrap();
        let expected = -0.5 * (1.0 + 4.0) - (2.0 * std::f64::consts::PI).ln();
        assert!((m.log_density(&[1.0, 2.0]) - expected).abs() < 1e-13);
    }

    #[test]
    fn mvexp_posterior_matches_manual_sum() {
        let d = 3;
        let obs = vec![vec![1.0, 0.0, -1.0], vec![0.5, 0.5, 0.5]];
        let covs: Vec<Matrix> = (1..=2).map(|m| MvExpPosterior::noise_covariance(m, d)).collect();
        let post = MvExpPosterior::new(obs.clone(), &covs).unwrap();
        let x = [0.2, -0.3, 0.4];
        let mut expected = -norm(&x);
        for (z, c) in obs.iter().zip(&covs) {
            let e = MultivariateExponentialTarget::new(z.clone(), c).unwrap();
            expected += e.log_density(&x);
        }
        assert!((post.log_density(&x) - expected).abs() < 1e-12);
    }

    #[test]
    fn non_positive_definite_scale_rejected() {
        let bad = Matrix::from_diagonal(&[1.0, -1.0]);
        assert!(GaussianTarget::new(vec![0.0, 0.0], &bad).is_err());
    }

    fn random_rotation(d: usize, seed: u64) -> Matrix {
        // Gram-Schmidt on a Gaussian matrix.
        let mut rng = chain_rng(seed, 0);
        let mut cols: Vec<Vec<f64>> = Vec::new();
        while cols.len() < d {
            let mut v = vec![0.0; d];
            fill_standard_normal(&mut rng, &mut v);
            for c in &cols {
                let p: f64 = v.iter().zip(c).map(|(a, b)| a * b).sum();
                v.iter_mut().zip(c).for_each(|(a, b)| *a -= p * b);
            }
            let n = norm(&v);
            if n > 1e-8 {
                cols.push(v.into_iter().map(|a| a / n).collect());
            }
        }
        Matrix::from_fn(d, |i, j| cols[j][i])
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn isotropic_t_is_rotation_invariant(seed in 0u64..10_000, scale in 0.1f64..10.0) {
            let d = 5;
            let t = MultivariateTTarget::new(10.0, vec![0.0; d], &Matrix::identity(d)).unwrap();
            let r = random_rotation(d, seed);
            let mut rng = chain_rng(seed, 1);
            let mut x = vec![0.0; d];
            fill_standard_normal(&mut rng, &mut x);
            x.iter_mut().for_each(|v| *v *= scale);
            let mut rx = vec![0.0; d];
            r.mul_vec(&x, &mut rx);
            prop_assert!((t.log_density(&x) - t.log_density(&rx)).abs() < 1e-9);
        }

        #[test]
        fn densities_survive_affine_round_trip(seed in 0u64..10_000) {
            let d = 4;
            let map = AffineMap::random_general(d, seed);
            let mut rng = chain_rng(seed, 2);
            let mut x = vec![0.0; d];
            fill_standard_normal(&mut rng, &mut x);
            let back = map.apply_vec(&map.invert_vec(&x));
            let tau = vec![0.5, -1.0, 2.0, 0.0];
            let targets: Vec<Box<dyn LogDensity>> = vec![
                Box::new(GaussianTarget::new(tau.clone(), &g1_scale(d)).unwrap()),
                Box::new(MultivariateExponentialTarget::new(tau.clone(), &g1_scale(d)).unwrap()),
                Box::new(MultivariateTTarget::new(10.0, tau.clone(), &g1_scale(d)).unwrap()),
            ];
            for t in &targets {
                prop_assert!((t.log_density(&x) - t.log_density(&back)).abs() < 1e-10);
            }
        }
    }
}
