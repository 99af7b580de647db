use super::{Dataset, LogDensity};
use crate::error::{Error, Result};
use crate::linalg::dot;

pub const DEFAULT_PRIOR_VARIANCE: f64 = 100.0;

/// Posterior of Bayesian logistic regression with prior `N(0, prior_variance·I)`.
#[derive(Clone, Debug)]
pub struct BlrTarget {
    d: usize,
    /// Row-major `n_data × d`.
    design: Vec<f64>,
    labels: Vec<f64>,
    prior_variance: f64,
}

/// `log(1 + exp(z))` without overflow.
#[inline]
pub(crate) fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

impl BlrTarget {
    pub fn new(design: Vec<f64>, labels: Vec<f64>, d: usize, prior_variance: f64) -> Result<Self> {
        if d == 0 || labels.is_empty() {
            return Err(Error::usage("BLR target needs at least one row and one feature"));
        }
        if design.len() != labels.len() * d {
            return Err(Error::usage("design matrix shape does not match labels"));
        }
        if labels.iter().any(|b| *b != 1.0 && *b != -1.0) {
            return Err(Error::usage("BLR labels must be -1 or +1"));
        }
        if !(prior_variance > 0.0) {
            return Err(Error::usage("prior variance must be positive"));
        }
        Ok(BlrTarget {
            d,
            design,
            labels,
            prior_variance,
        })
    }

    pub fn from_dataset(ds: &Dataset, prior_variance: f64) -> Result<Self> {
        Self::new(
            ds.features().to_vec(),
            ds.labels().to_vec(),
            ds.n_features(),
            prior_variance,
        )
    }

    pub fn n_data(&self) -> usize {
        self.labels.len()
    }
}

impl LogDensity for BlrTarget {
    fn dim(&self) -> usize {
        self.d
    }

    fn log_density(&self, x: &[f64]) -> f64 {
        let prior = -dot(x, x) / (2.0 * self.prior_variance);
        let lik: f64 = self
            .design
            .chunks_exact(self.d)
            .zip(&self.labels)
            .map(|(a, b)| softplus(-b * dot(a, x)))
            .sum();
        prior - lik
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{chain_rng, fill_standard_normal};

    fn toy(n: usize, d: usize, seed: u64) -> BlrTarget {
        let mut rng = chain_rng(seed, 0);
        let mut design = vec![0.0; n * d];
        fill_standard_normal(&mut rng, &mut design);
        let labels = (0..n).map(|i| if i % 3 == 0 { -1.0 } else { 1.0 }).collect();
        BlrTarget::new(design, labels, d, DEFAULT_PRIOR_VARIANCE).unwrap()
    }

    #[test]
    fn zero_weights_give_n_log_half() {
        let t = toy(37, 4, 1);
        let expected = -37.0 * std::f64::consts::LN_2;
        assert!((t.log_density(&[0.0; 4]) - expected).abs() < 1e-12);
    }

    #[test]
    fn softplus_is_overflow_safe() {
        assert_eq!(softplus(1000.0), 1000.0);
        assert!(softplus(-1000.0) >= 0.0 && softplus(-1000.0) < 1e-300);
        assert!((softplus(0.0) - std::f64::consts::LN_2).abs() < 1e-16);
        assert!(toy(5, 2, 2).log_density(&[1e6, -1e6]).is_finite());
    }

    #[test]
    fn concave_along_random_lines() {
        let t = toy(50, 3, 3);
        let mut rng = chain_rng(4, 0);
        let h = 1e-3;
        for _ in 0..200 {
            let mut x = vec![0.0; 3];
            let mut v = vec![0.0; 3];
            fill_standard_normal(&mut rng, &mut x);
            fill_standard_normal(&mut rng, &mut v);
            let at = |s: f64| {
                let p: Vec<f64> = x.iter().zip(&v).map(|(a, b)| a + s * b).collect();
                t.log_density(&p)
            };
            let second = (at(h) - 2.0 * at(0.0) + at(-h)) / (h * h);
            assert!(second <= 1e-8, "second derivative {second}");
        }
    }
}
