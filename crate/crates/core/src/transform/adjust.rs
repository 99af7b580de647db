use serde::{Deserialize, Serialize};

use super::affine::{AffineMap, Linear};
use super::median::MedianAccumulator;
use super::moments::MomentAccumulator;
use crate::linalg::{cholesky_regularized, Matrix};

/// Floor applied to learned coordinate scales.
pub const VARIANCE_FLOOR: f64 = 1e-12;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Centering {
    #[default]
    None,
    Mean,
    Median,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scaling {
    #[default]
    None,
    Variance,
    Covariance,
}

/// Which parts of the affine map are learned.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdjustmentConfig {
    #[serde(default)]
    pub centering: Centering,
    #[serde(default)]
    pub scaling: Scaling,
    /// Base diagonal shift for a failing covariance factorization; the
    /// default scales with the mean coordinate variance.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub regularization: Option<f64>,
}

impl AdjustmentConfig {
    pub fn new(centering: Centering, scaling: Scaling) -> Self {
        AdjustmentConfig {
            centering,
            scaling,
            regularization: None,
        }
    }

    pub fn is_none(&self) -> bool {
        self.centering == Centering::None && self.scaling == Scaling::None
    }

    /// Short label such as `Cen+Cov` or `Plain`.
    pub fn label(&self) -> String {
        let mut parts = Vec::new();
        match self.centering {
            Centering::None => {}
            Centering::Mean => parts.push("Cen"),
            Centering::Median => parts.push("Med"),
        }
        match self.scaling {
            Scaling::None => {}
            Scaling::Variance => parts.push("Var"),
            Scaling::Covariance => parts.push("Cov"),
        }
        if parts.is_empty() {
            "Plain".to_owned()
        } else {
            parts.join("+")
        }
    }
}

/// `1e−10 · max(1, tr(Σ)/d)`.
pub fn default_regularization(sigma: &Matrix) -> f64 {
    1e-10 * (sigma.trace() / sigma.dim() as f64).max(1.0)
}

/// Outcome of rebuilding the map. `map` is `None` when the previous map
/// should be kept.
#[derive(Clone, Debug)]
pub struct TransformUpdate {
    pub map: Option<AffineMap>,
    pub warning: Option<String>,
}

/// Accumulators required by an [`AdjustmentConfig`].
#[derive(Clone, Debug)]
pub struct AdaptationState {
    cfg: AdjustmentConfig,
    moments: MomentAccumulator,
    median: Option<MedianAccumulator>,
}

impl AdaptationState {
    pub fn new(cfg: AdjustmentConfig, d: usize) -> Self {
        AdaptationState {
            cfg,
            moments: MomentAccumulator::new(
                d,
                cfg.scaling == Scaling::Variance,
                cfg.scaling == Scaling::Covariance,
            ),
            median: (cfg.centering == Centering::Median).then(|| MedianAccumulator::new(d)),
        }
    }

    pub fn config(&self) -> &AdjustmentConfig {
        &self.cfg
    }

    pub fn count(&self) -> u64 {
        self.moments.count()
    }

    pub fn moments(&self) -> &MomentAccumulator {
        &self.moments
    }

    pub fn median(&self) -> Option<&MedianAccumulator> {
        self.median.as_ref()
    }

    pub fn incorporate_batch(&mut self, blocks: &[&[f64]]) {
        self.moments.incorporate_batch(blocks);
        if let Some(m) = &mut self.median {
            m.incorporate_batch(blocks);
        }
    }

    pub fn build(&self) -> TransformUpdate {
        build_transform(&self.cfg, &self.moments, self.median.as_ref())
    }
}

pub(crate) fn build_transform(
    cfg: &AdjustmentConfig,
    moments: &MomentAccumulator,
    median: Option<&MedianAccumulator>,
) -> TransformUpdate {
    let d = moments.dim();
    let keep = |warning: String| TransformUpdate {
        map: None,
        warning: Some(warning),
    };
    if moments.count() == 0 {
        return keep("no samples available for the transform update".into());
    }
    let c = match cfg.centering {
        Centering::None => None,
        Centering::Mean => Some(moments.mean().to_vec()),
        Centering::Median => Some(median.expect("median accumulator").median().to_vec()),
    };
    let mut warning = None;
    let linear = match cfg.scaling {
        Scaling::None => Linear::Identity,
        Scaling::Variance => {
            let Some(var) = moments.variance() else {
                return keep("variance adjustment needs at least two samples".into());
            };
            let mut floored = 0;
            let v = var
                .iter()
                .map(|s| {
                    let v = s.sqrt();
                    if v >= VARIANCE_FLOOR {
                        v
                    } else {
                        floored += 1;
                        VARIANCE_FLOOR
                    }
                })
                .collect();
            if floored > 0 {
                warning = Some(format!(
                    "{floored} coordinate scale(s) clamped to {VARIANCE_FLOOR:e}"
                ));
            }
            Linear::Diagonal(v)
        }
        Scaling::Covariance => {
            let Some(sigma) = moments.covariance() else {
                return keep("covariance adjustment needs at least two samples".into());
            };
            let eps = cfg
                .regularization
                .unwrap_or_else(|| default_regularization(&sigma));
            match cholesky_regularized(&sigma, eps) {
                Ok(reg) => {
                    if reg.shift > 0.0 {
                        warning = Some(format!(
                            "covariance regularized with diagonal shift {:.3e}",
                            reg.shift
                        ));
                    }
                    Linear::Lower(reg.factor)
                }
                Err(e) => return keep(format!("transform update skipped: {e}")),
            }
        }
    };
    TransformUpdate {
        map: Some(AffineMap::from_parts(d, c, linear)),
        warning,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::LowerTriangular;
    use crate::rng::chain_rng;
    use crate::targets::GaussianTarget;

    fn state_with(cfg: AdjustmentConfig, rows: &[f64], d: usize) -> AdaptationState {
        let mut s = AdaptationState::new(cfg, d);
        s.incorporate_batch(&[rows]);
        s
    }

    #[test]
    fn centering_only() {
        let cfg = AdjustmentConfig::new(Centering::Mean, Scaling::None);
        let s = state_with(cfg, &[2.0, -2.0, 4.0, 0.0], 2);
        let map = s.build().map.unwrap();
        assert_eq!(map, AffineMap::Shift { c: vec![3.0, -1.0] });
    }

    #[test]
    fn variance_scales_are_square_roots() {
        // coordinate variances 4 and 9
        let cfg = AdjustmentConfig::new(Centering::None, Scaling::Variance);
        let s = state_with(cfg, &[-2.0, -3.0, 2.0, 3.0, 0.0, 0.0], 2);
        let update = s.build();
        assert!(update.warning.is_none());
        match update.map.unwrap() {
            AffineMap::Diagonal { c, v } => {
                assert_eq!(c, vec![0.0, 0.0]);
                assert!((v[0] - 2.0).abs() < 1e-15 && (v[1] - 3.0).abs() < 1e-15);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn covariance_factor_reproduces_sigma() {
        // rows chosen so that Σ = [[4, 2], [2, 5]]
        let sigma = Matrix::from_rows(&[vec![4.0, 2.0], vec![2.0, 5.0]]).unwrap();
        let l = LowerTriangular::from_lower(&Matrix::from_rows(&[vec![2.0, 0.0], vec![1.0, 2.0]]).unwrap());
        let mut rows = Vec::new();
        for z in [[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]] {
            let mut out = [0.0; 2];
            l.mul_vec(&z, &mut out);
            // scale so that Σ z zᵀ / (n − 1) = I with n = 4
            rows.extend(out.iter().map(|v| v * 1.5f64.sqrt()));
        }
        let cfg = AdjustmentConfig::new(Centering::None, Scaling::Covariance);
        let map = state_with(cfg, &rows, 2).build().map.unwrap();
        assert!(map.covariance().frobenius_distance(&sigma) < 1e-12);
        assert!(map.linear().frobenius_distance(&l.to_dense()) < 1e-12);
    }

    #[test]
    fn identical_samples_trigger_regularization() {
        let cfg = AdjustmentConfig::new(Centering::Mean, Scaling::Covariance);
        let s = state_with(cfg, &[1.0, 1.0, 1.0, 1.0, 1.0, 1.0], 2);
        let update = s.build();
        assert!(update.map.is_some());
        assert!(update.warning.unwrap().contains("regularized"));

        let cfg = AdjustmentConfig::new(Centering::None, Scaling::Variance);
        let update = state_with(cfg, &[1.0, 2.0, 1.0, 3.0], 2).build();
        assert!(update.warning.unwrap().contains("clamped"));
    }

    #[test]
    fn median_centering_uses_median() {
        let cfg = AdjustmentConfig::new(Centering::Median, Scaling::None);
        let s = state_with(cfg, &[1.0, 2.0, 100.0], 1);
        assert_eq!(s.build().map.unwrap(), AffineMap::Shift { c: vec![2.0] });
    }

    #[test]
    fn labels() {
        assert_eq!(AdjustmentConfig::default().label(), "Plain");
        assert_eq!(AdjustmentConfig::new(Centering::Mean, Scaling::Covariance).label(), "Cen+Cov");
        assert_eq!(AdjustmentConfig::new(Centering::None, Scaling::Variance).label(), "Var");
    }

    #[test]
    fn learned_map_whitens_gaussian() {
        let d = 3;
        let sigma = Matrix::from_rows(&[
            vec![4.0, 1.0, 0.5],
            vec![1.0, 2.0, 0.3],
            vec![0.5, 0.3, 1.0],
        ])
        .unwrap();
        let g = GaussianTarget::new(vec![1.0, -2.0, 3.0], &sigma).unwrap();
        let mut rng = chain_rng(5, 0);
        let n = 100_000;
        let rows: Vec<f64> = (0..n).flat_map(|_| g.sample(&mut rng)).collect();
        let cfg = AdjustmentConfig::new(Centering::Mean, Scaling::Covariance);
        let map = state_with(cfg, &rows, d).build().map.unwrap();
        assert!(map.covariance().frobenius_distance(&sigma) < 0.05 * sigma.frobenius_norm());

        // Push fresh draws of N(c, WWᵀ) through α⁻¹: mean 0, covariance I.
        let pushed = GaussianTarget::new(map.shift(), &map.covariance()).unwrap();
        let mut latent = MomentAccumulator::full(d);
        for _ in 0..n {
            latent.push(&map.invert_vec(&pushed.sample(&mut rng)));
        }
        let se = 1.0 / (n as f64).sqrt();
        let cov = latent.covariance().unwrap();
        for i in 0..d {
            assert!(latent.mean()[i].abs() < 5.0 * se);
            for j in 0..d {
                let target = if i == j { 1.0 } else { 0.0 };
                let tol = if i == j { 5.0 * 2f64.sqrt() * se } else { 5.0 * se };
                assert!((cov.get(i, j) - target).abs() < tol, "{i},{j}: {}", cov.get(i, j));
            }
        }
    }
}
