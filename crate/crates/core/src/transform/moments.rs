use serde::{Deserialize, Serialize};

use crate::linalg::Matrix;

/// Streaming sample mean, coordinate variances and covariance.
///
/// Batches are folded in with the Welford batch recursions
/// `m ← m + Σ(x − m_old) / n_new`, `q ← q + Σ(x − m_old)⊙(x − m_new)` and
/// `Q ← Q + Σ(x − m_old)(x − m_new)ᵀ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentAccumulator {
    d: usize,
    count: u64,
    variance: bool,
    covariance: bool,
    mean: Vec<f64>,
    q: Vec<f64>,
    /// Packed lower triangle of `Q`.
    cov: Vec<f64>,
}

impl MomentAccumulator {
    pub fn new(d: usize, variance: bool, covariance: bool) -> Self {
        MomentAccumulator {
            d,
            count: 0,
            variance,
            covariance,
            mean: vec![0.0; d],
            q: if variance { vec![0.0; d] } else { Vec::new() },
            cov: if covariance {
                vec![0.0; d * (d + 1) / 2]
            } else {
                Vec::new()
            },
        }
    }

    /// Tracks every statistic.
    pub fn full(d: usize) -> Self {
        Self::new(d, true, true)
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    /// Folds in the rows of every block, each block a row-major slice of
    /// `d`-vectors. Blocks are treated as one batch.
    pub fn incorporate_batch(&mut self, blocks: &[&[f64]]) {
        let d = self.d;
        let m: usize = blocks.iter().map(|b| b.len() / d).sum();
        if m == 0 {
            return;
        }
        debug_assert!(blocks.iter().all(|b| b.len() % d == 0));
        let n_new = self.count + m as u64;
        let old = self.mean.clone();
        let mut delta = vec![0.0; d];
        for x in blocks.iter().flat_map(|b| b.chunks_exact(d)) {
            for i in 0..d {
                delta[i] += x[i] - old[i];
            }
        }
        let inv = 1.0 / n_new as f64;
        for i in 0..d {
            self.mean[i] = old[i] + delta[i] * inv;
        }
        self.count = n_new;
        if !self.variance && !self.covariance {
            return;
        }
        let new = &self.mean;
        let mut a = vec![0.0; d];
        let mut b = vec![0.0; d];
        for x in blocks.iter().flat_map(|blk| blk.chunks_exact(d)) {
            for i in 0..d {
                a[i] = x[i] - old[i];
                b[i] = x[i] - new[i];
            }
            if self.variance {
                for i in 0..d {
                    self.q[i] += a[i] * b[i];
                }
            }
            if self.covariance {
                let mut k = 0;
                for i in 0..d {
                    let ai = a[i];
                    let row = &mut self.cov[k..k + i + 1];
                    for (q, bj) in row.iter_mut().zip(&b[..=i]) {
                        *q += ai * bj;
                    }
                    k += i + 1;
                }
            }
        }
    }

    pub fn push(&mut self, x: &[f64]) {
        self.incorporate_batch(&[x]);
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    /// Sum of squared deviations per coordinate.
    pub fn sum_squares(&self) -> &[f64] {
        &self.q
    }

    /// `q / (n − 1)`; `None` when not tracked or fewer than two samples.
    pub fn variance(&self) -> Option<Vec<f64>> {
        if !self.variance || self.count < 2 {
            return None;
        }
        let div = (self.count - 1) as f64;
        Some(self.q.iter().map(|q| q / div).collect())
    }

    /// `Q / (n − 1)`, symmetric.
    pub fn covariance(&self) -> Option<Matrix> {
        if !self.covariance || self.count < 2 {
            return None;
        }
        let div = (self.count - 1) as f64;
        let mut out = Matrix::zeros(self.d);
        let mut k = 0;
        for i in 0..self.d {
            for j in 0..=i {
                let v = self.cov[k] / div;
                out.set(i, j, v);
                out.set(j, i, v);
                k += 1;
            }
        }
        Some(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{chain_rng, fill_standard_normal};
    use proptest::prelude::*;

    fn batch_stats(rows: &[Vec<f64>]) -> (Vec<f64>, Matrix) {
        let d = rows[0].len();
        let n = rows.len() as f64;
        let mean: Vec<f64> = (0..d).map(|i| rows.iter().map(|r| r[i]).sum::<f64>() / n).collect();
        let cov = Matrix::from_fn(d, |i, j| {
            rows.iter().map(|r| (r[i] - mean[i]) * (r[j] - mean[j])).sum::<f64>() / (n - 1.0)
        });
        (mean, cov)
    }

    #[test]
    fn one_dimensional_pair() {
        let mut acc = MomentAccumulator::full(1);
        acc.incorporate_batch(&[&[1.0, 3.0]]);
        assert_eq!(acc.mean(), &[2.0]);
        assert_eq!(acc.variance().unwrap(), vec![2.0]);
    }

    #[test]
    fn sequential_equals_joint() {
        let mut a = MomentAccumulator::full(1);
        a.incorporate_batch(&[&[1.0]]);
        a.incorporate_batch(&[&[3.0]]);
        let mut b = MomentAccumulator::full(1);
        b.incorporate_batch(&[&[1.0, 3.0]]);
        assert!((a.mean()[0] - b.mean()[0]).abs() < 1e-12);
        assert!((a.variance().unwrap()[0] - b.variance().unwrap()[0]).abs() < 1e-12);
    }

    #[test]
    fn cross_covariance_example() {
        let mut acc = MomentAccumulator::full(2);
        acc.incorporate_batch(&[&[1.0, 0.0, 0.0, 1.0], &[-1.0, 0.0, 0.0, -1.0]]);
        assert_eq!(acc.mean(), &[0.0, 0.0]);
        let cov = acc.covariance().unwrap();
        let expected = Matrix::from_diagonal(&[2.0 / 3.0, 2.0 / 3.0]);
        assert!(cov.frobenius_distance(&expected) < 1e-15);
    }

    #[test]
    fn variance_needs_two_samples() {
        let mut acc = MomentAccumulator::full(2);
        acc.push(&[1.0, 2.0]);
        assert!(acc.variance().is_none());
        assert!(MomentAccumulator::new(2, false, false).covariance().is_none());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn streaming_matches_batch(seed in 0u64..100_000, d in 1usize..8,
                                   cuts in proptest::collection::vec(1usize..40, 1..12)) {
            let mut rng = chain_rng(seed, 0);
            let n: usize = cuts.iter().sum::<usize>() + 1;
            let rows: Vec<Vec<f64>> = (0..n).map(|i| {
                let mut r = vec![0.0; d];
                fill_standard_normal(&mut rng, &mut r);
                r.iter().enumerate().map(|(j, v)| 3.0 * v + (i + j) as f64 * 0.01 + 5.0).collect()
            }).collect();
            let mut acc = MomentAccumulator::full(d);
            let mut start = 0;
            for c in cuts.iter().copied().chain(std::iter::once(1)) {
                let flat: Vec<f64> = rows[start..start + c].concat();
                acc.incorporate_batch(&[&flat]);
                start += c;
            }
            let (mean, cov) = batch_stats(&rows);
            for i in 0..d {
                prop_assert!((acc.mean()[i] - mean[i]).abs() <= 1e-9 * (1.0 + mean[i].abs()));
                prop_assert!((acc.variance().unwrap()[i] - cov.get(i, i)).abs() <= 1e-9 * cov.get(i, i));
            }
            let streamed = acc.covariance().unwrap();
            prop_assert!(streamed.frobenius_distance(&cov) <= 1e-9 * cov.frobenius_norm());
            prop_assert!(streamed.asymmetry() <= 1e-12);
        }
    }
}
