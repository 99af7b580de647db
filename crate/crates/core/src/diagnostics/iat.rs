use crate::error::{Error, Result};

/// Shortest series accepted by [`iat`].
pub const MIN_SERIES_LEN: usize = 100;

/// Integrated autocorrelation time by Geyer's initial monotone positive
/// sequence estimator, on direct autocovariances (divisor `n`) up to lag
/// `n/3`. Returns `None` for a constant series.
pub fn iat(series: &[f64]) -> Result<Option<f64>> {
    let n = series.len();
    if n < MIN_SERIES_LEN {
        return Err(Error::usage(format!(
            "autocorrelation time needs at least {MIN_SERIES_LEN} values, got {n}"
        )));
    }
    if series.iter().all(|&v| v == series[0]) {
        return Ok(None);
    }
    let mean = series.iter().sum::<f64>() / n as f64;
    let centered: Vec<f64> = series.iter().map(|v| v - mean).collect();
    let autocov = |k: usize| -> f64 {
        let s: f64 = centered[..n - k]
            .iter()
            .zip(&centered[k..])
            .map(|(a, b)| a * b)
            .sum();
        s / n as f64
    };
    let g0 = autocov(0);
    if !(g0 > 0.0) {
        return Ok(None);
    }
    let max_lag = n / 3;
    let mut sum = 0.0;
    let mut prev = f64::INFINITY;
    let mut m = 0;
    while 2 * m + 1 <= max_lag {
        let even = if m == 0 { g0 } else { autocov(2 * m) };
        let pair = even + autocov(2 * m + 1);
        if pair <= 0.0 {
            break;
        }
        let pair = pair.min(prev);
        sum += pair;
        prev = pair;
        m += 1;
    }
    Ok(Some((2.0 * sum / g0 - 1.0).max(1.0)))
}

/// Monte Carlo standard error of the mean of `series`, `sd · √(τ/n)`.
pub fn mcse(series: &[f64]) -> Result<f64> {
    let n = series.len() as f64;
    let mean = series.iter().sum::<f64>() / n;
    let var = series.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let tau = iat(series)?.unwrap_or(1.0);
    Ok((var * tau / n).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{chain_rng, standard_normal};

    fn ar1(phi: f64, n: usize, seed: u64) -> Vec<f64> {
        let mut rng = chain_rng(seed, 0);
        let s = (1.0 - phi * phi).sqrt();
        let mut x = standard_normal(&mut rng);
        (0..n)
            .map(|_| {
                x = phi * x + s * standard_normal(&mut rng);
                x
            })
            .collect()
    }

    #[test]
    fn white_noise_is_one() {
        let v = iat(&ar1(0.0, 100_000, 1)).unwrap().unwrap();
        assert!((v - 1.0).abs() < 0.05, "{v}");
    }

    #[test]
    fn ar1_half() {
        let v = iat(&ar1(0.5, 200_000, 2)).unwrap().unwrap();
        assert!((v - 3.0).abs() < 0.3, "{v}");
    }

    #[test]
    fn constant_is_degenerate() {
        assert_eq!(iat(&[4.2; 200]).unwrap(), None);
    }

    #[test]
    fn short_series_rejected() {
        assert!(iat(&[1.0, 2.0]).is_err());
    }

    #[test]
    fn scale_invariant() {
        let s = ar1(0.7, 5_000, 3);
        let t: Vec<f64> = s.iter().map(|v| 3.0 * v - 7.0).collect();
        let (a, b) = (iat(&s).unwrap().unwrap(), iat(&t).unwrap().unwrap());
        assert!((a - b).abs() < 1e-9 * a);
    }
}
