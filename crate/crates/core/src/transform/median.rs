use serde::{Deserialize, Serialize};

/// Coordinate-wise sample median over every incorporated sample.
///
/// Values are kept per coordinate; each update reselects the median by
/// quickselect, reordering the stored multiset in place.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct MedianAccumulator {
    columns: Vec<Vec<f64>>,
    median: Vec<f64>,
}

impl MedianAccumulator {
    pub fn new(d: usize) -> Self {
        MedianAccumulator {
            columns: vec![Vec::new(); d],
            median: vec![f64::NAN; d],
        }
    }

    pub fn count(&self) -> usize {
        self.columns.first().map_or(0, Vec::len)
    }

    pub fn incorporate_batch(&mut self, blocks: &[&[f64]]) {
        let d = self.columns.len();
        for x in blocks.iter().flat_map(|b| b.chunks_exact(d)) {
            for (col, v) in self.columns.iter_mut().zip(x) {
                col.push(*v);
            }
        }
        if self.count() > 0 {
            for (col, m) in self.columns.iter_mut().zip(self.median.iter_mut()) {
                *m = select_median(col);
            }
        }
    }

    /// Current medians; NaN before any sample was incorporated.
    pub fn median(&self) -> &[f64] {
        &self.median
    }
}

fn select_median(values: &mut [f64]) -> f64 {
    let n = values.len();
    let k = n / 2;
    let (lower, hi, _) = values.select_nth_unstable_by(k, f64::total_cmp);
    let hi = *hi;
    if n % 2 == 1 {
        hi
    } else {
        let lo = lower.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        0.5 * (lo + hi)
    }
}

/// Median of a slice (mean of the middle pair for even length).
pub fn median_of(values: &[f64]) -> f64 {
    assert!(!values.is_empty(), "median of an empty slice");
    select_median(&mut values.to_vec())
}
