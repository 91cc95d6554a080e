//! Otsu threshold over a one-dimensional sample of values.

use crate::error::{Error, Result};

pub const DEFAULT_BINS: usize = 256;

/// Equal-width histogram over `[min, max]` of the input.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub min: f64,
    pub max: f64,
    pub counts: Vec<u64>,
}

impl Histogram {
    pub fn bin_width(&self) -> f64 {
        (self.max - self.min) / self.counts.len() as f64
    }

    /// Lower edge of bin `k`; `edge(bins)` is the upper end of the range.
    pub fn edge(&self, k: usize) -> f64 {
        self.min + k as f64 * self.bin_width()
    }

    /// Bin index of a value inside the range; the maximum lands in the last bin.
    pub fn bin_of(&self, value: f64) -> usize {
        let bins = self.counts.len();
        let raw = ((value - self.min) / self.bin_width()).floor();
        if raw <= 0.0 {
            0
        } else {
            (raw as usize).min(bins - 1)
        }
    }
}

pub fn histogram(values: &[f64], bins: usize) -> Result<Histogram> {
    if bins < 2 {
        return Err(Error::param("bins", "must be at least 2"));
    }
    if values.is_empty() {
        return Err(Error::DegenerateDistribution);
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("threshold input must be finite".into()));
    }
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if min == max {
        return Err(Error::DegenerateDistribution);
    }
    let mut hist = Histogram {
        min,
        max,
        counts: vec![0; bins],
    };
    for &v in values {
        let k = hist.bin_of(v);
        hist.counts[k] += 1;
    }
    Ok(hist)
}

/// Between-class variance `w0 * w1 * (mu0 - mu1)^2` of a split, with class
/// weights as counts and class means over bin indices.
pub fn between_class_variance(n0: f64, sum0: f64, n1: f64, sum1: f64) -> f64 {
    if n0 == 0.0 || n1 == 0.0 {
        return 0.0;
    }
    let total = n0 + n1;
    let (w0, w1) = (n0 / total, n1 / total);
    let diff = sum0 / n0 - sum1 / n1;
    w0 * w1 * diff * diff
}

/// Threshold maximizing the between-class variance of the histogram.
///
/// Candidates are the interior bin edges; a value belongs to the upper class
/// when its bin is at or above the edge. Ties resolve to the lowest edge, so
/// the threshold always lies strictly inside `(min, max)`.
pub fn otsu_threshold(values: &[f64], bins: usize) -> Result<f64> {
    let hist = histogram(values, bins)?;
    let total_n: u64 = hist.counts.iter().sum();
    let total_sum: u64 = hist
        .counts
        .iter()
        .enumerate()
        .map(|(k, &c)| k as u64 * c)
        .sum();

    let (mut n0, mut sum0) = (0u64, 0u64);
    let mut best = (f64::NEG_INFINITY, 1usize);
    for k in 1..bins {
        n0 += hist.counts[k - 1];
        sum0 += (k as u64 - 1) * hist.counts[k - 1];
        let var = between_class_variance(
            n0 as f64,
            sum0 as f64,
            (total_n - n0) as f64,
            (total_sum - sum0) as f64,
        );
        if var > best.0 {
            best = (var, k);
        }
    }
    Ok(hist.edge(best.1))
}
