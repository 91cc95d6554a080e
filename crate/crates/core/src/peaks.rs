//! One-dimensional peak detection.
//!
//! Candidates are local maxima (plateaus report their floor midpoint),
//! thinned by a minimum index distance, then measured and filtered by
//! topographic prominence and by width at a fraction of the prominence.
//! The stage order is fixed: distance, prominence, width.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeakParams {
    pub min_prominence: f64,
    /// Frames; apexes closer than this are thinned, highest first.
    pub min_distance: usize,
    pub min_width: f64,
    /// `None` is unbounded.
    pub max_width: Option<f64>,
    /// Fraction of the prominence below the apex at which width is taken.
    pub rel_height: f64,
}

impl Default for PeakParams {
    fn default() -> Self {
        Self {
            min_prominence: 0.1,
            min_distance: 50,
            min_width: 10.0,
            max_width: None,
            rel_height: 0.5,
        }
    }
}

impl PeakParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.min_prominence >= 0.0 && self.min_prominence.is_finite()) {
            return Err(Error::param("min_prominence", "must be a finite value >= 0"));
        }
        if self.min_distance < 1 {
            return Err(Error::param("min_distance", "must be at least 1"));
        }
        if !(self.min_width >= 0.0 && self.min_width.is_finite()) {
            return Err(Error::param("min_width", "must be a finite value >= 0"));
        }
        if let Some(max) = self.max_width {
            if max.is_nan() || max < self.min_width {
                return Err(Error::param("max_width", "must be >= min_width"));
            }
        }
        if !(self.rel_height > 0.0 && self.rel_height <= 1.0) {
            return Err(Error::param("rel_height", "must lie in (0, 1]"));
        }
        Ok(())
    }
}

/// A detected peak with all of its measurements.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeakCandidate {
    pub index: usize,
    pub height: f64,
    pub prominence: f64,
    pub left_base: usize,
    pub right_base: usize,
    pub width: f64,
    pub width_height: f64,
    pub left_ip: f64,
    pub right_ip: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prominence {
    pub prominence: f64,
    pub left_base: usize,
    pub right_base: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Width {
    pub width: f64,
    pub width_height: f64,
    pub left_ip: f64,
    pub right_ip: f64,
}

fn check_finite(signal: &[f64]) -> Result<()> {
    match signal.iter().position(|v| !v.is_finite()) {
        Some(index) => Err(Error::NonFiniteSample { index }),
        None => Ok(()),
    }
}

/// Indices of all interior local maxima.
///
/// A flat run counts as one maximum when both the samples before and after
/// it are strictly lower; its reported index is the floor of the run's
/// midpoint. The first and last samples are never maxima.
pub fn local_maxima(signal: &[f64]) -> Result<Vec<usize>> {
    check_finite(signal)?;
    let mut maxima = Vec::new();
    if signal.len() < 3 {
        return Ok(maxima);
    }
    let last = signal.len() - 1;
    let mut i = 1;
    while i < last {
        if signal[i - 1] < signal[i] {
            let mut ahead = i + 1;
            while ahead < last && signal[ahead] == signal[i] {
                ahead += 1;
            }
            if signal[ahead] < signal[i] {
                maxima.push((i + ahead - 1) / 2);
                i = ahead;
            }
        }
        i += 1;
    }
    Ok(maxima)
}

/// Thins apexes so that no two kept apexes are closer than `min_distance`.
///
/// Apexes are visited from highest to lowest (equal heights: lower index
/// first); each visited apex that is still alive removes every other apex
/// strictly within `min_distance` of it. Output is ascending.
pub fn select_by_distance(apexes: &[usize], heights: &[f64], min_distance: usize) -> Vec<usize> {
    debug_assert_eq!(apexes.len(), heights.len());
    debug_assert!(apexes.windows(2).all(|w| w[0] < w[1]));
    if min_distance <= 1 || apexes.len() < 2 {
        return apexes.to_vec();
    }
    let mut order: Vec<usize> = (0..apexes.len()).collect();
    order.sort_by(|&a, &b| heights[b].total_cmp(&heights[a]).then(a.cmp(&b)));

    let mut keep = vec![true; apexes.len()];
    for &j in &order {
        if !keep[j] {
            continue;
        }
        let mut k = j;
        while k > 0 && apexes[j] - apexes[k - 1] < min_distance {
            k -= 1;
            keep[k] = false;
        }
        let mut k = j + 1;
        while k < apexes.len() && apexes[k] - apexes[j] < min_distance {
            keep[k] = false;
            k += 1;
        }
    }
    apexes
        .iter()
        .zip(keep)
        .filter_map(|(&a, k)| k.then_some(a))
        .collect()
}

fn check_apex(signal: &[f64], apex: usize) -> Result<()> {
    let interior = apex > 0 && apex + 1 < signal.len();
    if !interior || signal[apex - 1] > signal[apex] || signal[apex + 1] > signal[apex] {
        return Err(Error::NotAPeak(apex));
    }
    Ok(())
}

/// Topographic prominence of each apex.
///
/// From the apex the scan runs outward on each side until a sample is
/// strictly higher than the apex or the signal ends; the lowest sample on
/// that span is the base (ties resolve to the sample nearest the apex).
/// Prominence is the apex height minus the higher of the two bases.
pub fn prominences(signal: &[f64], apexes: &[usize]) -> Result<Vec<Prominence>> {
    check_finite(signal)?;
    apexes
        .iter()
        .map(|&apex| {
            check_apex(signal, apex)?;
            let top = signal[apex];

            let (mut left_min, mut left_base) = (top, apex);
            for i in (0..apex).rev() {
                let v = signal[i];
                if v > top {
                    break;
                }
                if v < left_min {
                    left_min = v;
                    left_base = i;
                }
            }

            let (mut right_min, mut right_base) = (top, apex);
            for (i, &v) in signal.iter().enumerate().skip(apex + 1) {
                if v > top {
                    break;
                }
                if v < right_min {
                    right_min = v;
                    right_base = i;
                }
            }

            Ok(Prominence {
                prominence: top - left_min.max(right_min),
                left_base,
                right_base,
            })
        })
        .collect()
}

/// Width of each apex at `height - rel_height * prominence`.
///
/// The crossing on each side is searched between the apex and its base and
/// linearly interpolated between the two samples that straddle the
/// evaluation height.
pub fn widths(
    signal: &[f64],
    apexes: &[usize],
    proms: &[Prominence],
    rel_height: f64,
) -> Result<Vec<Width>> {
    if apexes.len() != proms.len() {
        return Err(Error::InvalidInput(format!(
            "{} apexes but {} prominence entries",
            apexes.len(),
            proms.len()
        )));
    }
    if !(rel_height > 0.0 && rel_height <= 1.0) {
        return Err(Error::param("rel_height", "must lie in (0, 1]"));
    }
    apexes
        .iter()
        .zip(proms)
        .map(|(&apex, p)| {
            if p.left_base > apex || p.right_base < apex || p.right_base >= signal.len() {
                return Err(Error::InvalidInput(format!(
                    "bases {}..{} do not bracket apex {apex}",
                    p.left_base, p.right_base
                )));
            }
            let level = signal[apex] - p.prominence * rel_height;

            let mut i = apex;
            while p.left_base < i && level < signal[i] {
                i -= 1;
            }
            let mut left_ip = i as f64;
            if signal[i] < level {
                left_ip += (level - signal[i]) / (signal[i + 1] - signal[i]);
            }

            let mut i = apex;
            while i < p.right_base && level < signal[i] {
                i += 1;
            }
            let mut right_ip = i as f64;
            if signal[i] < level {
                right_ip -= (level - signal[i]) / (signal[i - 1] - signal[i]);
            }

            Ok(Width {
                width: right_ip - left_ip,
                width_height: level,
                left_ip,
                right_ip,
            })
        })
        .collect()
}

/// Runs the full detection pipeline and returns the surviving peaks in
/// ascending index order.
pub fn find_peaks(signal: &[f64], params: &PeakParams) -> Result<Vec<PeakCandidate>> {
    params.validate()?;
    let maxima = local_maxima(signal)?;
    let heights: Vec<f64> = maxima.iter().map(|&i| signal[i]).collect();
    let apexes = select_by_distance(&maxima, &heights, params.min_distance);

    let proms = prominences(signal, &apexes)?;
    let (apexes, proms): (Vec<usize>, Vec<Prominence>) = apexes
        .into_iter()
        .zip(proms)
        .filter(|(_, p)| p.prominence >= params.min_prominence)
        .unzip();

    let widths = widths(signal, &apexes, &proms, params.rel_height)?;
    let max_width = params.max_width.unwrap_or(f64::INFINITY);
    Ok(apexes
        .iter()
        .zip(proms)
        .zip(widths)
        .filter(|(_, w)| w.width >= params.min_width && w.width <= max_width)
        .map(|((&index, p), w)| PeakCandidate {
            index,
            height: signal[index],
            prominence: p.prominence,
            left_base: p.left_base,
            right_base: p.right_base,
            width: w.width,
            width_height: w.width_height,
            left_ip: w.left_ip,
            right_ip: w.right_ip,
        })
        .collect())
}
