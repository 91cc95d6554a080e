//! Data behind the visual summary: EAR scatter with rolling statistics,
//! blink markers, paired blinks per minute and the left/right delay
//! distribution.

use serde::{Deserialize, Serialize};

use crate::blinks::{BlinkEvent, BlinkState};
use crate::error::{Error, Result};
use crate::matching::BlinkMatch;
use crate::series::{EarSeries, Eye};
use crate::stats::{minute_buckets, minute_of};

pub const DEFAULT_SCATTER_BUDGET: usize = 5000;
pub const DEFAULT_ROLLING_SECS: f64 = 5.0;
pub const DELAY_BIN_MS: f64 = 10.0;

/// Centered rolling mean and population standard deviation over valid
/// samples.
///
/// The window for sample `i` covers `i - window/2 ..= i + (window-1)/2`,
/// truncated at the series ends. Samples whose window holds no valid value
/// are `NaN`.
pub fn rolling_stats(series: &EarSeries, window: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if window < 1 {
        return Err(Error::param("rolling_window", "must be at least 1"));
    }
    let values = series.values();
    let valid = series.valid();
    let n = values.len();
    if window == 1 {
        let mean = values
            .iter()
            .zip(valid)
            .map(|(&v, &ok)| if ok { v } else { f64::NAN })
            .collect();
        let std = valid.iter().map(|&ok| if ok { 0.0 } else { f64::NAN }).collect();
        return Ok((mean, std));
    }

    // sums are taken relative to a reference value to limit cancellation
    let reference = series.valid_samples().next().map_or(0.0, |(_, v)| v);
    let back = window / 2;
    let ahead = (window - 1) / 2;
    let mut mean = vec![f64::NAN; n];
    let mut std = vec![f64::NAN; n];
    let (mut sum, mut sum_sq, mut count) = (0.0f64, 0.0f64, 0usize);
    let add = |i: usize, sign: f64, sum: &mut f64, sum_sq: &mut f64, count: &mut usize| {
        if valid[i] {
            let d = values[i] - reference;
            *sum += sign * d;
            *sum_sq += sign * d * d;
            if sign > 0.0 {
                *count += 1;
            } else {
                *count -= 1;
            }
        }
    };
    for i in 0..n.min(ahead + 1) {
        add(i, 1.0, &mut sum, &mut sum_sq, &mut count);
    }
    for i in 0..n {
        if i > 0 {
            let incoming = i + ahead;
            if incoming < n {
                add(incoming, 1.0, &mut sum, &mut sum_sq, &mut count);
            }
            if let Some(outgoing) = (i - 1).checked_sub(back) {
                add(outgoing, -1.0, &mut sum, &mut sum_sq, &mut count);
            }
        }
        if count > 0 {
            let k = count as f64;
            let m = sum / k;
            mean[i] = reference + m;
            std[i] = (sum_sq / k - m * m).max(0.0).sqrt();
        }
    }
    Ok((mean, std))
}

/// Indices of a uniform-stride subsample of `0..n` with at most `budget`
/// entries; the first and last index are always included.
pub fn downsample_indices(n: usize, budget: usize) -> Vec<usize> {
    if n <= budget {
        return (0..n).collect();
    }
    if budget < 2 {
        return vec![0];
    }
    let last = (n - 1) as u64;
    let steps = (budget - 1) as u64;
    (0..=steps).map(|j| ((j * last + steps / 2) / steps) as usize).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimePoint {
    pub t: f64,
    pub v: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EyeTrace {
    pub scatter: Vec<TimePoint>,
    pub rolling_mean: Vec<TimePoint>,
    pub rolling_std: Vec<TimePoint>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlinkMarker {
    pub t: f64,
    pub apex_ear: f64,
    pub state: BlinkState,
    pub eye: Eye,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DelayHistogram {
    /// `counts.len() + 1` ascending edges in milliseconds.
    pub edges_ms: Vec<f64>,
    pub counts: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryBundle {
    pub fps: f64,
    pub duration_s: f64,
    pub left: EyeTrace,
    pub right: EyeTrace,
    pub markers: Vec<BlinkMarker>,
    pub blinks_per_minute: Vec<usize>,
    pub delay_histogram: DelayHistogram,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SummaryOptions {
    pub scatter_budget: usize,
    /// Frames; `None` means five seconds worth.
    pub rolling_window: Option<usize>,
    pub max_match_delay_ms: f64,
}

impl Default for SummaryOptions {
    fn default() -> Self {
        Self {
            scatter_budget: DEFAULT_SCATTER_BUDGET,
            rolling_window: None,
            max_match_delay_ms: crate::blinks::DEFAULT_MAX_MATCH_DELAY_MS,
        }
    }
}

/// Bins of [`DELAY_BIN_MS`] centred on zero that cover
/// `[-max_delay_ms, max_delay_ms]`.
pub fn delay_histogram(delays: impl IntoIterator<Item = f64>, max_delay_ms: f64) -> DelayHistogram {
    let side = (max_delay_ms / DELAY_BIN_MS - 0.5).ceil().max(0.0) as usize;
    let bins = 2 * side + 1;
    let first = -(side as f64 + 0.5) * DELAY_BIN_MS;
    let edges_ms = (0..=bins).map(|k| first + k as f64 * DELAY_BIN_MS).collect();
    let mut counts = vec![0; bins];
    for d in delays {
        let k = ((d - first) / DELAY_BIN_MS).floor();
        let k = if k <= 0.0 { 0 } else { (k as usize).min(bins - 1) };
        counts[k] += 1;
    }
    DelayHistogram { edges_ms, counts }
}

fn trace(series: &EarSeries, window: usize, budget: usize) -> Result<EyeTrace> {
    let (mean, std) = rolling_stats(series, window)?;
    let fps = series.fps();
    let mut out = EyeTrace {
        scatter: Vec::new(),
        rolling_mean: Vec::new(),
        rolling_std: Vec::new(),
    };
    for i in downsample_indices(series.len(), budget) {
        let t = i as f64 / fps;
        if series.is_valid(i) {
            out.scatter.push(TimePoint { t, v: series.values()[i] });
        }
        if mean[i].is_finite() {
            out.rolling_mean.push(TimePoint { t, v: mean[i] });
            out.rolling_std.push(TimePoint { t, v: std[i] });
        }
    }
    Ok(out)
}

/// Assembles the summary for one analysed recording.
///
/// Blinks per minute count matches: a bilateral pair by its left apex, a
/// unilateral blink by its own apex. Markers are only drawn for events
/// whose state is not `none`.
pub fn build_summary(
    left: &EarSeries,
    right: &EarSeries,
    events: &[BlinkEvent],
    matches: &[BlinkMatch],
    options: &SummaryOptions,
) -> Result<SummaryBundle> {
    if options.scatter_budget < 2 {
        return Err(Error::param("scatter_budget", "must be at least 2"));
    }
    let fps = left.fps();
    if right.fps() != fps {
        return Err(Error::InvalidInput("series frame rates differ".into()));
    }
    let window = options
        .rolling_window
        .unwrap_or_else(|| (DEFAULT_ROLLING_SECS * fps).round().max(1.0) as usize);
    let frames = left.len().max(right.len());

    let mut markers: Vec<BlinkMarker> = events
        .iter()
        .filter(|e| e.state != BlinkState::None)
        .map(|e| BlinkMarker {
            t: e.apex_frame as f64 / fps,
            apex_ear: e.apex_ear,
            state: e.state,
            eye: e.eye,
        })
        .collect();
    markers.sort_by(|a, b| {
        a.t.total_cmp(&b.t)
            .then(a.eye.cmp(&b.eye))
            .then(a.apex_ear.total_cmp(&b.apex_ear))
    });

    let apex_of = |id: usize| {
        events
            .iter()
            .find(|e| e.id == id)
            .map(|e| e.apex_frame)
            .ok_or(Error::UnknownBlink(id))
    };
    let minutes = minute_buckets(frames, fps);
    let mut blinks_per_minute = vec![0; minutes];
    for m in matches {
        let id = m.left_id.or(m.right_id).ok_or_else(|| {
            Error::InvalidInput("match without any blink".into())
        })?;
        let bucket = minute_of(apex_of(id)?, fps).min(minutes - 1);
        blinks_per_minute[bucket] += 1;
    }

    let mut delays: Vec<f64> = matches.iter().filter_map(|m| m.delay_ms).collect();
    delays.sort_by(f64::total_cmp);

    Ok(SummaryBundle {
        fps,
        duration_s: frames as f64 / fps,
        left: trace(left, window, options.scatter_budget)?,
        right: trace(right, window, options.scatter_budget)?,
        markers,
        blinks_per_minute,
        delay_histogram: delay_histogram(delays, options.max_match_delay_ms),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(values: &[f64]) -> EarSeries {
        EarSeries::new(values.to_vec(), 10.0, Eye::Left).unwrap()
    }

    fn direct(values: &[f64], window: usize) -> (Vec<f64>, Vec<f64>) {
        let n = values.len();
        (0..n)
            .map(|i| {
                let lo = i.saturating_sub(window / 2);
                let hi = (i + (window - 1) / 2).min(n - 1);
                let w = &values[lo..=hi];
                let m = w.iter().sum::<f64>() / w.len() as f64;
                let var = w.iter().map(|v| (v - m).powi(2)).sum::<f64>() / w.len() as f64;
                (m, var.sqrt())
            })
            .unzip()
    }

    #[test]
    fn rolling_constant() {
        let (mean, std) = rolling_stats(&series(&[0.3; 40]), 7).unwrap();
        assert!(mean.iter().all(|&m| m == 0.3));
        assert!(std.iter().all(|&s| s == 0.0));
    }

    #[test]
    fn rolling_alternating_window_two() {
        let v = [0.0, 1.0, 0.0, 1.0];
        let (mean, std) = rolling_stats(&series(&v), 2).unwrap();
        let (em, es) = direct(&v, 2);
        assert_eq!(em, [0.0, 0.5, 0.5, 0.5]);
        for i in 0..4 {
            assert!((mean[i] - em[i]).abs() < 1e-12);
            assert!((std[i] - es[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn rolling_window_one_is_identity() {
        let v = [0.1, 0.25, 0.3, 0.05];
        let (mean, std) = rolling_stats(&series(&v), 1).unwrap();
        assert_eq!(mean, v);
        assert_eq!(std, [0.0; 4]);
        assert!(rolling_stats(&series(&v), 0).is_err());
    }

    #[test]
    fn rolling_matches_direct_windows() {
        let v: Vec<f64> = (0..200).map(|i| 0.3 + 0.1 * ((i * 37 % 17) as f64 / 17.0)).collect();
        for w in [2, 3, 8, 25] {
            let (mean, std) = rolling_stats(&series(&v), w).unwrap();
            let (em, es) = direct(&v, w);
            for i in 0..v.len() {
                assert!((mean[i] - em[i]).abs() < 1e-12);
                assert!((std[i] - es[i]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn downsampling_keeps_ends() {
        assert_eq!(downsample_indices(5, 10), [0, 1, 2, 3, 4]);
        let idx = downsample_indices(288_000, 5000);
        assert_eq!(idx.len(), 5000);
        assert_eq!((idx[0], idx[4999]), (0, 287_999));
        assert!(idx.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn zero_delays_share_the_central_bin() {
        let h = delay_histogram([0.0; 7], 500.0);
        assert_eq!(h.counts.len(), 101);
        assert_eq!(h.counts[50], 7);
        assert_eq!(h.counts.iter().sum::<usize>(), 7);
        assert_eq!(h.edges_ms[0], -505.0);
        assert_eq!(h.edges_ms[101], 505.0);
    }

    #[test]
    fn extreme_delays_stay_in_range() {
        let h = delay_histogram([-500.0, 500.0], 500.0);
        assert_eq!(h.counts[0], 1);
        assert_eq!(h.counts[100], 1);
    }

    #[test]
    fn empty_summary() {
        let l = series(&[0.3; 600]);
        let r = EarSeries::new(vec![0.3; 600], 10.0, Eye::Right).unwrap();
        let b = build_summary(&l, &r, &[], &[], &SummaryOptions::default()).unwrap();
        assert!(b.markers.is_empty());
        assert_eq!(b.blinks_per_minute, [0]);
        assert!(b.delay_histogram.counts.iter().all(|&c| c == 0));
        assert_eq!(b.left.scatter.len(), 600);
    }
}
