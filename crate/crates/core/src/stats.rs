//! Blink statistics for clinical reporting.
//!
//! Events whose state is `none` are excluded everywhere. Blink lengths are
//! the peak widths converted to milliseconds; prominence, width and height
//! aggregates pool both eyes.

use serde::{Deserialize, Serialize};

use crate::blinks::{BlinkEvent, BlinkState};
use crate::error::{Error, Result};
use crate::series::{EarSeries, Eye};

/// Length of the baseline window before the first blink.
pub const BASELINE_SECS: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub min: f64,
    pub max: f64,
    pub avg: f64,
}

impl Aggregate {
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let avg = (values.iter().sum::<f64>() / values.len() as f64).clamp(min, max);
        Some(Self { min, max, avg })
    }
}

/// Mean and population standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub avg: f64,
    pub std: f64,
}

impl MeanStd {
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let n = values.len() as f64;
        let avg = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - avg).powi(2)).sum::<f64>() / n;
        Some(Self { avg, std: var.sqrt() })
    }
}

/// Statistics of one eye.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EyeStats {
    pub ear_before_blink_avg: Option<f64>,
    pub ear_min: Option<f64>,
    pub ear_max: Option<f64>,
    pub partial_threshold: Option<f64>,
    pub partial_total: usize,
    pub complete_total: usize,
    pub partial_freq_bpm: f64,
    pub complete_freq_bpm: f64,
    pub blink_length_ms: Option<MeanStd>,
    pub per_minute_partial: Vec<usize>,
    pub per_minute_complete: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsReport {
    pub fps: f64,
    pub frames: usize,
    pub duration_minutes: f64,
    pub left: EyeStats,
    pub right: EyeStats,
    pub prominence: Option<Aggregate>,
    pub width: Option<Aggregate>,
    pub height: Option<Aggregate>,
}

impl StatsReport {
    pub fn eye(&self, eye: Eye) -> &EyeStats {
        match eye {
            Eye::Left => &self.left,
            Eye::Right => &self.right,
        }
    }

    /// Number of per-minute buckets.
    pub fn minutes(&self) -> usize {
        self.left.per_minute_partial.len()
    }
}

/// Number of one-minute buckets for a recording; a trailing partial minute
/// gets its own bucket.
pub fn minute_buckets(frames: usize, fps: f64) -> usize {
    let per_minute = fps * 60.0;
    ((frames as f64 / per_minute).ceil() as usize).max(1)
}

pub fn minute_of(frame: usize, fps: f64) -> usize {
    (frame as f64 / fps / 60.0).floor() as usize
}

fn baseline_before(series: &EarSeries, onset: usize) -> Option<f64> {
    let span = (BASELINE_SECS * series.fps()).round() as usize;
    let start = onset.saturating_sub(span);
    let end = onset.min(series.len());
    let (sum, n) = (start..end)
        .filter(|&i| series.is_valid(i))
        .fold((0.0, 0usize), |(s, n), i| (s + series.values()[i], n + 1));
    (n > 0).then(|| sum / n as f64)
}

fn eye_stats(
    events: &[&BlinkEvent],
    series: &EarSeries,
    threshold: Option<f64>,
    minutes: usize,
    duration_minutes: f64,
) -> EyeStats {
    let fps = series.fps();
    let first = events.iter().min_by_key(|e| (e.apex_frame, e.id));
    let mut per_minute_partial = vec![0; minutes];
    let mut per_minute_complete = vec![0; minutes];
    for e in events {
        let bucket = minute_of(e.apex_frame, fps).min(minutes - 1);
        match e.state {
            BlinkState::Partial => per_minute_partial[bucket] += 1,
            BlinkState::Complete => per_minute_complete[bucket] += 1,
            BlinkState::None => {}
        }
    }
    let partial_total = per_minute_partial.iter().sum();
    let complete_total = per_minute_complete.iter().sum();
    let freq = |total: usize| {
        if duration_minutes > 0.0 {
            total as f64 / duration_minutes
        } else {
            0.0
        }
    };
    let lengths: Vec<f64> = events.iter().map(|e| e.width_frames / fps * 1000.0).collect();

    EyeStats {
        ear_before_blink_avg: first.and_then(|e| baseline_before(series, e.onset_frame)),
        ear_min: series.min_valid(),
        ear_max: series.max_valid(),
        partial_threshold: threshold,
        partial_total,
        complete_total,
        partial_freq_bpm: freq(partial_total),
        complete_freq_bpm: freq(complete_total),
        blink_length_ms: MeanStd::of(&lengths),
        per_minute_partial,
        per_minute_complete,
    }
}

/// Computes the full report from classified events of both eyes.
///
/// `thresholds` are the partial/complete thresholds in effect for the left
/// and right eye.
pub fn compute_statistics(
    events: &[BlinkEvent],
    left_series: &EarSeries,
    right_series: &EarSeries,
    thresholds: (Option<f64>, Option<f64>),
) -> Result<StatsReport> {
    let fps = left_series.fps();
    if !(fps > 0.0 && fps.is_finite()) || right_series.fps() != fps {
        return Err(Error::param("fps", "must be positive and shared by both eyes"));
    }
    let frames = left_series.len().max(right_series.len());
    let duration_minutes = frames as f64 / fps / 60.0;
    let minutes = minute_buckets(frames, fps);

    let counted: Vec<&BlinkEvent> = events.iter().filter(|e| e.state != BlinkState::None).collect();
    let of_eye = |eye: Eye| -> Vec<&BlinkEvent> {
        counted.iter().copied().filter(|e| e.eye == eye).collect()
    };
    let pooled = |f: fn(&BlinkEvent) -> f64| -> Option<Aggregate> {
        Aggregate::of(&counted.iter().map(|e| f(e)).collect::<Vec<_>>())
    };

    Ok(StatsReport {
        fps,
        frames,
        duration_minutes,
        left: eye_stats(&of_eye(Eye::Left), left_series, thresholds.0, minutes, duration_minutes),
        right: eye_stats(&of_eye(Eye::Right), right_series, thresholds.1, minutes, duration_minutes),
        prominence: pooled(|e| e.prominence),
        width: pooled(|e| e.width_frames),
        height: pooled(|e| e.height),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blinks::StateSource;

    fn event(id: usize, eye: Eye, apex: usize, width: f64, state: BlinkState) -> BlinkEvent {
        BlinkEvent {
            id,
            eye,
            apex_frame: apex,
            apex_ear: 0.05,
            prominence: 0.25,
            width_frames: width,
            height: 0.95,
            onset_frame: apex.saturating_sub(10),
            offset_frame: apex + 10,
            state,
            state_source: StateSource::Auto,
        }
    }

    fn series(frames: usize, fps: f64, eye: Eye) -> EarSeries {
        EarSeries::new(vec![0.3; frames], fps, eye).unwrap()
    }

    #[test]
    fn frequency_over_one_minute() {
        let fps = 240.0;
        let (l, r) = (series(14_400, fps, Eye::Left), series(14_400, fps, Eye::Right));
        let events = [
            event(0, Eye::Left, 1000, 48.0, BlinkState::Complete),
            event(1, Eye::Left, 5000, 48.0, BlinkState::Complete),
        ];
        let report = compute_statistics(&events, &l, &r, (None, None)).unwrap();
        assert_eq!(report.left.complete_total, 2);
        assert_eq!(report.left.complete_freq_bpm, 2.0);
        assert_eq!(report.minutes(), 1);
    }

    #[test]
    fn single_blink_length() {
        let (l, r) = (series(2400, 240.0, Eye::Left), series(2400, 240.0, Eye::Right));
        let events = [event(0, Eye::Right, 1200, 48.0, BlinkState::Partial)];
        let report = compute_statistics(&events, &l, &r, (None, Some(0.2))).unwrap();
        let len = report.right.blink_length_ms.unwrap();
        assert!((len.avg - 200.0).abs() < 1e-9);
        assert_eq!(len.std, 0.0);
        assert_eq!(report.left.blink_length_ms, None);
        assert_eq!(report.right.partial_threshold, Some(0.2));
    }

    #[test]
    fn no_events() {
        let (l, r) = (series(100, 10.0, Eye::Left), series(100, 10.0, Eye::Right));
        let report = compute_statistics(&[], &l, &r, (None, None)).unwrap();
        assert_eq!(report.left.partial_total + report.right.complete_total, 0);
        assert_eq!(report.left.complete_freq_bpm, 0.0);
        assert_eq!(report.prominence, None);
        assert_eq!(report.left.ear_before_blink_avg, None);
        assert_eq!(report.left.ear_min, Some(0.3));
    }

    #[test]
    fn none_state_is_excluded() {
        let (l, r) = (series(2400, 240.0, Eye::Left), series(2400, 240.0, Eye::Right));
        let mut events = vec![
            event(0, Eye::Left, 800, 40.0, BlinkState::Complete),
            event(1, Eye::Left, 1600, 60.0, BlinkState::Complete),
        ];
        let before = compute_statistics(&events, &l, &r, (None, None)).unwrap();
        events[1].state = BlinkState::None;
        let after = compute_statistics(&events, &l, &r, (None, None)).unwrap();
        assert_eq!(before.left.complete_total - 1, after.left.complete_total);
        assert_eq!(after.width.unwrap().max, 40.0);
    }

    #[test]
    fn baseline_window_ends_at_onset() {
        let fps = 10.0;
        let mut values = vec![0.2; 100];
        values[40..60].fill(0.4);
        let l = EarSeries::new(values, fps, Eye::Left).unwrap();
        let r = series(100, fps, Eye::Right);
        // onset 60, window covers frames 30..60: ten at 0.2, twenty at 0.4
        let events = [event(0, Eye::Left, 70, 5.0, BlinkState::Complete)];
        let report = compute_statistics(&events, &l, &r, (None, None)).unwrap();
        let expected = (10.0 * 0.2 + 20.0 * 0.4) / 30.0;
        assert!((report.left.ear_before_blink_avg.unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn trailing_partial_minute_gets_a_bucket() {
        assert_eq!(minute_buckets(14_400, 240.0), 1);
        assert_eq!(minute_buckets(14_401, 240.0), 2);
        assert_eq!(minute_of(14_399, 240.0), 0);
        assert_eq!(minute_of(14_400, 240.0), 1);
    }
}
