//! Blink extraction, partial/complete classification and manual correction.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use tracing::warn;

use crate::error::{Error, Result};
use crate::matching::{match_blinks, BlinkMatch};
use crate::otsu::{otsu_threshold, DEFAULT_BINS};
use crate::peaks::{find_peaks, PeakParams};
use crate::series::{smooth, EarSeries, Eye};

pub const DEFAULT_MAX_MATCH_DELAY_MS: f64 = 500.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ThresholdMode {
    #[default]
    Auto,
    Manual,
}

impl FromStr for ThresholdMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "auto" => Ok(ThresholdMode::Auto),
            "manual" => Ok(ThresholdMode::Manual),
            _ => Err(Error::param("threshold_mode", "expected `auto` or `manual`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DetectionParams {
    /// Peak parameters, in units of the inverted signal `1 - EAR`.
    pub peak: PeakParams,
    /// Odd moving-average window applied before detection.
    pub smoothing_window: Option<usize>,
    pub threshold_mode: ThresholdMode,
    pub manual_threshold_left: Option<f64>,
    pub manual_threshold_right: Option<f64>,
    pub max_match_delay_ms: f64,
    pub otsu_bins: usize,
}

impl Default for DetectionParams {
    fn default() -> Self {
        Self {
            peak: PeakParams::default(),
            smoothing_window: None,
            threshold_mode: ThresholdMode::Auto,
            manual_threshold_left: None,
            manual_threshold_right: None,
            max_match_delay_ms: DEFAULT_MAX_MATCH_DELAY_MS,
            otsu_bins: DEFAULT_BINS,
        }
    }
}

impl DetectionParams {
    pub fn validate(&self) -> Result<()> {
        self.peak.validate()?;
        if let Some(w) = self.smoothing_window {
            if w == 0 || w % 2 == 0 {
                return Err(Error::param("smoothing_window", "must be a positive odd number"));
            }
        }
        for (field, t) in [
            ("manual_threshold_left", self.manual_threshold_left),
            ("manual_threshold_right", self.manual_threshold_right),
        ] {
            if let Some(t) = t {
                if !(0.0..=1.0).contains(&t) {
                    return Err(Error::param(field, "must lie in [0, 1]"));
                }
            }
        }
        if self.threshold_mode == ThresholdMode::Manual
            && (self.manual_threshold_left.is_none() || self.manual_threshold_right.is_none())
        {
            return Err(Error::param(
                "threshold_mode",
                "manual mode needs both manual_threshold_left and manual_threshold_right",
            ));
        }
        if !(self.max_match_delay_ms > 0.0 && self.max_match_delay_ms.is_finite()) {
            return Err(Error::param("max_match_delay_ms", "must be positive"));
        }
        if self.otsu_bins < 2 {
            return Err(Error::param("otsu_bins", "must be at least 2"));
        }
        Ok(())
    }

    pub fn manual_threshold(&self, eye: Eye) -> Option<f64> {
        match eye {
            Eye::Left => self.manual_threshold_left,
            Eye::Right => self.manual_threshold_right,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BlinkState {
    None,
    Partial,
    Complete,
}

impl BlinkState {
    pub fn as_str(&self) -> &'static str {
        match self {
            BlinkState::None => "none",
            BlinkState::Partial => "partial",
            BlinkState::Complete => "complete",
        }
    }
}

impl fmt::Display for BlinkState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BlinkState {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(BlinkState::None),
            "partial" => Ok(BlinkState::Partial),
            "complete" => Ok(BlinkState::Complete),
            other => Err(Error::InvalidInput(format!("unknown blink state `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StateSource {
    #[default]
    Auto,
    Manual,
}

impl StateSource {
    pub fn as_str(&self) -> &'static str {
        match self {
            StateSource::Auto => "auto",
            StateSource::Manual => "manual",
        }
    }
}

impl FromStr for StateSource {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "auto" => Ok(StateSource::Auto),
            "manual" => Ok(StateSource::Manual),
            other => Err(Error::InvalidInput(format!("unknown state source `{other}`"))),
        }
    }
}

/// One detected blink of one eye.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlinkEvent {
    pub id: usize,
    pub eye: Eye,
    pub apex_frame: usize,
    pub apex_ear: f64,
    pub prominence: f64,
    pub width_frames: f64,
    /// Inverted-signal value at the apex, `1 - apex_ear`.
    pub height: f64,
    pub onset_frame: usize,
    pub offset_frame: usize,
    pub state: BlinkState,
    pub state_source: StateSource,
}

/// Detects blinks of one eye as peaks of `1 - EAR`.
///
/// Invalid samples are bridged by interpolation for detection only; a blink
/// whose apex falls on a bridged sample is dropped. Ids count from zero and
/// states start as `none`.
pub fn extract_blinks(series: &EarSeries, params: &DetectionParams) -> Result<Vec<BlinkEvent>> {
    params.validate()?;
    if series.valid_count() < 3 {
        return Err(Error::InvalidInput(format!(
            "{} eye series needs at least 3 valid samples",
            series.eye()
        )));
    }
    let smoothed;
    let series = match params.smoothing_window {
        Some(w) if w > 1 => {
            smoothed = smooth(series, w)?;
            &smoothed
        }
        _ => series,
    };
    let (bridged, fabricated) = series.bridged()?;
    let inverted: Vec<f64> = bridged.iter().map(|v| 1.0 - v).collect();

    let peaks = find_peaks(&inverted, &params.peak)?;
    Ok(peaks
        .into_iter()
        .filter(|p| !fabricated[p.index])
        .enumerate()
        .map(|(id, p)| BlinkEvent {
            id,
            eye: series.eye(),
            apex_frame: p.index,
            apex_ear: bridged[p.index],
            prominence: p.prominence,
            width_frames: p.width,
            height: p.height,
            onset_frame: p.left_base,
            offset_frame: p.right_base,
            state: BlinkState::None,
            state_source: StateSource::Auto,
        })
        .collect())
}

/// How the partial/complete threshold of one eye was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdSource {
    Otsu,
    Manual,
    /// Otsu was degenerate and a manual value was used instead.
    ManualFallback,
    /// No threshold could be found; every blink is complete.
    AllComplete,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Threshold {
    pub value: Option<f64>,
    pub source: ThresholdSource,
}

/// Picks the threshold of one eye from its own blinks (auto mode) or the
/// manual parameter.
pub fn resolve_threshold(events: &[BlinkEvent], eye: Eye, params: &DetectionParams) -> Threshold {
    let manual = params.manual_threshold(eye);
    if params.threshold_mode == ThresholdMode::Manual {
        return Threshold {
            value: manual,
            source: ThresholdSource::Manual,
        };
    }
    let prominences: Vec<f64> = events
        .iter()
        .filter(|e| e.eye == eye)
        .map(|e| e.prominence)
        .collect();
    match otsu_threshold(&prominences, params.otsu_bins) {
        Ok(t) => Threshold {
            value: Some(t),
            source: ThresholdSource::Otsu,
        },
        Err(_) => match manual {
            Some(t) => Threshold {
                value: Some(t),
                source: ThresholdSource::ManualFallback,
            },
            None => {
                if !prominences.is_empty() {
                    warn!(%eye, blinks = prominences.len(), "automatic threshold is degenerate; marking all blinks complete");
                }
                Threshold {
                    value: None,
                    source: ThresholdSource::AllComplete,
                }
            }
        },
    }
}

/// Sets `complete` when `prominence >= threshold`, else `partial`.
///
/// A `None` threshold marks everything complete. Manually set states are
/// kept unless `reset` is true, which also returns them to `auto`.
pub fn classify_blinks(events: &mut [BlinkEvent], threshold: Option<f64>, reset: bool) -> Result<()> {
    if let Some(t) = threshold {
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::param("threshold", "must lie in [0, 1]"));
        }
    }
    for event in events.iter_mut() {
        if event.state_source == StateSource::Manual && !reset {
            continue;
        }
        event.state = match threshold {
            Some(t) if event.prominence < t => BlinkState::Partial,
            _ => BlinkState::Complete,
        };
        event.state_source = StateSource::Auto;
    }
    Ok(())
}

/// Manual correction of one blink's state.
pub fn set_blink_state(events: &mut [BlinkEvent], event_id: usize, new_state: BlinkState) -> Result<&BlinkEvent> {
    let event = events
        .iter_mut()
        .find(|e| e.id == event_id)
        .ok_or(Error::UnknownBlink(event_id))?;
    event.state = new_state;
    event.state_source = StateSource::Manual;
    Ok(event)
}

/// Everything one detection run produces for a pair of series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    /// Left-eye events first, then right; ids are unique and equal to the
    /// position in this list.
    pub events: Vec<BlinkEvent>,
    pub matches: Vec<BlinkMatch>,
    pub threshold_left: Threshold,
    pub threshold_right: Threshold,
}

impl Detection {
    pub fn eye_events(&self, eye: Eye) -> impl Iterator<Item = &BlinkEvent> + '_ {
        self.events.iter().filter(move |e| e.eye == eye)
    }

    pub fn threshold(&self, eye: Eye) -> &Threshold {
        match eye {
            Eye::Left => &self.threshold_left,
            Eye::Right => &self.threshold_right,
        }
    }

    /// Rebuilds the bilateral pairing after events changed.
    pub fn rematch(&mut self, fps: f64, max_match_delay_ms: f64) -> Result<()> {
        let left: Vec<BlinkEvent> = self.eye_events(Eye::Left).cloned().collect();
        let right: Vec<BlinkEvent> = self.eye_events(Eye::Right).cloned().collect();
        self.matches = match_blinks(&left, &right, fps, max_match_delay_ms)?;
        Ok(())
    }
}

/// Extract, classify and match both eyes.
pub fn detect(left: &EarSeries, right: &EarSeries, params: &DetectionParams) -> Result<Detection> {
    params.validate()?;
    if left.len() != right.len() || left.fps() != right.fps() {
        return Err(Error::InvalidInput(
            "left and right series must share length and frame rate".into(),
        ));
    }
    let mut left_events = extract_blinks(left, params)?;
    let mut right_events = extract_blinks(right, params)?;

    let threshold_left = resolve_threshold(&left_events, Eye::Left, params);
    let threshold_right = resolve_threshold(&right_events, Eye::Right, params);
    classify_blinks(&mut left_events, threshold_left.value, true)?;
    classify_blinks(&mut right_events, threshold_right.value, true)?;

    let offset = left_events.len();
    for e in &mut right_events {
        e.id += offset;
    }
    let matches = match_blinks(&left_events, &right_events, left.fps(), params.max_match_delay_ms)?;
    left_events.extend(right_events);
    Ok(Detection {
        events: left_events,
        matches,
        threshold_left,
        threshold_right,
    })
}
