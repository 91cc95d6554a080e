//! Session state and its on-disk snapshot.

use blinkscope_core::blinks::{BlinkState, Detection, DetectionParams, StateSource};
use blinkscope_core::series::{auto_select_columns, read_headers, ColumnSelection};
use blinkscope_core::stats::StatsReport;
use blinkscope_core::summary::SummaryBundle;
use blinkscope_core::Recording;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{ApiError, FieldError};

/// One review session: an uploaded score file and the analysis built on it.
///
/// Every mutation bumps `version`. `dirty` means the cached statistics no
/// longer reflect the events and are recomputed on the next read.
#[derive(Debug)]
pub struct Session {
    pub id: String,
    pub csv: String,
    pub fps: f64,
    pub columns: Vec<String>,
    pub selection: ColumnSelection,
    pub recording: Recording,
    pub params: DetectionParams,
    pub detection: Option<Detection>,
    pub version: u64,
    pub dirty: bool,
    stats: Option<StatsReport>,
    summary: Option<SummaryBundle>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Snapshot {
    pub id: String,
    pub csv: String,
    pub fps: f64,
    pub selection: ColumnSelection,
    pub params: DetectionParams,
    pub detection: Option<Detection>,
    pub version: u64,
}

impl Session {
    pub fn load(id: String, csv: String, fps: f64, selection: Option<ColumnSelection>) -> Result<Self, ApiError> {
        if !(fps > 0.0 && fps.is_finite()) {
            return Err(ApiError::invalid_params(vec![FieldError {
                field: "fps".into(),
                message: "must be a positive number".into(),
            }]));
        }
        let columns = read_headers(csv.as_bytes())?;
        let (recording, selection) = Recording::from_score_csv(csv.as_bytes(), selection, fps)?;
        Ok(Self {
            id,
            csv,
            fps,
            columns,
            selection,
            recording,
            params: DetectionParams::default(),
            detection: None,
            version: 0,
            dirty: false,
            stats: None,
            summary: None,
        })
    }

    pub fn restore(snapshot: Snapshot) -> Result<Self, ApiError> {
        let mut session = Self::load(snapshot.id, snapshot.csv, snapshot.fps, Some(snapshot.selection))?;
        session.params = snapshot.params;
        session.detection = snapshot.detection;
        session.version = snapshot.version;
        session.dirty = session.detection.is_some();
        Ok(session)
    }

    pub fn snapshot(&self) -> Snapshot {
        Snapshot {
            id: self.id.clone(),
            csv: self.csv.clone(),
            fps: self.fps,
            selection: self.selection.clone(),
            params: self.params,
            detection: self.detection.clone(),
            version: self.version,
        }
    }

    pub fn auto_selection(&self) -> Option<ColumnSelection> {
        auto_select_columns(&self.columns)
    }

    fn touch(&mut self) {
        self.version += 1;
        self.dirty = true;
        self.stats = None;
        self.summary = None;
    }

    /// Re-reads the series from other columns; clears any detection.
    pub fn select_columns(&mut self, selection: ColumnSelection) -> Result<(), ApiError> {
        let (recording, selection) = Recording::from_score_csv(self.csv.as_bytes(), Some(selection), self.fps)?;
        self.recording = recording;
        self.selection = selection;
        self.detection = None;
        self.touch();
        Ok(())
    }

    pub fn set_params(&mut self, params: DetectionParams) {
        self.params = params;
        self.touch();
    }

    /// Runs detection with the session parameters. Returns the number of
    /// manual corrections that were discarded.
    pub fn detect(&mut self) -> Result<usize, ApiError> {
        let detection = self.recording.detect(&self.params)?;
        let cleared = self.manual_edits();
        self.detection = Some(detection);
        self.touch();
        Ok(cleared)
    }

    pub fn manual_edits(&self) -> usize {
        self.detection.as_ref().map_or(0, |d| {
            d.events.iter().filter(|e| e.state_source == StateSource::Manual).count()
        })
    }

    pub fn detection(&self) -> Result<&Detection, ApiError> {
        self.detection.as_ref().ok_or_else(ApiError::not_detected)
    }

    pub fn set_state(&mut self, event_id: usize, state: BlinkState) -> Result<(), ApiError> {
        let detection = self.detection.as_mut().ok_or_else(ApiError::not_detected)?;
        blinkscope_core::set_blink_state(&mut detection.events, event_id, state)?;
        self.touch();
        Ok(())
    }

    /// Cached statistics, if they are current.
    pub fn fresh_stats(&self) -> Option<&StatsReport> {
        self.stats.as_ref().filter(|_| !self.dirty)
    }

    pub fn stats(&mut self) -> Result<&StatsReport, ApiError> {
        if self.fresh_stats().is_none() {
            let report = self.recording.statistics(self.detection()?)?;
            self.stats = Some(report);
            self.dirty = false;
        }
        Ok(self.stats.as_ref().expect("just computed"))
    }

    pub fn cached_summary(&self) -> Option<&SummaryBundle> {
        self.summary.as_ref()
    }

    pub fn summary(&mut self) -> Result<&SummaryBundle, ApiError> {
        if self.summary.is_none() {
            let bundle = self.recording.summary(self.detection()?, &self.params)?;
            self.summary = Some(bundle);
        }
        Ok(self.summary.as_ref().expect("just computed"))
    }
}

/// Detection parameters as the flat key/value map used by parameter files.
pub fn params_to_map(params: &DetectionParams) -> Map<String, Value> {
    let p = &params.peak;
    let mut map = Map::new();
    map.insert("min_prominence".into(), p.min_prominence.into());
    map.insert("min_distance".into(), p.min_distance.into());
    map.insert("min_width".into(), p.min_width.into());
    map.insert("max_width".into(), p.max_width.into());
    map.insert("rel_height".into(), p.rel_height.into());
    map.insert("smoothing_window".into(), params.smoothing_window.into());
    let mode = serde_json::to_value(params.threshold_mode).expect("enum serializes");
    map.insert("threshold_mode".into(), mode);
    map.insert("manual_threshold_left".into(), params.manual_threshold_left.into());
    map.insert("manual_threshold_right".into(), params.manual_threshold_right.into());
    map.insert("max_match_delay_ms".into(), params.max_match_delay_ms.into());
    map.insert("otsu_bins".into(), params.otsu_bins.into());
    map
}

/// Builds parameters from defaults plus the given keys, collecting one
/// error per offending field.
pub fn params_from_map(map: &Map<String, Value>) -> Result<DetectionParams, ApiError> {
    let mut params = DetectionParams::default();
    let mut fields = Vec::new();
    for (key, value) in map {
        let text = match value {
            Value::Null => "none".to_string(),
            Value::Number(n) => n.to_string(),
            Value::String(s) => s.clone(),
            _ => {
                fields.push(FieldError {
                    field: key.clone(),
                    message: "expected a number, string or null".into(),
                });
                continue;
            }
        };
        if let Err(err) = blinkscope_core::io::apply_param(&mut params, key, &text) {
            let message = match err {
                blinkscope_core::Error::InvalidParameter { reason, .. } => reason,
                other => other.to_string(),
            };
            fields.push(FieldError { field: key.clone(), message });
        }
    }
    if !fields.is_empty() {
        return Err(ApiError::invalid_params(fields));
    }
    params.validate()?;
    Ok(params)
}
