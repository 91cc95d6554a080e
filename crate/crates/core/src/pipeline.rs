//! The end-to-end analysis of one recording, shared by the command line
//! and the review service.

use std::io::Read;

use crate::blinks::{detect, Detection, DetectionParams};
use crate::error::{Error, Result};
use crate::series::{auto_select_columns, load_score_csv, ColumnSelection, EarSeries};
use crate::stats::{compute_statistics, StatsReport};
use crate::summary::{build_summary, SummaryBundle, SummaryOptions};

/// Both eyes of one recording.
#[derive(Debug, Clone, PartialEq)]
pub struct Recording {
    pub left: EarSeries,
    pub right: EarSeries,
}

impl Recording {
    pub fn new(left: EarSeries, right: EarSeries) -> Result<Self> {
        if left.len() != right.len() || left.fps() != right.fps() {
            return Err(Error::InvalidInput(
                "left and right series must share length and frame rate".into(),
            ));
        }
        Ok(Self { left, right })
    }

    /// Loads a score file from memory. Without an explicit selection the
    /// columns are picked from the header.
    pub fn from_score_csv(
        bytes: &[u8],
        selection: Option<ColumnSelection>,
        fps: f64,
    ) -> Result<(Self, ColumnSelection)> {
        let selection = match selection {
            Some(s) => s,
            None => {
                let headers = crate::series::read_headers(bytes)?;
                auto_select_columns(&headers).ok_or_else(|| {
                    Error::InvalidInput(format!(
                        "could not pick left/right EAR columns from header {headers:?}; select them explicitly"
                    ))
                })?
            }
        };
        let (left, right) = load_score_csv(bytes, &selection, fps)?;
        Ok((Self { left, right }, selection))
    }

    pub fn read_score_csv<R: Read>(
        mut source: R,
        selection: Option<ColumnSelection>,
        fps: f64,
    ) -> Result<(Self, ColumnSelection)> {
        let mut bytes = Vec::new();
        source.read_to_end(&mut bytes)?;
        Self::from_score_csv(&bytes, selection, fps)
    }

    pub fn fps(&self) -> f64 {
        self.left.fps()
    }

    pub fn detect(&self, params: &DetectionParams) -> Result<Detection> {
        detect(&self.left, &self.right, params)
    }

    pub fn statistics(&self, detection: &Detection) -> Result<StatsReport> {
        compute_statistics(
            &detection.events,
            &self.left,
            &self.right,
            (detection.threshold_left.value, detection.threshold_right.value),
        )
    }

    pub fn summary(&self, detection: &Detection, params: &DetectionParams) -> Result<SummaryBundle> {
        let options = SummaryOptions {
            max_match_delay_ms: params.max_match_delay_ms,
            ..SummaryOptions::default()
        };
        build_summary(&self.left, &self.right, &detection.events, &detection.matches, &options)
    }
}
