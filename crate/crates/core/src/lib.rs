//! Blink analysis on per-frame eye-aspect-ratio (EAR) scores.
//!
//! The pipeline turns landmark or score files into blink events, classifies
//! each blink as partial or complete, pairs left and right blinks, and
//! derives clinical statistics and a visual summary.

pub mod blinks;
pub mod ear;
pub mod error;
pub mod io;
pub mod matching;
pub mod otsu;
pub mod peaks;
pub mod pipeline;
pub mod series;
pub mod stats;
pub mod summary;
pub mod svg;
pub mod synth;

pub use blinks::{
    classify_blinks, detect, extract_blinks, resolve_threshold, set_blink_state, BlinkEvent,
    BlinkState, Detection, DetectionParams, StateSource, Threshold, ThresholdMode,
    ThresholdSource,
};
pub use ear::{compute_ear_2d, compute_ear_3d, ear_series_from_landmarks, EarVariant, EyeLandmarks, Point};
pub use error::{Error, Result};
pub use matching::{match_blinks, BlinkMatch};
pub use otsu::otsu_threshold;
pub use peaks::{find_peaks, PeakCandidate, PeakParams};
pub use pipeline::Recording;
pub use series::{auto_select_columns, load_score_csv, smooth, ColumnSelection, EarSeries, Eye};
pub use stats::{compute_statistics, StatsReport};
pub use summary::{build_summary, rolling_stats, SummaryBundle, SummaryOptions};
pub use svg::render_summary_svg;
