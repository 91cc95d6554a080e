//! File formats: landmark input, score files, blink tables, statistics
//! exports and flat `key=value` parameter files.

use std::collections::BTreeMap;
use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use serde_json::{Map, Value};

use crate::blinks::{BlinkEvent, DetectionParams, ThresholdMode};
use crate::ear::{EarVariant, EyeLandmarks, FrameLandmarks, Point};
use crate::error::{Error, Result};
use crate::matching::BlinkMatch;
use crate::series::{EarSeries, Eye};
use crate::stats::StatsReport;

/// Left id, right id and delay of one `match_id` group.
type MatchGroup = (Option<usize>, Option<usize>, Option<f64>);

/// Formats with at most nine significant digits and no exponent.
pub fn fmt_sig9(v: f64) -> String {
    if !v.is_finite() {
        return String::new();
    }
    let rounded: f64 = format!("{v:.8e}").parse().unwrap_or(v);
    let s = format!("{rounded}");
    if s == "-0" {
        "0".to_string()
    } else {
        s
    }
}

/// Writes `bytes` to `path` through a temporary file in the same directory
/// and a rename, so readers never observe a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    // temp files are created private; outputs get ordinary permissions
    #[cfg(unix)]
    {
        use std::os::unix::fs::PermissionsExt;
        tmp.as_file().set_permissions(fs::Permissions::from_mode(0o644))?;
    }
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

// ---------------------------------------------------------------- landmarks

/// Parses a landmark CSV: a header row, then `frame` followed by the six
/// left-eye points and the six right-eye points, each as `x,y` or `x,y,z`.
/// An eye with any empty cell is treated as not visible in that frame.
pub fn load_landmark_csv<R: Read>(source: R) -> Result<(Vec<FrameLandmarks>, EarVariant)> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(source);
    let columns = reader.headers()?.len();
    let dims = match columns {
        25 => 2,
        37 => 3,
        n => {
            return Err(Error::InvalidInput(format!(
                "landmark file has {n} columns; expected 25 (2D) or 37 (3D)"
            )))
        }
    };
    let mut frames = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record?;
        let eye = |offset: usize| -> Result<Option<EyeLandmarks>> {
            let cells: Vec<&str> = (0..6 * dims).map(|k| record.get(offset + k).unwrap_or("").trim()).collect();
            if cells.iter().any(|c| c.is_empty()) {
                return Ok(None);
            }
            let mut nums = Vec::with_capacity(cells.len());
            for c in cells {
                nums.push(c.parse::<f64>().map_err(|_| {
                    Error::InvalidInput(format!("row {}: `{c}` is not a number", row + 1))
                })?);
            }
            let points = std::array::from_fn(|p| {
                let b = p * dims;
                if dims == 3 {
                    Point::with_depth(nums[b], nums[b + 1], nums[b + 2])
                } else {
                    Point::new(nums[b], nums[b + 1])
                }
            });
            Ok(Some(EyeLandmarks::new(points)))
        };
        frames.push(FrameLandmarks {
            left: eye(1)?,
            right: eye(1 + 6 * dims)?,
        });
    }
    if frames.is_empty() {
        return Err(Error::NoData);
    }
    let variant = if dims == 3 { EarVariant::ThreeD } else { EarVariant::TwoD };
    Ok((frames, variant))
}

// ------------------------------------------------------------------- scores

pub fn score_columns(variant: EarVariant) -> (&'static str, &'static str) {
    match variant {
        EarVariant::TwoD => ("EAR2D6_l", "EAR2D6_r"),
        EarVariant::ThreeD => ("EAR3D6_l", "EAR3D6_r"),
    }
}

/// Score file: `frame,<left>,<right>` with invalid samples as empty cells.
/// Values use the shortest representation that parses back exactly.
pub fn export_scores(left: &EarSeries, right: &EarSeries, variant: EarVariant) -> Result<Vec<u8>> {
    if left.len() != right.len() {
        return Err(Error::InvalidInput("series lengths differ".into()));
    }
    let (lc, rc) = score_columns(variant);
    let mut out = String::with_capacity(left.len() * 24 + 32);
    out.push_str(&format!("frame,{lc},{rc}\n"));
    let cell = |s: &EarSeries, i: usize| {
        if s.is_valid(i) {
            format!("{}", s.values()[i])
        } else {
            String::new()
        }
    };
    for i in 0..left.len() {
        out.push_str(&format!("{i},{},{}\n", cell(left, i), cell(right, i)));
    }
    Ok(out.into_bytes())
}

// ------------------------------------------------------------------- blinks

pub const BLINK_COLUMNS: [&str; 14] = [
    "id",
    "eye",
    "apex_frame",
    "apex_time_s",
    "apex_ear",
    "prominence",
    "width_frames",
    "height",
    "onset_frame",
    "offset_frame",
    "state",
    "state_source",
    "match_id",
    "delay_ms",
];

/// Blink table, one row per event ordered by id. `match_id` is the index of
/// the event's match; bilateral rows repeat the pair's signed delay.
pub fn export_blinks(events: &[BlinkEvent], matches: &[BlinkMatch], fps: f64) -> Result<Vec<u8>> {
    let mut match_of = BTreeMap::new();
    for (k, m) in matches.iter().enumerate() {
        for id in [m.left_id, m.right_id].into_iter().flatten() {
            match_of.insert(id, (k, m.delay_ms));
        }
    }
    let mut sorted: Vec<&BlinkEvent> = events.iter().collect();
    sorted.sort_by_key(|e| e.id);

    let mut writer = csv::Writer::from_writer(Vec::new());
    writer.write_record(BLINK_COLUMNS)?;
    for e in sorted {
        let (match_id, delay) = match match_of.get(&e.id) {
            Some(&(k, d)) => (k.to_string(), d.map(fmt_sig9).unwrap_or_default()),
            None => (String::new(), String::new()),
        };
        writer.write_record([
            e.id.to_string(),
            e.eye.to_string(),
            e.apex_frame.to_string(),
            fmt_sig9(e.apex_frame as f64 / fps),
            fmt_sig9(e.apex_ear),
            fmt_sig9(e.prominence),
            fmt_sig9(e.width_frames),
            fmt_sig9(e.height),
            e.onset_frame.to_string(),
            e.offset_frame.to_string(),
            e.state.to_string(),
            e.state_source.as_str().to_string(),
            match_id,
            delay,
        ])?;
    }
    writer.into_inner().map_err(|e| Error::Io(e.into_error()))
}

/// Reads a blink table written by [`export_blinks`], possibly with edited
/// `state` cells. Matches are rebuilt from `match_id`.
pub fn load_blinks_csv<R: Read>(source: R) -> Result<(Vec<BlinkEvent>, Vec<BlinkMatch>)> {
    let mut reader = csv::Reader::from_reader(source);
    let headers = reader.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    };
    let idx: Vec<usize> = BLINK_COLUMNS
        .iter()
        .map(|c| col(c))
        .collect::<Result<_>>()?;

    let mut events = Vec::new();
    let mut groups: BTreeMap<usize, MatchGroup> = BTreeMap::new();
    for (row, record) in reader.records().enumerate() {
        let record = record?;
        let cell = |k: usize| record.get(idx[k]).unwrap_or("").trim();
        let bad = |k: usize| Error::InvalidInput(format!("row {}: bad `{}` value `{}`", row + 1, BLINK_COLUMNS[k], cell(k)));
        let int = |k: usize| cell(k).parse::<usize>().map_err(|_| bad(k));
        let real = |k: usize| cell(k).parse::<f64>().map_err(|_| bad(k));

        let event = BlinkEvent {
            id: int(0)?,
            eye: cell(1).parse()?,
            apex_frame: int(2)?,
            apex_ear: real(4)?,
            prominence: real(5)?,
            width_frames: real(6)?,
            height: real(7)?,
            onset_frame: int(8)?,
            offset_frame: int(9)?,
            state: cell(10).parse()?,
            state_source: cell(11).parse()?,
        };
        if !cell(12).is_empty() {
            let entry = groups.entry(int(12)?).or_default();
            match event.eye {
                Eye::Left => entry.0 = Some(event.id),
                Eye::Right => entry.1 = Some(event.id),
            }
            if !cell(13).is_empty() {
                entry.2 = Some(real(13)?);
            }
        }
        events.push(event);
    }
    let matches = groups
        .into_values()
        .map(|(left_id, right_id, delay_ms)| BlinkMatch {
            left_id,
            right_id,
            delay_ms: if left_id.is_some() && right_id.is_some() { delay_ms } else { None },
        })
        .collect();
    Ok((events, matches))
}

// -------------------------------------------------------------------- stats

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StatValue {
    Count(usize),
    Real(f64),
    Absent,
}

impl From<Option<f64>> for StatValue {
    fn from(v: Option<f64>) -> Self {
        v.map_or(StatValue::Absent, StatValue::Real)
    }
}

/// One exported statistic.
#[derive(Debug, Clone, PartialEq)]
pub struct StatRow {
    pub name: String,
    pub value: StatValue,
    pub unit: &'static str,
}

const RATIO: &str = "[0,1]";

/// All statistics in reporting order, with per-minute rows expanded as
/// `..._minNN_...` (1-based, two digits).
pub fn stat_rows(report: &StatsReport) -> Vec<StatRow> {
    let mut rows = Vec::new();
    let mut push = |name: String, value: StatValue, unit: &'static str| {
        rows.push(StatRow { name, value, unit });
    };
    let (l, r) = (&report.left, &report.right);

    push("EAR_Before_Blink_left_avg".into(), l.ear_before_blink_avg.into(), RATIO);
    push("EAR_Before_Blink_right_avg".into(), r.ear_before_blink_avg.into(), RATIO);
    push("EAR_left_min".into(), l.ear_min.into(), RATIO);
    push("EAR_right_min".into(), r.ear_min.into(), RATIO);
    push("EAR_left_max".into(), l.ear_max.into(), RATIO);
    push("EAR_right_max".into(), r.ear_max.into(), RATIO);
    push("Partial_Blink_threshold_left".into(), l.partial_threshold.into(), RATIO);
    push("Partial_Blink_threshold_right".into(), r.partial_threshold.into(), RATIO);
    for (name, agg, unit) in [
        ("Prominence", report.prominence, RATIO),
        ("Width", report.width, "frames"),
        ("Height", report.height, RATIO),
    ] {
        push(format!("{name}_min"), agg.map(|a| a.min).into(), unit);
        push(format!("{name}_max"), agg.map(|a| a.max).into(), unit);
        push(format!("{name}_avg"), agg.map(|a| a.avg).into(), unit);
    }
    push("Partial_Blink_Total_left".into(), StatValue::Count(l.partial_total), "count");
    push("Partial_Blink_Total_right".into(), StatValue::Count(r.partial_total), "count");
    push("Partial_Frequency_left_bpm".into(), StatValue::Real(l.partial_freq_bpm), "1/min");
    push("Partial_Frequency_right_bpm".into(), StatValue::Real(r.partial_freq_bpm), "1/min");
    push("Blink_Length_left_ms_avg".into(), l.blink_length_ms.map(|s| s.avg).into(), "ms");
    push("Blink_Length_left_ms_std".into(), l.blink_length_ms.map(|s| s.std).into(), "ms");
    push("Blink_Length_right_ms_avg".into(), r.blink_length_ms.map(|s| s.avg).into(), "ms");
    push("Blink_Length_right_ms_std".into(), r.blink_length_ms.map(|s| s.std).into(), "ms");
    for (eye, counts) in [("left", &l.per_minute_partial), ("right", &r.per_minute_partial)] {
        for (k, &c) in counts.iter().enumerate() {
            push(format!("Partial_Blinks_min{:02}_{eye}", k + 1), StatValue::Count(c), "count");
        }
    }
    push("Complete_Blink_Total_left".into(), StatValue::Count(l.complete_total), "count");
    push("Complete_Blink_Total_right".into(), StatValue::Count(r.complete_total), "count");
    push("Complete_Frequency_left_bpm".into(), StatValue::Real(l.complete_freq_bpm), "1/min");
    push("Complete_Frequency_right_bpm".into(), StatValue::Real(r.complete_freq_bpm), "1/min");
    for (eye, counts) in [("left", &l.per_minute_complete), ("right", &r.per_minute_complete)] {
        for (k, &c) in counts.iter().enumerate() {
            push(format!("Complete_Blinks_min{:02}_{eye}", k + 1), StatValue::Count(c), "count");
        }
    }
    rows
}

/// `statistic,value,unit` rows; absent statistics are left out.
pub fn export_stats_csv(report: &StatsReport) -> Result<Vec<u8>> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer.write_record(["statistic", "value", "unit"])?;
    for row in stat_rows(report) {
        let value = match row.value {
            StatValue::Count(c) => c.to_string(),
            StatValue::Real(v) => fmt_sig9(v),
            StatValue::Absent => continue,
        };
        writer.write_record([row.name.as_str(), value.as_str(), row.unit])?;
    }
    writer.into_inner().map_err(|e| Error::Io(e.into_error()))
}

/// The same statistics as a flat JSON object in reporting order; absent
/// statistics are `null`.
pub fn stats_json(report: &StatsReport) -> Value {
    let mut map = Map::new();
    for row in stat_rows(report) {
        let value = match row.value {
            StatValue::Count(c) => Value::from(c),
            StatValue::Real(v) => serde_json::Number::from_f64(v).map_or(Value::Null, Value::Number),
            StatValue::Absent => Value::Null,
        };
        map.insert(row.name, value);
    }
    Value::Object(map)
}

pub fn export_stats_json(report: &StatsReport) -> Result<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(&stats_json(report))?;
    bytes.push(b'\n');
    Ok(bytes)
}

// ------------------------------------------------------------------- params

fn parse_optional<T: std::str::FromStr>(key: &'static str, value: &str) -> Result<Option<T>> {
    if value.eq_ignore_ascii_case("none") || value.is_empty() {
        return Ok(None);
    }
    value
        .parse()
        .map(Some)
        .map_err(|_| Error::param(key, format!("cannot parse `{value}`")))
}

fn parse_required<T: std::str::FromStr>(key: &'static str, value: &str) -> Result<T> {
    parse_optional(key, value)?.ok_or_else(|| Error::param(key, "a value is required"))
}

/// Applies one parameter assignment. Keys match the long CLI flags with
/// `_` in place of `-`.
pub fn apply_param(params: &mut DetectionParams, key: &str, value: &str) -> Result<()> {
    let value = value.trim();
    match key.trim() {
        "min_prominence" => params.peak.min_prominence = parse_required("min_prominence", value)?,
        "min_distance" => params.peak.min_distance = parse_required("min_distance", value)?,
        "min_width" => params.peak.min_width = parse_required("min_width", value)?,
        "max_width" => params.peak.max_width = parse_optional("max_width", value)?,
        "rel_height" => params.peak.rel_height = parse_required("rel_height", value)?,
        "smoothing_window" | "smooth" => params.smoothing_window = parse_optional("smoothing_window", value)?,
        "threshold_mode" => params.threshold_mode = value.parse::<ThresholdMode>()?,
        "threshold_left" | "manual_threshold_left" => {
            params.manual_threshold_left = parse_optional("manual_threshold_left", value)?
        }
        "threshold_right" | "manual_threshold_right" => {
            params.manual_threshold_right = parse_optional("manual_threshold_right", value)?
        }
        "max_match_delay_ms" | "max_match_delay" => {
            params.max_match_delay_ms = parse_required("max_match_delay_ms", value)?
        }
        "otsu_bins" => params.otsu_bins = parse_required("otsu_bins", value)?,
        other => return Err(Error::InvalidInput(format!("unknown parameter `{other}`"))),
    }
    Ok(())
}

/// Reads a flat `key=value` file on top of `params`. Blank lines and lines
/// starting with `#` are ignored.
pub fn parse_params_file(text: &str, params: &mut DetectionParams) -> Result<()> {
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::InvalidInput(format!("line {}: expected key=value", n + 1))
        })?;
        apply_param(params, key, value).map_err(|e| Error::InvalidInput(format!("line {}: {e}", n + 1)))?;
    }
    params.validate()
}
