//! Per-eye EAR time series, score-file ingestion and smoothing.

use std::fmt;
use std::io::Read;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Eye {
    Left,
    Right,
}

impl Eye {
    pub fn as_str(&self) -> &'static str {
        match self {
            Eye::Left => "left",
            Eye::Right => "right",
        }
    }
}

impl fmt::Display for Eye {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Eye {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "left" => Ok(Eye::Left),
            "right" => Ok(Eye::Right),
            other => Err(Error::InvalidInput(format!("unknown eye `{other}`"))),
        }
    }
}

/// EAR samples of one eye at a fixed frame rate.
///
/// Every sample has a validity flag; invalid samples keep their slot so
/// that index `i` is always frame `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct EarSeries {
    values: Vec<f64>,
    valid: Vec<bool>,
    fps: f64,
    eye: Eye,
}

impl EarSeries {
    /// Builds a series where every finite value is valid.
    pub fn new(values: Vec<f64>, fps: f64, eye: Eye) -> Result<Self> {
        let valid = values.iter().map(|v| v.is_finite()).collect();
        Self::with_mask(values, valid, fps, eye)
    }

    /// Builds a series with an explicit validity mask. Non-finite values
    /// are always marked invalid, whatever the mask says.
    pub fn with_mask(values: Vec<f64>, mut valid: Vec<bool>, fps: f64, eye: Eye) -> Result<Self> {
        if values.len() != valid.len() {
            return Err(Error::InvalidInput(format!(
                "{} values but {} validity flags",
                values.len(),
                valid.len()
            )));
        }
        if !(fps > 0.0 && fps.is_finite()) {
            return Err(Error::param("fps", "must be positive"));
        }
        for (ok, v) in valid.iter_mut().zip(&values) {
            *ok &= v.is_finite();
        }
        Ok(Self {
            values,
            valid,
            fps,
            eye,
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn valid(&self) -> &[bool] {
        &self.valid
    }

    pub fn is_valid(&self, index: usize) -> bool {
        self.valid[index]
    }

    pub fn fps(&self) -> f64 {
        self.fps
    }

    pub fn eye(&self) -> Eye {
        self.eye
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn valid_count(&self) -> usize {
        self.valid.iter().filter(|&&ok| ok).count()
    }

    /// Valid samples paired with their frame index.
    pub fn valid_samples(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.values
            .iter()
            .zip(&self.valid)
            .enumerate()
            .filter_map(|(i, (&v, &ok))| ok.then_some((i, v)))
    }

    pub fn duration_secs(&self) -> f64 {
        self.len() as f64 / self.fps
    }

    pub fn min_valid(&self) -> Option<f64> {
        self.valid_samples().map(|(_, v)| v).reduce(f64::min)
    }

    pub fn max_valid(&self) -> Option<f64> {
        self.valid_samples().map(|(_, v)| v).reduce(f64::max)
    }

    /// Gap-free copy of the signal for peak detection.
    ///
    /// Interior invalid runs are linearly interpolated between the valid
    /// neighbours; leading and trailing runs repeat the nearest valid value.
    /// The returned mask is `true` at every fabricated sample. Fails when
    /// the series has no valid sample at all.
    pub fn bridged(&self) -> Result<(Vec<f64>, Vec<bool>)> {
        let n = self.len();
        let mut out = self.values.clone();
        let fabricated: Vec<bool> = self.valid.iter().map(|ok| !ok).collect();
        let first = self.valid.iter().position(|&ok| ok).ok_or(Error::NoData)?;
        let last = self.valid.iter().rposition(|&ok| ok).ok_or(Error::NoData)?;

        out[..first].fill(self.values[first]);
        out[last + 1..].fill(self.values[last]);

        let mut prev = first;
        for i in first + 1..=last {
            if !self.valid[i] {
                continue;
            }
            if i > prev + 1 {
                let (a, b) = (self.values[prev], self.values[i]);
                let span = (i - prev) as f64;
                for (k, slot) in out[prev + 1..i].iter_mut().enumerate() {
                    let t = (k + 1) as f64 / span;
                    *slot = a + (b - a) * t;
                }
            }
            prev = i;
        }
        debug_assert_eq!(out.len(), n);
        Ok((out, fabricated))
    }
}

/// Header names of the left and right score columns.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnSelection {
    pub left_column: String,
    pub right_column: String,
}

/// Splits a header into lowercase tokens at non-alphanumeric characters,
/// letter/digit transitions, and camel-case humps (`EARLeft` -> `ear`, `left`).
pub fn header_tokens(name: &str) -> Vec<String> {
    let chars: Vec<char> = name.chars().collect();
    let mut tokens = Vec::new();
    let mut current = String::new();
    for (i, &c) in chars.iter().enumerate() {
        if !c.is_alphanumeric() {
            if !current.is_empty() {
                tokens.push(std::mem::take(&mut current));
            }
            continue;
        }
        if let Some(&prev) = i.checked_sub(1).and_then(|j| chars.get(j)) {
            let next = chars.get(i + 1).copied();
            let boundary = prev.is_alphanumeric()
                && ((prev.is_alphabetic() != c.is_alphabetic())
                    || (prev.is_lowercase() && c.is_uppercase())
                    || (prev.is_uppercase()
                        && c.is_uppercase()
                        && next.is_some_and(char::is_lowercase)));
            if boundary && !current.is_empty() {
                tokens.push(std::mem::take(&mut current));
            }
        }
        current.extend(c.to_lowercase());
    }
    if !current.is_empty() {
        tokens.push(current);
    }
    tokens
}

/// Picks the first header carrying an `ear` token plus a side token
/// (`left`/`l`, `right`/`r`) for each eye. Returns `None` when either side
/// has no candidate.
pub fn auto_select_columns<S: AsRef<str>>(headers: &[S]) -> Option<ColumnSelection> {
    let tokenized: Vec<(&str, Vec<String>)> = headers
        .iter()
        .map(|h| (h.as_ref(), header_tokens(h.as_ref())))
        .collect();
    let has = |tokens: &[String], wanted: &[&str]| tokens.iter().any(|t| wanted.contains(&t.as_str()));

    let left = tokenized
        .iter()
        .find(|(_, t)| has(t, &["ear"]) && has(t, &["left", "l"]))?
        .0;
    let right = tokenized
        .iter()
        .find(|(name, t)| *name != left && has(t, &["ear"]) && has(t, &["right", "r"]))?
        .0;
    Some(ColumnSelection {
        left_column: left.to_string(),
        right_column: right.to_string(),
    })
}

/// Reads only the header row of a score file.
pub fn read_headers<R: Read>(source: R) -> Result<Vec<String>> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(source);
    Ok(reader.headers()?.iter().map(str::to_string).collect())
}

fn parse_cell(cell: &str) -> Option<f64> {
    let cell = cell.trim();
    if cell.is_empty() {
        return None;
    }
    cell.parse::<f64>().ok().filter(|v| v.is_finite())
}

/// Loads the selected score columns of a CSV with a header row.
///
/// Empty, unparsable and non-finite cells become invalid samples.
pub fn load_score_csv<R: Read>(
    source: R,
    selection: &ColumnSelection,
    fps: f64,
) -> Result<(EarSeries, EarSeries)> {
    if !(fps > 0.0 && fps.is_finite()) {
        return Err(Error::param("fps", "must be positive"));
    }
    if selection.left_column == selection.right_column {
        return Err(Error::InvalidInput(
            "left and right columns must differ".into(),
        ));
    }
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(source);
    let headers = reader.headers()?.clone();
    let position = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    };
    let li = position(&selection.left_column)?;
    let ri = position(&selection.right_column)?;

    let mut left = Vec::new();
    let mut right = Vec::new();
    let mut record = csv::StringRecord::new();
    while reader.read_record(&mut record)? {
        left.push(record.get(li).and_then(parse_cell).unwrap_or(f64::NAN));
        right.push(record.get(ri).and_then(parse_cell).unwrap_or(f64::NAN));
    }
    if left.is_empty() {
        return Err(Error::NoData);
    }
    Ok((
        EarSeries::new(left, fps, Eye::Left)?,
        EarSeries::new(right, fps, Eye::Right)?,
    ))
}

/// Centered moving average over valid samples, truncated at the edges.
///
/// Invalid samples stay invalid and do not contribute to their neighbours.
/// Each output is clamped to the range of the samples it averages, so the
/// result never leaves the input's range through rounding.
pub fn smooth(series: &EarSeries, window: usize) -> Result<EarSeries> {
    if window.is_multiple_of(2) {
        return Err(Error::param("smoothing_window", "must be a positive odd number"));
    }
    if window == 1 {
        return Ok(series.clone());
    }
    let half = window / 2;
    let n = series.len();
    let values = series.values();
    let mut out = values.to_vec();
    for (i, slot) in out.iter_mut().enumerate() {
        if !series.valid[i] {
            continue;
        }
        let lo = i.saturating_sub(half);
        let hi = (i + half).min(n - 1);
        let (mut sum, mut count) = (0.0, 0usize);
        let (mut min, mut max) = (f64::INFINITY, f64::NEG_INFINITY);
        let window = values[lo..=hi].iter().zip(&series.valid[lo..=hi]);
        for (&v, _) in window.filter(|(_, &ok)| ok) {
            sum += v;
            count += 1;
            min = min.min(v);
            max = max.max(v);
        }
        *slot = (sum / count as f64).clamp(min, max);
    }
    EarSeries::with_mask(out, series.valid.clone(), series.fps, series.eye)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn series(values: &[f64]) -> EarSeries {
        EarSeries::new(values.to_vec(), 240.0, Eye::Left).unwrap()
    }

    #[test]
    fn tokens() {
        assert_eq!(header_tokens("EAR_2D_left"), ["ear", "2", "d", "left"]);
        assert_eq!(header_tokens("EAR2D6_l"), ["ear", "2", "d", "6", "l"]);
        assert_eq!(header_tokens("earScoreRight"), ["ear", "score", "right"]);
        assert_eq!(header_tokens("EARLeft"), ["ear", "left"]);
        assert_eq!(header_tokens("year_l"), ["year", "l"]);
    }

    #[test]
    fn auto_select_exact_tokens() {
        let sel = auto_select_columns(&["frame", "EAR_2D_left", "EAR_2D_right"]).unwrap();
        assert_eq!(sel.left_column, "EAR_2D_left");
        assert_eq!(sel.right_column, "EAR_2D_right");
    }

    #[test]
    fn auto_select_without_ear_token() {
        assert_eq!(auto_select_columns(&["frame", "score_a", "score_b"]), None);
        assert_eq!(auto_select_columns(&["frame", "EAR_left"]), None);
    }

    #[test]
    fn auto_select_first_match_wins() {
        let sel =
            auto_select_columns(&["EAR2D6_l", "EAR2D6_r", "EAR3D6_l", "EAR3D6_r"]).unwrap();
        assert_eq!(sel.left_column, "EAR2D6_l");
        assert_eq!(sel.right_column, "EAR2D6_r");
    }

    #[test]
    fn load_three_rows() {
        let csv = "frame,EAR_left,EAR_right\n0,0.3,0.2\n1,0.31,0.21\n2,0.29,0.22\n";
        let sel = auto_select_columns(&read_headers(csv.as_bytes()).unwrap()).unwrap();
        let (l, r) = load_score_csv(csv.as_bytes(), &sel, 240.0).unwrap();
        assert_eq!(l.values(), &[0.3, 0.31, 0.29]);
        assert_eq!(r.values(), &[0.2, 0.21, 0.22]);
        assert_eq!(l.valid_count(), 3);
        assert_eq!(r.eye(), Eye::Right);
    }

    #[test]
    fn load_empty_cell_is_invalid() {
        let csv = "frame,EAR_left,EAR_right\n0,0.3,0.2\n1,,0.21\n2,nan,0.22\n";
        let sel = auto_select_columns(&read_headers(csv.as_bytes()).unwrap()).unwrap();
        let (l, _) = load_score_csv(csv.as_bytes(), &sel, 240.0).unwrap();
        assert_eq!(l.len(), 3);
        assert_eq!(l.valid(), &[true, false, false]);
    }

    #[test]
    fn load_missing_column_names_it() {
        let csv = "frame,EAR_left\n0,0.3\n";
        let sel = ColumnSelection {
            left_column: "EAR_left".into(),
            right_column: "EAR_right".into(),
        };
        let err = load_score_csv(csv.as_bytes(), &sel, 240.0).unwrap_err();
        assert!(err.to_string().contains("EAR_right"), "{err}");
    }

    #[test]
    fn load_without_rows() {
        let csv = "frame,EAR_left,EAR_right\n";
        let sel = auto_select_columns(&read_headers(csv.as_bytes()).unwrap()).unwrap();
        assert!(matches!(
            load_score_csv(csv.as_bytes(), &sel, 240.0),
            Err(Error::NoData)
        ));
    }

    #[test]
    fn smooth_window_one_is_identity() {
        let s = series(&[0.1, 0.7, 0.2, 0.25]);
        assert_eq!(smooth(&s, 1).unwrap(), s);
    }

    #[test]
    fn smooth_alternating() {
        let out = smooth(&series(&[0.0, 1.0, 0.0, 1.0, 0.0]), 3).unwrap();
        let expected = [0.5, 1.0 / 3.0, 2.0 / 3.0, 1.0 / 3.0, 0.5];
        for (a, b) in out.values().iter().zip(expected) {
            assert!((a - b).abs() < 1e-15, "{a} vs {b}");
        }
    }

    #[test]
    fn smooth_constant_unchanged() {
        let s = series(&[0.3; 50]);
        for w in [3, 5, 11, 101] {
            assert_eq!(smooth(&s, w).unwrap().values(), s.values());
        }
    }

    #[test]
    fn smooth_rejects_even_window() {
        assert!(smooth(&series(&[0.3; 5]), 2).is_err());
        assert!(smooth(&series(&[0.3; 5]), 0).is_err());
    }

    #[test]
    fn smooth_skips_invalid() {
        let s = EarSeries::with_mask(
            vec![0.2, 9.0, 0.4],
            vec![true, false, true],
            100.0,
            Eye::Right,
        )
        .unwrap();
        let out = smooth(&s, 3).unwrap();
        assert_eq!(out.valid(), s.valid());
        assert_eq!(out.values()[1], 9.0);
        assert!((out.values()[0] - 0.2).abs() < 1e-15);
    }

    #[test]
    fn bridging_interpolates_gaps() {
        let s = EarSeries::new(vec![f64::NAN, 0.2, f64::NAN, f64::NAN, 0.5, f64::NAN], 10.0, Eye::Left)
            .unwrap();
        let (bridged, fabricated) = s.bridged().unwrap();
        let expected = [0.2, 0.2, 0.3, 0.4, 0.5, 0.5];
        for (a, b) in bridged.iter().zip(expected) {
            assert!((a - b).abs() < 1e-12);
        }
        assert_eq!(fabricated, [true, false, true, true, false, true]);
    }

    proptest! {
        #[test]
        fn smoothing_preserves_shape_and_range(
            values in prop::collection::vec(0.0f64..1.0, 1..200),
            half in 0usize..10,
        ) {
            let s = series(&values);
            let out = smooth(&s, 2 * half + 1).unwrap();
            prop_assert_eq!(out.len(), s.len());
            prop_assert_eq!(out.fps(), s.fps());
            prop_assert!(out.min_valid().unwrap() >= s.min_valid().unwrap());
            prop_assert!(out.max_valid().unwrap() <= s.max_valid().unwrap());
        }
    }
}
