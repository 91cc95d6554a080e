//! Eye-aspect-ratio scores from the six-point eye contour.
//!
//! Points are ordered p1..p6: p1 outer corner, p2/p3 upper lid, p4 inner
//! corner, p5/p6 lower lid. The ratio is
//! `(|p2 - p6| + |p3 - p5|) / (2 |p1 - p4|)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::{EarSeries, Eye};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z: Option<f64>,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y, z: None }
    }

    pub fn with_depth(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z: Some(z) }
    }

    fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_none_or(f64::is_finite)
    }

    fn dist_2d(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    fn dist_3d(&self, other: &Point) -> Result<f64> {
        match (self.z, other.z) {
            (Some(za), Some(zb)) => {
                let (dx, dy, dz) = (self.x - other.x, self.y - other.y, za - zb);
                Ok((dx * dx + dy * dy + dz * dz).sqrt())
            }
            _ => Err(Error::InvalidInput(
                "3D eye-aspect-ratio requires a depth value on every landmark".into(),
            )),
        }
    }
}

/// Six landmarks of one eye, in contour order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EyeLandmarks {
    pub points: [Point; 6],
}

impl EyeLandmarks {
    pub fn new(points: [Point; 6]) -> Self {
        Self { points }
    }

    fn check_finite(&self) -> Result<()> {
        if self.points.iter().all(Point::is_finite) {
            Ok(())
        } else {
            Err(Error::InvalidInput("landmark coordinate is not finite".into()))
        }
    }

    pub fn has_depth(&self) -> bool {
        self.points.iter().all(|p| p.z.is_some())
    }
}

/// Which distance the ratio is built from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EarVariant {
    #[default]
    #[serde(rename = "2d")]
    TwoD,
    #[serde(rename = "3d")]
    ThreeD,
}

fn ratio(vertical_a: f64, vertical_b: f64, horizontal: f64) -> Result<f64> {
    if horizontal == 0.0 {
        return Err(Error::DegenerateGeometry);
    }
    Ok((vertical_a + vertical_b) / (2.0 * horizontal))
}

/// Planar eye-aspect-ratio; any depth values are ignored.
pub fn compute_ear_2d(eye: &EyeLandmarks) -> Result<f64> {
    eye.check_finite()?;
    let [p1, p2, p3, p4, p5, p6] = &eye.points;
    ratio(p2.dist_2d(p6), p3.dist_2d(p5), p1.dist_2d(p4))
}

/// Eye-aspect-ratio from 3D Euclidean distances. Every point must carry `z`.
pub fn compute_ear_3d(eye: &EyeLandmarks) -> Result<f64> {
    eye.check_finite()?;
    let [p1, p2, p3, p4, p5, p6] = &eye.points;
    ratio(p2.dist_3d(p6)?, p3.dist_3d(p5)?, p1.dist_3d(p4)?)
}

pub fn compute_ear(eye: &EyeLandmarks, variant: EarVariant) -> Result<f64> {
    match variant {
        EarVariant::TwoD => compute_ear_2d(eye),
        EarVariant::ThreeD => compute_ear_3d(eye),
    }
}

/// Scores inside `[0, 1]` are plausible; anything else is kept but flagged.
pub fn is_plausible_ear(value: f64) -> bool {
    (0.0..=1.0).contains(&value)
}

/// Landmarks of both eyes for one video frame. A missing eye is `None`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FrameLandmarks {
    pub left: Option<EyeLandmarks>,
    pub right: Option<EyeLandmarks>,
}

/// Per-frame scores for both eyes. Frames whose landmarks are missing,
/// degenerate, or give an implausible ratio stay in the series as invalid
/// samples so frame indices line up with the source video.
pub fn ear_series_from_landmarks(
    frames: &[FrameLandmarks],
    fps: f64,
    variant: EarVariant,
) -> Result<(EarSeries, EarSeries)> {
    if frames.is_empty() {
        return Err(Error::NoData);
    }
    if !(fps > 0.0 && fps.is_finite()) {
        return Err(Error::param("fps", "must be positive"));
    }

    let score = |eye: Option<&EyeLandmarks>| -> (f64, bool) {
        match eye.map(|e| compute_ear(e, variant)) {
            Some(Ok(v)) => (v, is_plausible_ear(v)),
            _ => (f64::NAN, false),
        }
    };

    let (mut lv, mut lm) = (Vec::with_capacity(frames.len()), Vec::with_capacity(frames.len()));
    let (mut rv, mut rm) = (Vec::with_capacity(frames.len()), Vec::with_capacity(frames.len()));
    for frame in frames {
        let (v, ok) = score(frame.left.as_ref());
        lv.push(v);
        lm.push(ok);
        let (v, ok) = score(frame.right.as_ref());
        rv.push(v);
        rm.push(ok);
    }
    Ok((
        EarSeries::with_mask(lv, lm, fps, Eye::Left)?,
        EarSeries::with_mask(rv, rm, fps, Eye::Right)?,
    ))
}
