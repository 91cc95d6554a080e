//! Left/right blink pairing by apex time.
//!
//! Pairs are only allowed when the apex delay is within the configured
//! window. Among all such pairings the one with the most pairs is chosen,
//! and among those the smallest total absolute delay. On a time line an
//! optimal pairing never crosses (if `l1 < l2` and `r1 < r2`, pairing
//! `l1-r1, l2-r2` is never worse than `l1-r2, l2-r1` and stays inside the
//! window), so an order-preserving dynamic program over each cluster of
//! mutually reachable blinks finds it exactly.

use serde::{Deserialize, Serialize};

use crate::blinks::BlinkEvent;
use crate::error::{Error, Result};
use crate::series::Eye;

/// A bilateral pair or a unilateral blink.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlinkMatch {
    pub left_id: Option<usize>,
    pub right_id: Option<usize>,
    /// Right apex time minus left apex time; `None` when unilateral.
    pub delay_ms: Option<f64>,
}

impl BlinkMatch {
    pub fn is_bilateral(&self) -> bool {
        self.left_id.is_some() && self.right_id.is_some()
    }

    pub fn contains(&self, id: usize) -> bool {
        self.left_id == Some(id) || self.right_id == Some(id)
    }
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
struct Score {
    pairs: usize,
    // negated total delay in frames, so larger is better
    neg_cost: i64,
}

impl Score {
    const ZERO: Score = Score { pairs: 0, neg_cost: 0 };

    fn plus_pair(self, cost: u64) -> Score {
        Score {
            pairs: self.pairs + 1,
            neg_cost: self.neg_cost - cost as i64,
        }
    }
}

/// Pairs (left index, right index) maximizing pair count, then minimizing
/// the summed `|right - left|` frame distance. Inputs must be ascending.
fn optimal_pairs(left: &[usize], right: &[usize], window: usize) -> Vec<(usize, usize)> {
    let (n, m) = (left.len(), right.len());
    let cols = m + 1;
    // best[i * cols + j]: optimum over left[i..] and right[j..]
    let mut best = vec![Score::ZERO; (n + 1) * cols];
    for i in (0..n).rev() {
        for j in (0..m).rev() {
            let skip_left = best[(i + 1) * cols + j];
            let skip_right = best[i * cols + j + 1];
            let mut s = skip_left.max(skip_right);
            let d = left[i].abs_diff(right[j]);
            if d <= window {
                s = s.max(best[(i + 1) * cols + j + 1].plus_pair(d as u64));
            }
            best[i * cols + j] = s;
        }
    }

    let mut pairs = Vec::new();
    let (mut i, mut j) = (0, 0);
    while i < n && j < m {
        let here = best[i * cols + j];
        let d = left[i].abs_diff(right[j]);
        if d <= window && best[(i + 1) * cols + j + 1].plus_pair(d as u64) == here {
            pairs.push((i, j));
            i += 1;
            j += 1;
        } else if best[(i + 1) * cols + j] == here {
            i += 1;
        } else {
            j += 1;
        }
    }
    pairs
}

/// Largest frame distance whose delay still fits in `max_delay_ms`.
fn window_frames(fps: f64, max_delay_ms: f64) -> usize {
    let mut w = (max_delay_ms / 1000.0 * fps).floor().max(0.0) as usize;
    while (w + 1) as f64 * 1000.0 / fps <= max_delay_ms {
        w += 1;
    }
    while w > 0 && w as f64 * 1000.0 / fps > max_delay_ms {
        w -= 1;
    }
    w
}

/// Pairs left and right blinks by apex time.
///
/// Unpaired blinks come back as unilateral matches. The result is sorted by
/// the earliest apex frame of each match, left before right on ties.
pub fn match_blinks(
    left: &[BlinkEvent],
    right: &[BlinkEvent],
    fps: f64,
    max_match_delay_ms: f64,
) -> Result<Vec<BlinkMatch>> {
    if !(fps > 0.0 && fps.is_finite()) {
        return Err(Error::param("fps", "must be positive"));
    }
    if max_match_delay_ms.is_nan() || max_match_delay_ms <= 0.0 {
        return Err(Error::param("max_match_delay_ms", "must be positive"));
    }
    let mut left: Vec<&BlinkEvent> = left.iter().collect();
    let mut right: Vec<&BlinkEvent> = right.iter().collect();
    left.sort_by_key(|e| (e.apex_frame, e.id));
    right.sort_by_key(|e| (e.apex_frame, e.id));
    if left.iter().any(|e| e.eye != Eye::Left) || right.iter().any(|e| e.eye != Eye::Right) {
        return Err(Error::InvalidInput("events passed for the wrong eye".into()));
    }

    let window = window_frames(fps, max_match_delay_ms);
    let mut paired_left = vec![false; left.len()];
    let mut paired_right = vec![false; right.len()];
    let mut matches = Vec::new();

    // split into clusters separated by gaps wider than the window
    let (mut li, mut ri) = (0, 0);
    while li < left.len() && ri < right.len() {
        let (l0, r0) = (li, ri);
        let mut reach = left[li].apex_frame.min(right[ri].apex_frame);
        loop {
            let next_l = left.get(li).map(|e| e.apex_frame);
            let next_r = right.get(ri).map(|e| e.apex_frame);
            let next = match (next_l, next_r) {
                (Some(a), Some(b)) => a.min(b),
                (Some(a), None) => a,
                (None, Some(b)) => b,
                (None, None) => break,
            };
            if next > reach + window {
                break;
            }
            reach = reach.max(next);
            if next_l == Some(next) {
                li += 1;
            } else {
                ri += 1;
            }
        }
        let lf: Vec<usize> = left[l0..li].iter().map(|e| e.apex_frame).collect();
        let rf: Vec<usize> = right[r0..ri].iter().map(|e| e.apex_frame).collect();
        for (a, b) in optimal_pairs(&lf, &rf, window) {
            let (l, r) = (left[l0 + a], right[r0 + b]);
            paired_left[l0 + a] = true;
            paired_right[r0 + b] = true;
            let delay = (r.apex_frame as f64 - l.apex_frame as f64) / fps * 1000.0;
            matches.push((l.apex_frame.min(r.apex_frame), 0u8, BlinkMatch {
                left_id: Some(l.id),
                right_id: Some(r.id),
                delay_ms: Some(delay),
            }));
        }
    }

    for (e, _) in left.iter().zip(&paired_left).filter(|(_, &p)| !p) {
        matches.push((e.apex_frame, 0, BlinkMatch { left_id: Some(e.id), right_id: None, delay_ms: None }));
    }
    for (e, _) in right.iter().zip(&paired_right).filter(|(_, &p)| !p) {
        matches.push((e.apex_frame, 1, BlinkMatch { left_id: None, right_id: Some(e.id), delay_ms: None }));
    }
    matches.sort_by_key(|&(frame, side, m)| (frame, side, m.left_id, m.right_id));
    Ok(matches.into_iter().map(|(_, _, m)| m).collect())
}
