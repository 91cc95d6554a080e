//! Deterministic synthetic recordings with planted blinks, for fixtures,
//! benchmarks and demos.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::Result;
use crate::series::{EarSeries, Eye};

/// One planted blink. A `None` apex means the eye does not blink.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlantedBlink {
    pub left_apex: Option<usize>,
    pub right_apex: Option<usize>,
    pub left_depth: f64,
    pub right_depth: f64,
    /// Frames from apex to where the lid is back at baseline.
    pub half_width: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub fps: f64,
    pub duration_s: f64,
    pub baseline: f64,
    pub noise_sd: f64,
    /// Inter-blink interval range in seconds.
    pub interval_s: (f64, f64),
    /// Probability that a blink is complete rather than partial.
    pub complete_ratio: f64,
    /// Probability that only one eye blinks.
    pub unilateral_ratio: f64,
    /// Largest right-minus-left apex offset in frames.
    pub max_offset_frames: i64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            fps: 240.0,
            duration_s: 60.0,
            baseline: 0.3,
            noise_sd: 0.003,
            interval_s: (2.5, 4.5),
            complete_ratio: 0.7,
            unilateral_ratio: 0.05,
            max_offset_frames: 6,
            seed: 7,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SynthRecording {
    pub left: EarSeries,
    pub right: EarSeries,
    pub blinks: Vec<PlantedBlink>,
}

pub const COMPLETE_DEPTH: (f64, f64) = (0.22, 0.28);
pub const PARTIAL_DEPTH: (f64, f64) = (0.12, 0.16);

/// Draws a blink schedule and renders both eyes with raised-cosine lid
/// closures on a noisy baseline.
pub fn generate(config: &SynthConfig) -> Result<SynthRecording> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let frames = (config.duration_s * config.fps).round() as usize;
    let margin = (config.fps * 0.5) as usize;

    let mut blinks = Vec::new();
    let mut t = rng.gen_range(config.interval_s.0 * 0.3..config.interval_s.1 * 0.6);
    loop {
        let apex = (t * config.fps).round() as usize;
        if apex + margin >= frames {
            break;
        }
        let complete = rng.gen_bool(config.complete_ratio);
        let range = if complete { COMPLETE_DEPTH } else { PARTIAL_DEPTH };
        let left_depth = rng.gen_range(range.0..range.1);
        let right_depth = (left_depth + rng.gen_range(-0.01..0.01)).clamp(range.0, range.1);
        let offset = rng.gen_range(-config.max_offset_frames..=config.max_offset_frames);
        let right = (apex as i64 + offset).max(0) as usize;
        let (left_apex, right_apex) = if rng.gen_bool(config.unilateral_ratio) {
            if rng.gen_bool(0.5) {
                (Some(apex), None)
            } else {
                (None, Some(right))
            }
        } else {
            (Some(apex), Some(right))
        };
        blinks.push(PlantedBlink {
            left_apex,
            right_apex,
            left_depth,
            right_depth,
            half_width: rng.gen_range(20..36),
        });
        t += rng.gen_range(config.interval_s.0..config.interval_s.1);
    }

    let noise = Normal::new(0.0, config.noise_sd.max(0.0)).expect("finite noise level");
    let mut render = |eye: Eye| -> Result<EarSeries> {
        let mut values: Vec<f64> = (0..frames)
            .map(|_| config.baseline + noise.sample(&mut rng))
            .collect();
        for b in &blinks {
            let (apex, depth) = match eye {
                Eye::Left => (b.left_apex, b.left_depth),
                Eye::Right => (b.right_apex, b.right_depth),
            };
            let Some(apex) = apex else { continue };
            let h = b.half_width as f64;
            let lo = apex.saturating_sub(b.half_width);
            let hi = (apex + b.half_width).min(frames - 1);
            for (i, v) in values.iter_mut().enumerate().take(hi + 1).skip(lo) {
                let x = (i as f64 - apex as f64) / h;
                *v -= depth * 0.5 * (1.0 + (std::f64::consts::PI * x).cos());
            }
        }
        EarSeries::new(values, config.fps, eye)
    };
    let left = render(Eye::Left)?;
    let right = render(Eye::Right)?;
    Ok(SynthRecording { left, right, blinks })
}
