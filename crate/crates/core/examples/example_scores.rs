//! Writes the bundled example score file: 150 s of synthetic 240 fps EAR
//! for both eyes with two short tracking dropouts.
//!
//!     cargo run -p blinkscope-core --example example_scores -- data/example_scores.csv

use blinkscope_core::ear::EarVariant;
use blinkscope_core::io::{export_scores, write_atomic};
use blinkscope_core::synth::{generate, SynthConfig};
use blinkscope_core::EarSeries;

fn with_dropout(series: &EarSeries, gaps: &[(usize, usize)]) -> EarSeries {
    let mut valid = series.valid().to_vec();
    for &(start, len) in gaps {
        valid[start..start + len].fill(false);
    }
    EarSeries::with_mask(series.values().to_vec(), valid, series.fps(), series.eye()).unwrap()
}

fn main() {
    let path = std::env::args().nth(1).unwrap_or_else(|| "data/example_scores.csv".into());
    let synth = generate(&SynthConfig {
        duration_s: 150.0,
        seed: 2024,
        ..Default::default()
    })
    .unwrap();

    // keep the dropouts clear of every planted blink
    let busy = |frame: usize| {
        synth.blinks.iter().any(|b| {
            [b.left_apex, b.right_apex]
                .into_iter()
                .flatten()
                .any(|a| a.abs_diff(frame) < 3 * b.half_width + 60)
        })
    };
    let mut gaps = Vec::new();
    let mut frame = 9_000;
    while gaps.len() < 2 {
        if !busy(frame) && !busy(frame + 24) {
            gaps.push((frame, 24));
            frame += 12_000;
        }
        frame += 1;
    }
    let left = with_dropout(&synth.left, &gaps[..1]);
    let right = with_dropout(&synth.right, &gaps);

    let bytes = export_scores(&left, &right, EarVariant::TwoD).unwrap();
    write_atomic(std::path::Path::new(&path), &bytes).unwrap();
    eprintln!("wrote {path}: {} frames, {} planted blinks, dropouts at {gaps:?}", left.len(), synth.blinks.len());
}
