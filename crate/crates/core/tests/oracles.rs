//! Cross-checks against the independent reference implementations.

use blinkscope_core::blinks::{BlinkEvent, BlinkState, StateSource};
use blinkscope_core::ear::{compute_ear_2d, compute_ear_3d, EyeLandmarks, Point};
use blinkscope_core::otsu::otsu_threshold;
use blinkscope_core::peaks::{find_peaks, PeakParams};
use blinkscope_core::{match_blinks, Eye};
use blinkscope_oracles as oracle;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_signal(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    match rng.gen_range(0..3) {
        0 => (0..len).map(|_| rng.gen_range(0.0..1.0)).collect(),
        // coarse levels make plateaus and equal heights common
        1 => (0..len).map(|_| f64::from(rng.gen_range(0..6)) * 0.2).collect(),
        _ => {
            let mut v = 0.5;
            (0..len)
                .map(|_| {
                    v += rng.gen_range(-0.05..0.05);
                    (v * 64.0_f64).round() / 64.0
                })
                .collect()
        }
    }
}

#[test]
fn find_peaks_matches_reference() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..300 {
        let len = rng.gen_range(10..1500);
        let signal = random_signal(&mut rng, len);
        let min_width = rng.gen_range(0.0..3.0);
        let params = PeakParams {
            min_prominence: rng.gen_range(0.0..0.5),
            min_distance: rng.gen_range(1..20),
            min_width,
            max_width: rng.gen_bool(0.5).then(|| min_width + rng.gen_range(0.0..30.0)),
            rel_height: rng.gen_range(0.05..=1.0),
        };
        let got = find_peaks(&signal, &params).unwrap();
        let want = oracle::peaks::find_peaks(
            &signal,
            &oracle::peaks::RefParams {
                min_prominence: params.min_prominence,
                min_distance: params.min_distance,
                min_width: params.min_width,
                max_width: params.max_width,
                rel_height: params.rel_height,
            },
        );
        assert_eq!(got.len(), want.len());
        for (g, w) in got.iter().zip(&want) {
            assert_eq!(g.index, w.index);
            assert_eq!((g.left_base, g.right_base), (w.left_base, w.right_base));
            assert!((g.prominence - w.prominence).abs() <= 1e-9);
            assert!((g.width - w.width).abs() <= 1e-9);
            assert!((g.left_ip - w.left_ip).abs() <= 1e-9);
            assert!((g.right_ip - w.right_ip).abs() <= 1e-9);
        }
    }
}

#[test]
fn otsu_matches_exhaustive_scan() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..200 {
        let n = rng.gen_range(2..80);
        let values: Vec<f64> = if rng.gen_bool(0.5) {
            (0..n).map(|_| rng.gen_range(0.0..1.0)).collect()
        } else {
            (0..n)
                .map(|_| if rng.gen_bool(0.6) { rng.gen_range(0.2..0.3) } else { rng.gen_range(0.05..0.12) })
                .collect()
        };
        let bins = if rng.gen_bool(0.5) { 256 } else { rng.gen_range(2..40) };
        let want = oracle::otsu::exhaustive_threshold(&values, bins);
        match otsu_threshold(&values, bins) {
            Ok(t) => assert_eq!(Some(t), want),
            Err(_) => assert_eq!(want, None),
        }
    }
}

fn eye_from(raw: &[[f64; 3]; 6]) -> EyeLandmarks {
    EyeLandmarks::new(raw.map(|p| Point::with_depth(p[0], p[1], p[2])))
}

#[test]
fn ear_matches_distance_formula() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..1000 {
        let raw: [[f64; 3]; 6] = std::array::from_fn(|_| {
            [rng.gen_range(-50.0..50.0), rng.gen_range(-50.0..50.0), rng.gen_range(-5.0..5.0)]
        });
        let eye = eye_from(&raw);
        assert!((compute_ear_2d(&eye).unwrap() - oracle::ear::ear(&raw, false)).abs() < 1e-12);
        assert!((compute_ear_3d(&eye).unwrap() - oracle::ear::ear(&raw, true)).abs() < 1e-12);
    }
}

fn events(eye: Eye, frames: &[usize], first_id: usize) -> Vec<BlinkEvent> {
    frames
        .iter()
        .enumerate()
        .map(|(k, &f)| BlinkEvent {
            id: first_id + k,
            eye,
            apex_frame: f,
            apex_ear: 0.05,
            prominence: 0.25,
            width_frames: 30.0,
            height: 0.95,
            onset_frame: f.saturating_sub(10),
            offset_frame: f + 10,
            state: BlinkState::Complete,
            state_source: StateSource::Auto,
        })
        .collect()
}

fn random_frames(rng: &mut ChaCha8Rng, span: usize) -> Vec<usize> {
    let n = rng.gen_range(0..=12);
    let mut f: Vec<usize> = (0..n).map(|_| rng.gen_range(0..span)).collect();
    f.sort_unstable();
    f.dedup();
    f
}

#[test]
fn matching_is_optimal() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let fps = 240.0;
    for _ in 0..200 {
        let span = [300, 1000, 4000][rng.gen_range(0..3)];
        let (lf, rf) = (random_frames(&mut rng, span), random_frames(&mut rng, span));
        let (l, r) = (events(Eye::Left, &lf, 0), events(Eye::Right, &rf, 100));
        let matches = match_blinks(&l, &r, fps, 500.0).unwrap();

        let frame = |id: usize| l.iter().chain(&r).find(|e| e.id == id).unwrap().apex_frame;
        let bilateral: Vec<_> = matches.iter().filter(|m| m.is_bilateral()).collect();
        let total: u64 = bilateral
            .iter()
            .map(|m| frame(m.left_id.unwrap()).abs_diff(frame(m.right_id.unwrap())) as u64)
            .sum();
        assert_eq!((bilateral.len(), total), oracle::matching::best_assignment(&lf, &rf, 120));
        assert_eq!(matches.len(), lf.len() + rf.len() - bilateral.len());
    }
}
