use std::collections::HashMap;

/// Optimum over every one-to-one pairing of `left` and `right` apex frames
/// whose pairs lie within `window` frames: most pairs first, then smallest
/// summed distance. Returns `(pairs, total_distance)`.
///
/// Exhaustive search over (next left blink, set of used right blinks), so
/// it is only meant for small instances (at most 20 right blinks).
pub fn best_assignment(left: &[usize], right: &[usize], window: usize) -> (usize, u64) {
    assert!(right.len() <= 20);
    fn go(
        i: usize,
        used: u32,
        left: &[usize],
        right: &[usize],
        window: usize,
        memo: &mut HashMap<(usize, u32), (usize, u64)>,
    ) -> (usize, u64) {
        if i == left.len() {
            return (0, 0);
        }
        if let Some(&v) = memo.get(&(i, used)) {
            return v;
        }
        let better = |a: (usize, u64), b: (usize, u64)| {
            if a.0 != b.0 {
                if a.0 > b.0 { a } else { b }
            } else if a.1 <= b.1 {
                a
            } else {
                b
            }
        };
        let mut best = go(i + 1, used, left, right, window, memo);
        for (j, &r) in right.iter().enumerate() {
            if used & (1 << j) != 0 {
                continue;
            }
            let d = left[i].abs_diff(r);
            if d <= window {
                let (p, c) = go(i + 1, used | (1 << j), left, right, window, memo);
                best = better(best, (p + 1, c + d as u64));
            }
        }
        memo.insert((i, used), best);
        best
    }
    go(0, 0, left, right, window, &mut HashMap::new())
}
