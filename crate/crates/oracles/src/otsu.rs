/// Scans every interior bin edge of a `bins`-bin histogram over
/// `[min, max]` and returns the edge with the largest between-class
/// variance (class statistics over bin indices; ties go to the lowest edge).
/// `None` when fewer than two distinct values exist.
pub fn exhaustive_threshold(values: &[f64], bins: usize) -> Option<f64> {
    let min = values.iter().cloned().reduce(f64::min)?;
    let max = values.iter().cloned().reduce(f64::max)?;
    if min == max {
        return None;
    }
    let width = (max - min) / bins as f64;
    let bin = |v: f64| {
        let raw = ((v - min) / width).floor();
        if raw <= 0.0 {
            0
        } else {
            (raw as usize).min(bins - 1)
        }
    };

    let mut best_edge = None;
    let mut best_var = f64::NEG_INFINITY;
    for k in 1..bins {
        let (mut n0, mut s0, mut n1, mut s1) = (0u64, 0u64, 0u64, 0u64);
        for &v in values {
            let b = bin(v) as u64;
            if (b as usize) < k {
                n0 += 1;
                s0 += b;
            } else {
                n1 += 1;
                s1 += b;
            }
        }
        let var = if n0 == 0 || n1 == 0 {
            0.0
        } else {
            let (n0, s0, n1, s1) = (n0 as f64, s0 as f64, n1 as f64, s1 as f64);
            let total = n0 + n1;
            let (w0, w1) = (n0 / total, n1 / total);
            let diff = s0 / n0 - s1 / n1;
            w0 * w1 * diff * diff
        };
        if var > best_var {
            best_var = var;
            best_edge = Some(min + k as f64 * width);
        }
    }
    best_edge
}
