//! Peak finding written directly from the definitions: plateau runs,
//! pairwise distance checks, explicit base spans and crossing searches.

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefPeak {
    pub index: usize,
    pub prominence: f64,
    pub left_base: usize,
    pub right_base: usize,
    pub width: f64,
    pub width_height: f64,
    pub left_ip: f64,
    pub right_ip: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct RefParams {
    pub min_prominence: f64,
    pub min_distance: usize,
    pub min_width: f64,
    pub max_width: Option<f64>,
    pub rel_height: f64,
}

/// Runs of equal values as `(start, end)` inclusive.
fn runs(x: &[f64]) -> Vec<(usize, usize)> {
    let mut out: Vec<(usize, usize)> = Vec::new();
    for i in 0..x.len() {
        match out.last_mut() {
            Some(run) if x[run.0] == x[i] => run.1 = i,
            _ => out.push((i, i)),
        }
    }
    out
}

pub fn maxima(x: &[f64]) -> Vec<usize> {
    let r = runs(x);
    (1..r.len().saturating_sub(1))
        .filter(|&k| x[r[k - 1].0] < x[r[k].0] && x[r[k + 1].0] < x[r[k].0])
        .map(|k| (r[k].0 + r[k].1) / 2)
        .collect()
}

pub fn thin(apexes: &[usize], x: &[f64], distance: usize) -> Vec<usize> {
    let mut order = apexes.to_vec();
    order.sort_by(|&a, &b| x[b].partial_cmp(&x[a]).unwrap().then(a.cmp(&b)));
    let mut kept: Vec<usize> = Vec::new();
    for a in order {
        if kept.iter().all(|&k| k.abs_diff(a) >= distance) {
            kept.push(a);
        }
    }
    kept.sort_unstable();
    kept
}

/// `(prominence, left_base, right_base)`.
pub fn prominence(x: &[f64], apex: usize) -> (f64, usize, usize) {
    let top = x[apex];
    let lo = (0..apex).rev().find(|&i| x[i] > top).map_or(0, |i| i + 1);
    let hi = (apex + 1..x.len()).find(|&i| x[i] > top).map_or(x.len() - 1, |i| i - 1);
    // lowest value, nearest to the apex on ties
    let left_base = (lo..=apex)
        .min_by(|&a, &b| x[a].partial_cmp(&x[b]).unwrap().then(b.cmp(&a)))
        .unwrap();
    let right_base = (apex..=hi)
        .min_by(|&a, &b| x[a].partial_cmp(&x[b]).unwrap().then(a.cmp(&b)))
        .unwrap();
    (top - x[left_base].max(x[right_base]), left_base, right_base)
}

/// `(width, level, left_ip, right_ip)`.
pub fn width(x: &[f64], apex: usize, prom: f64, left_base: usize, right_base: usize, rel: f64) -> (f64, f64, f64, f64) {
    let level = x[apex] - prom * rel;
    let li = (left_base..=apex).rev().find(|&i| x[i] <= level).unwrap_or(left_base);
    let ri = (apex..=right_base).find(|&i| x[i] <= level).unwrap_or(right_base);
    let left_ip = if x[li] < level {
        li as f64 + (level - x[li]) / (x[li + 1] - x[li])
    } else {
        li as f64
    };
    let right_ip = if x[ri] < level {
        ri as f64 - (level - x[ri]) / (x[ri - 1] - x[ri])
    } else {
        ri as f64
    };
    (right_ip - left_ip, level, left_ip, right_ip)
}

pub fn find_peaks(x: &[f64], p: &RefParams) -> Vec<RefPeak> {
    let apexes = thin(&maxima(x), x, p.min_distance.max(1));
    apexes
        .into_iter()
        .filter_map(|apex| {
            let (prom, lb, rb) = prominence(x, apex);
            if prom < p.min_prominence {
                return None;
            }
            let (w, level, lip, rip) = width(x, apex, prom, lb, rb, p.rel_height);
            if w < p.min_width || p.max_width.is_some_and(|m| w > m) {
                return None;
            }
            Some(RefPeak {
                index: apex,
                prominence: prom,
                left_base: lb,
                right_base: rb,
                width: w,
                width_height: level,
                left_ip: lip,
                right_ip: rip,
            })
        })
        .collect()
}
