/// `(|p2-p6| + |p3-p5|) / (2 |p1-p4|)` on raw coordinate tuples.
pub fn ear(points: &[[f64; 3]; 6], use_depth: bool) -> f64 {
    let d = |a: usize, b: usize| {
        let dims = if use_depth { 3 } else { 2 };
        points[a][..dims]
            .iter()
            .zip(&points[b][..dims])
            .map(|(p, q)| (p - q) * (p - q))
            .sum::<f64>()
            .sqrt()
    };
    (d(1, 5) + d(2, 4)) / (2.0 * d(0, 3))
}
