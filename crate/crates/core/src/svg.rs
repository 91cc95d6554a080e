//! SVG rendering of a [`SummaryBundle`].
//!
//! Layout: per-minute blink counts on top, EAR over time in the main
//! panel, delay distribution on the right. Left eye is blue, right eye red;
//! complete blinks are dots, partial blinks triangles. Every mark carries a
//! class so it can be counted or styled: `blink complete`, `blink partial`,
//! `bpm-bar`, `delay-bar`.

use std::fmt::Write;

use crate::blinks::BlinkState;
use crate::series::Eye;
use crate::summary::{EyeTrace, SummaryBundle};

const WIDTH: f64 = 1200.0;
const HEIGHT: f64 = 720.0;

#[derive(Clone, Copy)]
struct Rect {
    x: f64,
    y: f64,
    w: f64,
    h: f64,
}

const TOP: Rect = Rect { x: 70.0, y: 30.0, w: 880.0, h: 120.0 };
const MAIN: Rect = Rect { x: 70.0, y: 170.0, w: 880.0, h: 490.0 };
const SIDE: Rect = Rect { x: 980.0, y: 170.0, w: 190.0, h: 490.0 };

fn color(eye: Eye) -> &'static str {
    match eye {
        Eye::Left => "#1f5fd6",
        Eye::Right => "#d62728",
    }
}

struct Scale {
    lo: f64,
    hi: f64,
    px_lo: f64,
    px_hi: f64,
}

impl Scale {
    fn at(&self, v: f64) -> f64 {
        if self.hi == self.lo {
            return self.px_lo;
        }
        self.px_lo + (v - self.lo) / (self.hi - self.lo) * (self.px_hi - self.px_lo)
    }
}

fn ear_ceiling(bundle: &SummaryBundle) -> f64 {
    let top = [&bundle.left, &bundle.right]
        .iter()
        .flat_map(|t| t.scatter.iter().chain(&t.rolling_mean))
        .map(|p| p.v)
        .chain(bundle.markers.iter().map(|m| m.apex_ear))
        .fold(0.0f64, f64::max);
    ((top * 1.1 * 10.0).ceil() / 10.0).clamp(0.1, 1.0).max(top)
}

fn axes(out: &mut String, r: Rect) {
    let _ = writeln!(
        out,
        r##"<rect class="frame" x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="#444" stroke-width="1"/>"##,
        r.x, r.y, r.w, r.h
    );
}

fn label(out: &mut String, x: f64, y: f64, anchor: &str, text: &str) {
    let _ = writeln!(
        out,
        r#"<text x="{x:.2}" y="{y:.2}" font-family="sans-serif" font-size="12" text-anchor="{anchor}">{text}</text>"#
    );
}

fn draw_trace(out: &mut String, trace: &EyeTrace, eye: Eye, xs: &Scale, ys: &Scale) {
    let c = color(eye);
    if !trace.rolling_mean.is_empty() {
        let mut band = String::new();
        for p in trace.rolling_mean.iter().zip(&trace.rolling_std).map(|(m, s)| (m.t, m.v + s.v)) {
            let _ = write!(band, "{}{:.2},{:.2}", if band.is_empty() { "M" } else { " L" }, xs.at(p.0), ys.at(p.1));
        }
        for p in trace.rolling_mean.iter().zip(&trace.rolling_std).rev().map(|(m, s)| (m.t, m.v - s.v)) {
            let _ = write!(band, " L{:.2},{:.2}", xs.at(p.0), ys.at(p.1));
        }
        let _ = writeln!(
            out,
            r#"<path class="rolling-std {eye}" d="{band} Z" fill="{c}" fill-opacity="0.15" stroke="none"/>"#
        );
    }
    if !trace.scatter.is_empty() {
        let mut d = String::new();
        for p in &trace.scatter {
            let _ = write!(d, "M{:.2},{:.2}h0", xs.at(p.t), ys.at(p.v));
        }
        let _ = writeln!(
            out,
            r#"<path class="scatter {eye}" d="{d}" stroke="{c}" stroke-opacity="0.35" stroke-width="2" stroke-linecap="round"/>"#
        );
    }
    if !trace.rolling_mean.is_empty() {
        let points: Vec<String> = trace
            .rolling_mean
            .iter()
            .map(|p| format!("{:.2},{:.2}", xs.at(p.t), ys.at(p.v)))
            .collect();
        let _ = writeln!(
            out,
            r#"<polyline class="rolling-mean {eye}" points="{}" fill="none" stroke="{c}" stroke-width="1.5"/>"#,
            points.join(" ")
        );
    }
}

/// Renders the bundle. Identical bundles give byte-identical documents.
pub fn render_summary_svg(bundle: &SummaryBundle) -> Vec<u8> {
    let mut out = String::new();
    let _ = writeln!(out, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);

    let duration = bundle.duration_s.max(f64::MIN_POSITIVE);
    let xs = Scale { lo: 0.0, hi: duration, px_lo: MAIN.x, px_hi: MAIN.x + MAIN.w };
    let ceiling = ear_ceiling(bundle);
    let ys = Scale { lo: 0.0, hi: ceiling, px_lo: MAIN.y + MAIN.h, px_hi: MAIN.y };

    // main panel
    axes(&mut out, MAIN);
    label(&mut out, MAIN.x + MAIN.w / 2.0, HEIGHT - 20.0, "middle", "time [s]");
    label(&mut out, MAIN.x - 8.0, MAIN.y + 4.0, "end", &format!("{ceiling:.1}"));
    label(&mut out, MAIN.x - 8.0, MAIN.y + MAIN.h + 4.0, "end", "0.0");
    label(&mut out, MAIN.x - 40.0, MAIN.y + MAIN.h / 2.0, "middle", "EAR");
    label(&mut out, MAIN.x + MAIN.w, MAIN.y + MAIN.h + 18.0, "end", &format!("{duration:.0}"));
    out.push_str("<g class=\"traces\">\n");
    draw_trace(&mut out, &bundle.left, Eye::Left, &xs, &ys);
    draw_trace(&mut out, &bundle.right, Eye::Right, &xs, &ys);
    out.push_str("</g>\n<g class=\"markers\">\n");
    for m in &bundle.markers {
        let (x, y, c, eye) = (xs.at(m.t), ys.at(m.apex_ear), color(m.eye), m.eye);
        match m.state {
            BlinkState::Complete => {
                let _ = writeln!(
                    out,
                    r##"<circle class="blink complete {eye}" cx="{x:.2}" cy="{y:.2}" r="3.5" fill="{c}" stroke="#000" stroke-width="0.5"/>"##
                );
            }
            BlinkState::Partial => {
                let _ = writeln!(
                    out,
                    r##"<polygon class="blink partial {eye}" points="{:.2},{:.2} {:.2},{:.2} {:.2},{:.2}" fill="{c}" stroke="#000" stroke-width="0.5"/>"##,
                    x,
                    y - 4.5,
                    x - 4.0,
                    y + 3.0,
                    x + 4.0,
                    y + 3.0
                );
            }
            BlinkState::None => {}
        }
    }
    out.push_str("</g>\n");

    // blinks per minute
    axes(&mut out, TOP);
    label(&mut out, TOP.x - 40.0, TOP.y + TOP.h / 2.0, "middle", "bpm");
    let peak = bundle.blinks_per_minute.iter().copied().max().unwrap_or(0).max(1) as f64;
    label(&mut out, TOP.x - 8.0, TOP.y + 4.0, "end", &format!("{peak:.0}"));
    out.push_str("<g class=\"blinks-per-minute\">\n");
    for (k, &count) in bundle.blinks_per_minute.iter().enumerate() {
        let t0 = k as f64 * 60.0;
        let t1 = ((k + 1) as f64 * 60.0).min(duration);
        let (x0, x1) = (xs.at(t0), xs.at(t1.max(t0)));
        let h = count as f64 / peak * TOP.h;
        let _ = writeln!(
            out,
            r##"<rect class="bpm-bar" x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="#6c6c6c"/>"##,
            x0 + 1.0,
            TOP.y + TOP.h - h,
            (x1 - x0 - 2.0).max(0.5),
            h
        );
    }
    out.push_str("</g>\n");

    // delay distribution, delay on the vertical axis
    axes(&mut out, SIDE);
    let hist = &bundle.delay_histogram;
    let edges = &hist.edges_ms;
    let (d_lo, d_hi) = (edges.first().copied().unwrap_or(-1.0), edges.last().copied().unwrap_or(1.0));
    let ds = Scale { lo: d_lo, hi: d_hi, px_lo: SIDE.y + SIDE.h, px_hi: SIDE.y };
    let widest = hist.counts.iter().copied().max().unwrap_or(0).max(1) as f64;
    label(&mut out, SIDE.x + SIDE.w / 2.0, SIDE.y - 8.0, "middle", "delay right-left [ms]");
    label(&mut out, SIDE.x + SIDE.w + 4.0, SIDE.y + 4.0, "start", &format!("{d_hi:.0}"));
    label(&mut out, SIDE.x + SIDE.w + 4.0, SIDE.y + SIDE.h + 4.0, "start", &format!("{d_lo:.0}"));
    let zero = ds.at(0.0);
    let _ = writeln!(
        out,
        r##"<line x1="{:.2}" y1="{zero:.2}" x2="{:.2}" y2="{zero:.2}" stroke="#999" stroke-dasharray="3,3"/>"##,
        SIDE.x,
        SIDE.x + SIDE.w
    );
    out.push_str("<g class=\"delay-distribution\">\n");
    for (k, &count) in hist.counts.iter().enumerate() {
        let (y0, y1) = (ds.at(edges[k + 1]), ds.at(edges[k]));
        let w = count as f64 / widest * SIDE.w;
        let _ = writeln!(
            out,
            r##"<rect class="delay-bar" x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="#6c6c6c"/>"##,
            SIDE.x,
            y0,
            w,
            (y1 - y0).max(0.0)
        );
    }
    out.push_str("</g>\n</svg>\n");
    out.into_bytes()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::summary::{delay_histogram, BlinkMarker, DelayHistogram};

    fn empty() -> SummaryBundle {
        let trace = EyeTrace { scatter: vec![], rolling_mean: vec![], rolling_std: vec![] };
        SummaryBundle {
            fps: 240.0,
            duration_s: 0.0,
            left: trace.clone(),
            right: trace,
            markers: vec![],
            blinks_per_minute: vec![],
            delay_histogram: DelayHistogram { edges_ms: vec![], counts: vec![] },
        }
    }

    #[test]
    fn empty_bundle_is_valid_svg() {
        let svg = String::from_utf8(render_summary_svg(&empty())).unwrap();
        let doc = roxmltree::Document::parse(&svg).unwrap();
        assert_eq!(doc.root_element().tag_name().name(), "svg");
        assert!(!svg.contains("class=\"blink complete") && !svg.contains("class=\"blink partial"));
    }

    #[test]
    fn markers_use_state_shapes() {
        let mut b = empty();
        b.duration_s = 60.0;
        b.blinks_per_minute = vec![2];
        b.delay_histogram = delay_histogram([4.0], 500.0);
        b.markers = vec![
            BlinkMarker { t: 1.0, apex_ear: 0.05, state: BlinkState::Complete, eye: Eye::Left },
            BlinkMarker { t: 1.0, apex_ear: 0.15, state: BlinkState::Partial, eye: Eye::Right },
        ];
        let svg = render_summary_svg(&b);
        assert_eq!(svg, render_summary_svg(&b));
        let text = String::from_utf8(svg).unwrap();
        let doc = roxmltree::Document::parse(&text).unwrap();
        let count = |tag: &str, class: &str| {
            doc.descendants()
                .filter(|n| n.has_tag_name(tag) && n.attribute("class").is_some_and(|c| c.starts_with(class)))
                .count()
        };
        assert_eq!(count("circle", "blink complete"), 1);
        assert_eq!(count("polygon", "blink partial"), 1);
        assert_eq!(count("rect", "bpm-bar"), 1);
        assert_eq!(count("rect", "delay-bar"), 101);
    }
}
