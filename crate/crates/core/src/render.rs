//! Static SVG plot of agent paths.
//!
//! Output is a pure function of the trace: fixed canvas, fixed number
//! formatting, agents drawn in id order.

use std::fmt::Write as _;

use crate::field::Field;
use crate::trace::Trace;

const CANVAS: f64 = 600.0;
const MARGIN: f64 = 20.0;

/// Hue for agent `i` of `n`, evenly spaced around the color wheel.
fn hue(i: usize, n: usize) -> f64 {
    360.0 * i as f64 / n.max(1) as f64
}

/// Renders the first two coordinates of every agent path.
///
/// Draws one frame rectangle for the bounds, one polyline per agent, and a
/// marker (with a capture-radius ring when the trace has one) for each
/// known peak at the first and last recorded step.
pub fn render_svg(trace: &Trace) -> String {
    let bounds = trace.meta.field.bounds();
    let (x0, y0) = (bounds.lower[0], bounds.lower[1]);
    let (w, h) = (bounds.upper[0] - x0, bounds.upper[1] - y0);
    let scale = (CANVAS - 2.0 * MARGIN) / w.max(h);
    let px = |x: f64| MARGIN + (x - x0) * scale;
    // SVG y grows downward
    let py = |y: f64| MARGIN + (h - (y - y0)) * scale;

    let width = 2.0 * MARGIN + w * scale;
    let height = 2.0 * MARGIN + h * scale;
    let mut out = String::new();
    writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.2} {height:.2}">"#
    )
    .unwrap();
    writeln!(out, "<title>{}</title>", escape(&trace.meta.name)).unwrap();
    writeln!(
        out,
        r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="black" stroke-width="1"/>"#,
        MARGIN,
        MARGIN,
        w * scale,
        h * scale
    )
    .unwrap();

    let n = trace.n_agents();
    for i in 0..n {
        let mut points = String::new();
        for p in trace.path(i) {
            if !points.is_empty() {
                points.push(' ');
            }
            write!(points, "{:.2},{:.2}", px(p[0]), py(p[1])).unwrap();
        }
        writeln!(
            out,
            r#"<polyline data-agent="{i}" points="{points}" fill="none" stroke="hsl({:.1},80%,40%)" stroke-width="1.5"/>"#,
            hue(i, n)
        )
        .unwrap();
    }

    let mut peaks: Vec<Vec<f64>> = Vec::new();
    let first = trace.records.first().map_or(0, |r| r.iter);
    let last = trace.final_record().map_or(0, |r| r.iter);
    for t in [first, last] {
        for p in trace.meta.field.known_peaks(t).unwrap_or_default() {
            if !peaks.contains(&p) {
                peaks.push(p);
            }
        }
    }
    for p in &peaks {
        let (cx, cy) = (px(p[0]), py(p[1]));
        writeln!(
            out,
            r#"<path class="peak" d="M{:.2},{:.2}L{:.2},{:.2}M{:.2},{:.2}L{:.2},{:.2}" stroke="black" stroke-width="2"/>"#,
            cx - 5.0,
            cy - 5.0,
            cx + 5.0,
            cy + 5.0,
            cx - 5.0,
            cy + 5.0,
            cx + 5.0,
            cy - 5.0
        )
        .unwrap();
        if let Some(r) = trace.meta.capture_radius {
            writeln!(
                out,
                r#"<circle class="capture" cx="{cx:.2}" cy="{cy:.2}" r="{:.2}" fill="none" stroke="gray" stroke-dasharray="4,3"/>"#,
                r * scale
            )
            .unwrap();
        }
    }
    out.push_str("</svg>\n");
    out
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}
