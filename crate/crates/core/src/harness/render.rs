//! SVG drawing of an instance and, optionally, a solution.
//!
//! Larger y is drawn higher up. Rectangles are thin outlines, segments are
//! bold lines.

use std::fmt::Write as _;

use crate::geometry::{Coord, Instance, Solution};

const PIXELS: f64 = 600.0;
const MARGIN: f64 = 20.0;
const LEGEND: f64 = 40.0;

pub fn render_svg(inst: &Instance, sol: Option<&Solution>) -> String {
    let b = inst.bounds;
    let (w, h) = ((b.x2 - b.x1).max(1) as f64, (b.y2 - b.y1).max(1) as f64);
    let scale = PIXELS / w.max(h);
    let px = |x: Coord| MARGIN + (x - b.x1) as f64 * scale;
    let py = |y: Coord| MARGIN + (b.y2 - y) as f64 * scale;
    let width = 2.0 * MARGIN + w * scale;
    let height = 2.0 * MARGIN + h * scale + LEGEND;

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.1}" height="{height:.1}" viewBox="0 0 {width:.1} {height:.1}">"#
    );
    out.push_str("<g class=\"rects\" fill=\"none\" stroke=\"#555\" stroke-width=\"1\">\n");
    for r in &inst.rects {
        let _ = writeln!(
            out,
            r#"<rect class="rect" data-id="{}" x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}"/>"#,
            r.id,
            px(r.x1),
            py(r.y2),
            (r.x2 - r.x1) as f64 * scale,
            (r.y2 - r.y1) as f64 * scale
        );
    }
    out.push_str("</g>\n");
    if let Some(sol) = sol {
        out.push_str("<g class=\"segments\" stroke=\"#c0392b\" stroke-width=\"3\" stroke-linecap=\"round\">\n");
        for s in &sol.segments {
            let (x1, y1, x2, y2) = if s.is_horizontal() {
                (px(s.lo), py(s.anchor), px(s.hi), py(s.anchor))
            } else {
                (px(s.anchor), py(s.lo), px(s.anchor), py(s.hi))
            };
            let _ = writeln!(
                out,
                r#"<line class="segment" x1="{x1:.2}" y1="{y1:.2}" x2="{x2:.2}" y2="{y2:.2}"/>"#
            );
        }
        out.push_str("</g>\n");
    }
    let top = height - LEGEND + 10.0;
    let _ = writeln!(out, r#"<g class="legend" font-family="sans-serif" font-size="12">"#);
    let _ = writeln!(
        out,
        "<line x1=\"{MARGIN}\" y1=\"{:.1}\" x2=\"{:.1}\" y2=\"{:.1}\" stroke=\"#555\"/><text x=\"{:.1}\" y=\"{:.1}\">rectangle ({})</text>",
        top,
        MARGIN + 20.0,
        top,
        MARGIN + 26.0,
        top + 4.0,
        inst.len()
    );
    if let Some(sol) = sol {
        let _ = writeln!(
            out,
            "<line x1=\"{:.1}\" y1=\"{top:.1}\" x2=\"{:.1}\" y2=\"{top:.1}\" stroke=\"#c0392b\" stroke-width=\"3\"/><text x=\"{:.1}\" y=\"{:.1}\">{} segment ({}, cost {})</text>",
            MARGIN + 160.0,
            MARGIN + 180.0,
            MARGIN + 186.0,
            top + 4.0,
            escape(&sol.solver_tag),
            sol.segments.len(),
            inst.physical(sol.cost)
        );
    }
    out.push_str("</g>\n</svg>\n");
    out
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
