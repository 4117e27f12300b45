//! SVG line chart of quarterly edit counts, one polyline per top editor.

use std::fmt::Write;

use crate::personas::PersonaAssignment;
use crate::timeline::ArticleTimeline;

const WIDTH: f64 = 900.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 64.0;
const RIGHT: f64 = 230.0;
const TOP: f64 = 44.0;
const BOTTOM: f64 = 84.0;
const MAX_X_LABELS: usize = 16;

const PALETTE: [&str; 10] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
    "#bcbd22", "#17becf",
];

pub(crate) fn escape_xml(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c if (c as u32) < 0x20 && !matches!(c, '\t' | '\n' | '\r') => {}
            c => out.push(c),
        }
    }
    out
}

fn nice_step(raw: f64) -> f64 {
    let mag = 10f64.powf(raw.log10().floor());
    let frac = raw / mag;
    let nice = if frac <= 1.0 {
        1.0
    } else if frac <= 2.0 {
        2.0
    } else if frac <= 5.0 {
        5.0
    } else {
        10.0
    };
    (nice * mag).max(1.0)
}

/// Renders the oscillation chart. Legend entries carry the persona when an
/// assignment exists for that editor.
pub fn render_oscillation_chart(
    timeline: &ArticleTimeline,
    assignments: &[PersonaAssignment],
) -> String {
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let span = timeline.span.max(1);
    let max_count = timeline
        .series
        .iter()
        .flat_map(|s| s.counts.iter().copied())
        .max()
        .unwrap_or(0)
        .max(1);
    let step = nice_step(f64::from(max_count) / 5.0);
    let y_top = (f64::from(max_count) / step).ceil() * step;

    let x_at = |k: usize| {
        if span == 1 {
            LEFT + plot_w / 2.0
        } else {
            LEFT + k as f64 * plot_w / (span - 1) as f64
        }
    };
    let y_at = |v: f64| TOP + plot_h - v / y_top * plot_h;

    let mut svg = String::new();
    let w = &mut svg;
    let _ = writeln!(w, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        w,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let title = escape_xml(&timeline.article_key);
    let _ = writeln!(w, "<title>Edit oscillations: {title}</title>");
    let _ = writeln!(
        w,
        r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
    );
    let _ = writeln!(
        w,
        r#"<text x="{LEFT}" y="24" font-size="16" font-weight="bold">{title}</text>"#
    );

    // axes
    let x0 = LEFT;
    let x1 = LEFT + plot_w;
    let y0 = TOP + plot_h;
    let _ = writeln!(w, r#"<g class="axes" stroke="black" stroke-width="1">"#);
    let _ = writeln!(w, r#"<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}"/>"#);
    let _ = writeln!(w, r#"<line x1="{x0}" y1="{TOP}" x2="{x0}" y2="{y0}"/>"#);
    let _ = writeln!(w, "</g>");

    let _ = writeln!(w, r#"<g class="y-ticks" text-anchor="end">"#);
    let mut v = 0.0;
    while v <= y_top + 1e-9 {
        let y = y_at(v);
        let _ = writeln!(
            w,
            r##"<line x1="{:.2}" y1="{y:.2}" x2="{x0}" y2="{y:.2}" stroke="black"/><line x1="{x0}" y1="{y:.2}" x2="{x1}" y2="{y:.2}" stroke="#e0e0e0"/><text x="{:.2}" y="{:.2}">{v}</text>"##,
            x0 - 5.0,
            x0 - 8.0,
            y + 4.0,
        );
        v += step;
    }
    let _ = writeln!(w, "</g>");

    let stride = span.div_ceil(MAX_X_LABELS).max(1);
    let _ = writeln!(w, r#"<g class="x-ticks" text-anchor="end">"#);
    for (k, q) in timeline
        .quarters()
        .enumerate()
        .filter(|(k, _)| k % stride == 0)
    {
        let x = x_at(k);
        let _ = writeln!(
            w,
            r#"<line x1="{x:.2}" y1="{y0}" x2="{x:.2}" y2="{:.2}" stroke="black"/><text x="{x:.2}" y="{:.2}" transform="rotate(-45 {x:.2} {:.2})">{q}</text>"#,
            y0 + 5.0,
            y0 + 18.0,
            y0 + 18.0,
        );
    }
    let _ = writeln!(w, "</g>");

    let _ = writeln!(
        w,
        r#"<text class="axis-label" x="{:.2}" y="{:.2}" text-anchor="middle">Quarter</text>"#,
        LEFT + plot_w / 2.0,
        HEIGHT - 12.0
    );
    let _ = writeln!(
        w,
        r#"<text class="axis-label" x="16" y="{:.2}" text-anchor="middle" transform="rotate(-90 16 {:.2})">Edit count</text>"#,
        TOP + plot_h / 2.0,
        TOP + plot_h / 2.0
    );

    let _ = writeln!(w, r#"<g class="series" fill="none" stroke-width="2">"#);
    for (i, s) in timeline.series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let points: Vec<String> = s
            .counts
            .iter()
            .enumerate()
            .map(|(k, &c)| format!("{:.2},{:.2}", x_at(k), y_at(f64::from(c))))
            .collect();
        let _ = writeln!(
            w,
            r#"<polyline data-editor="{}" stroke="{color}" points="{}"/>"#,
            escape_xml(&s.editor_key),
            points.join(" ")
        );
        if span == 1 {
            let _ = writeln!(
                w,
                r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{color}"/>"#,
                x_at(0),
                y_at(f64::from(s.counts.first().copied().unwrap_or(0)))
            );
        }
    }
    let _ = writeln!(w, "</g>");

    let lx = LEFT + plot_w + 20.0;
    let _ = writeln!(w, r#"<g class="legend">"#);
    for (i, s) in timeline.series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let y = TOP + 10.0 + i as f64 * 20.0;
        let label = match assignments.iter().find(|a| a.editor_key == s.editor_key) {
            Some(a) => format!("{} ({})", s.editor_key, a.persona),
            None => s.editor_key.clone(),
        };
        let _ = writeln!(
            w,
            r#"<g class="legend-entry"><rect x="{lx:.2}" y="{:.2}" width="14" height="4" fill="{color}"/><text x="{:.2}" y="{:.2}">{}</text></g>"#,
            y - 4.0,
            lx + 20.0,
            y + 2.0,
            escape_xml(&label)
        );
    }
    let _ = writeln!(w, "</g>");
    let _ = writeln!(w, "</svg>");
    svg
}
