//! Minimal SVG charts for the report artifacts.

use std::fmt::Write;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 420.0;
const MARGIN: f64 = 60.0;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn header(out: &mut String, height: f64, title: &str) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{height}" viewBox="0 0 {WIDTH} {height}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{}" y="24" text-anchor="middle" font-size="15">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
}

/// Horizontal bars, first entry on top.
pub fn bar_chart(title: &str, x_label: &str, labels: &[String], values: &[f64]) -> String {
    let row = 26.0;
    let left = 130.0;
    let height = MARGIN * 2.0 + row * labels.len() as f64;
    let max = values.iter().cloned().fold(0.0, f64::max);
    let scale = if max > 0.0 { (WIDTH - left - MARGIN) / max } else { 0.0 };
    let mut out = String::new();
    header(&mut out, height, title);
    for (i, (label, v)) in labels.iter().zip(values).enumerate() {
        let y = MARGIN + row * i as f64;
        let _ = writeln!(
            out,
            r##"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"##,
            left - 8.0,
            y + row * 0.6,
            escape(label)
        );
        let _ = writeln!(
            out,
            r##"<rect x="{left:.1}" y="{:.1}" width="{:.2}" height="{:.1}" fill="#1e88e5"/>"##,
            y + 3.0,
            v * scale,
            row - 6.0
        );
        let _ = writeln!(
            out,
            r##"<text x="{:.1}" y="{:.1}">{v:.4}</text>"##,
            left + v * scale + 4.0,
            y + row * 0.6
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
        (left + WIDTH - MARGIN) / 2.0,
        height - 20.0,
        escape(x_label)
    );
    out.push_str("</svg>\n");
    out
}

/// One polyline per series over a shared index axis. A series may carry a
/// band (lower, upper) drawn as a shaded area behind it.
pub struct Series<'a> {
    pub name: &'a str,
    pub values: &'a [f64],
    pub color: &'a str,
    pub band: Option<(&'a [f64], &'a [f64])>,
}

pub fn line_chart(title: &str, y_label: &str, series: &[Series<'_>]) -> String {
    let n = series.iter().map(|s| s.values.len()).max().unwrap_or(0);
    let all = series.iter().flat_map(|s| {
        let band = s.band.into_iter().flat_map(|(lo, hi)| lo.iter().chain(hi));
        s.values.iter().chain(band)
    });
    let (mut lo, mut hi) = all
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        (lo, hi) = (0.0, 1.0);
    }
    if hi - lo < 1e-12 {
        hi = lo + 1.0;
    }
    let px = |i: usize| MARGIN + (WIDTH - 2.0 * MARGIN) * i as f64 / (n.max(2) - 1) as f64;
    let py = |v: f64| HEIGHT - MARGIN - (HEIGHT - 2.0 * MARGIN) * (v - lo) / (hi - lo);

    let mut out = String::new();
    header(&mut out, HEIGHT, title);
    let _ = writeln!(
        out,
        r#"<line x1="{MARGIN}" y1="{0}" x2="{1}" y2="{0}" stroke="black"/><line x1="{MARGIN}" y1="{MARGIN}" x2="{MARGIN}" y2="{0}" stroke="black"/>"#,
        HEIGHT - MARGIN,
        WIDTH - MARGIN
    );
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{hi:.3}</text><text x="{:.1}" y="{:.1}" text-anchor="end">{lo:.3}</text>"#,
        MARGIN - 4.0,
        MARGIN + 4.0,
        MARGIN - 4.0,
        HEIGHT - MARGIN
    );
    let _ = writeln!(
        out,
        r#"<text x="16" y="{:.1}" transform="rotate(-90 16 {:.1})" text-anchor="middle">{}</text>"#,
        HEIGHT / 2.0,
        HEIGHT / 2.0,
        escape(y_label)
    );
    for s in series {
        if let Some((lower, upper)) = s.band {
            let mut pts = String::new();
            for (i, v) in upper.iter().enumerate() {
                let _ = write!(pts, "{:.1},{:.1} ", px(i), py(*v));
            }
            for (i, v) in lower.iter().enumerate().rev() {
                let _ = write!(pts, "{:.1},{:.1} ", px(i), py(*v));
            }
            let _ = writeln!(
                out,
                r#"<polygon points="{}" fill="{}" fill-opacity="0.2" stroke="none"/>"#,
                pts.trim_end(),
                s.color
            );
        }
    }
    for (k, s) in series.iter().enumerate() {
        let mut pts = String::new();
        for (i, v) in s.values.iter().enumerate() {
            let _ = write!(pts, "{:.1},{:.1} ", px(i), py(*v));
        }
        let _ = writeln!(
            out,
            r#"<polyline points="{}" fill="none" stroke="{}" stroke-width="1.2"/>"#,
            pts.trim_end(),
            s.color
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" fill="{}">{}</text>"#,
            WIDTH - MARGIN - 140.0,
            MARGIN + 16.0 * k as f64,
            s.color,
            escape(s.name)
        );
    }
    out.push_str("</svg>\n");
    out
}
