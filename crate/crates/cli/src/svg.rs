//! Minimal SVG line charts.

use std::fmt::Write;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 400.0;
const MARGIN: f64 = 50.0;
const COLORS: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

pub struct Series<'a> {
    pub label: &'a str,
    pub points: Vec<(f64, f64)>,
}

fn bounds(series: &[Series]) -> (f64, f64, f64, f64) {
    let mut b = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for (x, y) in series.iter().flat_map(|s| s.points.iter()) {
        b = (b.0.min(*x), b.1.max(*x), b.2.min(*y), b.3.max(*y));
    }
    if !b.0.is_finite() {
        return (0.0, 1.0, 0.0, 1.0);
    }
    if b.1 == b.0 {
        b.1 = b.0 + 1.0;
    }
    if b.3 == b.2 {
        b = (b.0, b.1, b.2 - 1.0, b.3 + 1.0);
    }
    b
}

pub fn line_chart(title: &str, x_label: &str, y_label: &str, series: &[Series]) -> String {
    let (x0, x1, y0, y1) = bounds(series);
    let px = |x: f64| MARGIN + (x - x0) / (x1 - x0) * (WIDTH - 2.0 * MARGIN);
    let py = |y: f64| HEIGHT - MARGIN - (y - y0) / (y1 - y0) * (HEIGHT - 2.0 * MARGIN);

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(out, r#"<text x="{}" y="20" text-anchor="middle">{title}</text>"#, WIDTH / 2.0);
    let _ = writeln!(
        out,
        r#"<rect x="{MARGIN}" y="{MARGIN}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        WIDTH - 2.0 * MARGIN,
        HEIGHT - 2.0 * MARGIN
    );
    if y0 < 0.0 && y1 > 0.0 {
        let _ = writeln!(
            out,
            r#"<line x1="{MARGIN}" y1="{0:.2}" x2="{1}" y2="{0:.2}" stroke="gray" stroke-dasharray="4"/>"#,
            py(0.0),
            WIDTH - MARGIN
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" text-anchor="middle">{x_label}</text>"#,
        WIDTH / 2.0,
        HEIGHT - 12.0
    );
    let _ = writeln!(
        out,
        r#"<text x="14" y="{0}" text-anchor="middle" transform="rotate(-90 14 {0})">{y_label}</text>"#,
        HEIGHT / 2.0
    );
    for (x, anchor) in [(x0, "start"), (x1, "end")] {
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{}" text-anchor="{anchor}">{x:.4}</text>"#,
            px(x),
            HEIGHT - MARGIN + 15.0
        );
    }
    for y in [y0, y1] {
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{:.2}" text-anchor="end">{y:.4}</text>"#,
            MARGIN - 4.0,
            py(y) + 4.0
        );
    }
    for (i, s) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let pts: Vec<String> = s.points.iter().map(|(x, y)| format!("{:.2},{:.2}", px(*x), py(*y))).collect();
        let _ = writeln!(
            out,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
            pts.join(" ")
        );
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" fill="{color}">{}</text>"#,
            WIDTH - MARGIN - 120.0,
            MARGIN + 16.0 * (i as f64 + 1.0),
            s.label
        );
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chart_has_one_polyline_per_series() {
        let s = [
            Series { label: "a", points: vec![(0.0, 1.0), (1.0, 2.0)] },
            Series { label: "b", points: vec![(0.0, -1.0), (1.0, 0.5)] },
        ];
        let svg = line_chart("t", "x", "y", &s);
        assert!(svg.starts_with("<svg"));
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.contains("stroke-dasharray"));
    }

    #[test]
    fn degenerate_ranges_do_not_divide_by_zero() {
        let s = [Series { label: "flat", points: vec![(0.0, 3.0)] }];
        assert!(!line_chart("t", "x", "y", &s).contains("NaN"));
        assert!(!line_chart("t", "x", "y", &[]).contains("NaN"));
    }
}
