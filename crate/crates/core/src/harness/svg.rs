//! Minimal SVG charts for the report bundle.

use std::fmt::Write;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 360.0;
const MARGIN: f64 = 48.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn header(title: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>"#, WIDTH / 2.0, escape(title));
    let (x0, y0, x1) = (MARGIN, HEIGHT - MARGIN, WIDTH - MARGIN / 2.0);
    let _ = writeln!(s, r#"<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}" stroke="black"/>"#);
    let _ = writeln!(s, r#"<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{MARGIN}" stroke="black"/>"#);
    s
}

/// Vertical bars, one per label, scaled to the largest value.
pub fn bar_chart(title: &str, labels: &[String], values: &[f64]) -> String {
    let mut s = header(title);
    let max = values.iter().copied().fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let plot_w = WIDTH - 1.5 * MARGIN;
    let plot_h = HEIGHT - 2.0 * MARGIN;
    let step = plot_w / values.len().max(1) as f64;
    for (k, (label, v)) in labels.iter().zip(values).enumerate() {
        let h = plot_h * v.max(0.0) / max;
        let x = MARGIN + k as f64 * step;
        let _ = writeln!(
            s,
            r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{}"><title>{}: {v:.4}</title></rect>"#,
            x + 0.1 * step,
            HEIGHT - MARGIN - h,
            0.8 * step,
            h,
            COLORS[0],
            escape(label)
        );
        if values.len() <= 50 {
            let _ = writeln!(
                s,
                r#"<text transform="translate({:.2},{:.2}) rotate(60)" font-size="8">{}</text>"#,
                x + 0.3 * step,
                HEIGHT - MARGIN + 6.0,
                escape(label)
            );
        }
    }
    let _ = writeln!(s, r#"<text x="4" y="{}">{max:.3}</text>"#, MARGIN + 4.0);
    s.push_str("</svg>\n");
    s
}

/// Polylines on a shared axis box, with a legend.
pub fn line_chart(title: &str, series: &[(String, Vec<(f64, f64)>)]) -> String {
    let mut s = header(title);
    let points = series.iter().flat_map(|(_, p)| p.iter()).filter(|(_, y)| y.is_finite());
    let (mut xmin, mut xmax, mut ymin, mut ymax) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in points {
        xmin = xmin.min(x);
        xmax = xmax.max(x);
        ymin = ymin.min(y);
        ymax = ymax.max(y);
    }
    if !xmin.is_finite() {
        s.push_str("</svg>\n");
        return s;
    }
    if xmax == xmin {
        xmax = xmin + 1.0;
    }
    if ymax == ymin {
        ymax = ymin + 1.0;
    }
    let px = |x: f64| MARGIN + (x - xmin) / (xmax - xmin) * (WIDTH - 1.5 * MARGIN);
    let py = |y: f64| HEIGHT - MARGIN - (y - ymin) / (ymax - ymin) * (HEIGHT - 2.0 * MARGIN);
    for (k, (name, pts)) in series.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        let path: Vec<String> =
            pts.iter().filter(|(_, y)| y.is_finite()).map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y))).collect();
        let _ = writeln!(s, r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#, path.join(" "));
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" fill="{color}">{}</text>"#,
            WIDTH - 160.0,
            MARGIN + 14.0 * k as f64,
            escape(name)
        );
    }
    let _ = writeln!(s, r#"<text x="4" y="{}">{ymax:.3}</text>"#, MARGIN + 4.0);
    let _ = writeln!(s, r#"<text x="4" y="{}">{ymin:.3}</text>"#, HEIGHT - MARGIN);
    let _ = writeln!(s, r#"<text x="{MARGIN}" y="{}">{xmin}</text>"#, HEIGHT - MARGIN + 16.0);
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="end">{xmax}</text>"#, WIDTH - MARGIN / 2.0, HEIGHT - MARGIN + 16.0);
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn charts_are_well_formed() {
        let bars = bar_chart("a < b", &["x".into(), "y".into()], &[1.0, 2.0]);
        assert!(bars.starts_with("<svg") && bars.trim_end().ends_with("</svg>"));
        assert!(bars.contains("a &lt; b"));
        assert_eq!(bars.matches("<rect").count(), 3);
        let lines = line_chart("t", &[("auc".into(), vec![(1.0, 0.5), (2.0, 0.7)])]);
        assert_eq!(lines.matches("<polyline").count(), 1);
        assert!(line_chart("empty", &[]).ends_with("</svg>\n"));
    }
}
