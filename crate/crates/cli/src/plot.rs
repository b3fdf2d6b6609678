//! Line charts with error bars, written as self-contained SVG 1.1. The
//! output is a pure function of the input series: coordinates are
//! rounded to fixed precision and nothing date- or environment-dependent
//! is embedded, so identical inputs give identical bytes.

use std::fmt::Write as _;
use std::path::Path;

pub struct Series {
    pub label: String,
    /// (x, y, standard error); the bar spans y +- se.
    pub points: Vec<(f64, f64, f64)>,
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 440.0;
const MARGIN_L: f64 = 62.0;
const MARGIN_R: f64 = 150.0;
const MARGIN_T: f64 = 34.0;
const MARGIN_B: f64 = 44.0;
const TICKS: usize = 5;

const PALETTE: [&str; 6] = [
    "#1b6ca8", "#d1495b", "#2e933c", "#8a4fff", "#e08d20", "#4f6d7a",
];

fn axis_range(lo: f64, hi: f64) -> (f64, f64) {
    if hi > lo {
        let pad = 0.05 * (hi - lo);
        (lo - pad, hi + pad)
    } else {
        // Degenerate (flat series): pad symmetrically so the line sits
        // mid-plot.
        (lo - 0.5, hi + 0.5)
    }
}

/// Render `series` to `path`. Errors on an empty series list or an empty
/// series, naming the offender.
pub fn emit_plot(series: &[Series], title: &str, path: &Path) -> Result<(), String> {
    let svg = render(series, title)?;
    std::fs::write(path, svg).map_err(|e| format!("plot {}: {}", path.display(), e))
}

fn render(series: &[Series], title: &str) -> Result<String, String> {
    if series.is_empty() {
        return Err("plot: no series to draw".to_string());
    }
    for s in series {
        if s.points.is_empty() {
            return Err(format!("plot: series '{}' has no points", s.label));
        }
    }
    let mut xlo = f64::INFINITY;
    let mut xhi = f64::NEG_INFINITY;
    let mut ylo = f64::INFINITY;
    let mut yhi = f64::NEG_INFINITY;
    for s in series {
        for &(x, y, se) in &s.points {
            xlo = xlo.min(x);
            xhi = xhi.max(x);
            ylo = ylo.min(y - se);
            yhi = yhi.max(y + se);
        }
    }
    let (xlo, xhi) = axis_range(xlo, xhi);
    let (ylo, yhi) = axis_range(ylo, yhi);
    let px = |x: f64| MARGIN_L + (x - xlo) / (xhi - xlo) * (WIDTH - MARGIN_L - MARGIN_R);
    let py = |y: f64| HEIGHT - MARGIN_B - (y - ylo) / (yhi - ylo) * (HEIGHT - MARGIN_T - MARGIN_B);

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(
        out,
        r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
    );
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="20" text-anchor="middle" font-size="14">{}</text>"#,
        (MARGIN_L + WIDTH - MARGIN_R) / 2.0,
        escape(title)
    );

    // Axes and ticks.
    let x0 = px(xlo);
    let x1 = px(xhi);
    let y0 = py(ylo);
    let y1 = py(yhi);
    let _ = writeln!(
        out,
        r#"<line x1="{x0:.2}" y1="{y0:.2}" x2="{x1:.2}" y2="{y0:.2}" stroke="black"/>"#
    );
    let _ = writeln!(
        out,
        r#"<line x1="{x0:.2}" y1="{y0:.2}" x2="{x0:.2}" y2="{y1:.2}" stroke="black"/>"#
    );
    for i in 0..=TICKS {
        let f = i as f64 / TICKS as f64;
        let xv = xlo + f * (xhi - xlo);
        let yv = ylo + f * (yhi - ylo);
        let tx = px(xv);
        let ty = py(yv);
        let _ = writeln!(
            out,
            r#"<line x1="{tx:.2}" y1="{y0:.2}" x2="{tx:.2}" y2="{:.2}" stroke="black"/>"#,
            y0 + 4.0
        );
        let _ = writeln!(
            out,
            r#"<text x="{tx:.2}" y="{:.2}" text-anchor="middle">{xv:.2}</text>"#,
            y0 + 18.0
        );
        let _ = writeln!(
            out,
            r#"<line x1="{:.2}" y1="{ty:.2}" x2="{x0:.2}" y2="{ty:.2}" stroke="black"/>"#,
            x0 - 4.0
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{yv:.2}</text>"#,
            x0 - 8.0,
            ty + 4.0
        );
    }

    for (k, s) in series.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        for &(x, y, se) in &s.points {
            if se > 0.0 {
                let _ = writeln!(
                    out,
                    r#"<line x1="{0:.2}" y1="{1:.2}" x2="{0:.2}" y2="{2:.2}" stroke="{color}"/>"#,
                    px(x),
                    py(y - se),
                    py(y + se)
                );
            }
        }
        let pts: Vec<String> = s
            .points
            .iter()
            .map(|&(x, y, _)| format!("{:.2},{:.2}", px(x), py(y)))
            .collect();
        let _ = writeln!(
            out,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
            pts.join(" ")
        );
        // Legend entry.
        let ly = MARGIN_T + 16.0 * k as f64;
        let _ = writeln!(
            out,
            r#"<line x1="{0:.2}" y1="{ly:.2}" x2="{1:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="1.5"/>"#,
            WIDTH - MARGIN_R + 10.0,
            WIDTH - MARGIN_R + 34.0
        );
        let _ = writeln!(
            out,
            r#"<text class="legend" x="{:.2}" y="{:.2}">{}</text>"#,
            WIDTH - MARGIN_R + 40.0,
            ly + 4.0,
            escape(&s.label)
        );
    }
    out.push_str("</svg>\n");
    Ok(out)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
