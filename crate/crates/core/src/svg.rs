//! Heatmap rendering of occupation histograms as standalone SVG.

use std::fmt::Write;

use crate::invasion::{Histogram2d, HistogramSpec};

// Viridis control points.
const COLORMAP: [(f64, [u8; 3]); 6] = [
    (0.0, [68, 1, 84]),
    (0.2, [65, 68, 135]),
    (0.4, [42, 120, 142]),
    (0.6, [34, 168, 132]),
    (0.8, [122, 209, 81]),
    (1.0, [253, 231, 37]),
];

/// Colour for `t` in `[0, 1]`, linearly interpolated between control points.
pub fn colormap(t: f64) -> [u8; 3] {
    let t = if t.is_finite() { t.clamp(0.0, 1.0) } else { 0.0 };
    for w in COLORMAP.windows(2) {
        let ((t0, c0), (t1, c1)) = (w[0], w[1]);
        if t <= t1 {
            let f = (t - t0) / (t1 - t0);
            return std::array::from_fn(|i| (c0[i] as f64 + f * (c1[i] as f64 - c0[i] as f64)).round() as u8);
        }
    }
    COLORMAP[COLORMAP.len() - 1].1
}

fn hex(c: [u8; 3]) -> String {
    format!("#{:02x}{:02x}{:02x}", c[0], c[1], c[2])
}

fn tick_label(v: f64) -> String {
    let s = format!("{v:.3}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s.is_empty() || s == "-" {
        "0".into()
    } else {
        s.to_string()
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Renders `h` (already normalized) with a colour bar scaled to its maximum
/// cell. Deterministic for identical input.
pub fn heatmap(h: &Histogram2d, spec: &HistogramSpec, title: &str, x_label: &str, y_label: &str) -> String {
    let (nx, ny) = (spec.bins[0], spec.bins[1]);
    let (left, top, pw, ph) = (70.0, 40.0, 400.0, 400.0);
    let bar_x = left + pw + 30.0;
    let width = bar_x + 90.0;
    let height = top + ph + 60.0;
    let vmax = h.mass.iter().flatten().fold(0.0f64, |a, &b| a.max(b));
    let cw = pw / nx as f64;
    let chh = ph / ny as f64;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="24" text-anchor="middle" font-size="14">{}</text>"#,
        left + pw / 2.0,
        escape(title)
    );
    for (i, row) in h.mass.iter().enumerate() {
        for (j, &m) in row.iter().enumerate() {
            let t = if vmax > 0.0 { m / vmax } else { 0.0 };
            let x = left + i as f64 * cw;
            let y = top + ph - (j + 1) as f64 * chh;
            let _ = writeln!(
                s,
                r#"<rect x="{x:.3}" y="{y:.3}" width="{:.3}" height="{:.3}" fill="{}"/>"#,
                cw + 0.01,
                chh + 0.01,
                hex(colormap(t))
            );
        }
    }
    let _ = writeln!(s, r#"<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#);

    let ticks = 5;
    for k in 0..=ticks {
        let f = k as f64 / ticks as f64;
        let xv = spec.x_range[0] + f * (spec.x_range[1] - spec.x_range[0]);
        let yv = spec.y_range[0] + f * (spec.y_range[1] - spec.y_range[0]);
        let px = left + f * pw;
        let py = top + ph - f * ph;
        let _ = writeln!(
            s,
            r#"<line x1="{px:.3}" y1="{}" x2="{px:.3}" y2="{}" stroke="black"/><text x="{px:.3}" y="{}" text-anchor="middle">{}</text>"#,
            top + ph,
            top + ph + 5.0,
            top + ph + 18.0,
            tick_label(xv)
        );
        let _ = writeln!(
            s,
            r#"<line x1="{}" y1="{py:.3}" x2="{left}" y2="{py:.3}" stroke="black"/><text x="{}" y="{:.3}" text-anchor="end">{}</text>"#,
            left - 5.0,
            left - 8.0,
            py + 4.0,
            tick_label(yv)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        left + pw / 2.0,
        top + ph + 40.0,
        escape(x_label)
    );
    let _ = writeln!(
        s,
        r#"<text x="20" y="{}" text-anchor="middle" transform="rotate(-90 20 {})">{}</text>"#,
        top + ph / 2.0,
        top + ph / 2.0,
        escape(y_label)
    );

    // colour bar
    let steps = 64;
    let sh = ph / steps as f64;
    for k in 0..steps {
        let t = (k as f64 + 0.5) / steps as f64;
        let y = top + ph - (k + 1) as f64 * sh;
        let _ = writeln!(
            s,
            r#"<rect x="{bar_x}" y="{y:.3}" width="20" height="{:.3}" fill="{}"/>"#,
            sh + 0.01,
            hex(colormap(t))
        );
    }
    let _ = writeln!(s, r#"<rect x="{bar_x}" y="{top}" width="20" height="{ph}" fill="none" stroke="black"/>"#);
    for (f, v) in [(0.0, 0.0), (0.5, 0.5 * vmax), (1.0, vmax)] {
        let _ = writeln!(s, r#"<text x="{}" y="{:.3}">{v:.2e}</text>"#, bar_x + 25.0, top + ph - f * ph + 4.0);
    }
    let _ =
        writeln!(s, r#"<text x="{}" y="{}" font-size="10">overflow {:.2e}</text>"#, bar_x, top + ph + 40.0, h.overflow);
    s.push_str("</svg>\n");
    s
}
