//! Minimal SVG charts: signed horizontal bars and loss curves.

use std::fmt::Write as _;

pub const POSITIVE: &str = "#2e7d32";
pub const NEGATIVE: &str = "#c62828";

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Horizontal bars in the given order: green right of the axis for positive
/// values, red left of it for negative ones.
pub fn bar_chart(title: &str, bars: &[(String, f64)]) -> String {
    let label_w = 330.0;
    let plot_w = 420.0;
    let row_h = 22.0;
    let top = 40.0;
    let width = label_w + plot_w + 80.0;
    let height = top + row_h * bars.len() as f64 + 30.0;
    let max = bars.iter().map(|(_, v)| v.abs()).fold(0.0f64, f64::max);
    let scale = if max > 0.0 { plot_w / 2.0 / max } else { 0.0 };
    let axis = label_w + plot_w / 2.0;

    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" font-family="sans-serif" font-size="12">"#);
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="22" font-size="15" text-anchor="middle">{}</text>"#, width / 2.0, escape(title));
    for (i, (label, v)) in bars.iter().enumerate() {
        let y = top + row_h * i as f64;
        let len = v.abs() * scale;
        let (x, color) = if *v >= 0.0 { (axis, POSITIVE) } else { (axis - len, NEGATIVE) };
        let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#, label_w - 8.0, y + 15.0, escape(label));
        let _ = writeln!(s, r#"<rect x="{x:.2}" y="{:.2}" width="{len:.2}" height="{:.2}" fill="{color}"/>"#, y + 3.0, row_h - 6.0);
        let tx = if *v >= 0.0 { axis + len + 4.0 } else { axis - len - 4.0 };
        let anchor = if *v >= 0.0 { "start" } else { "end" };
        let _ = writeln!(s, r#"<text x="{tx:.2}" y="{}" text-anchor="{anchor}" font-size="10">{v:.4}</text>"#, y + 15.0);
    }
    let _ = writeln!(s, r#"<line x1="{axis}" y1="{}" x2="{axis}" y2="{}" stroke="black"/>"#, top - 4.0, height - 26.0);
    s.push_str("</svg>\n");
    s
}

/// Training and validation loss per epoch, with the best epoch marked.
pub fn loss_curve(title: &str, train: &[f64], val: &[f64], best_epoch: usize) -> String {
    let (w, h) = (640.0, 400.0);
    let (left, right, top, bottom) = (60.0, 20.0, 40.0, 50.0);
    let n = train.len().max(val.len()).max(2);
    let finite = train.iter().chain(val).copied().filter(|v| v.is_finite());
    let lo = finite.clone().fold(f64::INFINITY, f64::min);
    let hi = finite.fold(f64::NEG_INFINITY, f64::max);
    let (lo, hi) = if lo.is_finite() && hi > lo { (lo, hi) } else { (0.0, 1.0) };
    let px = |i: usize| left + (w - left - right) * i as f64 / (n - 1) as f64;
    let py = |v: f64| top + (h - top - bottom) * (1.0 - (v - lo) / (hi - lo));
    let path = |vals: &[f64]| {
        vals.iter().enumerate().filter(|(_, v)| v.is_finite()).map(|(i, &v)| format!("{:.2},{:.2}", px(i), py(v))).collect::<Vec<_>>().join(" ")
    };

    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" font-family="sans-serif" font-size="12">"#);
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="22" font-size="15" text-anchor="middle">{}</text>"#, w / 2.0, escape(title));
    let _ = writeln!(s, r#"<line x1="{left}" y1="{}" x2="{}" y2="{}" stroke="black"/>"#, h - bottom, w - right, h - bottom);
    let _ = writeln!(s, r#"<line x1="{left}" y1="{top}" x2="{left}" y2="{}" stroke="black"/>"#, h - bottom);
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">epoch</text>"#, w / 2.0, h - 12.0);
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="end">{hi:.4}</text>"#, left - 4.0, top + 4.0);
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="end">{lo:.4}</text>"#, left - 4.0, h - bottom);
    let _ = writeln!(s, r##"<polyline fill="none" stroke="#1565c0" stroke-width="1.5" points="{}"/>"##, path(train));
    let _ = writeln!(s, r##"<polyline fill="none" stroke="#ef6c00" stroke-width="1.5" points="{}"/>"##, path(val));
    if best_epoch >= 1 && best_epoch <= n {
        let x = px(best_epoch - 1);
        let _ = writeln!(s, r##"<line x1="{x:.2}" y1="{top}" x2="{x:.2}" y2="{}" stroke="#777" stroke-dasharray="4 3"/>"##, h - bottom);
    }
    let _ = writeln!(s, r##"<text x="{}" y="{}" fill="#1565c0">train</text>"##, w - right - 90.0, top + 12.0);
    let _ = writeln!(s, r##"<text x="{}" y="{}" fill="#ef6c00">validation</text>"##, w - right - 90.0, top + 28.0);
    s.push_str("</svg>\n");
    s
}
