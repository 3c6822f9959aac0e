//! Minimal log-log plot of strong error against step size.

use std::fmt::Write as _;
use std::io;
use std::path::Path;

use crate::harness::ErrorRow;
use crate::schemes::SchemeId;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 20.0;
const BOTTOM: f64 = 50.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];

/// Writes [`render_loglog_svg`] to `out`.
pub fn emit_loglog_svg(rows: &[ErrorRow], out: &Path) -> io::Result<()> {
    let svg = render_loglog_svg(rows).map_err(|msg| io::Error::new(io::ErrorKind::InvalidInput, msg))?;
    std::fs::write(out, svg)
}

/// `log2(rms_error_x)` against `log2(tau)`: one polyline per scheme plus
/// dashed guides of slope 1 and 1/2 through the centroid of all points.
pub fn render_loglog_svg(rows: &[ErrorRow]) -> Result<String, String> {
    let mut series: Vec<(SchemeId, Vec<(f64, f64)>)> = Vec::new();
    for r in rows {
        if !(r.tau > 0.0 && r.rms_error_x > 0.0) {
            return Err(format!("{} at tau={}: non-positive value", r.scheme, r.tau));
        }
        let pt = (r.tau.log2(), r.rms_error_x.log2());
        match series.iter_mut().find(|(s, _)| *s == r.scheme) {
            Some((_, pts)) => pts.push(pt),
            None => series.push((r.scheme, vec![pt])),
        }
    }
    if series.is_empty() {
        return Err("no rows to plot".into());
    }
    if let Some((s, _)) = series.iter().find(|(_, pts)| pts.len() < 2) {
        return Err(format!("{s} has fewer than 2 points"));
    }
    for (_, pts) in &mut series {
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    }

    let all: Vec<(f64, f64)> = series.iter().flat_map(|(_, p)| p.iter().copied()).collect();
    let n = all.len() as f64;
    let cx = all.iter().map(|p| p.0).sum::<f64>() / n;
    let cy = all.iter().map(|p| p.1).sum::<f64>() / n;
    let x_lo = all.iter().map(|p| p.0).fold(f64::INFINITY, f64::min).floor();
    let x_hi = all.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max).ceil();
    let x_hi = if x_hi > x_lo { x_hi } else { x_lo + 1.0 };
    let guides = [(1.0, "slope 1"), (0.5, "slope 1/2")].map(|(k, label)| {
        let line = [(x_lo, cy + k * (x_lo - cx)), (x_hi, cy + k * (x_hi - cx))];
        (line, label)
    });
    let ys = all.iter().map(|p| p.1).chain(guides.iter().flat_map(|(l, _)| l.iter().map(|p| p.1)));
    let (y_min, y_max) = ys.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), y| (a.min(y), b.max(y)));
    let (y_lo, y_hi) = (y_min.floor(), y_max.ceil());
    let y_hi = if y_hi > y_lo { y_hi } else { y_lo + 1.0 };

    let px = |x: f64| LEFT + (x - x_lo) / (x_hi - x_lo) * (WIDTH - LEFT - RIGHT);
    let py = |y: f64| HEIGHT - BOTTOM - (y - y_lo) / (y_hi - y_lo) * (HEIGHT - TOP - BOTTOM);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<rect x="{LEFT}" y="{TOP}" width="{:.2}" height="{:.2}" fill="none" stroke="black"/>"#,
        WIDTH - LEFT - RIGHT,
        HEIGHT - TOP - BOTTOM
    );
    for k in (x_lo as i64)..=(x_hi as i64) {
        let x = px(k as f64);
        let _ = writeln!(
            s,
            r#"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="black"/><text x="{x:.2}" y="{:.2}" text-anchor="middle">2^{k}</text>"#,
            HEIGHT - BOTTOM,
            HEIGHT - BOTTOM + 5.0,
            HEIGHT - BOTTOM + 20.0
        );
    }
    for k in (y_lo as i64)..=(y_hi as i64) {
        let y = py(k as f64);
        let _ = writeln!(
            s,
            r#"<line x1="{:.2}" y1="{y:.2}" x2="{LEFT}" y2="{y:.2}" stroke="black"/><text x="{:.2}" y="{:.2}" text-anchor="end">2^{k}</text>"#,
            LEFT - 5.0,
            LEFT - 8.0,
            y + 4.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">step size</text>"#,
        0.5 * (LEFT + WIDTH - RIGHT),
        HEIGHT - 10.0
    );
    let _ = writeln!(
        s,
        r#"<text x="15" y="{:.2}" text-anchor="middle" transform="rotate(-90 15 {:.2})">rms error</text>"#,
        0.5 * (TOP + HEIGHT - BOTTOM),
        0.5 * (TOP + HEIGHT - BOTTOM)
    );

    for ([a, b], label) in &guides {
        let _ = writeln!(
            s,
            r#"<line class="guide" data-label="{label}" x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="gray" stroke-dasharray="6 4"/>"#,
            px(a.0),
            py(a.1),
            px(b.0),
            py(b.1)
        );
    }
    for (i, (scheme, pts)) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let points: Vec<String> = pts.iter().map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y))).collect();
        let _ = writeln!(
            s,
            r#"<polyline data-scheme="{scheme}" points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
            points.join(" ")
        );
    }

    let legend_y = TOP + 10.0;
    let entries = series
        .iter()
        .enumerate()
        .map(|(i, (scheme, _))| (scheme.to_string(), COLORS[i % COLORS.len()], ""))
        .chain(guides.iter().map(|(_, label)| (label.to_string(), "gray", r#" stroke-dasharray="6 4""#)));
    for (i, (label, color, dash)) in entries.enumerate() {
        let y = legend_y + 16.0 * i as f64;
        let _ = writeln!(
            s,
            r#"<line x1="{:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="{color}" stroke-width="2"{dash}/><text x="{:.2}" y="{:.2}">{label}</text>"#,
            LEFT + 10.0,
            LEFT + 35.0,
            LEFT + 40.0,
            y + 4.0
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}
