//! Static SVG line plots and bar charts.

use std::fmt::Write as _;
use std::path::Path;

use bathy_core::io::write_atomic;

use crate::error::CliResult;

const W: f64 = 640.0;
const H: f64 = 400.0;
const MARGIN: (f64, f64, f64, f64) = (70.0, 20.0, 40.0, 50.0); // left, right, top, bottom
const COLORS: [&str; 5] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"];

pub struct Series<'a> {
    pub label: &'a str,
    pub x: &'a [f64],
    pub y: &'a [f64],
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn header(title: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#);
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#, W / 2.0, escape(title));
    s
}

fn range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.filter(|v| v.is_finite()).fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo <= 1e-300 + 1e-12 * lo.abs() {
        let pad = if lo == 0.0 { 1.0 } else { 0.1 * lo.abs() };
        return (lo - pad, hi + pad);
    }
    (lo, hi)
}

/// Line plot; with `log_y` non-positive values are dropped.
pub fn line_plot(path: &Path, title: &str, xlabel: &str, ylabel: &str, series: &[Series], log_y: bool) -> CliResult<()> {
    let ty = |v: f64| if log_y { if v > 0.0 { v.log10() } else { f64::NAN } } else { v };
    let (x0, x1) = range(series.iter().flat_map(|s| s.x.iter().copied()));
    let (y0, y1) = range(series.iter().flat_map(|s| s.y.iter().map(|&v| ty(v))));
    let (l, r, t, b) = MARGIN;
    let px = |x: f64| l + (x - x0) / (x1 - x0) * (W - l - r);
    let py = |y: f64| H - b - (y - y0) / (y1 - y0) * (H - t - b);

    let mut s = header(title);
    let _ = writeln!(s, r#"<rect x="{l}" y="{t}" width="{}" height="{}" fill="none" stroke="black"/>"#, W - l - r, H - t - b);
    for k in 0..=4 {
        let f = k as f64 / 4.0;
        let (xv, yv) = (x0 + f * (x1 - x0), y0 + f * (y1 - y0));
        let ylab = if log_y { format!("1e{yv:.1}") } else { format!("{yv:.3e}") };
        let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{xv:.3}</text>"#, px(xv), H - b + 16.0);
        let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{ylab}</text>"#, l - 4.0, py(yv) + 4.0);
    }
    let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#, l + (W - l - r) / 2.0, H - 10.0, escape(xlabel));
    let _ = writeln!(s, r#"<text x="14" y="{:.1}" text-anchor="middle" transform="rotate(-90 14 {:.1})">{}</text>"#, H / 2.0, H / 2.0, escape(ylabel));
    for (k, ser) in series.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        let pts: Vec<String> = ser
            .x
            .iter()
            .zip(ser.y)
            .map(|(&x, &y)| (x, ty(y)))
            .filter(|(_, y)| y.is_finite())
            .map(|(x, y)| format!("{:.2},{:.2}", px(x), py(y)))
            .collect();
        let _ = writeln!(s, r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#, pts.join(" "));
        let ly = t + 16.0 + 16.0 * k as f64;
        let _ = writeln!(s, r#"<line x1="{:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{color}" stroke-width="2"/>"#, W - r - 150.0, W - r - 130.0);
        let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}">{}</text>"#, W - r - 125.0, ly + 4.0, escape(ser.label));
    }
    s.push_str("</svg>\n");
    write_atomic(path, |w| Ok(w.write_all(s.as_bytes())?))?;
    Ok(())
}

/// Bars of `log10 |value|`; zero and non-finite values are drawn empty and labelled.
pub fn bar_chart(path: &Path, title: &str, bars: &[(String, f64)]) -> CliResult<()> {
    let logs: Vec<f64> = bars.iter().map(|(_, v)| if v.abs() > 0.0 && v.is_finite() { v.abs().log10() } else { f64::NAN }).collect();
    let (mut lo, hi) = range(logs.iter().copied());
    lo = lo.floor() - 1.0;
    let hi = hi.ceil().max(lo + 1.0);
    let (l, r, t, b) = (MARGIN.0, MARGIN.1, MARGIN.2, MARGIN.3 + 40.0);
    let slot = (W - l - r) / bars.len().max(1) as f64;
    let py = |y: f64| H - b - (y - lo) / (hi - lo) * (H - t - b);

    let mut s = header(title);
    let _ = writeln!(s, r#"<line x1="{l}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="black"/>"#, H - b, W - r, H - b);
    let _ = writeln!(s, r#"<line x1="{l}" y1="{t}" x2="{l}" y2="{:.1}" stroke="black"/>"#, H - b);
    let mut e = lo.ceil();
    while e <= hi {
        let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="end">1e{e}</text>"#, l - 4.0, py(e) + 4.0);
        e += ((hi - lo) / 6.0).ceil().max(1.0);
    }
    for (k, ((name, v), lg)) in bars.iter().zip(&logs).enumerate() {
        let x = l + slot * k as f64 + 0.15 * slot;
        let cx = x + 0.35 * slot;
        if lg.is_finite() {
            let top = py(*lg);
            let _ = writeln!(s, r#"<rect x="{x:.1}" y="{top:.1}" width="{:.1}" height="{:.1}" fill="{}"/>"#, 0.7 * slot, H - b - top, COLORS[0]);
        } else {
            let _ = writeln!(s, r#"<text x="{cx:.1}" y="{:.1}" text-anchor="middle">{}</text>"#, H - b - 6.0, if v.is_finite() { "0" } else { "inf" });
        }
        let ly = H - b + 12.0;
        let _ = writeln!(s, r#"<text x="{cx:.1}" y="{ly:.1}" text-anchor="end" transform="rotate(-45 {cx:.1} {ly:.1})">{}</text>"#, escape(name));
    }
    s.push_str("</svg>\n");
    write_atomic(path, |w| Ok(w.write_all(s.as_bytes())?))?;
    Ok(())
}
