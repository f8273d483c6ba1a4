//! Minimal SVG line plots: one or more panels laid out on a grid, each with
//! linear axes, ticks, labels and a legend.

use std::fmt::Write;

const PANEL_W: f64 = 440.0;
const PANEL_H: f64 = 320.0;
const MARGIN_L: f64 = 72.0;
const MARGIN_R: f64 = 16.0;
const MARGIN_T: f64 = 34.0;
const MARGIN_B: f64 = 52.0;
const TITLE_H: f64 = 36.0;

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Panel {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub curves: Vec<Curve>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Figure {
    pub title: String,
    pub columns: usize,
    pub panels: Vec<Panel>,
}

/// Round tick positions covering `[lo, hi]`, about five of them.
pub fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    if hi <= lo || hi.is_nan() || lo.is_nan() {
        return vec![lo];
    }
    let raw = (hi - lo) / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| *s >= raw)
        .unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last).map(|i| i as f64 * step).collect()
}

fn tick_label(v: f64, step: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let a = v.abs();
    if !(1e-3..1e5).contains(&a) {
        return format!("{v:.1e}");
    }
    let decimals = (-step.log10().floor()).max(0.0) as usize;
    format!("{v:.decimals$}")
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Data range padded so flat curves still get a visible axis.
fn range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo <= 1e-12 * hi.abs().max(lo.abs()).max(f64::MIN_POSITIVE) {
        let pad = if lo == 0.0 { 1.0 } else { 0.5 * lo.abs() };
        return (lo - pad, hi + pad);
    }
    (lo, hi)
}

impl Panel {
    fn render(&self, out: &mut String, ox: f64, oy: f64) {
        let (x0, x1) = range(self.curves.iter().flat_map(|c| c.points.iter().map(|p| p.0)));
        let (mut y0, y1) = range(self.curves.iter().flat_map(|c| c.points.iter().map(|p| p.1)));
        if y0 > 0.0 && y0 < 0.5 * y1 {
            y0 = 0.0;
        }
        let pw = PANEL_W - MARGIN_L - MARGIN_R;
        let ph = PANEL_H - MARGIN_T - MARGIN_B;
        let px = |x: f64| ox + MARGIN_L + (x - x0) / (x1 - x0) * pw;
        let py = |y: f64| oy + MARGIN_T + (1.0 - (y - y0) / (y1 - y0)) * ph;

        let _ = writeln!(out, r#"<g class="panel" data-title="{}">"#, escape(&self.title));
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle" font-size="14">{}</text>"#,
            ox + MARGIN_L + pw / 2.0,
            oy + 20.0,
            escape(&self.title)
        );
        let _ = writeln!(
            out,
            r#"<rect x="{:.1}" y="{:.1}" width="{pw:.1}" height="{ph:.1}" fill="none" stroke="black"/>"#,
            ox + MARGIN_L,
            oy + MARGIN_T
        );

        let xt = ticks(x0, x1);
        let xstep = if xt.len() > 1 { xt[1] - xt[0] } else { x1 - x0 };
        for t in &xt {
            let x = px(*t);
            let yb = oy + MARGIN_T + ph;
            let _ = writeln!(
                out,
                r#"<line x1="{x:.1}" y1="{yb:.1}" x2="{x:.1}" y2="{:.1}" stroke="black"/>"#,
                yb + 5.0
            );
            let _ = writeln!(
                out,
                r#"<text x="{x:.1}" y="{:.1}" text-anchor="middle" font-size="11">{}</text>"#,
                yb + 18.0,
                tick_label(*t, xstep)
            );
        }
        let yt = ticks(y0, y1);
        let ystep = if yt.len() > 1 { yt[1] - yt[0] } else { y1 - y0 };
        for t in &yt {
            let y = py(*t);
            let xl = ox + MARGIN_L;
            let _ = writeln!(
                out,
                r#"<line x1="{:.1}" y1="{y:.1}" x2="{xl:.1}" y2="{y:.1}" stroke="black"/>"#,
                xl - 5.0
            );
            let _ = writeln!(
                out,
                r#"<text x="{:.1}" y="{:.1}" text-anchor="end" font-size="11">{}</text>"#,
                xl - 8.0,
                y + 4.0,
                tick_label(*t, ystep)
            );
        }
        let _ = writeln!(
            out,
            r#"<text class="x-label" x="{:.1}" y="{:.1}" text-anchor="middle" font-size="12">{}</text>"#,
            ox + MARGIN_L + pw / 2.0,
            oy + PANEL_H - 10.0,
            escape(&self.x_label)
        );
        let (lx, ly) = (ox + 16.0, oy + MARGIN_T + ph / 2.0);
        let _ = writeln!(
            out,
            r#"<text class="y-label" x="{lx:.1}" y="{ly:.1}" text-anchor="middle" font-size="12" transform="rotate(-90 {lx:.1} {ly:.1})">{}</text>"#,
            escape(&self.y_label)
        );

        for (i, c) in self.curves.iter().enumerate() {
            let colour = PALETTE[i % PALETTE.len()];
            let pts: Vec<String> = c
                .points
                .iter()
                .filter(|(x, y)| x.is_finite() && y.is_finite())
                .map(|(x, y)| format!("{:.2},{:.2}", px(*x), py(*y)))
                .collect();
            let _ = writeln!(
                out,
                r#"<polyline class="curve" data-label="{}" fill="none" stroke="{colour}" stroke-width="1.5" points="{}"/>"#,
                escape(&c.label),
                pts.join(" ")
            );
            let (gx, gy) = (ox + MARGIN_L + pw - 130.0, oy + MARGIN_T + 14.0 + 16.0 * i as f64);
            let _ = writeln!(
                out,
                r#"<line x1="{gx:.1}" y1="{gy:.1}" x2="{:.1}" y2="{gy:.1}" stroke="{colour}" stroke-width="2"/>"#,
                gx + 18.0
            );
            let _ = writeln!(
                out,
                r#"<text class="legend" x="{:.1}" y="{:.1}" font-size="11">{}</text>"#,
                gx + 24.0,
                gy + 4.0,
                escape(&c.label)
            );
        }
        out.push_str("</g>\n");
    }
}

impl Figure {
    pub fn render(&self) -> String {
        let cols = self.columns.max(1);
        let rows = self.panels.len().div_ceil(cols);
        let width = PANEL_W * cols as f64;
        let height = TITLE_H + PANEL_H * rows as f64;
        let mut out = String::new();
        let _ = writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.0} {height:.0}" font-family="sans-serif">"#
        );
        let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="24" text-anchor="middle" font-size="16">{}</text>"#,
            width / 2.0,
            escape(&self.title)
        );
        for (i, p) in self.panels.iter().enumerate() {
            let (r, c) = (i / cols, i % cols);
            p.render(&mut out, PANEL_W * c as f64, TITLE_H + PANEL_H * r as f64);
        }
        out.push_str("</svg>\n");
        out
    }
}
