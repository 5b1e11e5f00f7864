//! Minimal SVG 1.1 scatter and line plots, with optional 2-sigma
//! covariance ellipses around scatter groups.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 170.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 60.0;
const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotKind {
    Scatter,
    Curve,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    /// Draw the 2-standard-deviation covariance ellipse (needs ≥ 3 points).
    pub ellipse: bool,
}

impl PointSet {
    pub fn new(label: impl Into<String>, points: Vec<(f64, f64)>) -> Self {
        Self {
            label: label.into(),
            points,
            ellipse: false,
        }
    }

    pub fn with_ellipse(mut self) -> Self {
        self.ellipse = true;
        self
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Labels {
    pub title: String,
    pub x: String,
    pub y: String,
}

/// Ellipse in data coordinates. `angle` is the direction of the `rx` axis,
/// in radians from the x axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ellipse {
    pub cx: f64,
    pub cy: f64,
    pub rx: f64,
    pub ry: f64,
    pub angle: f64,
}

impl Ellipse {
    fn outline(&self, steps: usize) -> Vec<(f64, f64)> {
        let (s, c) = self.angle.sin_cos();
        (0..steps)
            .map(|i| {
                let t = std::f64::consts::TAU * i as f64 / steps as f64;
                let (u, v) = (self.rx * t.cos(), self.ry * t.sin());
                (self.cx + c * u - s * v, self.cy + s * u + c * v)
            })
            .collect()
    }
}

/// Sample covariance (denominator n-1) of 2-D points.
pub fn covariance2(points: &[(f64, f64)]) -> ((f64, f64), [f64; 3]) {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for &(x, y) in points {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
        syy += (y - my) * (y - my);
    }
    let d = n - 1.0;
    ((mx, my), [sxx / d, sxy / d, syy / d])
}

/// `n_std`-standard-deviation ellipse of the sample covariance, from the
/// closed-form eigendecomposition of the 2x2 matrix. `None` below 3 points.
pub fn covariance_ellipse(points: &[(f64, f64)], n_std: f64) -> Option<Ellipse> {
    if points.len() < 3 {
        return None;
    }
    let ((cx, cy), [a, b, c]) = covariance2(points);
    let mid = (a + c) / 2.0;
    let rad = (((a - c) / 2.0).powi(2) + b * b).sqrt();
    let (major, minor) = (mid + rad, (mid - rad).max(0.0));
    let angle = if b != 0.0 {
        b.atan2(major - c)
    } else if a >= c {
        0.0
    } else {
        std::f64::consts::FRAC_PI_2
    };
    Some(Ellipse {
        cx,
        cy,
        rx: n_std * major.sqrt(),
        ry: n_std * minor.sqrt(),
        angle,
    })
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

struct Frame {
    x: (f64, f64),
    y: (f64, f64),
}

impl Frame {
    fn fit(xs: impl Iterator<Item = f64> + Clone, ys: impl Iterator<Item = f64> + Clone) -> Self {
        Self {
            x: range(xs),
            y: range(ys),
        }
    }

    fn px(&self, x: f64) -> f64 {
        MARGIN_LEFT + (x - self.x.0) / (self.x.1 - self.x.0) * (WIDTH - MARGIN_LEFT - MARGIN_RIGHT)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT - MARGIN_BOTTOM - (y - self.y.0) / (self.y.1 - self.y.0) * (HEIGHT - MARGIN_TOP - MARGIN_BOTTOM)
    }
}

/// Unit interval when the data fit in it, else the padded data range.
fn range(vals: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = vals.fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), v| (l.min(v), h.max(v)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if lo >= 0.0 && hi <= 1.0 {
        return (0.0, 1.0);
    }
    let pad = if hi > lo { 0.05 * (hi - lo) } else { 0.5 * lo.abs().max(1.0) };
    (lo - pad, hi + pad)
}

fn tick_label(v: f64) -> String {
    let s = format!("{v:.3}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" { "0".into() } else { s.into() }
}

/// Renders the plot as an SVG document.
pub fn render_svg(sets: &[PointSet], kind: PlotKind, labels: &Labels) -> Result<String> {
    if sets.is_empty() {
        return Err(Error::InvalidParameter("a plot needs at least one point set".into()));
    }
    let ellipses: Vec<Option<Ellipse>> = sets
        .iter()
        .map(|s| if s.ellipse && kind == PlotKind::Scatter { covariance_ellipse(&s.points, 2.0) } else { None })
        .collect();
    let outlines: Vec<Vec<(f64, f64)>> = ellipses.iter().map(|e| e.map(|e| e.outline(72)).unwrap_or_default()).collect();
    let all = sets.iter().flat_map(|s| s.points.iter()).chain(outlines.iter().flatten());
    let frame = Frame::fit(all.clone().map(|p| p.0), all.map(|p| p.1));

    let mut svg = String::new();
    let _ = writeln!(svg, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(svg, r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    if !labels.title.is_empty() {
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="24" text-anchor="middle" font-family="sans-serif" font-size="16">{}</text>"#,
            (MARGIN_LEFT + WIDTH - MARGIN_RIGHT) / 2.0,
            escape(&labels.title)
        );
    }

    // axes and ticks
    let (x0, x1) = (frame.px(frame.x.0), frame.px(frame.x.1));
    let (y0, y1) = (frame.py(frame.y.0), frame.py(frame.y.1));
    let _ = writeln!(svg, r#"<g class="axes" stroke="black" stroke-width="1" fill="none">"#);
    let _ = writeln!(svg, r#"<line x1="{x0:.2}" y1="{y0:.2}" x2="{x1:.2}" y2="{y0:.2}"/>"#);
    let _ = writeln!(svg, r#"<line x1="{x0:.2}" y1="{y0:.2}" x2="{x0:.2}" y2="{y1:.2}"/>"#);
    let _ = writeln!(svg, "</g>");
    let _ = writeln!(svg, r#"<g class="ticks" font-family="sans-serif" font-size="11">"#);
    for i in 0..=5 {
        let t = i as f64 / 5.0;
        let xv = frame.x.0 + t * (frame.x.1 - frame.x.0);
        let yv = frame.y.0 + t * (frame.y.1 - frame.y.0);
        let (px, py) = (frame.px(xv), frame.py(yv));
        let _ = writeln!(svg, r#"<line x1="{px:.2}" y1="{y0:.2}" x2="{px:.2}" y2="{:.2}" stroke="black"/>"#, y0 + 5.0);
        let _ = writeln!(svg, r#"<text x="{px:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, y0 + 18.0, tick_label(xv));
        let _ = writeln!(svg, r#"<line x1="{:.2}" y1="{py:.2}" x2="{x0:.2}" y2="{py:.2}" stroke="black"/>"#, x0 - 5.0);
        let _ = writeln!(svg, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#, x0 - 8.0, py + 4.0, tick_label(yv));
    }
    let _ = writeln!(svg, "</g>");
    let _ = writeln!(
        svg,
        r#"<text class="xlabel" x="{:.2}" y="{:.2}" text-anchor="middle" font-family="sans-serif" font-size="13">{}</text>"#,
        (x0 + x1) / 2.0,
        HEIGHT - 15.0,
        escape(&labels.x)
    );
    let _ = writeln!(
        svg,
        r#"<text class="ylabel" x="18" y="{:.2}" text-anchor="middle" font-family="sans-serif" font-size="13" transform="rotate(-90 18 {:.2})">{}</text>"#,
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0,
        escape(&labels.y)
    );

    for (i, set) in sets.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let _ = writeln!(svg, r#"<g class="series" data-label="{}">"#, escape(&set.label));
        match kind {
            PlotKind::Scatter => {
                for &(x, y) in &set.points {
                    let _ = writeln!(
                        svg,
                        r#"<circle class="marker" cx="{:.2}" cy="{:.2}" r="3.5" fill="{color}"/>"#,
                        frame.px(x),
                        frame.py(y)
                    );
                }
            }
            PlotKind::Curve => {
                let pts: Vec<String> = set.points.iter().map(|&(x, y)| format!("{:.2},{:.2}", frame.px(x), frame.py(y))).collect();
                let _ = writeln!(
                    svg,
                    r#"<polyline class="curve" points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
                    pts.join(" ")
                );
            }
        }
        if !outlines[i].is_empty() {
            let mut d = String::new();
            for (j, &(x, y)) in outlines[i].iter().enumerate() {
                let _ = write!(d, "{}{:.2},{:.2} ", if j == 0 { "M" } else { "L" }, frame.px(x), frame.py(y));
            }
            d.push('Z');
            let _ = writeln!(
                svg,
                r#"<path class="ellipse" d="{d}" fill="{color}" fill-opacity="0.15" stroke="{color}" stroke-width="1"/>"#
            );
        }
        let _ = writeln!(svg, "</g>");
    }

    let lx = WIDTH - MARGIN_RIGHT + 15.0;
    let _ = writeln!(svg, r#"<g class="legend" font-family="sans-serif" font-size="12">"#);
    for (i, set) in sets.iter().enumerate() {
        let ly = MARGIN_TOP + 10.0 + 20.0 * i as f64;
        let color = PALETTE[i % PALETTE.len()];
        let _ = writeln!(svg, r#"<rect x="{lx:.2}" y="{:.2}" width="12" height="12" fill="{color}"/>"#, ly - 10.0);
        let _ = writeln!(svg, r#"<text x="{:.2}" y="{ly:.2}">{}</text>"#, lx + 18.0, escape(&set.label));
    }
    let _ = writeln!(svg, "</g>");
    svg.push_str("</svg>\n");
    Ok(svg)
}

pub fn emit_plot(sets: &[PointSet], kind: PlotKind, labels: &Labels, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let svg = render_svg(sets, kind, labels)?;
    fs::write(path, svg).map_err(|e| Error::io(path, e))
}
