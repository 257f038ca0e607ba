//! Hand-written SVG: per-series scatter plots and the critical-C nomogram.

use std::fmt::Write;

use consilience::critical::{CALIBRATED_MIN, CURVE_TABLE};

use crate::format::sig6;
use crate::report::{AnalysisReport, SeriesReport};

const WIDTH: f64 = 520.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 64.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 28.0;
const BOTTOM: f64 = 52.0;

const ISOPLETH_COLORS: [&str; 5] = ["#1b4f72", "#2874a6", "#5dade2", "#a9cce3", "#d6eaf8"];

/// Maps data values to pixels along one axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Axis {
    pub lo: f64,
    pub hi: f64,
    pub log: bool,
    pub px_lo: f64,
    pub px_hi: f64,
}

impl Axis {
    fn t(&self, v: f64) -> f64 {
        if self.log {
            (v.log10() - self.lo.log10()) / (self.hi.log10() - self.lo.log10())
        } else {
            (v - self.lo) / (self.hi - self.lo)
        }
    }

    pub fn px(&self, v: f64) -> f64 {
        self.px_lo + self.t(v) * (self.px_hi - self.px_lo)
    }
}

fn x_axis(lo: f64, hi: f64, log: bool) -> Axis {
    Axis {
        lo,
        hi,
        log,
        px_lo: LEFT,
        px_hi: WIDTH - RIGHT,
    }
}

fn y_axis(lo: f64, hi: f64) -> Axis {
    Axis {
        lo,
        hi,
        log: false,
        px_lo: HEIGHT - BOTTOM,
        px_hi: TOP,
    }
}

pub type Point = (f64, f64);

#[derive(Debug, Clone, PartialEq)]
pub struct ScatterGeometry {
    pub x: Axis,
    pub y: Axis,
    pub identity: [Point; 2],
    pub projection: [Point; 2],
    pub points: Vec<Point>,
}

/// Both axes share one domain so the identity line is the diagonal.
pub fn scatter_geometry(series: &SeriesReport) -> ScatterGeometry {
    let values = series.pairs.iter().flat_map(|p| [p[0], p[1]]);
    let (mut lo, mut hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| {
        (a.min(v), b.max(v))
    });
    if !(hi > lo) {
        lo -= 1.0;
        hi += 1.0;
    }
    let pad = 0.05 * (hi - lo);
    let (lo, hi) = (lo - pad, hi + pad);
    let x = x_axis(lo, hi, false);
    let y = y_axis(lo, hi);
    let at = |a: f64, b: f64| (x.px(a), y.px(b));
    let line = |v: f64| series.intercept + series.slope * v;
    ScatterGeometry {
        identity: [at(lo, lo), at(hi, hi)],
        projection: [at(lo, line(lo)), at(hi, line(hi))],
        points: series.pairs.iter().map(|p| at(p[0], p[1])).collect(),
        x,
        y,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NomogramGeometry {
    pub x: Axis,
    pub y: Axis,
    /// (alpha, pixel polyline) per tabulated level.
    pub isopleths: Vec<(f64, Vec<Point>)>,
    pub points: Vec<Point>,
}

const ISOPLETH_SAMPLES: usize = 200;

/// `points` are (M·effN, C) pairs; those below the calibrated range are dropped.
pub fn nomogram_geometry(points: &[(f64, f64)]) -> NomogramGeometry {
    let shown: Vec<(f64, f64)> = points
        .iter()
        .copied()
        .filter(|p| p.0 >= CALIBRATED_MIN)
        .collect();
    let max_x = shown.iter().map(|p| p.0).fold(1000.0, f64::max);
    let hi_x = 10f64.powf(max_x.log10().ceil());
    let min_c = shown.iter().map(|p| p.1).fold(0.0, f64::min);
    let lo_y = (min_c * 10.0).floor() / 10.0;
    let x = x_axis(CALIBRATED_MIN, hi_x, true);
    let y = y_axis(lo_y, 1.0);
    let (a, b) = (CALIBRATED_MIN.log10(), hi_x.log10());
    let isopleths = CURVE_TABLE
        .iter()
        .map(|row| {
            let line = (0..ISOPLETH_SAMPLES)
                .map(|k| {
                    let mn = 10f64.powf(a + (b - a) * k as f64 / (ISOPLETH_SAMPLES - 1) as f64);
                    (x.px(mn), y.px(row.evaluate(mn)))
                })
                .collect();
            (row.alpha, line)
        })
        .collect();
    NomogramGeometry {
        points: shown.iter().map(|&(mn, c)| (x.px(mn), y.px(c))).collect(),
        x,
        y,
        isopleths,
    }
}

fn path(points: &[Point]) -> String {
    let mut d = String::new();
    for (k, (px, py)) in points.iter().enumerate() {
        let _ = write!(d, "{}{px:.2},{py:.2}", if k == 0 { "M" } else { " L" });
    }
    d
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn open_svg(title: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(
        s,
        r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="18" text-anchor="middle" font-size="13">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
    let _ = writeln!(
        s,
        r#"<defs><clipPath id="plot-area"><rect x="{LEFT}" y="{TOP}" width="{}" height="{}"/></clipPath></defs>"#,
        WIDTH - LEFT - RIGHT,
        HEIGHT - TOP - BOTTOM
    );
    s
}

fn frame(
    s: &mut String,
    x: &Axis,
    y: &Axis,
    x_ticks: &[f64],
    y_ticks: &[f64],
    x_label: &str,
    y_label: &str,
) {
    let _ = writeln!(
        s,
        r#"<rect x="{LEFT}" y="{TOP}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        WIDTH - LEFT - RIGHT,
        HEIGHT - TOP - BOTTOM
    );
    let base = HEIGHT - BOTTOM;
    for &v in x_ticks {
        let px = x.px(v);
        let _ = writeln!(
            s,
            r#"<path d="M{px:.2},{base:.2} L{px:.2},{:.2}" stroke="black"/>"#,
            base + 5.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{px:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            base + 18.0,
            sig6(v)
        );
    }
    for &v in y_ticks {
        let py = y.px(v);
        let _ = writeln!(
            s,
            r#"<path d="M{:.2},{py:.2} L{LEFT:.2},{py:.2}" stroke="black"/>"#,
            LEFT - 5.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            LEFT - 8.0,
            py + 4.0,
            sig6(v)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        (LEFT + WIDTH - RIGHT) / 2.0,
        HEIGHT - 12.0,
        escape(x_label)
    );
    let _ = writeln!(
        s,
        r#"<text transform="translate(16,{:.2}) rotate(-90)" text-anchor="middle">{}</text>"#,
        (TOP + HEIGHT - BOTTOM) / 2.0,
        escape(y_label)
    );
}

fn linear_ticks(lo: f64, hi: f64) -> Vec<f64> {
    let raw = (hi - lo) / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| *s >= raw)
        .unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step + 1e-9).floor() as i64;
    (first..=last).map(|k| k as f64 * step).collect()
}

pub fn scatter_svg(series: &SeriesReport) -> String {
    let g = scatter_geometry(series);
    let mut s = open_svg(&format!("{}: C = {}", series.name, sig6(series.c)));
    let ticks = linear_ticks(g.x.lo, g.x.hi);
    frame(&mut s, &g.x, &g.y, &ticks, &ticks, "observed", "modeled");
    let _ = writeln!(
        s,
        r#"<path id="identity" d="{}" stroke="gray" stroke-dasharray="4 3" fill="none" clip-path="url(#plot-area)"/>"#,
        path(&g.identity)
    );
    let _ = writeln!(
        s,
        r#"<path id="projection" d="{}" stroke="firebrick" fill="none" clip-path="url(#plot-area)"/>"#,
        path(&g.projection)
    );
    for (px, py) in &g.points {
        let _ = writeln!(
            s,
            r#"<circle cx="{px:.2}" cy="{py:.2}" r="3" fill="steelblue"/>"#
        );
    }
    s.push_str("</svg>\n");
    s
}

pub fn nomogram_svg(points: &[(f64, f64, String)]) -> String {
    let coords: Vec<(f64, f64)> = points.iter().map(|p| (p.0, p.1)).collect();
    let g = nomogram_geometry(&coords);
    let mut s = open_svg("Critical C vs. M·effN");
    let mut x_ticks = vec![CALIBRATED_MIN];
    let mut d = 10.0;
    while d <= g.x.hi * (1.0 + 1e-9) {
        x_ticks.push(d);
        d *= 10.0;
    }
    frame(
        &mut s,
        &g.x,
        &g.y,
        &x_ticks,
        &linear_ticks(g.y.lo, g.y.hi),
        "M·effN (log scale)",
        "C",
    );
    for (k, (alpha, line)) in g.isopleths.iter().enumerate() {
        let _ = writeln!(
            s,
            r#"<path id="alpha-{alpha}" d="{}" stroke="{}" fill="none" clip-path="url(#plot-area)"/>"#,
            path(line),
            ISOPLETH_COLORS[k % ISOPLETH_COLORS.len()]
        );
        if let Some((px, py)) = line.last() {
            let _ = writeln!(
                s,
                r#"<text x="{:.2}" y="{:.2}" text-anchor="end">α={alpha}</text>"#,
                px - 2.0,
                py - 4.0
            );
        }
    }
    let shown = points.iter().filter(|p| p.0 >= CALIBRATED_MIN);
    for ((px, py), (_, _, label)) in g.points.iter().zip(shown) {
        let _ = writeln!(
            s,
            r#"<circle cx="{px:.2}" cy="{py:.2}" r="4" fill="firebrick"><title>{}</title></circle>"#,
            escape(label)
        );
    }
    s.push_str("</svg>\n");
    s
}

/// The nomogram point for a report: joint C at the system M·effN.
pub fn report_points(report: &AnalysisReport) -> Vec<(f64, f64, String)> {
    let label = if report.series.len() == 1 {
        report.series[0].name.clone()
    } else {
        "joint C".into()
    };
    vec![(report.m_effn, report.joint_c, label)]
}
