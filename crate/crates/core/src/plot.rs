//! Minimal SVG charts.
//!
//! Every series is emitted as a `<g class="series">` carrying its name, kind
//! and the raw data values in a `data-points` attribute (`x,y` pairs separated
//! by spaces, shortest round-trip formatting), so the plotted data can be read
//! back from the file.

use std::fmt::Write as _;

const PALETTE: [&str; 8] = ["#8b0000", "#1f77b4", "#2ca02c", "#ff7f0e", "#9467bd", "#17becf", "#e377c2", "#7f7f7f"];

pub fn palette(i: usize) -> &'static str {
    PALETTE[i % PALETTE.len()]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeriesKind {
    Line,
    Points,
    Crosses,
    /// Filled area down to y = 0.
    Region,
    /// Histogram bars centered on x.
    Bars,
}

impl SeriesKind {
    fn as_str(self) -> &'static str {
        match self {
            SeriesKind::Line => "line",
            SeriesKind::Points => "points",
            SeriesKind::Crosses => "crosses",
            SeriesKind::Region => "region",
            SeriesKind::Bars => "bars",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "line" => SeriesKind::Line,
            "points" => SeriesKind::Points,
            "crosses" => SeriesKind::Crosses,
            "region" => SeriesKind::Region,
            "bars" => SeriesKind::Bars,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub name: String,
    pub kind: SeriesKind,
    pub color: String,
    pub points: Vec<(f64, f64)>,
}

impl Series {
    pub fn new(name: impl Into<String>, kind: SeriesKind, color: &str, points: Vec<(f64, f64)>) -> Self {
        Self { name: name.into(), kind, color: color.to_string(), points }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Chart {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
}

const WIDTH: f64 = 960.0;
const HEIGHT: f64 = 540.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 230.0;
const TOP: f64 = 50.0;
const BOTTOM: f64 = 60.0;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Tick positions at a 1-2-5 step covering [lo, hi].
fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    let span = hi - lo;
    if !(span > 0.0) {
        return vec![lo];
    }
    let raw = span / 6.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0].iter().map(|m| m * mag).find(|s| *s >= raw).unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last).map(|k| k as f64 * step).collect()
}

impl Chart {
    pub fn new(title: &str, x_label: &str, y_label: &str) -> Self {
        Self { title: title.into(), x_label: x_label.into(), y_label: y_label.into(), series: Vec::new() }
    }

    pub fn push(&mut self, s: Series) {
        self.series.push(s);
    }

    pub fn series_of_kind(&self, kind: SeriesKind) -> impl Iterator<Item = &Series> {
        self.series.iter().filter(move |s| s.kind == kind)
    }

    fn bounds(&self) -> (f64, f64, f64, f64) {
        let mut b = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for s in &self.series {
            for &(x, y) in &s.points {
                b = (b.0.min(x), b.1.max(x), b.2.min(y), b.3.max(y));
            }
            if matches!(s.kind, SeriesKind::Region | SeriesKind::Bars) {
                b.2 = b.2.min(0.0);
            }
        }
        if !b.0.is_finite() {
            return (0.0, 1.0, 0.0, 1.0);
        }
        let pad = |lo: f64, hi: f64| {
            let p = if hi > lo { 0.04 * (hi - lo) } else { 1.0 };
            (lo - p, hi + p)
        };
        let (x0, x1) = pad(b.0, b.1);
        let (y0, y1) = pad(b.2, b.3);
        (x0, x1, y0, y1)
    }

    pub fn to_svg(&self) -> String {
        let (x0, x1, y0, y1) = self.bounds();
        let pw = WIDTH - LEFT - RIGHT;
        let ph = HEIGHT - TOP - BOTTOM;
        let sx = |x: f64| LEFT + (x - x0) / (x1 - x0) * pw;
        let sy = |y: f64| TOP + ph - (y - y0) / (y1 - y0) * ph;

        let mut out = String::new();
        let _ = writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
        let _ = writeln!(
            out,
            r#"<text x="{}" y="28" text-anchor="middle" font-size="16">{}</text>"#,
            LEFT + pw / 2.0,
            escape(&self.title)
        );
        let _ = writeln!(out, r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#);
        for t in ticks(x0, x1) {
            let _ = writeln!(
                out,
                r#"<line x1="{0:.2}" y1="{1}" x2="{0:.2}" y2="{2}" stroke="black"/><text x="{0:.2}" y="{3}" text-anchor="middle">{4}</text>"#,
                sx(t),
                TOP + ph,
                TOP + ph + 5.0,
                TOP + ph + 18.0,
                t
            );
        }
        for t in ticks(y0, y1) {
            let _ = writeln!(
                out,
                r#"<line x1="{0}" y1="{1:.2}" x2="{2}" y2="{1:.2}" stroke="black"/><text x="{3}" y="{4:.2}" text-anchor="end">{5}</text>"#,
                LEFT - 5.0,
                sy(t),
                LEFT,
                LEFT - 8.0,
                sy(t) + 4.0,
                t
            );
        }
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
            LEFT + pw / 2.0,
            HEIGHT - 15.0,
            escape(&self.x_label)
        );
        let _ = writeln!(
            out,
            r#"<text x="20" y="{0}" text-anchor="middle" transform="rotate(-90 20 {0})">{1}</text>"#,
            TOP + ph / 2.0,
            escape(&self.y_label)
        );

        for (i, s) in self.series.iter().enumerate() {
            let data: Vec<String> = s.points.iter().map(|(x, y)| format!("{x},{y}")).collect();
            let _ = writeln!(
                out,
                r#"<g class="series" data-name="{}" data-kind="{}" data-points="{}">"#,
                escape(&s.name),
                s.kind.as_str(),
                data.join(" ")
            );
            let c = &s.color;
            match s.kind {
                SeriesKind::Line => {
                    let pts: Vec<String> =
                        s.points.iter().map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
                    let _ = writeln!(
                        out,
                        r#"<polyline points="{}" fill="none" stroke="{c}" stroke-width="2"/>"#,
                        pts.join(" ")
                    );
                }
                SeriesKind::Region => {
                    if let (Some(first), Some(last)) = (s.points.first(), s.points.last()) {
                        let mut pts = vec![format!("{:.2},{:.2}", sx(first.0), sy(0.0))];
                        pts.extend(s.points.iter().map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))));
                        pts.push(format!("{:.2},{:.2}", sx(last.0), sy(0.0)));
                        let _ = writeln!(
                            out,
                            r#"<polygon points="{}" fill="{c}" fill-opacity="0.3" stroke="none"/>"#,
                            pts.join(" ")
                        );
                    }
                }
                SeriesKind::Bars => {
                    let half = if s.points.len() > 1 { 0.5 * (s.points[1].0 - s.points[0].0).abs() } else { 0.5 };
                    for &(x, y) in &s.points {
                        let (l, r) = (sx(x - half), sx(x + half));
                        let (top, base) = (sy(y.max(0.0)), sy(0.0));
                        let _ = writeln!(
                            out,
                            r#"<rect x="{l:.2}" y="{top:.2}" width="{:.2}" height="{:.2}" fill="{c}" fill-opacity="0.5"/>"#,
                            (r - l).max(0.5),
                            (base - top).max(0.0)
                        );
                    }
                }
                SeriesKind::Points => {
                    for &(x, y) in &s.points {
                        let _ = writeln!(out, r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{c}"/>"#, sx(x), sy(y));
                    }
                }
                SeriesKind::Crosses => {
                    for &(x, y) in &s.points {
                        let (px, py) = (sx(x), sy(y));
                        let _ = writeln!(
                            out,
                            r#"<path d="M{:.2} {:.2}L{:.2} {:.2}M{:.2} {:.2}L{:.2} {:.2}" stroke="{c}" stroke-width="1.5"/>"#,
                            px - 4.0,
                            py - 4.0,
                            px + 4.0,
                            py + 4.0,
                            px - 4.0,
                            py + 4.0,
                            px + 4.0,
                            py - 4.0
                        );
                    }
                }
            }
            let ly = TOP + 10.0 + 18.0 * i as f64;
            let lx = WIDTH - RIGHT + 15.0;
            let _ = writeln!(
                out,
                r#"<rect x="{lx}" y="{}" width="12" height="12" fill="{c}"/><text x="{}" y="{}">{}</text>"#,
                ly - 10.0,
                lx + 18.0,
                ly,
                escape(&s.name)
            );
            out.push_str("</g>\n");
        }
        out.push_str("</svg>\n");
        out
    }
}

/// Read back `(name, kind, points)` of every series in an SVG written by
/// [`Chart::to_svg`].
pub fn parse_series(svg: &str) -> Vec<Series> {
    let attr = |tag: &str, key: &str| -> Option<String> {
        let needle = format!(r#"{key}=""#);
        let start = tag.find(&needle)? + needle.len();
        let end = tag[start..].find('"')? + start;
        Some(tag[start..end].replace("&quot;", "\"").replace("&lt;", "<").replace("&gt;", ">").replace("&amp;", "&"))
    };
    svg.lines()
        .filter(|l| l.starts_with(r#"<g class="series""#))
        .filter_map(|tag| {
            let name = attr(tag, "data-name")?;
            let kind = SeriesKind::parse(&attr(tag, "data-kind")?)?;
            let points = attr(tag, "data-points")?
                .split_whitespace()
                .filter_map(|p| {
                    let (x, y) = p.split_once(',')?;
                    Some((x.parse().ok()?, y.parse().ok()?))
                })
                .collect();
            Some(Series { name, kind, color: String::new(), points })
        })
        .collect()
}
