//! Minimal static SVG plots: line charts and log-binned histograms.

use std::fmt::Write as _;

use crate::spectral::LogHistogram;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 150.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 55.0;
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

#[derive(Clone, Debug, PartialEq)]
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
}

impl Series {
    pub fn new(name: impl Into<String>, points: Vec<(f64, f64)>) -> Self {
        Self {
            name: name.into(),
            points,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LinePlot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_y: bool,
    pub series: Vec<Series>,
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn tick_label(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else if v.abs() >= 1e4 || v.abs() < 1e-2 {
        format!("{v:.1e}")
    } else {
        format!("{}", (v * 1000.0).round() / 1000.0)
    }
}

/// Linear map from data to pixel range.
#[derive(Clone, Copy)]
struct Axis {
    lo: f64,
    hi: f64,
    px_lo: f64,
    px_hi: f64,
}

impl Axis {
    fn new(lo: f64, hi: f64, px_lo: f64, px_hi: f64) -> Self {
        let (lo, hi) = if hi > lo {
            (lo, hi)
        } else {
            let pad = if lo == 0.0 { 1.0 } else { lo.abs() * 0.1 };
            (lo - pad, hi + pad)
        };
        Self { lo, hi, px_lo, px_hi }
    }

    fn map(&self, v: f64) -> f64 {
        self.px_lo + (v - self.lo) / (self.hi - self.lo) * (self.px_hi - self.px_lo)
    }

    fn ticks(&self, count: usize) -> Vec<f64> {
        (0..=count)
            .map(|k| self.lo + (self.hi - self.lo) * k as f64 / count as f64)
            .collect()
    }
}

fn frame(out: &mut String, title: &str, x_label: &str, y_label: &str) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{}" y="22" text-anchor="middle" font-size="15">{}</text>"#,
        (MARGIN_LEFT + WIDTH - MARGIN_RIGHT) / 2.0,
        escape(title)
    );
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        (MARGIN_LEFT + WIDTH - MARGIN_RIGHT) / 2.0,
        HEIGHT - 12.0,
        escape(x_label)
    );
    let cy = (MARGIN_TOP + HEIGHT - MARGIN_BOTTOM) / 2.0;
    let _ = writeln!(
        out,
        r#"<text x="16" y="{cy}" text-anchor="middle" transform="rotate(-90 16 {cy})">{}</text>"#,
        escape(y_label)
    );
    let _ = writeln!(
        out,
        r#"<rect x="{MARGIN_LEFT}" y="{MARGIN_TOP}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        WIDTH - MARGIN_LEFT - MARGIN_RIGHT,
        HEIGHT - MARGIN_TOP - MARGIN_BOTTOM
    );
}

fn draw_ticks(out: &mut String, x: &Axis, y: &Axis, x_label: impl Fn(f64) -> String, y_label: impl Fn(f64) -> String) {
    let bottom = HEIGHT - MARGIN_BOTTOM;
    for t in x.ticks(5) {
        let px = x.map(t);
        let _ = writeln!(
            out,
            r#"<line x1="{px:.2}" y1="{bottom}" x2="{px:.2}" y2="{}" stroke="black"/><text x="{px:.2}" y="{}" text-anchor="middle">{}</text>"#,
            bottom + 5.0,
            bottom + 19.0,
            escape(&x_label(t))
        );
    }
    for t in y.ticks(5) {
        let py = y.map(t);
        let _ = writeln!(
            out,
            r#"<line x1="{}" y1="{py:.2}" x2="{MARGIN_LEFT}" y2="{py:.2}" stroke="black"/><text x="{}" y="{:.2}" text-anchor="end">{}</text>"#,
            MARGIN_LEFT - 5.0,
            MARGIN_LEFT - 8.0,
            py + 4.0,
            escape(&y_label(t))
        );
    }
}

fn bounds(values: impl Iterator<Item = f64>) -> Option<(f64, f64)> {
    values.fold(None, |acc, v| match acc {
        None => Some((v, v)),
        Some((lo, hi)) => Some((lo.min(v), hi.max(v))),
    })
}

impl LinePlot {
    /// Renders the plot. On a log axis, non-positive values are dropped.
    pub fn render(&self) -> String {
        let transform = |v: f64| if self.log_y { v.log10() } else { v };
        let visible: Vec<Vec<(f64, f64)>> = self
            .series
            .iter()
            .map(|s| {
                s.points
                    .iter()
                    .filter(|(x, y)| x.is_finite() && y.is_finite() && (!self.log_y || *y > 0.0))
                    .map(|&(x, y)| (x, transform(y)))
                    .collect()
            })
            .collect();
        let all = || visible.iter().flatten();
        let (x_lo, x_hi) = bounds(all().map(|p| p.0)).unwrap_or((0.0, 1.0));
        let (y_lo, y_hi) = bounds(all().map(|p| p.1)).unwrap_or((0.0, 1.0));
        let y_lo = if self.log_y { y_lo } else { y_lo.min(0.0) };
        let x = Axis::new(x_lo, x_hi, MARGIN_LEFT, WIDTH - MARGIN_RIGHT);
        let y = Axis::new(y_lo, y_hi, HEIGHT - MARGIN_BOTTOM, MARGIN_TOP);

        let mut out = String::new();
        let y_label = if self.log_y {
            format!("{} (log10)", self.y_label)
        } else {
            self.y_label.clone()
        };
        frame(&mut out, &self.title, &self.x_label, &y_label);
        let log_y = self.log_y;
        draw_ticks(&mut out, &x, &y, tick_label, move |v| {
            if log_y {
                format!("1e{:.1}", v)
            } else {
                tick_label(v)
            }
        });
        for (k, (series, points)) in self.series.iter().zip(&visible).enumerate() {
            let color = PALETTE[k % PALETTE.len()];
            let path: Vec<String> = points
                .iter()
                .map(|&(px, py)| format!("{:.2},{:.2}", x.map(px), y.map(py)))
                .collect();
            if path.len() > 1 {
                let _ = writeln!(
                    out,
                    r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
                    path.join(" ")
                );
            }
            for &(px, py) in points {
                let _ = writeln!(
                    out,
                    r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{color}"/>"#,
                    x.map(px),
                    y.map(py)
                );
            }
            let ly = MARGIN_TOP + 18.0 * (k as f64 + 1.0);
            let lx = WIDTH - MARGIN_RIGHT + 12.0;
            let _ = writeln!(
                out,
                r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/><text x="{}" y="{}">{}</text>"#,
                lx + 20.0,
                lx + 26.0,
                ly + 4.0,
                escape(&series.name)
            );
        }
        out.push_str("</svg>\n");
        out
    }
}

/// Bars of a log-binned histogram with vertical markers (for example the
/// mean and the median) at the given values.
pub fn histogram_svg(title: &str, hist: &LogHistogram, markers: &[(&str, f64)]) -> String {
    let mut out = String::new();
    frame(&mut out, title, "log10 X", "count");
    let edges: Vec<f64> = hist.edges.iter().map(|e| e.log10()).collect();
    let marker_logs: Vec<f64> = markers
        .iter()
        .filter(|(_, v)| *v > 0.0 && v.is_finite())
        .map(|(_, v)| v.log10())
        .collect();
    let (lo, hi) = bounds(edges.iter().chain(&marker_logs).copied()).unwrap_or((0.0, 1.0));
    let x = Axis::new(lo, hi, MARGIN_LEFT, WIDTH - MARGIN_RIGHT);
    let top = hist.counts.iter().copied().max().unwrap_or(0).max(1) as f64;
    let y = Axis::new(0.0, top, HEIGHT - MARGIN_BOTTOM, MARGIN_TOP);
    draw_ticks(&mut out, &x, &y, |v| format!("{v:.1}"), |v| format!("{}", v.round()));

    if edges.len() >= 2 {
        for (k, &c) in hist.counts.iter().enumerate() {
            let x0 = x.map(edges[k]);
            let x1 = x.map(edges[k + 1]);
            let y0 = y.map(c as f64);
            let _ = writeln!(
                out,
                r##"<rect x="{x0:.2}" y="{y0:.2}" width="{:.2}" height="{:.2}" fill="#9ecae1" stroke="#3182bd"/>"##,
                (x1 - x0).max(1.0),
                HEIGHT - MARGIN_BOTTOM - y0
            );
        }
    }
    for (k, (name, value)) in markers.iter().enumerate() {
        if !(*value > 0.0) || !value.is_finite() {
            continue;
        }
        let px = x.map(value.log10());
        let color = PALETTE[(k + 1) % PALETTE.len()];
        let _ = writeln!(
            out,
            r#"<line x1="{px:.2}" y1="{MARGIN_TOP}" x2="{px:.2}" y2="{}" stroke="{color}" stroke-width="2" stroke-dasharray="6 3"/>"#,
            HEIGHT - MARGIN_BOTTOM
        );
        let ly = MARGIN_TOP + 18.0 * (k as f64 + 1.0);
        let lx = WIDTH - MARGIN_RIGHT + 12.0;
        let _ = writeln!(
            out,
            r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2" stroke-dasharray="6 3"/><text x="{}" y="{}">{}</text>"#,
            lx + 20.0,
            lx + 26.0,
            ly + 4.0,
            escape(name)
        );
    }
    if hist.zero_count > 0 {
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}">zeros: {}</text>"#,
            WIDTH - MARGIN_RIGHT + 12.0,
            HEIGHT - MARGIN_BOTTOM,
            hist.zero_count
        );
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn line_plot_contains_series() {
        let plot = LinePlot {
            title: "G vs W".into(),
            x_label: "W".into(),
            y_label: "G".into(),
            log_y: false,
            series: vec![
                Series::new("LRT", vec![(0.0, 1.0), (1.0, 0.5), (2.0, 0.25)]),
                Series::new("SLRT", vec![(0.0, 0.0), (1.0, 0.4), (2.0, 0.1)]),
            ],
        };
        let svg = plot.render();
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.contains("SLRT"));
    }

    #[test]
    fn log_plot_drops_nonpositive_points() {
        let plot = LinePlot {
            title: "t".into(),
            x_label: "x".into(),
            y_label: "y".into(),
            log_y: true,
            series: vec![Series::new("a", vec![(0.0, 0.0), (1.0, 10.0), (2.0, 100.0)])],
        };
        assert_eq!(plot.render().matches("<circle").count(), 2);
    }

    #[test]
    fn histogram_has_bars_and_markers() {
        let values: Vec<f64> = (1..200).map(|k| 10f64.powf(-(k as f64) / 50.0)).collect();
        let hist = LogHistogram::build(&values, 12);
        let svg = histogram_svg("h", &hist, &[("mean", 0.2), ("median", 0.05)]);
        assert_eq!(svg.matches("stroke-dasharray").count(), 4);
        assert!(svg.matches("<rect").count() >= 12);
    }

    #[test]
    fn text_is_escaped() {
        let plot = LinePlot {
            title: "a < b & c".into(),
            x_label: "x".into(),
            y_label: "y".into(),
            log_y: false,
            series: vec![],
        };
        assert!(plot.render().contains("a &lt; b &amp; c"));
    }
}
