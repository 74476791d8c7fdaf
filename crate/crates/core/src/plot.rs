//! Deterministic SVG charts: line charts (optionally log-scaled) and
//! heatmaps. Output depends only on the inputs; numbers are printed with
//! fixed precision and nothing time- or host-dependent is embedded.
//!
//! Heatmaps use a five-stop approximation of viridis, interpolated linearly
//! in RGB between `#440154`, `#3b528b`, `#21918c`, `#5ec962` and `#fde725`
//! for values 0, 1/4, 1/2, 3/4 and 1 of the color scale.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::validators::Field;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 170.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;

const PALETTE: [&str; 10] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
];

const STOPS: [(f64, [f64; 3]); 5] = [
    (0.0, [68.0, 1.0, 84.0]),
    (0.25, [59.0, 82.0, 139.0]),
    (0.5, [33.0, 145.0, 140.0]),
    (0.75, [94.0, 201.0, 98.0]),
    (1.0, [253.0, 231.0, 37.0]),
];

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
    pub dashed: bool,
}

impl Series {
    pub fn new(name: impl Into<String>, points: Vec<(f64, f64)>) -> Self {
        Series {
            name: name.into(),
            points,
            dashed: false,
        }
    }

    pub fn dashed(mut self) -> Self {
        self.dashed = true;
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LineChart {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_y: bool,
    pub series: Vec<Series>,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn range(values: impl Iterator<Item = f64>) -> Option<(f64, f64)> {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        return None;
    }
    if lo == hi {
        let pad = if lo == 0.0 { 1.0 } else { 0.1 * lo.abs() };
        return Some((lo - pad, hi + pad));
    }
    Some((lo, hi))
}

fn header(out: &mut String, extra: &str) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}"{extra}>"#
    );
    let _ = writeln!(out, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
}

fn title(out: &mut String, text: &str) {
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="24" text-anchor="middle" font-family="sans-serif" font-size="15">{}</text>"#,
        LEFT + (WIDTH - LEFT - RIGHT) / 2.0,
        escape(text)
    );
}

fn tick_label(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else if v.abs() >= 1e4 || v.abs() < 1e-3 {
        format!("{v:.2e}")
    } else {
        format!("{v:.3}")
    }
}

pub fn line_chart(chart: &LineChart) -> Result<String> {
    let tf = |y: f64| if chart.log_y { y.log10() } else { y };
    let usable = |&(x, y): &(f64, f64)| x.is_finite() && y.is_finite() && (!chart.log_y || y > 0.0);
    let (x0, x1) = range(
        chart
            .series
            .iter()
            .flat_map(|s| s.points.iter().filter(|p| usable(p)).map(|p| p.0)),
    )
    .ok_or_else(|| Error::contract(format!("chart {:?} has no plottable points", chart.title)))?;
    let (y0, y1) = range(
        chart
            .series
            .iter()
            .flat_map(|s| s.points.iter().filter(|p| usable(p)).map(|p| tf(p.1))),
    )
    .expect("x range implies y range");
    let (y0, y1) = if chart.log_y {
        (y0.floor(), y1.ceil().max(y0.floor() + 1.0))
    } else {
        (y0, y1)
    };
    let pw = WIDTH - LEFT - RIGHT;
    let ph = HEIGHT - TOP - BOTTOM;
    let px = |x: f64| LEFT + (x - x0) / (x1 - x0) * pw;
    let py = |y: f64| TOP + ph - (tf(y) - y0) / (y1 - y0) * ph;

    let mut out = String::new();
    header(&mut out, "");
    title(&mut out, &chart.title);
    let _ = writeln!(
        out,
        r##"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="#333"/>"##
    );
    for i in 0..=4 {
        let xv = x0 + (x1 - x0) * i as f64 / 4.0;
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle" font-family="sans-serif" font-size="11">{}</text>"#,
            px(xv),
            TOP + ph + 16.0,
            tick_label(xv)
        );
    }
    let y_ticks: Vec<f64> = if chart.log_y {
        let step = ((y1 - y0) / 6.0).ceil().max(1.0);
        let mut v = Vec::new();
        let mut e = y0;
        while e <= y1 + 1e-9 {
            v.push(e);
            e += step;
        }
        v
    } else {
        (0..=4).map(|i| y0 + (y1 - y0) * i as f64 / 4.0).collect()
    };
    for e in y_ticks {
        let (pos, label) = if chart.log_y {
            (TOP + ph - (e - y0) / (y1 - y0) * ph, format!("1e{}", e as i64))
        } else {
            (TOP + ph - (e - y0) / (y1 - y0) * ph, tick_label(e))
        };
        let _ = writeln!(
            out,
            r##"<line x1="{LEFT}" y1="{pos:.2}" x2="{:.1}" y2="{pos:.2}" stroke="#ddd"/>"##,
            LEFT + pw
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.2}" text-anchor="end" font-family="sans-serif" font-size="11">{label}</text>"#,
            LEFT - 6.0,
            pos + 4.0
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle" font-family="sans-serif" font-size="12">{}</text>"#,
        LEFT + pw / 2.0,
        HEIGHT - 12.0,
        escape(&chart.x_label)
    );
    let _ = writeln!(
        out,
        r#"<text x="18" y="{:.1}" text-anchor="middle" font-family="sans-serif" font-size="12" transform="rotate(-90 18 {:.1})">{}</text>"#,
        TOP + ph / 2.0,
        TOP + ph / 2.0,
        escape(&chart.y_label)
    );
    for (i, s) in chart.series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let pts: Vec<String> = s
            .points
            .iter()
            .filter(|p| usable(p))
            .map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y)))
            .collect();
        if pts.is_empty() {
            continue;
        }
        let dash = if s.dashed { r#" stroke-dasharray="6 4""# } else { "" };
        let _ = writeln!(
            out,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.5"{dash} points="{}"/>"#,
            pts.join(" ")
        );
        let ly = TOP + 14.0 + 18.0 * i as f64;
        let lx = LEFT + pw + 12.0;
        let _ = writeln!(
            out,
            r#"<line x1="{lx:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{color}" stroke-width="2"{dash}/>"#,
            lx + 22.0
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="11">{}</text>"#,
            lx + 28.0,
            ly + 4.0,
            escape(&s.name)
        );
    }
    out.push_str("</svg>\n");
    Ok(out)
}

/// Parsed metrics CSV: named columns, empty cells as `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct Metrics {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Option<f64>>>,
}

impl Metrics {
    pub fn parse(text: &str) -> Result<Self> {
        let bad = |line: usize, m: String| Error::Format {
            path: "metrics.csv".into(),
            message: format!("line {line}: {m}"),
        };
        let mut lines = text.lines();
        let columns: Vec<String> = lines
            .next()
            .ok_or_else(|| bad(1, "empty metrics".into()))?
            .split(',')
            .map(str::to_string)
            .collect();
        let mut rows = Vec::new();
        for (i, line) in lines.enumerate() {
            if line.is_empty() {
                continue;
            }
            let cells: Vec<&str> = line.split(',').collect();
            if cells.len() != columns.len() {
                return Err(bad(i + 2, format!("expected {} cells", columns.len())));
            }
            let row = cells
                .iter()
                .map(|c| {
                    if c.is_empty() {
                        Ok(None)
                    } else {
                        c.parse::<f64>().map(Some)
                    }
                })
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| bad(i + 2, e.to_string()))?;
            rows.push(row);
        }
        if rows.is_empty() {
            return Err(bad(2, "no metric rows".into()));
        }
        Ok(Metrics { columns, rows })
    }

    pub fn column(&self, name: &str) -> Option<Vec<Option<f64>>> {
        let i = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }

    fn series(&self, x: &str, name: &str) -> Option<Series> {
        let xs = self.column(x)?;
        let ys = self.column(name)?;
        let points = xs.iter().zip(&ys).filter_map(|(a, b)| Some(((*a)?, (*b)?))).collect();
        Some(Series::new(name, points))
    }
}

/// Loss components against epoch on a log axis; zero terms are left out.
pub fn loss_history(metrics: &Metrics) -> Result<String> {
    let terms = [
        "total",
        "data",
        "forward",
        "adjoint",
        "optimality",
        "initial",
        "terminal_adjoint",
        "boundary",
    ];
    let series: Vec<Series> = terms
        .iter()
        .filter_map(|t| metrics.series("epoch", t))
        .filter(|s| s.points.iter().any(|p| p.1 > 0.0))
        .collect();
    line_chart(&LineChart {
        title: "Loss components".into(),
        x_label: "epoch".into(),
        y_label: "loss".into(),
        log_y: true,
        series,
    })
}

/// Probe errors against epoch, or `None` when the run had no references.
pub fn probe_history(metrics: &Metrics) -> Result<Option<String>> {
    let series: Vec<Series> = metrics
        .columns
        .iter()
        .filter(|c| c.starts_with("err_"))
        .filter_map(|c| metrics.series("epoch", c))
        .filter(|s| !s.points.is_empty())
        .collect();
    if series.is_empty() {
        return Ok(None);
    }
    line_chart(&LineChart {
        title: "Relative L2 error on the probe grid".into(),
        x_label: "epoch".into(),
        y_label: "relative error".into(),
        log_y: true,
        series,
    })
    .map(Some)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ColorScale {
    pub min: f64,
    pub max: f64,
}

/// One scale spanning every value of `fields`.
pub fn shared_scale(fields: &[&Field]) -> ColorScale {
    let (min, max) = range(fields.iter().flat_map(|f| f.values.iter().copied())).unwrap_or((0.0, 1.0));
    ColorScale { min, max }
}

pub fn colormap(s: f64) -> [u8; 3] {
    let s = if s.is_nan() { 0.0 } else { s.clamp(0.0, 1.0) };
    let k = STOPS
        .iter()
        .position(|(p, _)| *p >= s)
        .unwrap_or(STOPS.len() - 1)
        .max(1);
    let (p0, c0) = STOPS[k - 1];
    let (p1, c1) = STOPS[k];
    let a = (s - p0) / (p1 - p0);
    [0, 1, 2].map(|i| (c0[i] + a * (c1[i] - c0[i])).round() as u8)
}

/// Heatmap of a field on a `(t, x)` grid, time upward, at most `max_cells`
/// cells per axis (nodes are subsampled evenly).
pub fn heatmap(field: &Field, scale: ColorScale, title_text: &str, max_cells: usize) -> Result<String> {
    if field.axes.len() != 2 {
        return Err(Error::contract("heatmaps need a field on two axes"));
    }
    let pick = |n: usize| -> Vec<usize> {
        let m = n.min(max_cells.max(2));
        (0..m).map(|i| (i * (n - 1) + (m - 1) / 2) / (m - 1)).collect()
    };
    let (ta, xa) = (&field.axes[0], &field.axes[1]);
    let (ti, xi) = (pick(ta.n), pick(xa.n));
    let pw = WIDTH - LEFT - RIGHT;
    let ph = HEIGHT - TOP - BOTTOM;
    let cw = pw / xi.len() as f64;
    let ch = ph / ti.len() as f64;
    let span = if scale.max > scale.min {
        scale.max - scale.min
    } else {
        1.0
    };

    let mut out = String::new();
    header(
        &mut out,
        &format!(
            r#" data-vmin="{:e}" data-vmax="{:e}" data-colormap="viridis5""#,
            scale.min, scale.max
        ),
    );
    title(&mut out, title_text);
    for (r, &it) in ti.iter().enumerate() {
        let row = field.slice(it);
        let y = TOP + ph - (r + 1) as f64 * ch;
        for (c, &ix) in xi.iter().enumerate() {
            let [red, g, b] = colormap((row[ix] - scale.min) / span);
            let _ = writeln!(
                out,
                r##"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="#{red:02x}{g:02x}{b:02x}"/>"##,
                LEFT + c as f64 * cw,
                y,
                cw + 0.05,
                ch + 0.05
            );
        }
    }
    for (label, v, x, y, anchor) in [
        (&xa.name, xa.start, LEFT, TOP + ph + 16.0, "start"),
        (&xa.name, xa.end, LEFT + pw, TOP + ph + 16.0, "end"),
        (&ta.name, ta.start, LEFT - 6.0, TOP + ph, "end"),
        (&ta.name, ta.end, LEFT - 6.0, TOP + 10.0, "end"),
    ] {
        let _ = writeln!(
            out,
            r#"<text x="{x:.1}" y="{y:.1}" text-anchor="{anchor}" font-family="sans-serif" font-size="11">{}={}</text>"#,
            escape(label),
            tick_label(v)
        );
    }
    let bx = LEFT + pw + 30.0;
    for k in 0..50 {
        let s = k as f64 / 49.0;
        let [red, g, b] = colormap(s);
        let _ = writeln!(
            out,
            r##"<rect x="{bx:.1}" y="{:.2}" width="18" height="{:.2}" fill="#{red:02x}{g:02x}{b:02x}"/>"##,
            TOP + ph - (k + 1) as f64 * ph / 50.0,
            ph / 50.0 + 0.05
        );
    }
    for (v, y) in [(scale.max, TOP + 4.0), (scale.min, TOP + ph)] {
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{y:.1}" font-family="sans-serif" font-size="11">{}</text>"#,
            bx + 24.0,
            tick_label(v)
        );
    }
    out.push_str("</svg>\n");
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::validators::Axis;

    #[test]
    fn constant_series_is_one_flat_polyline() {
        let m = Metrics::parse("epoch,total\n0,2e0\n1,2e0\n2,2e0\n").unwrap();
        let svg = loss_history(&m).unwrap();
        assert_eq!(svg.matches("<polyline").count(), 1);
        let pts = svg.split("points=\"").nth(1).unwrap().split('"').next().unwrap();
        let ys: Vec<&str> = pts.split(' ').map(|p| p.split(',').nth(1).unwrap()).collect();
        assert!(ys.windows(2).all(|w| w[0] == w[1]));
    }

    #[test]
    fn empty_metrics_is_an_error() {
        assert!(Metrics::parse("").is_err());
        assert!(Metrics::parse("epoch,total\n").is_err());
    }

    #[test]
    fn output_is_deterministic() {
        let m = Metrics::parse("epoch,total,forward,err_y\n0,1e0,5e-1,9e-1\n1,5e-1,2e-1,\n2,1e-1,1e-2,3e-1\n").unwrap();
        assert_eq!(loss_history(&m).unwrap(), loss_history(&m).unwrap());
        let p = probe_history(&m).unwrap().unwrap();
        assert_eq!(p.matches("<polyline").count(), 1);
    }

    #[test]
    fn colormap_endpoints() {
        assert_eq!(colormap(0.0), [68, 1, 84]);
        assert_eq!(colormap(1.0), [253, 231, 37]);
        assert_eq!(colormap(0.5), [33, 145, 140]);
        assert_eq!(colormap(-3.0), colormap(0.0));
    }

    #[test]
    fn heatmap_carries_scale_and_cells() {
        let axes = vec![
            Axis::new("t", 0.0, 1.0, 5).unwrap(),
            Axis::new("x", 0.0, 1.0, 4).unwrap(),
        ];
        let f = Field::from_fn("y", axes, |p| p[0] + p[1]).unwrap();
        let s = shared_scale(&[&f]);
        assert_eq!((s.min, s.max), (0.0, 2.0));
        let svg = heatmap(&f, s, "y", 100).unwrap();
        assert!(svg.contains(r#"data-vmin="0e0" data-vmax="2e0""#));
        assert_eq!(svg.matches("<rect").count(), 1 + 20 + 50);
    }

    #[test]
    fn heatmap_subsamples_large_grids() {
        let axes = vec![
            Axis::new("t", 0.0, 1.0, 1001).unwrap(),
            Axis::new("x", 0.0, 1.0, 1001).unwrap(),
        ];
        let f = Field::from_fn("u", axes, |p| p[0] * p[1]).unwrap();
        let svg = heatmap(&f, shared_scale(&[&f]), "u", 50).unwrap();
        assert_eq!(svg.matches("<rect").count(), 1 + 2500 + 50);
    }
}
