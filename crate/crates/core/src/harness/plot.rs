//! Line charts of sweep results as plain SVG text.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use crate::error::HarnessError;
use crate::harness::record::{read_records, MetricsRecord};
use crate::harness::sweep::mean_stderr;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    Acd,
    Apr,
    Aschr,
}

impl Metric {
    pub const ALL: [Metric; 3] = [Metric::Acd, Metric::Apr, Metric::Aschr];

    pub fn as_str(self) -> &'static str {
        match self {
            Metric::Acd => "acd",
            Metric::Apr => "apr",
            Metric::Aschr => "aschr",
        }
    }

    fn label(self) -> &'static str {
        match self {
            Metric::Acd => "Average completion delay (s)",
            Metric::Apr => "Average processing rate (cycles/s)",
            Metric::Aschr => "Average service caching hit ratio",
        }
    }

    fn read(self, r: &MetricsRecord) -> Option<f64> {
        match self {
            Metric::Acd => r.acd_s,
            Metric::Apr => r.apr_cps,
            Metric::Aschr => r.aschr,
        }
    }
}

impl FromStr for Metric {
    type Err = HarnessError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Metric::ALL.into_iter().find(|m| m.as_str() == s).ok_or_else(|| {
            HarnessError::Usage(format!("unknown metric `{s}`; expected one of acd, apr, aschr"))
        })
    }
}

/// Points of one approach: (x, mean, stderr), x ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub approach: String,
    pub points: Vec<(f64, f64, f64)>,
}

/// Group successful per-seed rows by approach (first-seen order) and sweep
/// value. Aggregate rows and failed runs are ignored.
pub fn collect_series(records: &[MetricsRecord], metric: Metric) -> Vec<Series> {
    let mut order: Vec<String> = Vec::new();
    let mut samples: Vec<Vec<(f64, f64)>> = Vec::new();
    for r in records.iter().filter(|r| r.is_ok() && r.seed != crate::harness::record::SeedField::Agg) {
        let (Some(x), Some(y)) = (r.sweep_value, metric.read(r)) else { continue };
        let i = match order.iter().position(|a| *a == r.approach) {
            Some(i) => i,
            None => {
                order.push(r.approach.clone());
                samples.push(Vec::new());
                order.len() - 1
            }
        };
        samples[i].push((x, y));
    }
    order
        .into_iter()
        .zip(samples)
        .map(|(approach, mut pts)| {
            pts.sort_by(|a, b| a.0.total_cmp(&b.0));
            let mut points = Vec::new();
            for group in pts.chunk_by(|a, b| a.0 == b.0) {
                let ys: Vec<f64> = group.iter().map(|p| p.1).collect();
                let (m, s) = mean_stderr(&ys).expect("non-empty group");
                points.push((group[0].0, m, s));
            }
            Series { approach, points }
        })
        .collect()
}

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 440.0;
const LEFT: f64 = 90.0;
const RIGHT: f64 = 150.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;
const PALETTE: [&str; 8] = ["#1b6ca8", "#d1495b", "#2e933c", "#edae49", "#6a4c93", "#00798c", "#8d6a9f", "#30343f"];

fn nice_step(span: f64) -> f64 {
    let raw = span / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let f = raw / mag;
    let nice = if f <= 1.0 {
        1.0
    } else if f <= 2.0 {
        2.0
    } else if f <= 5.0 {
        5.0
    } else {
        10.0
    };
    nice * mag
}

fn tick_label(v: f64) -> String {
    if v != 0.0 && (v.abs() >= 1e5 || v.abs() < 1e-3) {
        format!("{v:.2e}")
    } else {
        let s = format!("{v:.4}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Render the chart. `x_label` names the sweep parameter.
pub fn render_svg(series: &[Series], metric: Metric, x_label: &str) -> Result<String, HarnessError> {
    let pts = || series.iter().flat_map(|s| &s.points);
    if pts().next().is_none() {
        return Err(HarnessError::Usage(format!("no {} data to plot", metric.as_str())));
    }
    let (mut x0, mut x1) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY);
    for &(x, m, s) in pts() {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(m - s);
        y1 = y1.max(m + s);
    }
    if x1 <= x0 {
        x0 -= 0.5;
        x1 += 0.5;
    }
    if y0 >= 0.0 && y0 < 0.5 * y1 {
        y0 = 0.0;
    }
    if y1 <= y0 {
        let pad = if y0 == 0.0 { 1.0 } else { 0.1 * y0.abs() };
        y0 -= pad;
        y1 += pad;
    }
    let step = nice_step(y1 - y0);
    let y0 = (y0 / step).floor() * step;
    let y1 = (y1 / step).ceil() * step;

    let pw = WIDTH - LEFT - RIGHT;
    let ph = HEIGHT - TOP - BOTTOM;
    let px = |x: f64| LEFT + (x - x0) / (x1 - x0) * pw;
    let py = |y: f64| TOP + (y1 - y) / (y1 - y0) * ph;

    let mut xs: Vec<f64> = pts().map(|p| p.0).collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();

    let mut svg = String::new();
    let w = &mut svg;
    let _ = writeln!(
        w,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(w, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        w,
        r#"<text x="{:.2}" y="24" text-anchor="middle" font-size="14">{}</text>"#,
        LEFT + pw / 2.0,
        escape(metric.label())
    );
    let mut y = y0;
    while y <= y1 + step * 1e-9 {
        let yy = py(y);
        let _ = writeln!(
            w,
            "<line class=\"grid\" x1=\"{LEFT:.2}\" y1=\"{yy:.2}\" x2=\"{:.2}\" y2=\"{yy:.2}\" stroke=\"#e0e0e0\"/>",
            LEFT + pw
        );
        let _ = writeln!(
            w,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            LEFT - 6.0,
            yy + 4.0,
            tick_label(y)
        );
        y += step;
    }
    for &x in &xs {
        let _ = writeln!(
            w,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            px(x),
            TOP + ph + 18.0,
            tick_label(x)
        );
    }
    let _ = writeln!(
        w,
        r##"<path class="axes" d="M{LEFT:.2} {TOP:.2} V{:.2} H{:.2}" fill="none" stroke="#333"/>"##,
        TOP + ph,
        LEFT + pw
    );
    let _ = writeln!(
        w,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        LEFT + pw / 2.0,
        HEIGHT - 16.0,
        escape(x_label)
    );

    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let coords: Vec<String> = s.points.iter().map(|&(x, m, _)| format!("{:.2},{:.2}", px(x), py(m))).collect();
        let _ = writeln!(
            w,
            r#"<polyline class="series" data-approach="{}" points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
            escape(&s.approach),
            coords.join(" ")
        );
        for &(x, m, se) in &s.points {
            let (cx, lo, hi) = (px(x), py(m - se), py(m + se));
            let _ = writeln!(
                w,
                r#"<path class="whisker" d="M{cx:.2} {lo:.2} V{hi:.2} M{:.2} {lo:.2} H{:.2} M{:.2} {hi:.2} H{:.2}" stroke="{color}" fill="none"/>"#,
                cx - 4.0,
                cx + 4.0,
                cx - 4.0,
                cx + 4.0
            );
            let _ = writeln!(w, r#"<circle cx="{cx:.2}" cy="{:.2}" r="3" fill="{color}"/>"#, py(m));
        }
        let ly = TOP + 10.0 + 20.0 * i as f64;
        let lx = LEFT + pw + 16.0;
        let _ = writeln!(
            w,
            r#"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="2"/>"#,
            lx + 24.0
        );
        let _ = writeln!(w, r#"<text x="{:.2}" y="{:.2}">{}</text>"#, lx + 30.0, ly + 4.0, escape(&s.approach));
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

/// Read `csv`, chart `metric` and write the SVG to `out`. Nothing is
/// written when the metric is unknown or the CSV holds no usable rows.
pub fn emit_plot(csv: &Path, metric: &str, out: &Path) -> Result<(), HarnessError> {
    let metric: Metric = metric.parse()?;
    let file = std::fs::File::open(csv)?;
    let records = read_records(file)?;
    let series = collect_series(&records, metric);
    let x_label = records
        .iter()
        .find(|r| r.sweep_value.is_some())
        .map_or("sweep value".to_string(), |r| r.sweep_param.clone());
    let svg = render_svg(&series, metric, &x_label)?;
    std::fs::write(out, svg)?;
    Ok(())
}
