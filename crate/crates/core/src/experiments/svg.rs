//! Minimal SVG rendering for line, scatter and box plots.

use std::fmt::Write;

use crate::numerics;

const W: f64 = 640.0;
const H: f64 = 420.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 55.0;
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mark {
    Line,
    Points,
    Dashed,
}

pub struct Series<'a> {
    pub label: &'a str,
    pub points: Vec<(f64, f64)>,
    pub mark: Mark,
}

struct Frame {
    x: (f64, f64),
    y: (f64, f64),
}

impl Frame {
    fn new(x: (f64, f64), y: (f64, f64)) -> Self {
        Self { x: widen(x), y: widen(y) }
    }

    fn px(&self, x: f64) -> f64 {
        LEFT + (x - self.x.0) / (self.x.1 - self.x.0) * (W - LEFT - RIGHT)
    }

    fn py(&self, y: f64) -> f64 {
        H - BOTTOM - (y - self.y.0) / (self.y.1 - self.y.0) * (H - TOP - BOTTOM)
    }
}

fn widen((lo, hi): (f64, f64)) -> (f64, f64) {
    if !lo.is_finite() || !hi.is_finite() {
        (0.0, 1.0)
    } else if hi - lo < 1e-12 {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    }
}

fn range(vals: impl Iterator<Item = f64>) -> (f64, f64) {
    vals.filter(|v| v.is_finite()).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
}

fn ticks((lo, hi): (f64, f64)) -> Vec<f64> {
    let raw = (hi - lo) / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0].iter().map(|m| m * mag).find(|s| *s >= raw).unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() * step;
    (0..=20).map(|k| first + k as f64 * step).take_while(|t| *t <= hi + step * 1e-9).collect()
}

fn label(t: f64) -> String {
    let s = format!("{t:.4}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" { "0".into() } else { s.into() }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn open(out: &mut String, title: &str) {
    let _ = write!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = write!(out, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = write!(out, r#"<text x="{}" y="22" text-anchor="middle" font-size="15">{}</text>"#, W / 2.0, escape(title));
}

fn axes(out: &mut String, f: &Frame, xlabel: &str, ylabel: &str, xticks: bool) {
    let (x0, x1, y0, y1) = (LEFT, W - RIGHT, H - BOTTOM, TOP);
    let _ = write!(out, r##"<rect x="{x0}" y="{y1}" width="{}" height="{}" fill="none" stroke="#333"/>"##, x1 - x0, y0 - y1);
    if xticks {
        for t in ticks(f.x) {
            let x = f.px(t);
            let _ = write!(out, r##"<line x1="{x:.2}" y1="{y0}" x2="{x:.2}" y2="{}" stroke="#333"/>"##, y0 + 5.0);
            let _ = write!(out, r#"<text x="{x:.2}" y="{}" text-anchor="middle">{}</text>"#, y0 + 18.0, label(t));
        }
    }
    for t in ticks(f.y) {
        let y = f.py(t);
        let _ = write!(out, r##"<line x1="{}" y1="{y:.2}" x2="{x0}" y2="{y:.2}" stroke="#333"/>"##, x0 - 5.0);
        let _ = write!(out, r##"<line x1="{x0}" y1="{y:.2}" x2="{x1}" y2="{y:.2}" stroke="#eee"/>"##);
        let _ = write!(out, r#"<text x="{}" y="{:.2}" text-anchor="end">{}</text>"#, x0 - 8.0, y + 4.0, label(t));
    }
    let _ = write!(out, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, (x0 + x1) / 2.0, H - 15.0, escape(xlabel));
    let _ = write!(
        out,
        r#"<text x="18" y="{0}" text-anchor="middle" transform="rotate(-90 18 {0})">{1}</text>"#,
        (y0 + y1) / 2.0,
        escape(ylabel)
    );
}

fn legend(out: &mut String, labels: &[&str]) {
    for (k, l) in labels.iter().enumerate() {
        let y = TOP + 14.0 + 16.0 * k as f64;
        let c = PALETTE[k % PALETTE.len()];
        let _ = write!(out, r#"<rect x="{}" y="{}" width="10" height="10" fill="{c}"/>"#, W - RIGHT - 150.0, y - 9.0);
        let _ = write!(out, r#"<text x="{}" y="{y}">{}</text>"#, W - RIGHT - 135.0, escape(l));
    }
}

/// Line and/or point series on shared axes. `x_range`/`y_range` override the
/// data extent.
pub fn xy_plot(
    title: &str,
    xlabel: &str,
    ylabel: &str,
    series: &[Series<'_>],
    x_range: Option<(f64, f64)>,
    y_range: Option<(f64, f64)>,
) -> String {
    let all = || series.iter().flat_map(|s| s.points.iter());
    let f = Frame::new(x_range.unwrap_or_else(|| range(all().map(|p| p.0))), y_range.unwrap_or_else(|| range(all().map(|p| p.1))));
    let mut out = String::new();
    open(&mut out, title);
    axes(&mut out, &f, xlabel, ylabel, true);
    for (k, s) in series.iter().enumerate() {
        let c = PALETTE[k % PALETTE.len()];
        let pts: Vec<(f64, f64)> = s.points.iter().filter(|p| p.0.is_finite() && p.1.is_finite()).map(|&(x, y)| (f.px(x), f.py(y))).collect();
        match s.mark {
            Mark::Points => {
                for (x, y) in pts {
                    let _ = write!(out, r#"<circle cx="{x:.2}" cy="{y:.2}" r="3" fill="{c}" fill-opacity="0.8"/>"#);
                }
            }
            Mark::Line | Mark::Dashed => {
                let path: Vec<String> = pts.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
                let dash = if s.mark == Mark::Dashed { r#" stroke-dasharray="5,4""# } else { "" };
                let _ = write!(out, r#"<polyline points="{}" fill="none" stroke="{c}" stroke-width="2"{dash}/>"#, path.join(" "));
            }
        }
    }
    legend(&mut out, &series.iter().map(|s| s.label).collect::<Vec<_>>());
    out.push_str("</svg>\n");
    out
}

/// Box plots (quartiles, whiskers to the most extreme points within 1.5 IQR,
/// outliers as dots), one per group.
pub fn box_plot(title: &str, ylabel: &str, groups: &[(String, Vec<f64>)]) -> String {
    let f = Frame::new((0.0, groups.len() as f64), range(groups.iter().flat_map(|g| g.1.iter().copied())));
    let mut out = String::new();
    open(&mut out, title);
    axes(&mut out, &f, "", ylabel, false);
    for (k, (name, vals)) in groups.iter().enumerate() {
        let mut v: Vec<f64> = vals.iter().copied().filter(|x| x.is_finite()).collect();
        if v.is_empty() {
            continue;
        }
        v.sort_by(f64::total_cmp);
        let q = |p| numerics::quantile_sorted(&v, p);
        let (q1, med, q3) = (q(0.25), q(0.5), q(0.75));
        let iqr = q3 - q1;
        let lo = v.iter().copied().find(|x| *x >= q1 - 1.5 * iqr).unwrap_or(q1);
        let hi = v.iter().rev().copied().find(|x| *x <= q3 + 1.5 * iqr).unwrap_or(q3);
        let c = PALETTE[k % PALETTE.len()];
        let cx = f.px(k as f64 + 0.5);
        let half = 0.2 * (f.px(1.0) - f.px(0.0));
        let _ = write!(out, r#"<line x1="{cx:.2}" y1="{:.2}" x2="{cx:.2}" y2="{:.2}" stroke="{c}"/>"#, f.py(lo), f.py(hi));
        let _ = write!(
            out,
            r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{c}" fill-opacity="0.3" stroke="{c}"/>"#,
            cx - half,
            f.py(q3),
            2.0 * half,
            (f.py(q1) - f.py(q3)).max(0.5)
        );
        let _ = write!(out, r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="{c}" stroke-width="2"/>"#, cx - half, f.py(med), cx + half, f.py(med));
        for x in v.iter().filter(|x| **x < lo || **x > hi) {
            let _ = write!(out, r#"<circle cx="{cx:.2}" cy="{:.2}" r="2.5" fill="{c}"/>"#, f.py(*x));
        }
        let _ = write!(out, r#"<text x="{cx:.2}" y="{}" text-anchor="middle">{}</text>"#, H - BOTTOM + 18.0, escape(name));
    }
    out.push_str("</svg>\n");
    out
}

/// Points coloured by value on a blue-to-red ramp.
pub fn heat_scatter(title: &str, xlabel: &str, ylabel: &str, pts: &[(f64, f64, f64)], x_range: (f64, f64), y_range: (f64, f64)) -> String {
    let f = Frame::new(x_range, y_range);
    let (vlo, vhi) = widen(range(pts.iter().map(|p| p.2)));
    let mut out = String::new();
    open(&mut out, title);
    axes(&mut out, &f, xlabel, ylabel, true);
    for &(x, y, v) in pts {
        let t = ((v - vlo) / (vhi - vlo)).clamp(0.0, 1.0);
        let (r, b) = ((255.0 * t) as u8, (255.0 * (1.0 - t)) as u8);
        let _ = write!(
            out,
            r##"<rect x="{:.2}" y="{:.2}" width="12" height="12" fill="rgb({r},60,{b})" stroke="#333" stroke-width="0.5"/>"##,
            f.px(x) - 6.0,
            f.py(y) - 6.0
        );
    }
    let _ = write!(
        out,
        r#"<text x="{}" y="{}" text-anchor="end">colour: {} (blue) to {} (red)</text>"#,
        W - RIGHT,
        TOP - 6.0,
        label(vlo),
        label(vhi)
    );
    out.push_str("</svg>\n");
    out
}
