//! CSV, JSON and SVG artifacts.
//!
//! CSV files carry a header row and floats with 12 significant digits, so
//! identical inputs give byte-identical files. Every writer returns the
//! SHA-256 of what it wrote.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::Result;

/// `x` with 12 significant digits in scientific notation.
pub fn fmt_num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.11e}")
    } else {
        x.to_string()
    }
}

fn digest(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<String> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, bytes)?;
    Ok(digest(bytes))
}

/// A numeric table with named columns.
#[derive(Clone, Debug, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row.iter().map(|&x| fmt_num(x)))?;
        }
        w.into_inner().map_err(|e| std::io::Error::other(e.to_string()).into())
    }

    pub fn write(&self, path: &Path) -> Result<String> {
        write_bytes(path, &self.to_csv()?)
    }
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<String> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    write_bytes(path, &bytes)
}

pub fn write_text(path: &Path, text: &str) -> Result<String> {
    write_bytes(path, text.as_bytes())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ColorScale {
    /// Dark to bright, for non-negative data.
    Sequential,
    /// Blue through white to red, symmetric about zero.
    Diverging,
}

fn lerp_rgb(stops: &[(f64, [u8; 3])], x: f64) -> String {
    let x = x.clamp(0.0, 1.0);
    let i = stops.windows(2).position(|w| x <= w[1].0).unwrap_or(stops.len() - 2);
    let ((a, ca), (b, cb)) = (stops[i], stops[i + 1]);
    let f = if b > a { (x - a) / (b - a) } else { 0.0 };
    let c: Vec<u8> = (0..3).map(|j| (ca[j] as f64 + f * (cb[j] as f64 - ca[j] as f64)).round() as u8).collect();
    format!("#{:02x}{:02x}{:02x}", c[0], c[1], c[2])
}

fn color(scale: ColorScale, v: f64, lo: f64, hi: f64) -> String {
    match scale {
        ColorScale::Sequential => {
            let stops = [(0.0, [13, 8, 135]), (0.35, [156, 23, 158]), (0.7, [237, 121, 83]), (1.0, [240, 249, 33])];
            lerp_rgb(&stops, if hi > lo { (v - lo) / (hi - lo) } else { 0.0 })
        }
        ColorScale::Diverging => {
            let m = lo.abs().max(hi.abs());
            let stops = [(0.0, [33, 102, 172]), (0.5, [247, 247, 247]), (1.0, [178, 24, 43])];
            lerp_rgb(&stops, if m > 0.0 { 0.5 + 0.5 * v / m } else { 0.5 })
        }
    }
}

const W: f64 = 640.0;
const H: f64 = 420.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 90.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 55.0;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn frame(out: &mut String, title: &str, x_label: &str, y_label: &str, xr: (f64, f64), yr: (f64, f64)) {
    let (pw, ph) = (W - LEFT - RIGHT, H - TOP - BOTTOM);
    let _ = write!(out, r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#);
    let _ = write!(
        out,
        r#"<text x="{}" y="24" text-anchor="middle" font-size="15">{}</text>"#,
        LEFT + pw / 2.0,
        escape(title)
    );
    let _ = write!(
        out,
        r#"<text x="{}" y="{}" text-anchor="middle" font-size="13">{}</text>"#,
        LEFT + pw / 2.0,
        H - 12.0,
        escape(x_label)
    );
    let _ = write!(
        out,
        r#"<text x="18" y="{0}" text-anchor="middle" font-size="13" transform="rotate(-90 18 {0})">{1}</text>"#,
        TOP + ph / 2.0,
        escape(y_label)
    );
    for i in 0..=4 {
        let f = i as f64 / 4.0;
        let (x, y) = (LEFT + f * pw, TOP + ph - f * ph);
        let _ = write!(
            out,
            r#"<text x="{x}" y="{}" text-anchor="middle" font-size="11">{}</text>"#,
            TOP + ph + 16.0,
            tick(xr.0 + f * (xr.1 - xr.0))
        );
        let _ = write!(
            out,
            r#"<text x="{}" y="{}" text-anchor="end" font-size="11">{}</text>"#,
            LEFT - 6.0,
            y + 4.0,
            tick(yr.0 + f * (yr.1 - yr.0))
        );
    }
}

fn tick(v: f64) -> String {
    let a = v.abs();
    if a != 0.0 && !(1e-2..1e4).contains(&a) {
        format!("{v:.2e}")
    } else {
        let s = format!("{v:.3}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

fn open_svg() -> String {
    format!(
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif"><rect width="100%" height="100%" fill="white"/>"#
    )
}

fn range(vals: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) =
        vals.filter(|v| v.is_finite()).fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if lo > hi {
        (0.0, 1.0)
    } else if lo == hi {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    }
}

/// Values on a rectilinear grid, `values[iy * xs.len() + ix]`.
#[derive(Clone, Debug)]
pub struct Heatmap {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    pub values: Vec<f64>,
    pub scale: ColorScale,
}

impl Heatmap {
    pub fn to_svg(&self) -> String {
        let (nx, ny) = (self.xs.len(), self.ys.len());
        let mut out = open_svg();
        let (pw, ph) = (W - LEFT - RIGHT, H - TOP - BOTTOM);
        let (lo, hi) = range(self.values.iter().copied());
        let (cw, ch) = (pw / nx.max(1) as f64, ph / ny.max(1) as f64);
        for iy in 0..ny {
            for ix in 0..nx {
                let v = self.values[iy * nx + ix];
                let fill = if v.is_finite() { color(self.scale, v, lo, hi) } else { "#bbbbbb".into() };
                let _ = write!(
                    out,
                    r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{fill}"/>"#,
                    LEFT + ix as f64 * cw,
                    TOP + ph - (iy + 1) as f64 * ch,
                    cw + 0.3,
                    ch + 0.3
                );
            }
        }
        let xr = (self.xs.first().copied().unwrap_or(0.0), self.xs.last().copied().unwrap_or(1.0));
        let yr = (self.ys.first().copied().unwrap_or(0.0), self.ys.last().copied().unwrap_or(1.0));
        frame(&mut out, &self.title, &self.x_label, &self.y_label, xr, yr);
        // Colour bar.
        let bx = W - RIGHT + 20.0;
        for i in 0..64 {
            let f = i as f64 / 63.0;
            let v = lo + f * (hi - lo);
            let _ = write!(
                out,
                r#"<rect x="{bx}" y="{:.2}" width="16" height="{:.2}" fill="{}"/>"#,
                TOP + ph - (i + 1) as f64 * ph / 64.0,
                ph / 64.0 + 0.3,
                color(self.scale, v, lo, hi)
            );
        }
        let _ = write!(
            out,
            r#"<text x="{}" y="{}" font-size="11">{}</text><text x="{}" y="{}" font-size="11">{}</text></svg>"#,
            bx - 4.0,
            TOP - 6.0,
            tick(hi),
            bx - 4.0,
            TOP + ph + 14.0,
            tick(lo)
        );
        out.push('\n');
        out
    }
}

#[derive(Clone, Debug)]
pub struct Series {
    /// Legend entry; empty names are left out of the legend.
    pub name: String,
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    /// Draw markers instead of a polyline.
    pub markers: bool,
}

#[derive(Clone, Debug)]
pub struct LinePlot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
}

const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"];

impl LinePlot {
    pub fn to_svg(&self) -> String {
        let mut out = open_svg();
        let (pw, ph) = (W - LEFT - RIGHT, H - TOP - BOTTOM);
        let xr = range(self.series.iter().flat_map(|s| s.xs.iter().copied()));
        let yr = range(self.series.iter().flat_map(|s| s.ys.iter().copied()));
        let px = |x: f64| LEFT + (x - xr.0) / (xr.1 - xr.0) * pw;
        let py = |y: f64| TOP + ph - (y - yr.0) / (yr.1 - yr.0) * ph;
        for (i, s) in self.series.iter().enumerate() {
            let c = PALETTE[i % PALETTE.len()];
            let pts = s.xs.iter().zip(&s.ys).filter(|(x, y)| x.is_finite() && y.is_finite());
            if s.markers {
                for (x, y) in pts {
                    let _ = write!(
                        out,
                        r#"<circle cx="{:.2}" cy="{:.2}" r="2.5" fill="none" stroke="{c}"/>"#,
                        px(*x),
                        py(*y)
                    );
                }
            } else {
                let path: Vec<String> = pts.map(|(x, y)| format!("{:.2},{:.2}", px(*x), py(*y))).collect();
                let _ = write!(
                    out,
                    r#"<polyline fill="none" stroke="{c}" stroke-width="1.4" points="{}"/>"#,
                    path.join(" ")
                );
            }
            if !s.name.is_empty() {
                let _ = write!(
                    out,
                    r#"<text x="{}" y="{}" font-size="11" fill="{c}">{}</text>"#,
                    W - RIGHT + 6.0,
                    TOP + 12.0 + 14.0 * i as f64,
                    escape(&s.name)
                );
            }
        }
        frame(&mut out, &self.title, &self.x_label, &self.y_label, xr, yr);
        out.push_str("</svg>\n");
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(fmt_num(1.0), "1.00000000000e0");
        assert_eq!(fmt_num(-2.9414), "-2.94140000000e0");
        assert_eq!(fmt_num(1.0 / 3.0), "3.33333333333e-1");
        assert_eq!(fmt_num(f64::NAN), "NaN");
        let x = std::f64::consts::PI * 1e5;
        assert!((fmt_num(x).parse::<f64>().unwrap() / x - 1.0).abs() < 1e-11);
    }

    #[test]
    fn csv_is_deterministic() {
        let mut t = Table::new(&["t", "x"]);
        t.push(vec![0.0, 0.1]);
        t.push(vec![1.0, 0.2]);
        let a = t.to_csv().unwrap();
        assert_eq!(
            String::from_utf8(a.clone()).unwrap(),
            "t,x\n0.00000000000e0,1.00000000000e-1\n1.00000000000e0,2.00000000000e-1\n"
        );
        assert_eq!(digest(&a), digest(&t.to_csv().unwrap()));
    }

    #[test]
    fn svg_documents_are_closed() {
        let h = Heatmap {
            title: "a < b".into(),
            x_label: "k".into(),
            y_label: "t".into(),
            xs: vec![0.0, 1.0],
            ys: vec![0.0, 1.0, 2.0],
            values: vec![-1.0, 0.0, 1.0, 2.0, f64::NAN, 0.5],
            scale: ColorScale::Diverging,
        }
        .to_svg();
        assert!(h.starts_with("<svg") && h.trim_end().ends_with("</svg>"));
        assert!(h.contains("a &lt; b"));
        assert_eq!(h.matches("<rect").count(), 1 + 6 + 1 + 64);
        let l = LinePlot {
            title: "x".into(),
            x_label: "t".into(),
            y_label: "X".into(),
            series: vec![Series { name: "s".into(), xs: vec![0.0, 1.0], ys: vec![1.0, 1.0], markers: false }],
        }
        .to_svg();
        assert!(l.contains("<polyline") && l.trim_end().ends_with("</svg>"));
    }
}
