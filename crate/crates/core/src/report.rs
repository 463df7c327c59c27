use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::space::{Vec3, VERT};

/// Fixed-precision float cell; identical inputs give identical bytes.
pub fn num(x: f64) -> String {
    format!("{x:.12e}")
}

/// Coordinate column names with a prefix: `x, y` in 2D and `x, y, z` in 3D.
pub fn coord_header(prefix: &str, dim: usize) -> Vec<String> {
    let names: &[&str] = if dim == 2 { &["x", "y"] } else { &["x", "y", "z"] };
    names.iter().map(|n| if prefix.is_empty() { n.to_string() } else { format!("{prefix}_{n}") }).collect()
}

/// Coordinates of a point in the same order as [`coord_header`].
pub fn coords(p: &Vec3, dim: usize) -> Vec<String> {
    if dim == 2 {
        vec![num(p.x), num(p[VERT])]
    } else {
        vec![num(p.x), num(p.y), num(p.z)]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: AsRef<str>>(header: &[S]) -> Self {
        Self { header: header.iter().map(|s| s.as_ref().to_string()).collect(), rows: Vec::new() }
    }

    pub fn with_header(header: Vec<String>) -> Self {
        Self { header, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        let io = |e: csv::Error| Error::Io(e.to_string());
        w.write_record(&self.header).map_err(io)?;
        for r in &self.rows {
            w.write_record(r).map_err(io)?;
        }
        w.into_inner().map_err(|e| Error::Io(e.to_string()))
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes()?).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
    }
}

/// Minimal SVG canvas mapping a data rectangle onto a fixed pixel frame.
#[derive(Debug, Clone)]
pub struct Svg {
    width: f64,
    height: f64,
    margin: f64,
    lo: (f64, f64),
    hi: (f64, f64),
    body: String,
}

impl Svg {
    pub fn new(lo: (f64, f64), hi: (f64, f64)) -> Self {
        let pad = |a: f64, b: f64| if b > a { (a, b) } else { (a - 0.5, a + 0.5) };
        let (x0, x1) = pad(lo.0, hi.0);
        let (y0, y1) = pad(lo.1, hi.1);
        Self { width: 640.0, height: 480.0, margin: 48.0, lo: (x0, y0), hi: (x1, y1), body: String::new() }
    }

    /// Canvas fitted to all supplied points.
    pub fn fitted<'a>(pts: impl IntoIterator<Item = &'a (f64, f64)>) -> Self {
        let mut lo = (f64::INFINITY, f64::INFINITY);
        let mut hi = (f64::NEG_INFINITY, f64::NEG_INFINITY);
        for &(x, y) in pts {
            if x.is_finite() && y.is_finite() {
                lo = (lo.0.min(x), lo.1.min(y));
                hi = (hi.0.max(x), hi.1.max(y));
            }
        }
        if !lo.0.is_finite() {
            return Self::new((0.0, 0.0), (1.0, 1.0));
        }
        Self::new(lo, hi)
    }

    fn px(&self, x: f64, y: f64) -> (f64, f64) {
        let m = self.margin;
        let sx = (x - self.lo.0) / (self.hi.0 - self.lo.0);
        let sy = (y - self.lo.1) / (self.hi.1 - self.lo.1);
        (m + sx * (self.width - 2.0 * m), self.height - m - sy * (self.height - 2.0 * m))
    }

    pub fn polyline(&mut self, pts: &[(f64, f64)], color: &str) {
        let path: Vec<String> = pts
            .iter()
            .filter(|p| p.0.is_finite() && p.1.is_finite())
            .map(|&(x, y)| {
                let (a, b) = self.px(x, y);
                format!("{a:.2},{b:.2}")
            })
            .collect();
        let _ = writeln!(self.body, r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#, path.join(" "));
    }

    pub fn circle(&mut self, x: f64, y: f64, r_px: f64, color: &str, filled: bool) {
        let (a, b) = self.px(x, y);
        let fill = if filled { color } else { "none" };
        let _ = writeln!(self.body, r#"<circle cx="{a:.2}" cy="{b:.2}" r="{r_px}" stroke="{color}" fill="{fill}"/>"#);
    }

    /// Text placed in pixel coordinates.
    pub fn text(&mut self, x_px: f64, y_px: f64, s: &str) {
        let esc = s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;");
        let _ = writeln!(self.body, r#"<text x="{x_px:.1}" y="{y_px:.1}" font-family="monospace" font-size="12">{esc}</text>"#);
    }

    pub fn axes(&mut self, xlabel: &str, ylabel: &str) {
        let (x0, y0) = self.px(self.lo.0, self.lo.1);
        let (x1, y1) = self.px(self.hi.0, self.hi.1);
        let _ = writeln!(self.body, r#"<polyline fill="none" stroke="black" points="{x0:.2},{y1:.2} {x0:.2},{y0:.2} {x1:.2},{y0:.2}"/>"#);
        let (lo, hi) = (self.lo, self.hi);
        self.text(x0, y0 + 16.0, &format!("{:.3e}", lo.0));
        self.text(x1 - 60.0, y0 + 16.0, &format!("{:.3e}", hi.0));
        self.text(4.0, y0, &format!("{:.2e}", lo.1));
        self.text(4.0, y1 + 4.0, &format!("{:.2e}", hi.1));
        self.text((x0 + x1) / 2.0, self.height - 8.0, xlabel);
        self.text(4.0, 16.0, ylabel);
    }

    pub fn render(&self) -> String {
        format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n{}</svg>\n",
            self.body,
            w = self.width,
            h = self.height
        )
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.render()).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
    }
}

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

/// Line plot of several labelled series.
pub fn line_plot(series: &[(String, Vec<(f64, f64)>)], xlabel: &str, ylabel: &str) -> Svg {
    let mut svg = Svg::fitted(series.iter().flat_map(|s| s.1.iter()));
    svg.axes(xlabel, ylabel);
    for (i, (name, pts)) in series.iter().enumerate() {
        let c = PALETTE[i % PALETTE.len()];
        svg.polyline(pts, c);
        for &(x, y) in pts {
            svg.circle(x, y, 2.0, c, true);
        }
        svg.text(540.0, 20.0 + 14.0 * i as f64, name);
    }
    svg
}

/// Scatter of labelled point groups; hollow markers for odd groups.
pub fn scatter(groups: &[(String, Vec<(f64, f64)>)], xlabel: &str, ylabel: &str) -> Svg {
    let mut svg = Svg::fitted(groups.iter().flat_map(|s| s.1.iter()));
    svg.axes(xlabel, ylabel);
    for (i, (name, pts)) in groups.iter().enumerate() {
        let c = PALETTE[i % PALETTE.len()];
        for &(x, y) in pts {
            svg.circle(x, y, if i % 2 == 0 { 3.0 } else { 6.0 }, c, i % 2 == 0);
        }
        svg.text(500.0, 20.0 + 14.0 * i as f64, name);
    }
    svg
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::point2;

    #[test]
    fn table_bytes_are_stable() {
        let mut t = Table::new(&["r", "N_C"]);
        t.push(vec![num(0.5), num(2.0)]);
        let b = t.to_bytes().unwrap();
        assert_eq!(String::from_utf8(b.clone()).unwrap(), "r,N_C\n5.000000000000e-1,2.000000000000e0\n");
        assert_eq!(b, t.to_bytes().unwrap());
    }

    #[test]
    fn coordinate_columns() {
        assert_eq!(coord_header("center", 2), vec!["center_x", "center_y"]);
        assert_eq!(coord_header("", 3), vec!["x", "y", "z"]);
        assert_eq!(coords(&point2(1.0, -2.0), 2), vec![num(1.0), num(-2.0)]);
    }

    #[test]
    fn svg_contains_primitives() {
        let s = line_plot(&[("N_C".into(), vec![(0.1, 2.0), (0.5, 2.0), (1.0, 2.0)])], "r", "N");
        let out = s.render();
        assert!(out.starts_with("<svg") && out.contains("<polyline") && out.contains("<circle") && out.contains(">N_C<"));
        let t = scatter(&[("a<b".into(), vec![(0.0, 0.0)])], "x", "y").render();
        assert!(t.contains("a&lt;b"));
    }
}
