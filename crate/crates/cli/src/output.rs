//! Result tables, the pass/fail summary and SVG scatter plots.
//!
//! Floats are written with Rust's `Display`, the shortest decimal string that
//! parses back to the same `f64`.

use std::fmt::Write as _;

use serde::Serialize;

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    F(f64),
    I(i64),
    U(u64),
    S(String),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::F(x) => x.to_string(),
            Cell::I(x) => x.to_string(),
            Cell::U(x) => x.to_string(),
            Cell::S(s) => s.clone(),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::F(x)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::U(x as u64)
    }
}

impl From<u64> for Cell {
    fn from(x: u64) -> Self {
        Cell::U(x)
    }
}

impl From<u32> for Cell {
    fn from(x: u32) -> Self {
        Cell::U(x as u64)
    }
}

impl From<bool> for Cell {
    fn from(x: bool) -> Self {
        Cell::S(x.to_string())
    }
}

impl From<&str> for Cell {
    fn from(x: &str) -> Self {
        Cell::S(x.to_string())
    }
}

impl From<String> for Cell {
    fn from(x: String) -> Self {
        Cell::S(x)
    }
}

#[macro_export]
macro_rules! row {
    ($($x:expr),* $(,)?) => { vec![$($crate::output::Cell::from($x)),*] };
}

#[derive(Clone, Debug)]
pub struct Table {
    /// File name without extension.
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Self { name: name.into(), header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len(), "row width of table {}", self.name);
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Vec<u8> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header).expect("in-memory write");
        for r in &self.rows {
            w.write_record(r.iter().map(Cell::render)).expect("in-memory write");
        }
        w.into_inner().expect("in-memory flush")
    }

    /// Numeric column by name, for tests and plots.
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.header.iter().position(|h| h == name)?;
        Some(
            self.rows
                .iter()
                .map(|r| match &r[j] {
                    Cell::F(x) => *x,
                    Cell::I(x) => *x as f64,
                    Cell::U(x) => *x as f64,
                    Cell::S(s) => s.parse().unwrap_or(f64::NAN),
                })
                .collect(),
        )
    }
}

/// One statistical check of a pipeline.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub observed: f64,
    pub expected: f64,
    pub tolerance: String,
    pub pass: bool,
}

impl Check {
    pub fn within(name: impl Into<String>, observed: f64, expected: f64, tol: f64) -> Self {
        Self {
            name: name.into(),
            observed,
            expected,
            tolerance: format!("+-{tol}"),
            pass: (observed - expected).abs() <= tol,
        }
    }

    pub fn flag(name: impl Into<String>, observed: f64, expected: f64, rule: impl Into<String>, pass: bool) -> Self {
        Self { name: name.into(), observed, expected, tolerance: rule.into(), pass }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Summary {
    pub experiment: String,
    pub pass: bool,
    pub checks: Vec<Check>,
}

impl Summary {
    pub fn new(experiment: &str, checks: Vec<Check>) -> Self {
        Self { experiment: experiment.into(), pass: checks.iter().all(|c| c.pass), checks }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Axis {
    Linear,
    Log10,
}

/// Minimal scatter plot. Points with non-finite coordinates (after the axis
/// transform) are dropped.
pub struct Scatter {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub y_axis: Axis,
    pub series: Vec<(String, Vec<(f64, f64)>)>,
}

const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

fn nice(x: f64) -> String {
    if x == 0.0 || (x.abs() >= 1e-3 && x.abs() < 1e4) {
        format!("{:.3}", x).trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        format!("{x:.2e}")
    }
}

impl Scatter {
    pub fn render(&self) -> String {
        let (w, h, m) = (640.0, 420.0, 60.0);
        let tf = |y: f64| match self.y_axis {
            Axis::Linear => y,
            Axis::Log10 => y.log10(),
        };
        let pts: Vec<Vec<(f64, f64)>> = self
            .series
            .iter()
            .map(|(_, p)| p.iter().map(|&(x, y)| (x, tf(y))).filter(|(x, y)| x.is_finite() && y.is_finite()).collect())
            .collect();
        let all = pts.iter().flatten();
        let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for &(x, y) in all {
            x0 = x0.min(x);
            x1 = x1.max(x);
            y0 = y0.min(y);
            y1 = y1.max(y);
        }
        if !x0.is_finite() {
            (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
        }
        if x1 == x0 {
            x1 = x0 + 1.0;
        }
        if y1 == y0 {
            y1 = y0 + 1.0;
        }
        let sx = |x: f64| m + (x - x0) / (x1 - x0) * (w - 2.0 * m);
        let sy = |y: f64| h - m - (y - y0) / (y1 - y0) * (h - 2.0 * m);
        let mut s = String::new();
        let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" font-family="sans-serif" font-size="11">"#);
        let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
        let _ = writeln!(s, r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>"#, w / 2.0, escape(&self.title));
        let _ = writeln!(
            s,
            r#"<path d="M{m} {} H{} M{m} {} V{m}" stroke="black" fill="none"/>"#,
            h - m,
            w - m,
            h - m
        );
        for i in 0..=4 {
            let t = i as f64 / 4.0;
            let xv = x0 + t * (x1 - x0);
            let yv = y0 + t * (y1 - y0);
            let ylab = match self.y_axis {
                Axis::Linear => nice(yv),
                Axis::Log10 => format!("1e{}", nice(yv)),
            };
            let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, sx(xv), h - m + 16.0, nice(xv));
            let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#, m - 4.0, sy(yv) + 4.0, ylab);
        }
        let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, w / 2.0, h - 16.0, escape(&self.x_label));
        let _ = writeln!(
            s,
            r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">{}</text>"#,
            h / 2.0,
            h / 2.0,
            escape(&self.y_label)
        );
        for (i, ((name, _), p)) in self.series.iter().zip(&pts).enumerate() {
            let c = COLORS[i % COLORS.len()];
            let _ = writeln!(s, r#"<g fill="{c}" fill-opacity="0.7">"#);
            for &(x, y) in p {
                let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="2"/>"#, sx(x), sy(y));
            }
            let _ = writeln!(s, "</g>");
            let _ = writeln!(s, r#"<text x="{}" y="{}" fill="{c}">{}</text>"#, w - m + 4.0, m + 14.0 * i as f64, escape(name));
        }
        s.push_str("</svg>\n");
        s
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip() {
        let mut t = Table::new("t", &["x", "tag"]);
        for x in [0.1, 1.0 / 3.0, 1e-300, 6.02214076e23, -0.0] {
            t.push(row![x, "a,b"]);
        }
        let text = String::from_utf8(t.to_csv()).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("x,tag"));
        for (line, x) in lines.zip([0.1f64, 1.0 / 3.0, 1e-300, 6.02214076e23, -0.0]) {
            let v: f64 = line.split(',').next().unwrap().parse().unwrap();
            assert_eq!(v.to_bits(), x.to_bits());
            assert!(line.ends_with("\"a,b\""));
        }
        assert_eq!(t.column("x").unwrap()[0], 0.1);
    }

    #[test]
    fn svg_is_well_formed() {
        let p = Scatter {
            title: "a < b".into(),
            x_label: "x".into(),
            y_label: "y".into(),
            y_axis: Axis::Log10,
            series: vec![("s".into(), vec![(0.0, 1.0), (1.0, 100.0), (2.0, 0.0)])],
        };
        let svg = p.render();
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches("<circle").count(), 2);
        assert!(svg.contains("a &lt; b"));
    }
}
