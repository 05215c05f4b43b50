use std::fs;
use std::path::{Path, PathBuf};

use super::ExperimentError;

/// Formats like C's `%.6g`: six significant digits, trailing zeros removed,
/// scientific notation for exponents below -4 or at least 6.
pub fn fmt_num(x: f64) -> String {
    if x.is_nan() {
        return "NaN".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "Inf".into() } else { "-Inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    // rounding to 6 significant digits can bump the exponent, so take it
    // from the rounded scientific form
    let sci = format!("{x:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("scientific format has an exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..6).contains(&exp) {
        let m = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{m}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (5 - exp) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// A header plus string rows; numbers are formatted once, on insertion, so
/// every consumer (CSV file, plot) sees identical values.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self { header: header.iter().map(|h| h.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    fn index(&self, name: &str) -> usize {
        self.header.iter().position(|h| h == name).unwrap_or_else(|| panic!("no column {name}"))
    }

    /// Column parsed back to numbers; unparsable cells become NaN.
    pub fn column_f64(&self, name: &str) -> Vec<f64> {
        let j = self.index(name);
        self.rows.iter().map(|r| r[j].parse().unwrap_or(f64::NAN)).collect()
    }

    pub fn column_str(&self, name: &str) -> Vec<&str> {
        let j = self.index(name);
        self.rows.iter().map(|r| r[j].as_str()).collect()
    }

    pub fn write(&self, path: &Path) -> Result<(), ExperimentError> {
        let io = |e: csv::Error| ExperimentError::Output(format!("{}: {e}", path.display()));
        let mut w = csv::Writer::from_path(path).map_err(io)?;
        w.write_record(&self.header).map_err(io)?;
        for r in &self.rows {
            w.write_record(r).map_err(io)?;
        }
        w.flush().map_err(|e| ExperimentError::Output(format!("{}: {e}", path.display())))
    }
}

pub fn num(x: f64) -> String {
    fmt_num(x)
}

pub fn opt_num(x: Option<f64>) -> String {
    x.map_or_else(|| "NA".into(), fmt_num)
}

/// `<out>/<experiment>/<tag>/{tables,figures}`.
#[derive(Debug, Clone)]
pub struct OutputDir {
    pub root: PathBuf,
}

impl OutputDir {
    pub fn create(base: &Path, experiment: &str, tag: &str) -> Result<Self, ExperimentError> {
        let root = base.join(experiment).join(tag);
        for sub in ["tables", "figures"] {
            fs::create_dir_all(root.join(sub))
                .map_err(|e| ExperimentError::Output(format!("cannot create {}: {e}", root.join(sub).display())))?;
        }
        Ok(Self { root })
    }

    pub fn table(&self, name: &str, t: &Table) -> Result<(), ExperimentError> {
        t.write(&self.root.join("tables").join(format!("{name}.csv")))
    }

    /// Writes a figure's data CSV and its rendered SVG side by side.
    pub fn figure(&self, name: &str, data: &Table, svg: &str) -> Result<(), ExperimentError> {
        let dir = self.root.join("figures");
        data.write(&dir.join(format!("{name}.csv")))?;
        self.text(&dir.join(format!("{name}.svg")), svg)
    }

    pub fn text(&self, path: &Path, contents: &str) -> Result<(), ExperimentError> {
        fs::write(path, contents).map_err(|e| ExperimentError::Output(format!("{}: {e}", path.display())))
    }
}
