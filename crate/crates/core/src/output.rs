//! CSV and JSON writers. Every file carries the resolved configuration: CSV
//! files start with a `# config=<json>` comment line, JSON documents have a
//! `config` member. Floats in CSV are written with 17 significant digits so
//! they parse back to the same bits.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::Serialize;
use serde_json::Value;

use crate::error::{Error, Result};

/// `x` with 17 significant digits; non-finite values as `NaN`, `inf`, `-inf`.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        format!("{x}")
    }
}

/// A CSV cell: a float or a short label.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Text(String),
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Num(x) => fmt_f64(*x),
            Cell::Text(s) => s.clone(),
        }
    }
}

fn json_err(e: serde_json::Error) -> Error {
    Error::Io(e.to_string())
}

pub fn to_value<T: Serialize>(value: &T) -> Result<Value> {
    serde_json::to_value(value).map_err(json_err)
}

pub fn write_csv<C>(path: &Path, config: &C, header: &[&str], rows: &[Vec<Cell>]) -> Result<()>
where
    C: Serialize,
{
    let mut out = String::new();
    out.push_str("# config=");
    out.push_str(&serde_json::to_string(config).map_err(json_err)?);
    out.push('\n');
    out.push_str(&header.join(","));
    out.push('\n');
    for row in rows {
        let line: Vec<String> = row.iter().map(Cell::render).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    let mut f = fs::File::create(path)?;
    f.write_all(out.as_bytes())?;
    Ok(())
}

/// Writes `body` (a JSON object) with the resolved configuration inserted
/// under `config`.
pub fn write_json<C>(path: &Path, config: &C, mut body: Value) -> Result<()>
where
    C: Serialize,
{
    if let Value::Object(map) = &mut body {
        map.insert("config".into(), to_value(config)?);
    }
    let text = serde_json::to_string_pretty(&body).map_err(json_err)?;
    fs::write(path, text + "\n")?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits_round_trip() {
        for x in [0.1, 1.0 / 3.0, std::f64::consts::PI, 1e-300, -2.5e17, 5e-324] {
            let s = fmt_f64(x);
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), x.to_bits(), "{s}");
        }
        assert_eq!(fmt_f64(f64::NAN), "NaN");
        assert_eq!(fmt_f64(1.0), "1.0000000000000000e0");
    }
}
