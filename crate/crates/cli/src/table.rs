//! Tabular output: CSV (comma separated, 17 significant digits, `inf`
//! token for saturated values, `#` preamble lines) and JSON.

use redem::ExtReal;
use serde_json::{json, Value};

use crate::error::{CliError, Result};

pub const TOOL: &str = "redem";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Formats a real like C's `%.17g`.
pub fn fmt_real(v: f64) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return "0".into();
    }
    let sci = format!("{v:.16e}");
    let (mant, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    let (sign, mant) = match mant.strip_prefix('-') {
        Some(rest) => ("-", rest),
        None => ("", mant),
    };
    if !(-5..17).contains(&exp) {
        let mant = trim_fraction(mant);
        return format!("{sign}{mant}e{exp}");
    }
    let digits: String = mant.chars().filter(|c| *c != '.').collect();
    let body = if exp >= 0 {
        let split = exp as usize + 1;
        format!("{}.{}", &digits[..split], &digits[split..])
    } else {
        format!("0.{}{}", "0".repeat((-exp - 1) as usize), digits)
    };
    format!("{sign}{}", trim_fraction(&body))
}

fn trim_fraction(s: &str) -> String {
    if !s.contains('.') {
        return s.to_string();
    }
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

/// Parses a value written by [`fmt_real`] or an `inf` cell back into a rate value.
pub fn parse_ext(s: &str) -> Option<ExtReal> {
    match s.trim() {
        "inf" => Some(ExtReal::PosInf),
        other => other.parse::<f64>().ok().map(ExtReal::Finite),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Real(f64),
    Ext(ExtReal),
    Int(u64),
    Bool(bool),
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Real(v) => fmt_real(*v),
            Cell::Ext(ExtReal::Finite(v)) => fmt_real(*v),
            Cell::Ext(ExtReal::PosInf) => "inf".into(),
            Cell::Int(v) => v.to_string(),
            Cell::Bool(b) => b.to_string(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Real(v) | Cell::Ext(ExtReal::Finite(v)) => real_json(*v),
            Cell::Ext(ExtReal::PosInf) => json!("inf"),
            Cell::Int(v) => json!(v),
            Cell::Bool(b) => json!(b),
        }
    }
}

/// JSON has no infinities; they travel as the strings `"inf"`/`"-inf"`/`"nan"`.
pub fn real_json(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else {
        json!(fmt_real(v))
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Real(v)
    }
}

impl From<ExtReal> for Cell {
    fn from(v: ExtReal) -> Self {
        Cell::Ext(v)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v)
    }
}

/// A result table plus the provenance embedded in every output.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub command: String,
    /// Resolved configuration as TOML text.
    pub config: String,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(command: &str, config: String, columns: Vec<&'static str>) -> Self {
        Table {
            command: command.into(),
            config,
            columns,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    /// `#`-prefixed provenance lines shared by every CSV output.
    pub fn preamble(command: &str, config: &str) -> String {
        let mut out = format!("# {TOOL} {VERSION}\n# command: {command}\n# config:\n");
        for line in config.lines() {
            out.push_str("#   ");
            out.push_str(line);
            out.push('\n');
        }
        out
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut buf = Self::preamble(&self.command, &self.config).into_bytes();
        {
            let mut w = csv::Writer::from_writer(&mut buf);
            let fail = |e: csv::Error| CliError::Invalid(format!("csv encoding failed: {e}"));
            w.write_record(&self.columns).map_err(fail)?;
            for row in &self.rows {
                w.write_record(row.iter().map(Cell::csv)).map_err(fail)?;
            }
            w.flush().map_err(|e| CliError::io("<csv buffer>", e))?;
        }
        Ok(String::from_utf8(buf).expect("csv output is utf-8"))
    }

    pub fn to_json(&self) -> String {
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|r| Value::Array(r.iter().map(Cell::json).collect()))
            .collect();
        let doc = json!({
            "tool": TOOL,
            "version": VERSION,
            "command": self.command,
            "config": self.config,
            "columns": self.columns,
            "rows": rows,
        });
        let mut s = serde_json::to_string_pretty(&doc).expect("json encoding");
        s.push('\n');
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_significant_digits() {
        assert_eq!(fmt_real(0.0), "0");
        assert_eq!(fmt_real(0.5), "0.5");
        assert_eq!(fmt_real(-1.5), "-1.5");
        assert_eq!(fmt_real(2.0), "2");
        assert_eq!(fmt_real(0.1), "0.10000000000000001");
        assert_eq!(fmt_real(1e-8), "1e-8");
        assert_eq!(fmt_real(123456.0), "123456");
        assert_eq!(fmt_real(1e20), "1e20");
        assert_eq!(fmt_real(f64::INFINITY), "inf");
        for v in [std::f64::consts::PI, -2.0f64.sqrt() * 1e-7, 6.02e23, 0.4944271909999159] {
            assert_eq!(fmt_real(v).parse::<f64>().unwrap(), v);
        }
    }

    #[test]
    fn inf_token_round_trips() {
        let mut t = Table::new("rates", "a = 1\n".into(), vec!["x", "nu"]);
        t.push(vec![Cell::Real(1.5), Cell::Ext(ExtReal::PosInf)]);
        t.push(vec![Cell::Real(0.25), Cell::Ext(ExtReal::Finite(0.125))]);
        let csv_text = t.to_csv().unwrap();
        let mut r = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .from_reader(csv_text.as_bytes());
        let rows: Vec<csv::StringRecord> = r.records().map(|x| x.unwrap()).collect();
        assert_eq!(parse_ext(&rows[0][1]), Some(ExtReal::PosInf));
        assert_eq!(parse_ext(&rows[1][1]), Some(ExtReal::Finite(0.125)));
        let j: Value = serde_json::from_str(&t.to_json()).unwrap();
        assert_eq!(j["rows"][0][1], json!("inf"));
    }
}
