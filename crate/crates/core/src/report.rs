//! Bit-stable JSON and CSV report serialization.
//!
//! Field order is fixed by each [`Record`] implementation. Reals are written
//! with 17 significant digits; positive infinity is the literal `inf` (a
//! JSON string, since JSON has no infinity literal).

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::exact::DistanceResult;
use crate::fairness::FairnessValue;

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Real(f64),
    Int(i64),
    UInt(u64),
    Bool(bool),
    Str(String),
    Null,
}

impl From<f64> for Value {
    fn from(v: f64) -> Self {
        Value::Real(v)
    }
}

impl From<usize> for Value {
    fn from(v: usize) -> Self {
        Value::Int(v as i64)
    }
}

impl From<u64> for Value {
    fn from(v: u64) -> Self {
        Value::UInt(v)
    }
}

impl From<&str> for Value {
    fn from(v: &str) -> Self {
        Value::Str(v.to_string())
    }
}

impl From<String> for Value {
    fn from(v: String) -> Self {
        Value::Str(v)
    }
}

impl From<bool> for Value {
    fn from(v: bool) -> Self {
        Value::Bool(v)
    }
}

impl From<FairnessValue> for Value {
    fn from(v: FairnessValue) -> Self {
        Value::Real(v.as_f64())
    }
}

impl<T: Into<Value>> From<Option<T>> for Value {
    fn from(v: Option<T>) -> Self {
        v.map_or(Value::Null, Into::into)
    }
}

/// A flat record with a fixed field order.
pub trait Record {
    fn fields(&self) -> Vec<(&'static str, Value)>;
}

impl Record for DistanceResult {
    fn fields(&self) -> Vec<(&'static str, Value)> {
        vec![
            ("value", self.value.into()),
            ("method", self.method.as_str().into()),
            ("label_source", self.label_source.as_str().into()),
            ("seed", self.params.map(|p| p.seed).into()),
            ("m1", self.params.map(|p| p.m1).into()),
            ("m2", self.params.map(|p| p.m2).into()),
            ("elapsed_ns", Value::Int(self.elapsed.as_nanos() as i64)),
        ]
    }
}

impl Record for Vec<(&'static str, Value)> {
    fn fields(&self) -> Vec<(&'static str, Value)> {
        self.clone()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Csv,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(ReportFormat::Json),
            "csv" => Ok(ReportFormat::Csv),
            other => Err(Error::InvalidArgument(format!(
                "unknown report format '{other}'"
            ))),
        }
    }
}

/// Real number with 17 significant digits, `%.17g` style: fixed notation
/// for decimal exponents in `[-5, 17)`, scientific otherwise.
pub fn format_real(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return if x.is_sign_negative() {
            "-0.0000000000000000".into()
        } else {
            "0.0000000000000000".into()
        };
    }
    let sci = format!("{x:.16e}");
    let exp: i32 = sci[sci.find('e').unwrap() + 1..].parse().unwrap();
    if (-5..17).contains(&exp) {
        format!("{:.*}", (16 - exp) as usize, x)
    } else {
        sci
    }
}

fn json_value(v: &Value) -> String {
    match v {
        Value::Real(x) if x.is_finite() => format_real(*x),
        Value::Real(x) => json_string(&format_real(*x)),
        Value::Int(i) => i.to_string(),
        Value::UInt(u) => u.to_string(),
        Value::Bool(b) => b.to_string(),
        Value::Str(s) => json_string(s),
        Value::Null => "null".into(),
    }
}

fn json_string(s: &str) -> String {
    serde_json::to_string(s).expect("string serialization cannot fail")
}

fn csv_value(v: &Value) -> String {
    match v {
        Value::Real(x) => format_real(*x),
        Value::Int(i) => i.to_string(),
        Value::UInt(u) => u.to_string(),
        Value::Bool(b) => b.to_string(),
        Value::Str(s) => s.clone(),
        Value::Null => String::new(),
    }
}

fn json_object(fields: &[(&'static str, Value)], indent: &str) -> String {
    let mut out = String::from("{\n");
    for (i, (k, v)) in fields.iter().enumerate() {
        let sep = if i + 1 < fields.len() { "," } else { "" };
        let _ = writeln!(out, "{indent}  {}: {}{sep}", json_string(k), json_value(v));
    }
    out.push_str(indent);
    out.push('}');
    out
}

/// One record renders as a JSON object, several as an array of objects.
/// CSV output is a header plus one row per record, with the header taken
/// from the first record.
pub fn render_report<R: Record>(records: &[R], format: ReportFormat) -> Result<String> {
    let rows: Vec<_> = records.iter().map(Record::fields).collect();
    match format {
        ReportFormat::Json => {
            let mut out = match rows.as_slice() {
                [single] => json_object(single, ""),
                _ => {
                    let body: Vec<String> = rows
                        .iter()
                        .map(|r| format!("  {}", json_object(r, "  ")))
                        .collect();
                    if body.is_empty() {
                        "[]".to_string()
                    } else {
                        format!("[\n{}\n]", body.join(",\n"))
                    }
                }
            };
            out.push('\n');
            Ok(out)
        }
        ReportFormat::Csv => {
            let mut w = csv::WriterBuilder::new()
                .terminator(csv::Terminator::Any(b'\n'))
                .from_writer(Vec::new());
            if let Some(first) = rows.first() {
                w.write_record(first.iter().map(|(k, _)| *k))?;
            }
            for r in &rows {
                w.write_record(r.iter().map(|(_, v)| csv_value(v)))?;
            }
            let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
            String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))
        }
    }
}

pub fn write_report<R: Record>(
    records: &[R],
    path: impl AsRef<Path>,
    format: ReportFormat,
) -> Result<()> {
    let text = render_report(records, format)?;
    std::fs::write(path.as_ref(), text)
        .map_err(|e| Error::Io(format!("{}: {e}", path.as_ref().display())))
}
