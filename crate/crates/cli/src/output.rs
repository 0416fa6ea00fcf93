//! Report serialization: JSON with fixed 17-significant-digit floats, or a
//! flat CSV with one metric per row.

use std::io;

use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};
use serde_json::Value;

use crate::report::RunReport;

/// Pretty JSON formatter that prints every float as `d.dddddddddddddddde±x`.
struct FixedFloats<'a>(PrettyFormatter<'a>);

impl Formatter for FixedFloats<'_> {
    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        write!(w, "{}", format_float(value))
    }

    fn begin_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }
    fn end_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }
    fn begin_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }
    fn end_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }
    fn begin_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }
    fn end_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }
    fn begin_object_key<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }
    fn begin_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }
    fn end_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

pub fn format_float(value: f64) -> String {
    format!("{value:.16e}")
}

pub fn to_json(report: &RunReport) -> serde_json::Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, FixedFloats(PrettyFormatter::new()));
    report.serialize(&mut ser)?;
    buf.push(b'\n');
    Ok(String::from_utf8(buf).expect("serde_json writes UTF-8"))
}

/// Rows `metric,value,tolerance,pass`. Checks carry their tolerance and
/// outcome; every other leaf of the report leaves those columns empty.
pub fn to_csv(report: &RunReport) -> Result<String, Box<dyn std::error::Error>> {
    let value = serde_json::to_value(report)?;
    let mut out = csv::Writer::from_writer(Vec::new());
    out.write_record(["metric", "value", "tolerance", "pass"])?;
    let mut rows = Vec::new();
    if let Value::Object(map) = &value {
        for (key, v) in map.iter().filter(|(k, _)| k.as_str() != "checks") {
            flatten(key, v, &mut rows);
        }
    }
    for (name, v) in rows {
        out.write_record([name.as_str(), v.as_str(), "", ""])?;
    }
    for c in &report.checks {
        out.write_record([
            format!("check.{}", c.name),
            format_float(c.value),
            format_float(c.tolerance),
            if c.pass { "pass" } else { "fail" }.to_string(),
        ])?;
    }
    Ok(String::from_utf8(out.into_inner()?)?)
}

fn flatten(prefix: &str, v: &Value, rows: &mut Vec<(String, String)>) {
    match v {
        Value::Object(map) => {
            for (k, x) in map {
                flatten(&format!("{prefix}.{k}"), x, rows);
            }
        }
        Value::Array(items) => {
            for (i, x) in items.iter().enumerate() {
                flatten(&format!("{prefix}.{i}"), x, rows);
            }
        }
        Value::Null => rows.push((prefix.to_string(), String::new())),
        Value::Bool(b) => rows.push((prefix.to_string(), b.to_string())),
        Value::String(s) => rows.push((prefix.to_string(), s.clone())),
        Value::Number(n) => {
            let text = match n.as_f64() {
                Some(f) if !n.is_u64() && !n.is_i64() => format_float(f),
                _ => n.to_string(),
            };
            rows.push((prefix.to_string(), text));
        }
    }
}
