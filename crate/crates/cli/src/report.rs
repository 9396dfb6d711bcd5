//! CSV and line-delimited JSON emission for homogeneous record lists.

use std::io::{self, Write};

use num_bigint::BigUint;
use num_rational::BigRational;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Int(i64),
    Uint(u64),
    Big(BigUint),
    Float(f64),
    Rational(BigRational),
    Bool(bool),
    Str(String),
    Null,
}

impl From<u64> for Value {
    fn from(v: u64) -> Self {
        Value::Uint(v)
    }
}

impl From<usize> for Value {
    fn from(v: usize) -> Self {
        Value::Uint(v as u64)
    }
}

impl From<i64> for Value {
    fn from(v: i64) -> Self {
        Value::Int(v)
    }
}

impl From<f64> for Value {
    fn from(v: f64) -> Self {
        Value::Float(v)
    }
}

impl From<bool> for Value {
    fn from(v: bool) -> Self {
        Value::Bool(v)
    }
}

impl From<BigRational> for Value {
    fn from(v: BigRational) -> Self {
        Value::Rational(v)
    }
}

impl From<BigUint> for Value {
    fn from(v: BigUint) -> Self {
        Value::Big(v)
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

impl<T: Into<Value>> From<Option<T>> for Value {
    fn from(v: Option<T>) -> Self {
        v.map_or(Value::Null, Into::into)
    }
}

/// Field values in the order of the report's columns.
pub type Record = Vec<Value>;

/// Formats a float with 17 significant digits, switching to scientific
/// notation outside `1e-5..1e17`.
pub fn fmt_float(x: f64) -> String {
    if x == 0.0 {
        return "0.0".to_string();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let exp = x.abs().log10().floor() as i32;
    if !(-5..17).contains(&exp) {
        return format!("{x:.16e}");
    }
    let digits = (16 - exp).max(1) as usize;
    format!("{x:.digits$}")
}

fn csv_cell(v: &Value) -> String {
    match v {
        Value::Int(i) => i.to_string(),
        Value::Uint(u) => u.to_string(),
        Value::Big(b) => b.to_string(),
        Value::Float(f) => fmt_float(*f),
        Value::Rational(q) => format!("{}/{}", q.numer(), q.denom()),
        Value::Bool(b) => b.to_string(),
        Value::Str(s) if s.contains([',', '"', '\n']) => format!("\"{}\"", s.replace('"', "\"\"")),
        Value::Str(s) => s.clone(),
        Value::Null => String::new(),
    }
}

fn json_value(v: &Value) -> String {
    match v {
        Value::Float(f) if !f.is_finite() => "null".to_string(),
        Value::Rational(q) => format!("\"{}/{}\"", q.numer(), q.denom()),
        Value::Str(s) => serde_json::to_string(s).expect("string serializes"),
        Value::Null => "null".to_string(),
        other => csv_cell(other),
    }
}

/// Writes `records` under `columns`. CSV always has a header row; JSON is
/// one object per record per line.
pub fn emit_report(out: &mut dyn Write, columns: &[&str], records: &[Record], format: Format) -> io::Result<()> {
    match format {
        Format::Csv => {
            writeln!(out, "{}", columns.join(","))?;
            for rec in records {
                let cells: Vec<String> = rec.iter().map(csv_cell).collect();
                writeln!(out, "{}", cells.join(","))?;
            }
        }
        Format::Json => {
            for rec in records {
                let fields: Vec<String> = columns
                    .iter()
                    .zip(rec)
                    .map(|(c, v)| format!("{}:{}", serde_json::to_string(c).expect("string serializes"), json_value(v)))
                    .collect();
                writeln!(out, "{{{}}}", fields.join(","))?;
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;

    fn emit(columns: &[&str], records: &[Record], format: Format) -> String {
        let mut buf = Vec::new();
        emit_report(&mut buf, columns, records, format).unwrap();
        String::from_utf8(buf).unwrap()
    }

    #[test]
    fn empty_csv_is_header_only() {
        let cols = ["subset_bitmask", "drift_num", "drift_den", "is_barrier"];
        assert_eq!(emit(&cols, &[], Format::Csv), "subset_bitmask,drift_num,drift_den,is_barrier\n");
        assert_eq!(emit(&cols, &[], Format::Json), "");
    }

    #[test]
    fn rationals_stay_exact() {
        let third = BigRational::new(BigInt::from(1), BigInt::from(3));
        let rec = vec![Value::from(third)];
        assert_eq!(emit(&["q"], std::slice::from_ref(&rec), Format::Csv), "q\n1/3\n");
        assert_eq!(emit(&["q"], &[rec], Format::Json), "{\"q\":\"1/3\"}\n");
    }

    #[test]
    fn floats_carry_seventeen_digits() {
        assert_eq!(fmt_float(2.0 / 3.0), "0.66666666666666663");
        assert_eq!(fmt_float(47.0), "47.000000000000000");
        assert_eq!(fmt_float(1.5e-7), "1.4999999999999999e-7");
        let back: f64 = fmt_float(0.1 + 0.2).parse().unwrap();
        assert_eq!(back, 0.1 + 0.2);
    }

    #[test]
    fn json_lines_parse() {
        let rec = vec![Value::from(1.25), Value::Null, Value::from("a\"b"), Value::from(true)];
        let text = emit(&["x", "y", "z", "w"], &[rec], Format::Json);
        let v: serde_json::Value = serde_json::from_str(text.trim()).unwrap();
        assert_eq!(v["x"], 1.25);
        assert!(v["y"].is_null());
        assert_eq!(v["z"], "a\"b");
        assert_eq!(v["w"], true);
    }

    #[test]
    fn csv_quotes_commas() {
        assert_eq!(emit(&["s"], &[vec![Value::from("a,b")]], Format::Csv), "s\n\"a,b\"\n");
    }
}
