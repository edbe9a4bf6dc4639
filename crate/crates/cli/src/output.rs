//! Deterministic serialization: JSON and CSV with floats printed to a
//! fixed 17 significant digits, so identical configurations produce
//! byte-identical output.

use std::io;

use num_complex::Complex64;
use serde_json::ser::Formatter;
use serde_json::Value;

/// Fixed float formatting: 17 significant digits in scientific notation.
pub fn fmt_f64(x: f64) -> String {
    if x == 0.0 {
        // normalize the sign of zero so -0.0 cannot leak into output
        return "0.0e0".to_string();
    }
    format!("{x:.16e}")
}

/// JSON formatter that prints every float through [`fmt_f64`].
struct FixedFloats;

impl Formatter for FixedFloats {
    fn write_f64<W>(&mut self, writer: &mut W, value: f64) -> io::Result<()>
    where
        W: ?Sized + io::Write,
    {
        writer.write_all(fmt_f64(value).as_bytes())
    }

    fn write_f32<W>(&mut self, writer: &mut W, value: f32) -> io::Result<()>
    where
        W: ?Sized + io::Write,
    {
        self.write_f64(writer, value as f64)
    }
}

/// Serialize a JSON value compactly with fixed float formatting.
pub fn to_json_string(value: &Value) -> String {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, FixedFloats);
    serde::Serialize::serialize(value, &mut ser).expect("in-memory serialization");
    String::from_utf8(out).expect("serializer emits UTF-8")
}

/// `[re, im]` pair for a complex scalar.
pub fn complex_json(z: Complex64) -> Value {
    Value::Array(vec![json_f64(z.re), json_f64(z.im)])
}

pub fn json_f64(x: f64) -> Value {
    // non-finite values cannot be represented in JSON numbers; encode as
    // strings so reports stay parseable
    match serde_json::Number::from_f64(x) {
        Some(n) => Value::Number(n),
        None => Value::String(format!("{x}")),
    }
}

/// A CSV table with `#`-prefixed comment header lines; complex columns
/// are split into re/im pairs by the caller.
pub struct CsvTable {
    pub comments: Vec<String>,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn render(&self) -> String {
        let mut out = String::new();
        for line in &self.comments {
            out.push_str("# ");
            out.push_str(line);
            out.push('\n');
        }
        out.push_str(&self.header.join(","));
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn floats_print_seventeen_digits() {
        assert_eq!(fmt_f64(1.5), "1.5000000000000000e0");
        assert_eq!(fmt_f64(-0.0), "0.0e0");
        let s = to_json_string(&json!({ "x": 0.1 }));
        assert_eq!(s, "{\"x\":1.0000000000000001e-1}");
    }

    #[test]
    fn csv_renders_comments_first() {
        let t = CsvTable {
            comments: vec!["config: {}".into()],
            header: vec!["a".into(), "b".into()],
            rows: vec![vec!["1".into(), "2".into()]],
        };
        assert_eq!(t.render(), "# config: {}\na,b\n1,2\n");
    }
}
