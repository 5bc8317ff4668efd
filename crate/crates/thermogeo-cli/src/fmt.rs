//! Deterministic text output: C-style `%.12e` floats, comma-separated CSV
//! with LF newlines, and a hand-rolled JSON writer so float formatting and
//! field order are fixed byte-for-byte.

use std::io::Write;
use std::path::Path;

/// `%.12e`: sign, one leading digit, 12 fractional digits, two-digit
/// signed exponent.
pub fn e12(x: f64) -> String {
    let s = format!("{x:.12e}");
    let (mant, exp) = s.split_once('e').expect("{:e} always contains an exponent");
    let e: i32 = exp.parse().expect("exponent is an integer");
    format!("{mant}e{}{:02}", if e < 0 { '-' } else { '+' }, e.abs())
}

/// One header line, then one row per record, all floats in `%.12e`.
pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<f64>]) -> std::io::Result<()> {
    let mut buf = String::new();
    buf.push_str(&header.join(","));
    buf.push('\n');
    for row in rows {
        let cells: Vec<String> = row.iter().map(|v| e12(*v)).collect();
        buf.push_str(&cells.join(","));
        buf.push('\n');
    }
    let mut f = std::fs::File::create(path)?;
    f.write_all(buf.as_bytes())
}

fn json_str(s: &str) -> String {
    serde_json::to_string(s).expect("strings always serialize")
}

/// Minimal ordered JSON document builder. Keys are emitted in insertion
/// order; floats in `%.12e` (a valid JSON number form).
#[derive(Default)]
pub struct JsonObj {
    parts: Vec<String>,
}

impl JsonObj {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn field_str(&mut self, key: &str, value: &str) -> &mut Self {
        self.parts.push(format!("{}: {}", json_str(key), json_str(value)));
        self
    }

    pub fn field_f64(&mut self, key: &str, value: f64) -> &mut Self {
        self.parts.push(format!("{}: {}", json_str(key), e12(value)));
        self
    }

    pub fn field_raw(&mut self, key: &str, raw_json: &str) -> &mut Self {
        self.parts.push(format!("{}: {raw_json}", json_str(key)));
        self
    }

    pub fn field_obj(&mut self, key: &str, obj: &JsonObj) -> &mut Self {
        let rendered = obj.render();
        self.field_raw(key, &rendered)
    }

    pub fn field_str_list(&mut self, key: &str, items: &[String]) -> &mut Self {
        let body: Vec<String> = items.iter().map(|s| json_str(s)).collect();
        self.field_raw(key, &format!("[{}]", body.join(", ")))
    }

    pub fn render(&self) -> String {
        format!("{{{}}}", self.parts.join(", "))
    }

    /// Render with a trailing newline and write to `path`.
    pub fn write(&self, path: &Path) -> std::io::Result<()> {
        std::fs::write(path, format!("{}\n", self.render()))
    }
}
