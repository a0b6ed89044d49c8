//! Plain CSV helpers shared by every exported table: UTF-8, `\n` line
//! endings, floats with 17 significant digits.

use std::io::{self, Write};

/// 17 significant digits in scientific notation; round-trips every `f64`.
pub fn format_f64(x: f64) -> String {
    if x.is_nan() {
        "NaN".to_owned()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.to_owned()
    } else {
        format!("{x:.16e}")
    }
}

pub fn parse_f64(field: &str) -> Option<f64> {
    match field.trim() {
        "NaN" => Some(f64::NAN),
        "inf" => Some(f64::INFINITY),
        "-inf" => Some(f64::NEG_INFINITY),
        s => s.parse().ok(),
    }
}

pub fn write_row<W: Write + ?Sized, S: AsRef<str>>(out: &mut W, fields: &[S]) -> io::Result<()> {
    let mut first = true;
    for f in fields {
        if !first {
            out.write_all(b",")?;
        }
        out.write_all(f.as_ref().as_bytes())?;
        first = false;
    }
    out.write_all(b"\n")
}
