//! Shared text-output conventions for certificate, metrics and CSV files.

use std::io;

use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};

use crate::error::Result;

/// Formats a real with 17 significant digits in scientific notation, which
/// round-trips every `f64` exactly.
pub fn format_real(v: f64) -> String {
    format!("{v:.16e}")
}

/// Pretty-printing JSON formatter that writes every float with
/// [`format_real`].
struct FullPrecision<'a>(PrettyFormatter<'a>);

macro_rules! delegate {
    ($($name:ident($($arg:ident : $ty:ty),*);)*) => {
        $(
            fn $name<W: ?Sized + io::Write>(&mut self, writer: &mut W $(, $arg: $ty)*) -> io::Result<()> {
                self.0.$name(writer $(, $arg)*)
            }
        )*
    };
}

impl Formatter for FullPrecision<'_> {
    delegate! {
        begin_array();
        end_array();
        begin_array_value(first: bool);
        end_array_value();
        begin_object();
        end_object();
        begin_object_key(first: bool);
        begin_object_value();
        end_object_value();
    }

    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        writer.write_all(format_real(value).as_bytes())
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, f64::from(value))
    }
}

/// Serializes `value` as indented JSON with full-precision reals.
pub fn to_json_string<T: Serialize>(value: &T) -> Result<String> {
    let mut out = Vec::new();
    let mut ser =
        serde_json::Serializer::with_formatter(&mut out, FullPrecision(PrettyFormatter::new()));
    value.serialize(&mut ser)?;
    out.push(b'\n');
    Ok(String::from_utf8(out).expect("JSON output is UTF-8"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reals_keep_full_precision() {
        #[derive(Serialize)]
        struct S {
            a: f64,
            b: Vec<f64>,
            n: u32,
        }
        let text = to_json_string(&S {
            a: 0.001,
            b: vec![1.0 / 3.0, -543.0217],
            n: 7,
        })
        .unwrap();
        assert!(text.contains("1.0000000000000000e-3"), "{text}");
        assert!(text.contains("\"n\": 7"));
        let back: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(back["b"][0].as_f64().unwrap(), 1.0 / 3.0);
        assert_eq!(back["b"][1].as_f64().unwrap(), -543.0217);
    }
}
