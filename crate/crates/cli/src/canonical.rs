//! Canonical JSON emission.
//!
//! Scenario files and reports must serialize to the same bytes on every
//! run, on every platform, so that digests and golden files stay stable.
//! The rules are: compact separators, object keys in struct declaration
//! order, every float written as `{:.16e}` (17 significant digits, enough
//! to round-trip any f64), and a single trailing newline.

use std::io;

use serde::Serialize;

/// Serializes any float with full round-trip precision.
///
/// The format is plain scientific notation, e.g. `5.0000000000000000e-1`,
/// which is valid JSON and parses back to the identical bit pattern.
pub fn float_repr(value: f64) -> String {
    format!("{value:.16e}")
}

struct CanonicalFormatter;

impl serde_json::ser::Formatter for CanonicalFormatter {
    fn write_f64<W>(&mut self, writer: &mut W, value: f64) -> io::Result<()>
    where
        W: ?Sized + io::Write,
    {
        write!(writer, "{}", float_repr(value))
    }

    fn write_f32<W>(&mut self, writer: &mut W, value: f32) -> io::Result<()>
    where
        W: ?Sized + io::Write,
    {
        write!(writer, "{}", float_repr(f64::from(value)))
    }
}

/// Renders `value` as canonical JSON text ending in one newline.
pub fn to_canonical_json<T: Serialize>(value: &T) -> String {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, CanonicalFormatter);
    value
        .serialize(&mut ser)
        .expect("canonical serialization writes to memory and cannot fail");
    let mut text = String::from_utf8(out).expect("serde_json emits valid UTF-8");
    text.push('\n');
    text
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Serialize)]
    struct Probe {
        name: &'static str,
        half: f64,
        count: u64,
        pair: [f64; 2],
        missing: Option<f64>,
    }

    #[test]
    fn floats_use_seventeen_significant_digits() {
        assert_eq!(float_repr(0.5), "5.0000000000000000e-1");
        assert_eq!(float_repr(1.0), "1.0000000000000000e0");
        assert_eq!(float_repr(0.0), "0.0000000000000000e0");
    }

    #[test]
    fn float_repr_round_trips_awkward_values() {
        for &v in &[0.1, 1.0 / 3.0, 2e-13, 6.02214076e23, -0.7071067811865476] {
            let back: f64 = float_repr(v).parse().unwrap();
            assert_eq!(back.to_bits(), v.to_bits());
        }
    }

    #[test]
    fn objects_keep_declaration_order_and_end_with_newline() {
        let text = to_canonical_json(&Probe {
            name: "probe",
            half: 0.5,
            count: 3,
            pair: [1.0, -0.25],
            missing: None,
        });
        assert_eq!(
            text,
            "{\"name\":\"probe\",\"half\":5.0000000000000000e-1,\"count\":3,\
             \"pair\":[1.0000000000000000e0,-2.5000000000000000e-1],\"missing\":null}\n"
        );
    }

    #[test]
    fn canonical_text_parses_back_to_the_same_numbers() {
        let text = to_canonical_json(&vec![0.1, 0.2, 0.30000000000000004]);
        let back: Vec<f64> = serde_json::from_str(text.trim_end()).unwrap();
        assert_eq!(back[2].to_bits(), 0.30000000000000004f64.to_bits());
    }
}
