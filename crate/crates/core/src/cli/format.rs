//! Number formatting and the fringe CSV format.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::fringe::{FringeCurve, FringePoint};

/// Significant digits for JSON numbers.
pub const JSON_DIGITS: usize = 12;
/// Significant digits for CSV numbers.
pub const CSV_DIGITS: usize = 9;

pub const CSV_HEADER: [&str; 5] =
    ["theta_rad", "coincidence_per_frame", "sigma", "singles_signal_hz", "singles_idler_hz"];

/// Round to `digits` significant digits (non-finite values pass through).
pub fn round_sig(x: f64, digits: usize) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{:.*e}", digits.saturating_sub(1), x).parse().unwrap_or(x)
}

fn round_value(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            if let Some(r) = n.as_f64().map(|x| round_sig(x, JSON_DIGITS)) {
                if let Some(num) = serde_json::Number::from_f64(r) {
                    *n = num;
                }
            }
        }
        Value::Array(items) => items.iter_mut().for_each(round_value),
        Value::Object(map) => map.values_mut().for_each(round_value),
        _ => {}
    }
}

/// Pretty JSON with every float rounded to [`JSON_DIGITS`] significant digits.
pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut v = serde_json::to_value(value).expect("summary types serialize");
    round_value(&mut v);
    let mut out = serde_json::to_string_pretty(&v).expect("json value serializes");
    out.push('\n');
    out
}

#[derive(Debug, Serialize, Deserialize)]
struct CsvRow {
    theta_rad: f64,
    coincidence_per_frame: f64,
    sigma: f64,
    singles_signal_hz: f64,
    singles_idler_hz: f64,
}

fn csv_number(x: f64) -> String {
    format!("{}", round_sig(x, CSV_DIGITS))
}

/// Render a curve as CSV with a header row and LF line endings.
pub fn write_csv(curve: &FringeCurve) -> String {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(CSV_HEADER).expect("in-memory write");
    for p in curve.points() {
        w.write_record([
            csv_number(p.theta),
            csv_number(p.coincidence_per_frame),
            csv_number(p.sigma),
            csv_number(p.singles_signal_hz),
            csv_number(p.singles_idler_hz),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii output")
}

/// Parse CSV produced by [`write_csv`].
pub fn parse_csv(text: &str, metadata: &str) -> Result<FringeCurve> {
    let mut r = csv::ReaderBuilder::new().from_reader(text.as_bytes());
    let header = r.headers().map_err(|e| Error::Config(format!("csv header: {e}")))?;
    if header.iter().ne(CSV_HEADER) {
        return Err(Error::Config(format!("unexpected csv header: {header:?}")));
    }
    let points = r
        .deserialize::<CsvRow>()
        .map(|row| {
            let row = row.map_err(|e| Error::Config(format!("csv row: {e}")))?;
            Ok(FringePoint {
                theta: row.theta_rad,
                coincidence_per_frame: row.coincidence_per_frame,
                sigma: row.sigma,
                singles_signal_hz: row.singles_signal_hz,
                singles_idler_hz: row.singles_idler_hz,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    FringeCurve::new(points, metadata)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rounding() {
        assert_eq!(round_sig(0.123456789012345, 12), 0.123456789012);
        assert_eq!(round_sig(1.36661553e-7, 3), 1.37e-7);
        assert_eq!(round_sig(0.0, 9), 0.0);
        assert_eq!(round_sig(-2.5e10, 2), -2.5e10);
    }

    #[test]
    fn json_floats_are_rounded() {
        #[derive(Serialize)]
        struct S {
            v: f64,
            n: u64,
        }
        let j = to_json(&S { v: std::f64::consts::PI, n: 3 });
        assert!(j.contains("3.14159265359"), "{j}");
        assert!(j.contains("\"n\": 3"));
    }

    #[test]
    fn bad_header_is_rejected() {
        assert!(parse_csv("a,b,c,d,e\n1,2,3,4,5\n", "x").is_err());
    }
}
