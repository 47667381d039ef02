//! JSON emission with 17 significant digits and a schema check for
//! `--validate`.

use std::io;

use orbit_locator::numfmt::format_g;
use orbit_locator::{Matrix, Vector};
use serde::Serialize;
use serde_json::ser::{CompactFormatter, Formatter};
use serde_json::{json, Value};

/// Compact formatting, except floats use `%.17g`. Non-finite floats never
/// reach the formatter; `serde_json` writes them as `null`.
struct Lossless;

impl Formatter for Lossless {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        writer.write_all(format_g(value, 17).as_bytes())
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        CompactFormatter.write_f32(writer, value)
    }
}

pub fn render(value: &Value) -> String {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, Lossless);
    value.serialize(&mut ser).expect("serializing a JSON value cannot fail");
    let mut s = String::from_utf8(out).expect("JSON output is UTF-8");
    s.push('\n');
    s
}

pub fn vector(v: &Vector) -> Value {
    json!(v.as_slice())
}

pub fn matrix(m: &Matrix) -> Value {
    json!(m.to_rows())
}

/// `f64::INFINITY` prints as `null`.
pub fn real(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        Value::Null
    }
}

fn required_keys(command: &str) -> &'static [&'static str] {
    match command {
        "distance" => &["command", "verdict", "levels", "cauchy_bounds", "tol", "stab_tol", "budget", "exact_distance"],
        "balldist" => &["command", "value", "lower", "coeffs", "point", "n", "tol", "solver_iters"],
        "project" => &["command", "P", "rank", "r", "trace", "seed"],
        "radius" => &["command", "r", "direction", "method", "tol", "certificate"],
        "decompose" => &["command", "outcome", "steps", "r", "y"],
        "omt" => &["command", "r", "direction", "method", "sigma_min", "tol"],
        _ => &[],
    }
}

/// Re-parses emitted JSON and checks the keys its command promises.
pub fn validate(text: &str) -> Result<(), String> {
    let value: Value = serde_json::from_str(text).map_err(|e| format!("output does not re-parse: {e}"))?;
    let obj = value.as_object().ok_or("output is not a JSON object")?;
    let command = obj
        .get("command")
        .and_then(Value::as_str)
        .ok_or("output has no command field")?;
    let keys = required_keys(command);
    if keys.is_empty() {
        return Err(format!("unknown command {command:?} in output"));
    }
    match keys.iter().find(|k| !obj.contains_key(**k)) {
        Some(k) => Err(format!("{command} output lacks field {k:?}")),
        None => Ok(()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip() {
        let xs = [0.1, 1.0 / 3.0, -2.5e-17, 1e300, 0.0];
        let text = render(&json!(xs));
        let back: Vec<f64> = serde_json::from_str(&text).unwrap();
        assert_eq!(back, xs);
        assert_eq!(render(&json!([0.1])), "[0.10000000000000001]\n");
    }

    #[test]
    fn infinity_is_null() {
        assert_eq!(render(&json!({"g": real(f64::INFINITY)})), "{\"g\":null}\n");
    }

    #[test]
    fn validation() {
        assert!(validate(r#"{"command":"radius","r":1,"direction":[1],"method":"axis","tol":1e-6,"certificate":{}}"#).is_ok());
        assert!(validate(r#"{"command":"radius","r":1}"#).is_err());
        assert!(validate("[1]").is_err());
        assert!(validate("{").is_err());
    }
}
