// SPDX-License-Identifier: Apache-2.0

//! Fixed-precision serialization so that reruns produce identical bytes.

use serde::Serialize;
use serde_json::Value;

/// `x` rounded to 12 significant digits.
pub fn sig12(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.11e}").parse().unwrap_or(x)
}

pub fn sig12_string(x: f64) -> String {
    if x.is_finite() {
        let r = sig12(x);
        serde_json::Number::from_f64(r)
            .map(|n| n.to_string())
            .unwrap_or_else(|| r.to_string())
    } else {
        x.to_string()
    }
}

/// Rounds every float in a JSON tree to 12 significant digits. Non-finite
/// numbers are already `null` in serde_json.
pub fn round_json(v: &mut Value) {
    match v {
        Value::Number(n) => {
            if n.is_f64() {
                if let Some(r) = n.as_f64().map(sig12).and_then(serde_json::Number::from_f64) {
                    *n = r;
                }
            }
        }
        Value::Array(a) => a.iter_mut().for_each(round_json),
        Value::Object(o) => o.iter_mut().for_each(|(_, x)| round_json(x)),
        _ => {}
    }
}

/// Pretty JSON with floats at 12 significant digits.
pub fn to_json<T: Serialize>(value: &T) -> serde_json::Result<String> {
    let mut v = serde_json::to_value(value)?;
    round_json(&mut v);
    serde_json::to_string_pretty(&v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rounding() {
        assert_eq!(sig12(1.0 / 3.0), 0.333333333333);
        assert_eq!(sig12(std::f64::consts::E * 1e5), 271828.182846);
        assert_eq!(sig12(0.0), 0.0);
        assert_eq!(sig12_string(9.0), "9.0");
        let s = to_json(&serde_json::json!({"a": [0.1 + 0.2, 1u32]})).unwrap();
        assert!(s.contains("0.3,") || s.contains("0.3\n"));
    }
}
