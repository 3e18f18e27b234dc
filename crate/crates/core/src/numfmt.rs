//! Fixed-precision number formatting for reports.

use serde_json::Value;

/// Significant digits kept in written reports.
pub const SIG_DIGITS: usize = 10;

/// Rounds to [`SIG_DIGITS`] significant digits. Non-finite values pass through.
pub fn round_sig(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{:.*e}", SIG_DIGITS - 1, x).parse().unwrap_or(x)
}

/// Text form of [`round_sig`]; non-finite values become `NA`.
pub fn fmt_sig(x: f64) -> String {
    if x.is_finite() {
        let r = round_sig(x);
        // Display of f64 is the shortest string that round-trips.
        format!("{r}")
    } else {
        "NA".to_string()
    }
}

/// Rounds every float in a JSON tree in place.
pub fn round_json(v: &mut Value) {
    match v {
        Value::Number(n) => {
            if n.is_f64() {
                if let Some(f) = n.as_f64() {
                    if let Some(r) = serde_json::Number::from_f64(round_sig(f)) {
                        *n = r;
                    }
                }
            }
        }
        Value::Array(a) => a.iter_mut().for_each(round_json),
        Value::Object(o) => o.values_mut().for_each(round_json),
        _ => {}
    }
}
