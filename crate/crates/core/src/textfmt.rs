//! Reproducible decimal formatting for text outputs.

/// Formats `x` with 9 significant digits in plain decimal notation.
/// Non-finite values print as `NaN`, `inf` or `-inf`.
pub fn sig9(x: f64) -> String {
    if x.is_nan() {
        return "NaN".to_string();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf" } else { "-inf" }.to_string();
    }
    if x == 0.0 {
        return "0".to_string();
    }
    // Round through scientific notation first so the exponent is the one of
    // the rounded value (e.g. 9.999999999 -> 10.0000000).
    let sci = format!("{:.8e}", x);
    let exp: i32 = sci.split('e').nth(1).and_then(|e| e.parse().ok()).unwrap_or(0);
    let decimals = (8 - exp).max(0) as usize;
    let rounded: f64 = sci.parse().unwrap_or(x);
    format!("{:.*}", decimals, rounded)
}
