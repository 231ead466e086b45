//! Locale-free numeric text formatting shared by every file writer.

/// Formats `x` with 17 significant digits and a `.` decimal separator.
///
/// Magnitudes in `[1e-5, 1e17)` are written positionally, everything else in
/// scientific notation. 17 digits round-trip any `f64` exactly.
pub fn sig17(x: f64) -> String {
    if x.is_nan() {
        return "NaN".to_string();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".to_string() } else { "-inf".to_string() };
    }
    if x == 0.0 {
        return "0".to_string();
    }
    let sci = format!("{:.16e}", x);
    let exponent: i32 = sci
        .rsplit_once('e')
        .and_then(|(_, e)| e.parse().ok())
        .unwrap_or(0);
    if (-5..17).contains(&exponent) {
        let decimals = (16 - exponent) as usize;
        format!("{:.*}", decimals, x)
    } else {
        sci
    }
}
