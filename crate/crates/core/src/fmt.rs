//! Byte-stable number formatting for exported artifacts.

/// Seventeen significant digits, scientific notation. Round-trips every `f64`.
pub fn float(x: f64) -> String {
    format!("{x:.16e}")
}
