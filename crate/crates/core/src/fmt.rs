//! Fixed-precision float formatting for artifact files.

/// Format with 17 significant digits (scientific notation), enough to
/// round-trip any `f64` exactly through text.
pub fn format_f64(x: f64) -> String {
    format!("{x:.16e}")
}
