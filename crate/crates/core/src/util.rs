//! Small shared helpers.

/// Formats a float with 17 significant digits, enough for a lossless
/// f64 round trip through text.
pub(crate) fn fmt_f64(x: f64) -> String {
    format!("{:.16e}", x)
}
