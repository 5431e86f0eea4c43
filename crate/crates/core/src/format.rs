//! Round-trip-exact float formatting shared by every CSV and JSON writer.

/// Scientific notation with 17 significant digits, which parses back to
/// the identical `f64`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}
