//! Number formatting shared by every CSV writer.

/// Formats `x` with 9 significant digits.
///
/// Plain decimal notation is used for magnitudes in `[1e-4, 1e9)`, scientific
/// notation otherwise. Trailing zeros are kept so columns line up.
pub fn sig9(x: f64) -> String {
    if x == 0.0 {
        return "0.00000000".to_string();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let magnitude = x.abs();
    if (1e-4..1e9).contains(&magnitude) {
        // exponent after rounding to 9 digits, so 9.999999999 → 10.0000000
        let rounded: f64 = format!("{x:.8e}").parse().unwrap_or(x);
        let exponent = rounded.abs().log10().floor() as i32;
        let decimals = (8 - exponent).max(0) as usize;
        format!("{x:.decimals$}")
    } else {
        format!("{x:.8e}")
    }
}
