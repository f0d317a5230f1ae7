//! Fixed text renderings shared by every exported file.

/// Real number with 17 significant digits in scientific notation.
pub fn fmt_real(v: f64) -> String {
    format!("{v:.16e}")
}

/// `num/den` truncated (not rounded) to four decimal places, e.g.
/// `600/2048 → "0.2929"`. Computed in integer arithmetic.
pub fn ratio_4dp(num: usize, den: usize) -> String {
    assert!(den > 0, "ratio with zero denominator");
    let scaled = (num as u128 * 10_000) / den as u128;
    format!("{}.{:04}", scaled / 10_000, scaled % 10_000)
}
