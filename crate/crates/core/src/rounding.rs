//! Half-up rounding used by every rendered figure.

/// `round_half_up(100 * num / den)` computed exactly in integers.
pub fn percent_of(num: u64, den: u64) -> u64 {
    assert!(den > 0, "percent of an empty total");
    (200 * num + den) / (2 * den)
}

/// Rounds half up at `decimals` places. Values within 1e-9 of a tie are
/// treated as ties so that e.g. 0.425 renders as 0.43.
pub fn round_half_up(x: f64, decimals: i32) -> f64 {
    let scale = 10f64.powi(decimals);
    ((x * scale) + 0.5 + 1e-9).floor() / scale
}
