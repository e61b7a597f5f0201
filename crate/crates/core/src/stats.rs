//! Binomial confidence intervals for Monte Carlo estimates.

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

/// Wilson score interval for `successes` out of `trials` at normal quantile `z`.
pub fn wilson_interval(successes: u64, trials: u64, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    // The exact endpoints at p = 0 and p = 1 are 0 and 1; rounding can miss them.
    let lo = if successes == 0 { 0.0 } else { (center - half).clamp(0.0, p) };
    let hi = if successes >= trials { 1.0 } else { (center + half).clamp(p, 1.0) };
    (lo, hi)
}

/// 95% Wilson interval.
pub fn wilson95(successes: u64, trials: u64) -> (f64, f64) {
    wilson_interval(successes, trials, Z95)
}

/// Half-width of the 95% Wilson interval.
pub fn half_width95(successes: u64, trials: u64) -> f64 {
    let (lo, hi) = wilson95(successes, trials);
    (hi - lo) / 2.0
}
