//! Warm-up length from the training-accuracy curve: the first epoch at which
//! the least-squares slope over the trailing window drops below a threshold.

pub const DEFAULT_WINDOW: usize = 5;
pub const DEFAULT_SLOPE: f64 = 0.002;

/// `curve[i]` is the training accuracy after epoch `i + 1`. Returns the
/// 1-based epoch ending the first window whose slope is below `threshold`
/// (per epoch), or `curve.len()` if the curve never plateaus.
pub fn detect_warmup(curve: &[f64], window: usize, threshold: f64) -> usize {
    if window < 2 {
        return curve.len().min(window.max(1));
    }
    (window..=curve.len())
        .find(|&end| slope(&curve[end - window..end]) < threshold)
        .unwrap_or(curve.len())
}

/// Least-squares slope of `ys` against `0, 1, 2, ...`.
fn slope(ys: &[f64]) -> f64 {
    let n = ys.len() as f64;
    let x_mean = (n - 1.0) / 2.0;
    let y_mean = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (i, &y) in ys.iter().enumerate() {
        let dx = i as f64 - x_mean;
        sxy += dx * (y - y_mean);
        sxx += dx * dx;
    }
    sxy / sxx
}
