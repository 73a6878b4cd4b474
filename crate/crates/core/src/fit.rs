//! Weighted least-squares line fitting for log-log slope estimates.

use alloc::vec::Vec;
#[allow(unused_imports)] // f64 float methods come from the trait in no_std builds
use num_traits::Float;

/// Fitted line `y = intercept + slope·x` with standard errors from the
/// weighted normal equations.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_se: f64,
    pub intercept_se: f64,
}

/// Weighted least squares with per-point weights (typically `1/se^2`).
///
/// Panics if fewer than two points or the design is degenerate.
pub fn weighted_line_fit(x: &[f64], y: &[f64], w: &[f64]) -> LineFit {
    assert!(x.len() == y.len() && x.len() == w.len());
    assert!(x.len() >= 2, "need at least two points to fit a line");
    let sw: f64 = w.iter().sum();
    let mx: f64 = x.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() / sw;
    let my: f64 = y.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() / sw;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for i in 0..x.len() {
        sxx += w[i] * (x[i] - mx) * (x[i] - mx);
        sxy += w[i] * (x[i] - mx) * (y[i] - my);
    }
    assert!(sxx > 0.0, "degenerate abscissae");
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    // Errors from the weight matrix taken as the inverse variance.
    let slope_se = (1.0 / sxx).sqrt();
    let intercept_se = (1.0 / sw + mx * mx / sxx).sqrt();
    LineFit {
        slope,
        intercept,
        slope_se,
        intercept_se,
    }
}

/// Unweighted fit.
pub fn line_fit(x: &[f64], y: &[f64]) -> LineFit {
    let w: Vec<f64> = alloc::vec![1.0; x.len()];
    weighted_line_fit(x, y, &w)
}

/// Sample mean and standard error of the mean.
pub fn mean_se(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    assert!(n >= 2);
    let mean = values.iter().sum::<f64>() / n as f64;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}
