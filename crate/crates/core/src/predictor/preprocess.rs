//! Per-frame input normalization.

use crate::linalg::Mat;
use crate::num::{sample_standard_normal, Real};
use rand::Rng;

/// Z-score normalization `(x - mean) / max(std, eps)` over the whole frame
/// (single channel). A constant frame maps to all zeros thanks to the
/// epsilon floor.
pub fn zscore_normalize<T: Real>(grid: &Mat<T>) -> Mat<T> {
    let mean = grid.mean();
    let n = T::cast(grid.len() as f64);
    let var = grid.iter().map(|&v| (v - mean) * (v - mean)).sum::<T>() / n;
    let std = var.sqrt().max(T::cast(1e-8));
    grid.map(|v| (v - mean) / std)
}

/// Depth preprocessing: add elementwise Gaussian noise of variance
/// `noise_var`, then min-max normalize into [0, 1]. A degenerate frame
/// (max equals min) maps to all zeros.
pub fn minmax_normalize_depth<T: Real, R: Rng + ?Sized>(
    depth: &Mat<T>,
    noise_var: T,
    rng: &mut R,
) -> Mat<T> {
    let sigma = noise_var.max(T::zero()).sqrt();
    let noisy = depth.map(|v| v + sigma * sample_standard_normal::<T, _>(rng));
    let lo = noisy.min_value();
    let hi = noisy.max_value();
    if hi <= lo {
        return Mat::zeros(depth.rows(), depth.cols());
    }
    let span = hi - lo;
    noisy.map(|v| (v - lo) / span)
}
