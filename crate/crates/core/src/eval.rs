//! Metric computation and scheme comparison: per-slot angle errors,
//! achievable-rate series, outage-probability curves, and summary tables.

use crate::channel::{achievable_rate, snr, ArrayConfig, LinkBudget};
use crate::error::{Error, Result};
use crate::num::Real;

/// Default number of points in an outage threshold grid.
pub const DEFAULT_THRESHOLD_POINTS: usize = 64;

/// Per-slot metrics of one scheme on one scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct RunMetrics<T> {
    pub scheme_id: String,
    pub abs_err: Vec<T>,
    pub rel_err: Vec<T>,
    pub rates: Vec<T>,
    pub n_tx_mm: usize,
    pub n_rx_mm: usize,
    pub seed: u64,
}

/// Empirical outage probability over a threshold grid.
#[derive(Debug, Clone, PartialEq)]
pub struct OutageCurve<T> {
    pub thresholds: Vec<T>,
    pub probabilities: Vec<T>,
}

/// One row of a comparison report.
#[derive(Debug, Clone, PartialEq)]
pub struct SchemeSummary<T> {
    pub scheme_id: String,
    pub mean_abs_err: T,
    pub p95_abs_err: T,
    pub mean_rate: T,
    pub outage: OutageCurve<T>,
}

/// Elementwise absolute and relative angle errors.
pub fn angle_error_series<T: Real>(pred: &[T], truth: &[T]) -> Result<(Vec<T>, Vec<T>)> {
    if pred.len() != truth.len() || pred.is_empty() {
        return Err(Error::DimensionMismatch(format!(
            "angle series need equal nonempty lengths, got {} and {}",
            pred.len(),
            truth.len()
        )));
    }
    if truth.iter().any(|t| *t == T::zero()) {
        return Err(Error::InvalidArgument("true angles must be nonzero".into()));
    }
    let abs: Vec<T> = pred.iter().zip(truth.iter()).map(|(p, t)| (*p - *t).abs()).collect();
    let rel: Vec<T> = abs.iter().zip(truth.iter()).map(|(a, t)| *a / t.abs()).collect();
    Ok((abs, rel))
}

/// Per-slot achievable rate of the beamformed link when the scheme steers
/// toward its predicted angles; `truth` carries the true (angle, distance).
pub fn rate_series<T: Real>(
    pred: &[T],
    truth: &[(T, T)],
    budget: &LinkBudget<T>,
    cfg: &ArrayConfig<T>,
) -> Result<Vec<T>> {
    if pred.len() != truth.len() {
        return Err(Error::DimensionMismatch(format!(
            "rate series need equal lengths, got {} and {}",
            pred.len(),
            truth.len()
        )));
    }
    pred.iter()
        .zip(truth.iter())
        .map(|(p, (theta, d))| achievable_rate(snr(*theta, *p, budget, cfg, *d)?))
        .collect()
}

/// Empirical outage curve: `P(R_T) = 1 - #{slots with rate >= R_T} / N`.
pub fn outage_curve<T: Real>(rates: &[T], thresholds: &[T]) -> Result<OutageCurve<T>> {
    if rates.is_empty() {
        return Err(Error::InvalidArgument("outage needs at least one rate".into()));
    }
    let n = T::cast(rates.len() as f64);
    let probabilities = thresholds
        .iter()
        .map(|rt| {
            let met = rates.iter().filter(|r| **r >= *rt).count();
            T::one() - T::cast(met as f64) / n
        })
        .collect();
    Ok(OutageCurve { thresholds: thresholds.to_vec(), probabilities })
}

/// Uniform threshold grid over `[0, max_rate]`.
pub fn default_thresholds<T: Real>(max_rate: T, points: usize) -> Vec<T> {
    let n = points.max(2);
    (0..n)
        .map(|i| max_rate * T::cast(i as f64) / T::cast((n - 1) as f64))
        .collect()
}

fn percentile<T: Real>(sorted: &[T], q: f64) -> T {
    let n = sorted.len();
    let idx = ((q * n as f64).ceil() as usize).clamp(1, n) - 1;
    sorted[idx]
}

/// Aggregate runs into one summary row per scheme, rows sorted by scheme
/// id. All runs must share the slot count; the outage grid is shared and
/// spans the largest observed rate.
pub fn compare_schemes<T: Real>(runs: &[RunMetrics<T>]) -> Result<Vec<SchemeSummary<T>>> {
    if runs.is_empty() {
        return Err(Error::InvalidArgument("comparison needs at least one run".into()));
    }
    let slots = runs[0].abs_err.len();
    if runs.iter().any(|r| r.abs_err.len() != slots || r.rates.len() != slots) {
        return Err(Error::DimensionMismatch(
            "all runs must share the same slot count".into(),
        ));
    }
    let mut max_rate = T::zero();
    for r in runs {
        for v in &r.rates {
            max_rate = max_rate.max(*v);
        }
    }
    let grid = default_thresholds(max_rate, DEFAULT_THRESHOLD_POINTS);

    let mut rows: Vec<SchemeSummary<T>> = runs
        .iter()
        .map(|r| {
            let n = T::cast(slots as f64);
            let mean_abs = r.abs_err.iter().copied().sum::<T>() / n;
            let mut sorted = r.abs_err.clone();
            sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let mean_rate = r.rates.iter().copied().sum::<T>() / n;
            Ok(SchemeSummary {
                scheme_id: r.scheme_id.clone(),
                mean_abs_err: mean_abs,
                p95_abs_err: percentile(&sorted, 0.95),
                mean_rate,
                outage: outage_curve(&r.rates, &grid)?,
            })
        })
        .collect::<Result<_>>()?;
    rows.sort_by(|a, b| a.scheme_id.cmp(&b.scheme_id));
    Ok(rows)
}
