//! Beamspace preprocessing of raw CSI.
//!
//! Projects the sub-6 GHz CSI matrix onto a fixed angular dictionary,
//! yielding the per-beam rate averaged across subcarriers, then keeps only
//! the top-k beams (all others forced to zero). The surviving profile is
//! the wireless input of the fusion network; the top-k-versus-all
//! proportion quantifies how much energy the kept beams carry.

use crate::channel::{steering_vector, Csi};
use crate::error::{Error, Result};
use crate::num::Real;
use num_complex::Complex;

/// Default dictionary size.
pub const DEFAULT_DICTIONARY_SIZE: usize = 64;
/// Default number of beams kept by the zero-forcing step.
pub const DEFAULT_TOP_K: usize = 8;
/// Default SNR for the per-beam rate map, dB.
pub const DEFAULT_RHO_DB: f64 = 15.0;

/// Fixed codebook of steering vectors, uniform in cos(angle).
#[derive(Debug, Clone)]
pub struct BeamDictionary<T> {
    pub vectors: Vec<Vec<Complex<T>>>,
    pub angles: Vec<T>,
}

impl<T: Real> BeamDictionary<T> {
    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    /// Index of the beam whose cos(angle) is closest to cos(theta).
    pub fn nearest_beam(&self, theta: T) -> usize {
        let c = theta.cos();
        let mut best = 0;
        let mut best_d = T::infinity();
        for (i, a) in self.angles.iter().enumerate() {
            let d = (a.cos() - c).abs();
            if d < best_d {
                best_d = d;
                best = i;
            }
        }
        best
    }
}

/// Per-beam average achievable rate, bits/s/Hz.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamEnergy<T> {
    pub values: Vec<T>,
}

impl<T: Real> BeamEnergy<T> {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, v) in self.values.iter().enumerate() {
            if *v > self.values[best] {
                best = i;
            }
        }
        best
    }
}

/// Build a `b`-beam dictionary for an `n`-antenna array.
///
/// Beam `i` points where `cos(angle) = -1 + (2 i + 1) / b`, a uniform grid
/// over `[-1 + 1/b, 1 - 1/b]`; uniform spacing in beamspace gives the beams
/// equal widths.
pub fn build_dictionary<T: Real>(b: usize, n: usize) -> Result<BeamDictionary<T>> {
    if b < 2 {
        return Err(Error::InvalidArgument("dictionary needs at least 2 beams".into()));
    }
    let mut vectors = Vec::with_capacity(b);
    let mut angles = Vec::with_capacity(b);
    for i in 0..b {
        let c = T::cast(-1.0) + T::cast((2 * i + 1) as f64) / T::cast(b as f64);
        let angle = c.acos();
        vectors.push(steering_vector(angle, n)?);
        angles.push(angle);
    }
    Ok(BeamDictionary { vectors, angles })
}

/// Per-beam rate map: `values[i] = mean_k log2(1 + rho |d_i^T H[k]|^2)`.
///
/// Note the plain transpose (no conjugation) in the projection.
pub fn beam_energy_map<T: Real>(
    csi: &Csi<T>,
    dict: &BeamDictionary<T>,
    rho: T,
) -> Result<BeamEnergy<T>> {
    let n = csi.n_antennas();
    if dict.vectors.iter().any(|v| v.len() != n) {
        return Err(Error::DimensionMismatch(format!(
            "dictionary vectors must have length {n}"
        )));
    }
    let k_total = csi.n_subcarriers();
    let norm = T::one() / T::cast(k_total as f64);
    let values = dict
        .vectors
        .iter()
        .map(|d| {
            let mut acc = T::zero();
            for k in 0..k_total {
                let mut proj = Complex::new(T::zero(), T::zero());
                for m in 0..n {
                    proj = proj + d[m] * csi.h[(m, k)];
                }
                acc += (T::one() + rho * proj.norm_sqr()).log2();
            }
            acc * norm
        })
        .collect();
    Ok(BeamEnergy { values })
}

/// Keep the `k` largest entries, zero the rest.
///
/// Ties at the k-th largest value resolve toward lower beam indices, so
/// exactly `k` entries survive.
pub fn zero_force_topk<T: Real>(energy: &BeamEnergy<T>, k: usize) -> Result<BeamEnergy<T>> {
    let b = energy.len();
    if k < 1 || k > b {
        return Err(Error::InvalidArgument(format!(
            "top-k must satisfy 1 <= k <= {b}, got {k}"
        )));
    }
    let mut order: Vec<usize> = (0..b).collect();
    order.sort_by(|&i, &j| {
        energy.values[j]
            .partial_cmp(&energy.values[i])
            .unwrap()
            .then(i.cmp(&j))
    });
    let mut values = vec![T::zero(); b];
    for &i in order.iter().take(k) {
        values[i] = energy.values[i];
    }
    Ok(BeamEnergy { values })
}

/// Fraction of total energy carried by the `k` largest beams.
pub fn topk_proportion<T: Real>(energy: &BeamEnergy<T>, k: usize) -> Result<T> {
    let b = energy.len();
    if k < 1 || k > b {
        return Err(Error::InvalidArgument(format!(
            "top-k must satisfy 1 <= k <= {b}, got {k}"
        )));
    }
    let total: T = energy.values.iter().copied().sum();
    if total <= T::zero() {
        return Err(Error::UndefinedProportion);
    }
    let mut sorted = energy.values.clone();
    sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let top: T = sorted.iter().take(k).copied().sum();
    Ok(top / total)
}
