//! Wireless channel synthesis and beamforming arithmetic.
//!
//! Covers the ULA steering vector, geometric multipath CSI for the sub-6
//! GHz control link (line of sight plus single-bounce scatterer paths),
//! Doppler, and the SNR / achievable-rate algebra of the mmWave data link.
//!
//! Conventions fixed here and used everywhere else:
//!
//! * steering phase `exp(-j pi m cos(theta))`, half-wavelength spacing;
//! * CSI columns `H[k] = sum_p gain_p * exp(-j 2 pi f_k tau_p) * conj(a(aod_p))`
//!   with `f_k = fc + (k - K/2) * bandwidth / K`;
//! * the mmWave data channel is narrowband line-of-sight with coefficient
//!   `alpha = alpha_ref / d * exp(j 2 pi fc d / c)`.

use crate::error::{Error, Result};
use crate::linalg::{norm2, sub2, Mat};
use crate::num::{sample_uniform, Real};
use crate::scene::{angle_from_axis, true_angle, SceneConfig, VehicleState};
use num_complex::Complex;
use rand::Rng;

/// Speed of light, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Antenna counts and carrier layout for both bands.
#[derive(Debug, Clone, PartialEq)]
pub struct ArrayConfig<T> {
    /// mmWave transmit antennas at the RSU.
    pub n_tx_mm: usize,
    /// mmWave receive antennas at the vehicle.
    pub n_rx_mm: usize,
    /// Sub-6 GHz transmit antennas at the RSU.
    pub n_tx_sub6: usize,
    /// Sub-6 GHz receive antennas at the vehicle (single).
    pub n_rx_sub6: usize,
    /// Element spacing in wavelengths.
    pub spacing: T,
    /// mmWave carrier, Hz.
    pub fc_mm: T,
    /// Sub-6 carrier, Hz.
    pub fc_sub6: T,
    /// OFDM subcarriers of the sub-6 link.
    pub n_subcarriers: usize,
    /// Sub-6 system bandwidth, Hz.
    pub bandwidth_sub6: T,
    /// Maximum multipath components in the sub-6 channel (LoS included).
    pub max_paths: usize,
}

impl<T: Real> Default for ArrayConfig<T> {
    fn default() -> Self {
        ArrayConfig {
            n_tx_mm: 32,
            n_rx_mm: 32,
            n_tx_sub6: 64,
            n_rx_sub6: 1,
            spacing: T::cast(0.5),
            fc_mm: T::cast(28e9),
            fc_sub6: T::cast(5e9),
            n_subcarriers: 64,
            bandwidth_sub6: T::cast(0.5e9),
            max_paths: 5,
        }
    }
}

impl<T: Real> ArrayConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if self.n_tx_mm < 1 || self.n_rx_mm < 1 || self.n_tx_sub6 < 1 || self.n_rx_sub6 < 1 {
            return Err(Error::InvalidArgument("antenna counts must be >= 1".into()));
        }
        if self.n_subcarriers < 1 {
            return Err(Error::InvalidArgument("n_subcarriers must be >= 1".into()));
        }
        if self.max_paths < 1 {
            return Err(Error::InvalidArgument("max_paths must be >= 1".into()));
        }
        Ok(())
    }

    /// Frequency of subcarrier `k` of the sub-6 link.
    pub fn subcarrier_freq(&self, k: usize) -> T {
        let kk = T::cast(k as f64) - T::cast(self.n_subcarriers as f64) * T::cast(0.5);
        self.fc_sub6 + kk * self.bandwidth_sub6 / T::cast(self.n_subcarriers as f64)
    }
}

/// Transmit power, noise floor, and reference path gain of the data link.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkBudget<T> {
    /// Transmit power, watts.
    pub p: T,
    /// Receiver noise variance, watts.
    pub sigma2: T,
    /// Reference channel gain factor at 1 m.
    pub alpha_ref: T,
}

impl<T: Real> Default for LinkBudget<T> {
    fn default() -> Self {
        // p / sigma2 = 15 dB.
        LinkBudget { p: T::one(), sigma2: T::cast(10f64.powf(-1.5)), alpha_ref: T::cast(30.0) }
    }
}

impl<T: Real> LinkBudget<T> {
    pub fn validate(&self) -> Result<()> {
        if self.p <= T::zero() || self.sigma2 <= T::zero() || self.alpha_ref <= T::zero() {
            return Err(Error::InvalidArgument("link budget terms must be positive".into()));
        }
        Ok(())
    }
}

/// One multipath component.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathComponent<T> {
    pub gain: Complex<T>,
    /// Angle of departure from the RSU array axis, radians.
    pub aod: T,
    /// Propagation delay, seconds.
    pub delay: T,
}

/// Multipath profile of one slot; path 0 is the line of sight.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSet<T> {
    pub paths: Vec<PathComponent<T>>,
}

impl<T: Real> PathSet<T> {
    pub fn los(&self) -> &PathComponent<T> {
        &self.paths[0]
    }
}

/// Sub-6 GHz CSI matrix, antennas x subcarriers.
#[derive(Debug, Clone, PartialEq)]
pub struct Csi<T> {
    pub h: Mat<Complex<T>>,
}

impl<T: Real> Csi<T> {
    pub fn n_antennas(&self) -> usize {
        self.h.rows()
    }

    pub fn n_subcarriers(&self) -> usize {
        self.h.cols()
    }
}

/// ULA steering vector: element `m` is `exp(-j pi m cos(theta)) / sqrt(n)`.
pub fn steering_vector<T: Real>(theta: T, n: usize) -> Result<Vec<Complex<T>>> {
    if n == 0 {
        return Err(Error::InvalidArgument("steering vector needs n >= 1 antennas".into()));
    }
    let t = theta.to_f64_lossy();
    if !t.is_finite() || t <= 0.0 || t >= std::f64::consts::PI {
        return Err(Error::InvalidArgument(format!(
            "steering angle must lie in (0, pi), got {t}"
        )));
    }
    let scale = T::one() / T::cast(n as f64).sqrt();
    let c = theta.cos();
    Ok((0..n)
        .map(|m| {
            let phase = -T::PI() * T::cast(m as f64) * c;
            Complex::from_polar(scale, phase)
        })
        .collect())
}

/// `a(theta1)^H a(theta2)` for two same-length steering vectors.
pub fn steering_inner<T: Real>(a: &[Complex<T>], b: &[Complex<T>]) -> Complex<T> {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).fold(
        Complex::new(T::zero(), T::zero()),
        |acc, v| acc + v,
    )
}

/// Synthesize the sub-6 GHz multipath CSI for one vehicle state.
///
/// The line of sight comes from the true geometry; each scatterer adds a
/// single-bounce path with the reflection geometry's angle of departure and
/// delay, gain attenuated by total path length and a fixed 0.3 reflection
/// loss, and a random reflection phase. When the scene has more scatterers
/// than `max_paths - 1`, the shortest (strongest) bounce paths win.
pub fn synth_sub6_csi<T: Real, R: Rng + ?Sized>(
    cfg: &ArrayConfig<T>,
    scene: &SceneConfig<T>,
    state: &VehicleState<T>,
    budget: &LinkBudget<T>,
    rng: &mut R,
) -> Result<(Csi<T>, PathSet<T>)> {
    cfg.validate()?;
    let c_light = T::cast(SPEED_OF_LIGHT);
    let two_pi = T::cast(2.0) * T::PI();
    let pos = [state.x, state.y];

    let d = norm2(sub2(pos, scene.rsu_position));
    let los_aod = true_angle(state, scene)?;
    let los_phase = two_pi * cfg.fc_sub6 * d / c_light;
    let los = PathComponent {
        gain: Complex::from_polar(budget.alpha_ref / d, los_phase),
        aod: los_aod,
        delay: d / c_light,
    };

    // Candidate single-bounce paths, strongest (shortest) first.
    let mut bounces: Vec<PathComponent<T>> = scene
        .scatterers
        .iter()
        .map(|s| {
            let sc = [s.x, s.y];
            let d1 = norm2(sub2(sc, scene.rsu_position));
            let d2 = norm2(sub2(pos, sc));
            let total = d1 + d2;
            let aod = angle_from_axis(scene, sc)?;
            let phase = sample_uniform(rng, T::zero(), two_pi);
            Ok(PathComponent {
                gain: Complex::from_polar(budget.alpha_ref / total * T::cast(0.3), phase),
                aod,
                delay: total / c_light,
            })
        })
        .collect::<Result<_>>()?;
    bounces.sort_by(|a, b| a.delay.partial_cmp(&b.delay).unwrap());
    bounces.truncate(cfg.max_paths.saturating_sub(1));

    let mut paths = vec![los];
    paths.extend(bounces);

    let n = cfg.n_tx_sub6;
    let k_total = cfg.n_subcarriers;
    let mut h = Mat::czeros(n, k_total);
    for p in &paths {
        let a = steering_vector(p.aod, n)?;
        for k in 0..k_total {
            let phase = -two_pi * cfg.subcarrier_freq(k) * p.delay;
            let w = p.gain * Complex::from_polar(T::one(), phase);
            for (m, am) in a.iter().enumerate() {
                h[(m, k)] = h[(m, k)] + w * am.conj();
            }
        }
    }
    Ok((Csi { h }, PathSet { paths }))
}

/// Doppler shift `v cos(theta) fc / c`, Hz.
pub fn doppler<T: Real>(v: T, theta: T, fc: T) -> T {
    v * theta.cos() * fc / T::cast(SPEED_OF_LIGHT)
}

/// mmWave line-of-sight coefficient `alpha_ref / d * exp(j 2 pi fc d / c)`.
pub fn los_coefficient<T: Real>(budget: &LinkBudget<T>, cfg: &ArrayConfig<T>, d: T) -> Complex<T> {
    let phase = T::cast(2.0) * T::PI() * cfg.fc_mm * d / T::cast(SPEED_OF_LIGHT);
    Complex::from_polar(budget.alpha_ref / d, phase)
}

/// Received SNR of the beamformed data link when the true angle is
/// `theta_true` and both ends steer toward `theta_hat`.
pub fn snr<T: Real>(
    theta_true: T,
    theta_hat: T,
    budget: &LinkBudget<T>,
    cfg: &ArrayConfig<T>,
    d: T,
) -> Result<T> {
    if d <= T::zero() {
        return Err(Error::InvalidArgument("distance must be positive".into()));
    }
    let alpha = los_coefficient(budget, cfg, d);
    let kappa = (T::cast(cfg.n_tx_mm as f64) * T::cast(cfg.n_rx_mm as f64)).sqrt();
    let b_true = steering_vector(theta_true, cfg.n_rx_mm)?;
    let b_hat = steering_vector(theta_hat, cfg.n_rx_mm)?;
    let a_true = steering_vector(theta_true, cfg.n_tx_mm)?;
    let a_hat = steering_vector(theta_hat, cfg.n_tx_mm)?;
    let rx_gain = steering_inner(&b_hat, &b_true);
    let tx_gain = steering_inner(&a_true, &a_hat);
    let amp = (alpha * rx_gain * tx_gain).norm() * kappa;
    Ok(budget.p * amp * amp / budget.sigma2)
}

/// SNR at perfect alignment: `p |kappa alpha|^2 / sigma^2`.
pub fn snr_upper_bound<T: Real>(budget: &LinkBudget<T>, cfg: &ArrayConfig<T>, d: T) -> Result<T> {
    if d <= T::zero() {
        return Err(Error::InvalidArgument("distance must be positive".into()));
    }
    let kappa2 = T::cast(cfg.n_tx_mm as f64) * T::cast(cfg.n_rx_mm as f64);
    let a2 = (budget.alpha_ref / d) * (budget.alpha_ref / d);
    Ok(budget.p * kappa2 * a2 / budget.sigma2)
}

/// Shannon rate `log2(1 + snr)`, bits/s/Hz.
pub fn achievable_rate<T: Real>(snr: T) -> Result<T> {
    if snr < T::zero() {
        return Err(Error::InvalidArgument("snr must be nonnegative".into()));
    }
    Ok((T::one() + snr).log2())
}
