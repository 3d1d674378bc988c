//! Desk-scale link-level simulator and learning library for proactive
//! mmWave V2I beamforming.
//!
//! A road-side unit (RSU) serves a vehicle that drives down a multi-lane
//! road and occasionally drifts to an adjacent lane. At every slot the RSU
//! collects three synchronized sensing modalities:
//!
//! * sub-6 GHz OFDM channel state information (CSI), projected onto a
//!   beamspace dictionary and reduced to a per-beam rate map,
//! * a top-down occupancy grid of the scene,
//! * a depth map rendered by casting rays from the RSU.
//!
//! A small fusion network ingests the three feature streams and predicts
//! the vehicle's next-slot position, from which the beamforming angle for
//! the mmWave data link is derived. Classical trackers (Kalman filter,
//! extended Kalman filter, least-squares extrapolation) run on the same
//! data for comparison, and the evaluation module turns predicted angles
//! into angle-error, achievable-rate, and outage-probability metrics.
//!
//! All numeric code is generic over the scalar type via [`num::Real`]
//! (`f32` or `f64`); the crate-level aliases fix `f64` as the default
//! precision so gradient checks stay tight.

pub mod baselines;
pub mod channel;
pub mod commands;
pub mod config;
pub mod csiprep;
pub mod dataset;
pub mod error;
pub mod eval;
pub mod linalg;
pub mod neural;
pub mod num;
pub mod predictor;
pub mod rng;
pub mod scene;
pub mod tensor;

pub use error::{Error, Result};
pub use num::Real;

/// Default scalar type for the whole pipeline.
pub type Scalar = f64;
/// Complex counterpart of [`Scalar`].
pub type CScalar = num_complex::Complex<Scalar>;
/// Real matrix at default precision.
pub type Matrix = linalg::Mat<Scalar>;
/// Complex matrix at default precision.
pub type CMatrix = linalg::Mat<CScalar>;
