//! Classical tracking baselines: a constant-velocity Kalman filter on
//! noisy position observations, an extended Kalman filter on noisy
//! (angle, range) observations, and a least-squares line extrapolator over
//! a short history window.
//!
//! All three consume one observation per slot and emit the one-step-ahead
//! position prediction. State is Cartesian `(x, y, vx, vy)`; covariance
//! updates use the Joseph form plus explicit symmetrization so the
//! covariance stays symmetric positive-semidefinite over long runs.

use crate::error::{Error, Result};
use crate::linalg::{dot2, norm2, sub2};
use crate::num::Real;
use crate::scene::SceneConfig;

/// Default standard deviation of the position observations fed to the KF
/// and the extrapolator, metres.
pub const DEFAULT_OBS_STD: f64 = 1.0;
/// Default white-acceleration density of the constant-velocity process
/// model, m/s^2.
pub const DEFAULT_ACCEL_STD: f64 = 2.0;
/// Default angle-observation noise of the EKF, radians.
pub const DEFAULT_EKF_THETA_STD: f64 = 0.01;
/// Default range-observation noise of the EKF, metres.
pub const DEFAULT_EKF_RANGE_STD: f64 = 0.1;
/// Default history window of the extrapolation baseline.
pub const DEFAULT_EXTRAP_WINDOW: usize = 5;

type Mat4<T> = [[T; 4]; 4];
type Mat2<T> = [[T; 2]; 2];

fn mat4_zero<T: Real>() -> Mat4<T> {
    [[T::zero(); 4]; 4]
}

fn mat4_identity<T: Real>() -> Mat4<T> {
    let mut m = mat4_zero();
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = T::one();
    }
    m
}

fn mat4_mul<T: Real>(a: &Mat4<T>, b: &Mat4<T>) -> Mat4<T> {
    let mut c = mat4_zero();
    for i in 0..4 {
        for k in 0..4 {
            let aik = a[i][k];
            for j in 0..4 {
                c[i][j] += aik * b[k][j];
            }
        }
    }
    c
}

fn mat4_mul_t<T: Real>(a: &Mat4<T>, b: &Mat4<T>) -> Mat4<T> {
    // a * b^T
    let mut c = mat4_zero();
    for i in 0..4 {
        for j in 0..4 {
            let mut acc = T::zero();
            for k in 0..4 {
                acc += a[i][k] * b[j][k];
            }
            c[i][j] = acc;
        }
    }
    c
}

fn mat4_add<T: Real>(a: &Mat4<T>, b: &Mat4<T>) -> Mat4<T> {
    let mut c = *a;
    for i in 0..4 {
        for j in 0..4 {
            c[i][j] += b[i][j];
        }
    }
    c
}

fn mat4_symmetrize<T: Real>(a: &mut Mat4<T>) {
    let half = T::cast(0.5);
    for i in 0..4 {
        for j in (i + 1)..4 {
            let v = (a[i][j] + a[j][i]) * half;
            a[i][j] = v;
            a[j][i] = v;
        }
    }
}

/// Symmetry plus LDL^T pivots down to `-tol` certify the covariance as
/// positive-semidefinite for filter purposes.
fn check_psd<T: Real>(p: &Mat4<T>, tol: T) -> Result<()> {
    for i in 0..4 {
        for j in 0..4 {
            if !p[i][j].is_finite() {
                return Err(Error::InvalidArgument("covariance has non-finite entries".into()));
            }
            if (p[i][j] - p[j][i]).abs() > tol.max(T::cast(1e-9)) {
                return Err(Error::InvalidArgument("covariance is not symmetric".into()));
            }
        }
    }
    // LDL^T with diagonal pivoting tolerance.
    let mut a = *p;
    for k in 0..4 {
        let d = a[k][k];
        if d < -tol {
            return Err(Error::InvalidArgument(format!(
                "covariance is not PSD (pivot {} at {k})",
                d.to_f64_lossy()
            )));
        }
        if d <= T::zero() {
            continue;
        }
        for i in (k + 1)..4 {
            let l = a[i][k] / d;
            for j in (k + 1)..4 {
                a[i][j] = a[i][j] - l * a[k][j];
            }
            a[i][k] = l * d;
        }
    }
    Ok(())
}

fn inv2<T: Real>(s: &Mat2<T>) -> Result<Mat2<T>> {
    let det = s[0][0] * s[1][1] - s[0][1] * s[1][0];
    if det.abs() <= T::cast(1e-30) {
        return Err(Error::DegenerateGeometry("singular innovation covariance".into()));
    }
    let inv = T::one() / det;
    Ok([[s[1][1] * inv, -s[0][1] * inv], [-s[1][0] * inv, s[0][0] * inv]])
}

/// Constant-velocity transition over one slot.
fn transition<T: Real>(dt: T) -> Mat4<T> {
    let mut f = mat4_identity();
    f[0][2] = dt;
    f[1][3] = dt;
    f
}

/// White-acceleration process noise for the constant-velocity model.
fn process_noise<T: Real>(dt: T, accel_std: T) -> Mat4<T> {
    let q = accel_std * accel_std;
    let dt2 = dt * dt;
    let dt3 = dt2 * dt;
    let dt4 = dt3 * dt;
    let quarter = T::cast(0.25);
    let half = T::cast(0.5);
    let mut m = mat4_zero();
    for axis in 0..2 {
        let (p, v) = (axis, axis + 2);
        m[p][p] = quarter * dt4 * q;
        m[p][v] = half * dt3 * q;
        m[v][p] = half * dt3 * q;
        m[v][v] = dt2 * q;
    }
    m
}

/// Noise configuration shared by the filter baselines.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterConfig<T> {
    pub dt: T,
    /// Process white-acceleration std, m/s^2.
    pub accel_std: T,
    /// KF position-observation std, metres (both axes).
    pub obs_std: T,
    /// EKF angle-observation std, radians.
    pub theta_std: T,
    /// EKF range-observation std, metres.
    pub range_std: T,
}

impl<T: Real> FilterConfig<T> {
    pub fn with_dt(dt: T) -> Self {
        FilterConfig {
            dt,
            accel_std: T::cast(DEFAULT_ACCEL_STD),
            obs_std: T::cast(DEFAULT_OBS_STD),
            theta_std: T::cast(DEFAULT_EKF_THETA_STD),
            range_std: T::cast(DEFAULT_EKF_RANGE_STD),
        }
    }
}

/// Kalman-filter state: posterior mean and covariance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KfState<T> {
    /// (x, y, vx, vy).
    pub state: [T; 4],
    pub covariance: Mat4<T>,
}

impl<T: Real> KfState<T> {
    /// Start at an observed position with unknown velocity.
    pub fn from_position(xy: [T; 2], pos_var: T, vel_var: T) -> Self {
        let mut p = mat4_zero();
        p[0][0] = pos_var;
        p[1][1] = pos_var;
        p[2][2] = vel_var;
        p[3][3] = vel_var;
        KfState { state: [xy[0], xy[1], T::zero(), T::zero()], covariance: p }
    }

    pub fn position(&self) -> [T; 2] {
        [self.state[0], self.state[1]]
    }
}

fn predict_state<T: Real>(st: &KfState<T>, dt: T, accel_std: T) -> KfState<T> {
    let f = transition(dt);
    let x = st.state;
    let state = [x[0] + dt * x[2], x[1] + dt * x[3], x[2], x[3]];
    let fp = mat4_mul(&f, &st.covariance);
    let mut covariance = mat4_add(&mat4_mul_t(&fp, &f), &process_noise(dt, accel_std));
    mat4_symmetrize(&mut covariance);
    KfState { state, covariance }
}

/// Joseph-form measurement update shared by the linear and extended filters.
/// `h` is the 2x4 observation Jacobian, `innov` the measurement residual,
/// and `r_diag` the observation noise variances.
fn update_state<T: Real>(
    prior: &KfState<T>,
    h: &[[T; 4]; 2],
    innov: [T; 2],
    r_diag: [T; 2],
) -> Result<KfState<T>> {
    // S = H P H^T + R.
    let p = &prior.covariance;
    let mut ph_t = [[T::zero(); 2]; 4]; // P H^T
    for i in 0..4 {
        for j in 0..2 {
            let mut acc = T::zero();
            for k in 0..4 {
                acc += p[i][k] * h[j][k];
            }
            ph_t[i][j] = acc;
        }
    }
    let mut s = [[T::zero(); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            let mut acc = T::zero();
            for k in 0..4 {
                acc += h[i][k] * ph_t[k][j];
            }
            s[i][j] = acc;
        }
        s[i][i] += r_diag[i];
    }
    let s_inv = inv2(&s)?;
    // K = P H^T S^{-1}.
    let mut k_gain = [[T::zero(); 2]; 4];
    for i in 0..4 {
        for j in 0..2 {
            k_gain[i][j] = ph_t[i][0] * s_inv[0][j] + ph_t[i][1] * s_inv[1][j];
        }
    }
    let mut state = prior.state;
    for i in 0..4 {
        state[i] += k_gain[i][0] * innov[0] + k_gain[i][1] * innov[1];
    }
    // Joseph form: (I - K H) P (I - K H)^T + K R K^T.
    let mut ikh = mat4_identity();
    for i in 0..4 {
        for j in 0..4 {
            ikh[i][j] -= k_gain[i][0] * h[0][j] + k_gain[i][1] * h[1][j];
        }
    }
    let tmp = mat4_mul(&ikh, p);
    let mut covariance = mat4_mul_t(&tmp, &ikh);
    for i in 0..4 {
        for j in 0..4 {
            covariance[i][j] +=
                k_gain[i][0] * r_diag[0] * k_gain[j][0] + k_gain[i][1] * r_diag[1] * k_gain[j][1];
        }
    }
    mat4_symmetrize(&mut covariance);
    Ok(KfState { state, covariance })
}

/// One KF slot: constant-velocity predict, linear position update, then the
/// one-step-ahead position prediction.
pub fn kf_step<T: Real>(
    st: &KfState<T>,
    obs: [T; 2],
    cfg: &FilterConfig<T>,
) -> Result<(KfState<T>, [T; 2])> {
    check_psd(&st.covariance, T::cast(1e-9))?;
    let prior = predict_state(st, cfg.dt, cfg.accel_std);
    let h = [
        [T::one(), T::zero(), T::zero(), T::zero()],
        [T::zero(), T::one(), T::zero(), T::zero()],
    ];
    let innov = [obs[0] - prior.state[0], obs[1] - prior.state[1]];
    let r = cfg.obs_std * cfg.obs_std;
    let posterior = update_state(&prior, &h, innov, [r, r])?;
    let ahead = predict_state(&posterior, cfg.dt, cfg.accel_std);
    Ok((posterior, ahead.position()))
}

/// Observation model of the EKF: angle from the array axis and range.
pub fn ekf_observation<T: Real>(scene: &SceneConfig<T>, xy: [T; 2]) -> Result<([T; 2], [[T; 4]; 2])> {
    let r = sub2(xy, scene.rsu_position);
    let d = norm2(r);
    if d.to_f64_lossy() < 1e-9 {
        return Err(Error::DegenerateGeometry("vehicle at the RSU position".into()));
    }
    let u = crate::linalg::normalize2(scene.rsu_array_axis);
    let c = dot2(u, r) / d;
    let c_cl = c.min(T::one()).max(-T::one());
    let theta = c_cl.acos();
    let sin_theta = (T::one() - c_cl * c_cl).sqrt();
    if sin_theta.to_f64_lossy() < 1e-9 {
        return Err(Error::DegenerateGeometry(
            "vehicle on the array axis: angle Jacobian is singular".into(),
        ));
    }
    // grad_c = (u - c r_hat) / d; grad_theta = -grad_c / sin(theta).
    let r_hat = [r[0] / d, r[1] / d];
    let gcx = (u[0] - c * r_hat[0]) / d;
    let gcy = (u[1] - c * r_hat[1]) / d;
    let h = [
        [-gcx / sin_theta, -gcy / sin_theta, T::zero(), T::zero()],
        [r_hat[0], r_hat[1], T::zero(), T::zero()],
    ];
    Ok(([theta, d], h))
}

/// One EKF slot on a noisy (angle, range) observation.
pub fn ekf_step<T: Real>(
    st: &KfState<T>,
    obs: [T; 2],
    scene: &SceneConfig<T>,
    cfg: &FilterConfig<T>,
) -> Result<(KfState<T>, [T; 2])> {
    check_psd(&st.covariance, T::cast(1e-9))?;
    if obs[1] <= T::zero() {
        return Err(Error::InvalidArgument("range observation must be positive".into()));
    }
    let prior = predict_state(st, cfg.dt, cfg.accel_std);
    let (pred_obs, h) = ekf_observation(scene, prior.position())?;
    let innov = [obs[0] - pred_obs[0], obs[1] - pred_obs[1]];
    let r = [cfg.theta_std * cfg.theta_std, cfg.range_std * cfg.range_std];
    let posterior = update_state(&prior, &h, innov, r)?;
    let ahead = predict_state(&posterior, cfg.dt, cfg.accel_std);
    Ok((posterior, ahead.position()))
}

/// Least-squares line fit over the last `m` points, evaluated one slot
/// ahead, per coordinate.
pub fn extrapolate_step<T: Real>(history: &[[T; 2]]) -> Result<[T; 2]> {
    let m = history.len();
    if m < 2 {
        return Err(Error::InvalidArgument(format!(
            "extrapolation needs at least 2 history points, got {m}"
        )));
    }
    let n = T::cast(m as f64);
    let t_mean = (n - T::one()) * T::cast(0.5);
    let mut denom = T::zero();
    for t in 0..m {
        let dt = T::cast(t as f64) - t_mean;
        denom += dt * dt;
    }
    let mut out = [T::zero(); 2];
    for axis in 0..2 {
        let mut mean = T::zero();
        for p in history {
            mean += p[axis];
        }
        mean /= n;
        let mut num = T::zero();
        for (t, p) in history.iter().enumerate() {
            num += (T::cast(t as f64) - t_mean) * (p[axis] - mean);
        }
        let slope = num / denom;
        out[axis] = mean + slope * (n - t_mean);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{derive_rng, Purpose};
    use crate::scene::RasterConfig;
    use approx::assert_relative_eq;
    use rand::Rng;

    fn cfg(dt: f64) -> FilterConfig<f64> {
        FilterConfig::with_dt(dt)
    }

    #[test]
    fn noiseless_constant_velocity_converges_to_exact_tracking() {
        let mut c = cfg(1.0);
        c.accel_std = 0.0;
        c.obs_std = 1e-6;
        let mut st = KfState::from_position([0.0, 0.0], 1.0, 10.0);
        let mut pred = [0.0, 0.0];
        for k in 1..=12 {
            let truth = [k as f64, 2.0 * k as f64];
            let (next, p) = kf_step(&st, truth, &c).unwrap();
            st = next;
            pred = p;
        }
        let truth_next = [13.0, 26.0];
        assert!((pred[0] - truth_next[0]).abs() <= 1e-6);
        assert!((pred[1] - truth_next[1]).abs() <= 1e-6);
    }

    #[test]
    fn huge_observation_noise_freezes_the_internal_model() {
        let mut c = cfg(1.0);
        c.obs_std = 1e12;
        c.accel_std = 0.01;
        let mut st = KfState::from_position([5.0, 5.0], 1.0, 1.0);
        st.state = [5.0, 5.0, 1.0, 0.0];
        let before = st.state;
        let (after, pred) = kf_step(&st, [1000.0, -1000.0], &c).unwrap();
        // Gain is ~0: the posterior equals the prior prediction.
        assert_relative_eq!(after.state[0], before[0] + 1.0, max_relative = 1e-6);
        assert_relative_eq!(after.state[1], before[1], epsilon = 1e-4);
        assert_relative_eq!(pred[0], before[0] + 2.0, max_relative = 1e-6);
    }

    /// Hand-computed Riccati recursion for a 1-D constant-velocity filter,
    /// checked against the (x, vx) block over three steps.
    #[test]
    fn gain_and_posterior_match_hand_recursion() {
        let dt = 1.0;
        let q_std = 0.5;
        let r_std = 0.8;
        let mut c = cfg(dt);
        c.accel_std = q_std;
        c.obs_std = r_std;
        let mut st = KfState::from_position([0.0, 0.0], 2.0, 3.0);

        // Hand recursion state: x = [pos, vel], P 2x2, y axis pinned at zero.
        let mut hx = [0.0f64, 0.0];
        let mut hp = [[2.0, 0.0], [0.0, 3.0]];
        let observations = [1.1, 1.9, 3.2];
        let mut st_now = st;
        for (k, &z) in observations.iter().enumerate() {
            // Predict.
            let px = [hx[0] + dt * hx[1], hx[1]];
            let q = q_std * q_std;
            let pq = [
                [
                    hp[0][0] + dt * (hp[1][0] + hp[0][1]) + dt * dt * hp[1][1] + 0.25 * q,
                    hp[0][1] + dt * hp[1][1] + 0.5 * q,
                ],
                [hp[1][0] + dt * hp[1][1] + 0.5 * q, hp[1][1] + q],
            ];
            // Update.
            let s = pq[0][0] + r_std * r_std;
            let kx = pq[0][0] / s;
            let kv = pq[1][0] / s;
            let innov = z - px[0];
            hx = [px[0] + kx * innov, px[1] + kv * innov];
            hp = [
                [(1.0 - kx) * pq[0][0], (1.0 - kx) * pq[0][1]],
                [pq[1][0] - kv * pq[0][0], pq[1][1] - kv * pq[0][1]],
            ];

            let (next, _) = kf_step(&st_now, [z, 0.0], &c).unwrap();
            st_now = next;
            assert_relative_eq!(st_now.state[0], hx[0], max_relative = 1e-9);
            assert_relative_eq!(st_now.state[2], hx[1], max_relative = 1e-9);
            assert_relative_eq!(st_now.covariance[0][0], hp[0][0], max_relative = 1e-9);
            assert_relative_eq!(st_now.covariance[2][2], hp[1][1], max_relative = 1e-9);
            if k == 0 {
                st = st_now;
            }
        }
        let _ = st;
    }

    #[test]
    fn non_psd_covariance_is_rejected() {
        let c = cfg(0.1);
        let mut st = KfState::from_position([0.0, 0.0], 1.0, 1.0);
        st.covariance[0][0] = -1.0;
        assert!(matches!(kf_step(&st, [0.0, 0.0], &c), Err(Error::InvalidArgument(_))));
        let mut st = KfState::from_position([0.0, 0.0], 1.0, 1.0);
        st.covariance[0][1] = 0.5; // asymmetric
        assert!(kf_step(&st, [0.0, 0.0], &c).is_err());
    }

    #[test]
    fn covariance_stays_symmetric_psd_over_long_runs() {
        let c = cfg(0.2);
        let mut st = KfState::from_position([0.0, 8.0], 4.0, 25.0);
        let mut rng = derive_rng(3, Purpose::Observation, 0);
        for k in 1..=1000 {
            let truth = [2.0 * k as f64 * 0.2, 8.0];
            let obs = [
                truth[0] + rng.gen_range(-1.0..1.0),
                truth[1] + rng.gen_range(-1.0..1.0),
            ];
            let (next, _) = kf_step(&st, obs, &c).unwrap();
            st = next;
            for i in 0..4 {
                for j in 0..4 {
                    assert!((st.covariance[i][j] - st.covariance[j][i]).abs() <= 1e-12);
                }
            }
            let min_eig = sym4_min_eigenvalue(&st.covariance);
            assert!(min_eig >= -1e-9, "min eigenvalue {min_eig} at step {k}");
        }
    }

    /// Jacobi eigensolver for symmetric 4x4 matrices; independent oracle
    /// for the PSD invariant.
    fn sym4_min_eigenvalue(m: &[[f64; 4]; 4]) -> f64 {
        let mut a = *m;
        for _ in 0..60 {
            // Find the largest off-diagonal element.
            let (mut p, mut q, mut mx) = (0, 1, 0.0f64);
            for i in 0..4 {
                for j in (i + 1)..4 {
                    if a[i][j].abs() > mx {
                        mx = a[i][j].abs();
                        p = i;
                        q = j;
                    }
                }
            }
            if mx < 1e-14 {
                break;
            }
            let theta = 0.5 * (2.0 * a[p][q]).atan2(a[q][q] - a[p][p]);
            let (s, c) = theta.sin_cos();
            let mut b = a;
            for k in 0..4 {
                b[p][k] = c * a[p][k] - s * a[q][k];
                b[q][k] = s * a[p][k] + c * a[q][k];
            }
            let tmp = b;
            for k in 0..4 {
                b[k][p] = c * tmp[k][p] - s * tmp[k][q];
                b[k][q] = s * tmp[k][p] + c * tmp[k][q];
            }
            a = b;
        }
        (0..4).map(|i| a[i][i]).fold(f64::INFINITY, f64::min)
    }

    fn ekf_scene() -> SceneConfig<f64> {
        SceneConfig {
            raster: RasterConfig { h: 4, w: 4, ..RasterConfig::default() },
            ..SceneConfig::default()
        }
    }

    #[test]
    fn ekf_tracks_a_straight_line_with_noiseless_observations() {
        let scene = ekf_scene();
        let mut c = cfg(0.2);
        c.theta_std = 1e-4;
        c.range_std = 1e-3;
        c.accel_std = 0.5;
        let dt = 0.2;
        let v = 10.0;
        let y = 6.0;
        let mut st = KfState::from_position([100.0, y], 4.0, 25.0);
        let mut errs = Vec::new();
        for k in 1..=60 {
            let truth = [100.0 + v * dt * k as f64, y];
            let (obs, _) = ekf_observation(&scene, truth).unwrap();
            let (next, pred) = ekf_step(&st, obs, &scene, &c).unwrap();
            st = next;
            if k >= 10 {
                let truth_next = [100.0 + v * dt * (k + 1) as f64, y];
                let e = ((pred[0] - truth_next[0]).powi(2) + (pred[1] - truth_next[1]).powi(2))
                    .sqrt();
                errs.push(e);
            }
        }
        let rmse = (errs.iter().map(|e| e * e).sum::<f64>() / errs.len() as f64).sqrt();
        assert!(rmse <= 0.1, "post burn-in RMSE {rmse}");
    }

    #[test]
    fn ekf_jacobian_matches_finite_differences() {
        let scene = ekf_scene();
        let mut rng = derive_rng(5, Purpose::Observation, 1);
        for _ in 0..50 {
            let xy = [rng.gen_range(10.0..800.0), rng.gen_range(0.0..20.0)];
            let (_, h) = ekf_observation(&scene, xy).unwrap();
            // Step chosen against cancellation: coordinates are O(100) m,
            // so 1e-4 keeps central-difference roundoff below 1e-8 relative.
            let eps = 1e-4;
            for axis in 0..2 {
                let mut plus = xy;
                plus[axis] += eps;
                let mut minus = xy;
                minus[axis] -= eps;
                let (op, _) = ekf_observation(&scene, plus).unwrap();
                let (om, _) = ekf_observation(&scene, minus).unwrap();
                for row in 0..2 {
                    let fd = (op[row] - om[row]) / (2.0 * eps);
                    let an = h[row][axis];
                    let denom = an.abs().max(fd.abs()).max(1e-9);
                    assert!(
                        ((fd - an) / denom).abs() <= 1e-6,
                        "row {row} axis {axis}: fd {fd} vs {an}"
                    );
                }
            }
        }
    }

    #[test]
    fn broadside_angle_gradient_is_inverse_range() {
        let mut scene = ekf_scene();
        scene.rsu_position = [0.0, 0.0];
        scene.rsu_array_axis = [1.0, 0.0];
        let d = 25.0;
        let (_, h) = ekf_observation(&scene, [0.0, d]).unwrap();
        // At broadside the angle gradient along the axis has magnitude 1/d.
        assert_relative_eq!(h[0][0].abs(), 1.0 / d, max_relative = 1e-12);
        assert_relative_eq!(h[0][1], 0.0, epsilon = 1e-12);
    }

    #[test]
    fn ekf_rejects_degenerate_geometry() {
        let scene = ekf_scene();
        assert!(ekf_observation(&scene, scene.rsu_position).is_err());
        // On the array axis: angle undefined direction.
        let on_axis = [scene.rsu_position[0] + 50.0, scene.rsu_position[1]];
        assert!(ekf_observation(&scene, on_axis).is_err());
    }

    #[test]
    fn extrapolation_is_exact_on_linear_history() {
        let history: Vec<[f64; 2]> = (0..5).map(|t| [2.0 * t as f64, 1.0 - t as f64]).collect();
        let pred = extrapolate_step(&history).unwrap();
        assert_relative_eq!(pred[0], 10.0, max_relative = 1e-12);
        assert_relative_eq!(pred[1], -4.0, max_relative = 1e-12);
    }

    #[test]
    fn extrapolation_of_constant_history_stays_put() {
        let history = vec![[3.0, 7.0]; 6];
        let pred = extrapolate_step(&history).unwrap();
        assert_relative_eq!(pred[0], 3.0, max_relative = 1e-12);
        assert_relative_eq!(pred[1], 7.0, max_relative = 1e-12);
    }

    #[test]
    fn extrapolation_needs_two_points() {
        assert!(extrapolate_step::<f64>(&[[1.0, 2.0]]).is_err());
    }

    /// Normal-equations oracle on noisy linear history.
    #[test]
    fn extrapolation_matches_normal_equations_oracle() {
        let mut rng = derive_rng(7, Purpose::Observation, 2);
        for _ in 0..100 {
            let m = rng.gen_range(2..9);
            let history: Vec<[f64; 2]> = (0..m)
                .map(|t| {
                    [
                        0.5 * t as f64 + rng.gen_range(-0.2..0.2),
                        -1.5 * t as f64 + rng.gen_range(-0.2..0.2),
                    ]
                })
                .collect();
            let pred = extrapolate_step(&history).unwrap();
            for axis in 0..2 {
                // Solve [sum 1, sum t; sum t, sum t^2] [a; b] = [sum y; sum t y].
                let n = m as f64;
                let st: f64 = (0..m).map(|t| t as f64).sum();
                let stt: f64 = (0..m).map(|t| (t as f64) * (t as f64)).sum();
                let sy: f64 = history.iter().map(|p| p[axis]).sum();
                let sty: f64 = history.iter().enumerate().map(|(t, p)| t as f64 * p[axis]).sum();
                let det = n * stt - st * st;
                let a = (stt * sy - st * sty) / det;
                let b = (n * sty - st * sy) / det;
                let expected = a + b * n; // evaluate at t = m
                assert_relative_eq!(pred[axis], expected, max_relative = 1e-9);
            }
        }
    }

    /// The extrapolator cannot anticipate a lane jump: its error at the
    /// jump slot is at least half a lane width.
    #[test]
    fn extrapolation_misses_drift_by_at_least_half_a_lane() {
        let lane_width = 4.0;
        let history: Vec<[f64; 2]> = (0..5).map(|t| [t as f64, 6.0]).collect();
        let pred = extrapolate_step(&history).unwrap();
        let truth_next = [5.0, 6.0 + lane_width];
        assert!((pred[1] - truth_next[1]).abs() >= lane_width / 2.0);
    }

    #[test]
    fn baselines_are_deterministic_given_observations() {
        let c = cfg(0.2);
        let scene = ekf_scene();
        let obs: Vec<[f64; 2]> = (0..20).map(|k| [40.0 + k as f64, 8.0]).collect();
        let run = || {
            let mut st = KfState::from_position(obs[0], 4.0, 25.0);
            let mut out = Vec::new();
            for o in &obs[1..] {
                let (next, pred) = kf_step(&st, *o, &c).unwrap();
                st = next;
                out.push(pred);
            }
            out
        };
        assert_eq!(run(), run());
        let run_ekf = || {
            let mut st = KfState::from_position([40.0, 8.0], 4.0, 25.0);
            let mut out = Vec::new();
            for o in &obs[1..] {
                let (z, _) = ekf_observation(&scene, *o).unwrap();
                let (next, pred) = ekf_step(&st, z, &scene, &c).unwrap();
                st = next;
                out.push(pred);
            }
            out
        };
        assert_eq!(run_ekf(), run_ekf());
    }
}
