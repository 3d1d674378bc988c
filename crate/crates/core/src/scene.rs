//! Road scene synthesis: vehicle trajectories with random lane drifts and
//! the two non-RF sensing modalities (top-down occupancy grid, RSU depth
//! map).
//!
//! Geometry is planar. The road runs along +x with `n_lanes` lanes stacked
//! along +y; lane `l` is centred at `(l + 0.5) * lane_width`. The RSU sits
//! off the road and carries a uniform linear array whose axis is a unit
//! vector in the plane; all angles in the pipeline are measured from that
//! axis and live in the open interval (0, pi).

use crate::error::{Error, Result};
use crate::linalg::{dot2, norm2, normalize2, perp2, sub2, Mat};
use crate::num::{sample_uniform, Real};
use crate::rng::{derive_rng, Purpose};
use rand::Rng;

/// Angles are clamped away from the array endfire directions where the
/// steering vector degenerates.
pub const ANGLE_CLAMP: f64 = 1e-6;

/// A circular roadside obstacle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scatterer<T> {
    pub x: T,
    pub y: T,
    pub radius: T,
}

/// Resolution and coverage of the synthetic sensors.
#[derive(Debug, Clone, PartialEq)]
pub struct RasterConfig<T> {
    /// Rows of the grid / depth rasters.
    pub h: usize,
    /// Columns of the grid / depth rasters.
    pub w: usize,
    /// Azimuth span of the depth raster, radians from the array axis.
    pub fov: (T, T),
    /// Rays that hit nothing report this range, metres.
    pub max_range: T,
}

impl<T: Real> Default for RasterConfig<T> {
    fn default() -> Self {
        RasterConfig {
            h: 64,
            w: 64,
            fov: (T::cast(ANGLE_CLAMP), T::cast(std::f64::consts::PI - ANGLE_CLAMP)),
            max_range: T::cast(1000.0),
        }
    }
}

/// Static description of the road, the RSU, and the sensing setup.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneConfig<T> {
    pub n_lanes: usize,
    pub lane_width: T,
    pub lane_length: T,
    pub rsu_position: [T; 2],
    /// Unit vector; orientation of the RSU antenna array.
    pub rsu_array_axis: [T; 2],
    pub scatterers: Vec<Scatterer<T>>,
    /// Per-slot probability of an attempted lane change.
    pub drift_probability: T,
    pub slot_duration: T,
    /// Speed drawn once per trajectory from this range, m/s.
    pub speed_range: (T, T),
    /// Vehicle footprint (length along x, width along y), metres.
    pub vehicle_size: (T, T),
    pub raster: RasterConfig<T>,
    /// Variance of the Gaussian noise later added to depth maps.
    pub depth_noise_var: T,
    pub seed: u64,
}

impl<T: Real> Default for SceneConfig<T> {
    fn default() -> Self {
        SceneConfig {
            n_lanes: 5,
            lane_width: T::cast(4.0),
            lane_length: T::cast(820.0),
            rsu_position: [T::cast(410.0), T::cast(-40.0)],
            rsu_array_axis: [T::one(), T::zero()],
            scatterers: vec![
                Scatterer { x: T::cast(180.0), y: T::cast(28.0), radius: T::cast(3.0) },
                Scatterer { x: T::cast(430.0), y: T::cast(26.0), radius: T::cast(2.0) },
                Scatterer { x: T::cast(650.0), y: T::cast(30.0), radius: T::cast(4.0) },
            ],
            drift_probability: T::cast(0.05),
            slot_duration: T::cast(0.2),
            speed_range: (T::cast(8.0), T::cast(12.0)),
            vehicle_size: (T::cast(4.5), T::cast(2.0)),
            raster: RasterConfig::default(),
            depth_noise_var: T::cast(0.1),
            seed: 0,
        }
    }
}

impl<T: Real> SceneConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if self.n_lanes < 1 {
            return Err(Error::InvalidArgument("n_lanes must be >= 1".into()));
        }
        if self.lane_width <= T::zero() || self.lane_length <= T::zero() {
            return Err(Error::InvalidArgument("lane dimensions must be positive".into()));
        }
        let p = self.drift_probability;
        if p < T::zero() || p > T::one() {
            return Err(Error::InvalidArgument("drift_probability must be in [0,1]".into()));
        }
        if self.scatterers.iter().any(|s| s.radius <= T::zero()) {
            return Err(Error::InvalidArgument("scatterer radii must be positive".into()));
        }
        if self.slot_duration <= T::zero() {
            return Err(Error::InvalidArgument("slot_duration must be positive".into()));
        }
        if self.speed_range.0 <= T::zero() || self.speed_range.1 < self.speed_range.0 {
            return Err(Error::InvalidArgument("speed range must be positive and ordered".into()));
        }
        if self.raster.h == 0 || self.raster.w == 0 {
            return Err(Error::InvalidArgument("raster dimensions must be positive".into()));
        }
        let axis_norm = norm2(self.rsu_array_axis).to_f64_lossy();
        if (axis_norm - 1.0).abs() > 1e-6 {
            return Err(Error::InvalidArgument("rsu_array_axis must be a unit vector".into()));
        }
        Ok(())
    }

    /// Centre-line y of a lane.
    pub fn lane_center(&self, lane: usize) -> T {
        (T::cast(lane as f64) + T::cast(0.5)) * self.lane_width
    }

    /// Total road width.
    pub fn road_width(&self) -> T {
        T::cast(self.n_lanes as f64) * self.lane_width
    }

    /// Unit vector from the array axis toward the road side of the scene.
    /// Rays and angles sweep through this half-plane.
    pub fn road_normal(&self) -> [T; 2] {
        let p = perp2(self.rsu_array_axis);
        let road_center = [
            self.lane_length * T::cast(0.5),
            self.road_width() * T::cast(0.5),
        ];
        let to_road = sub2(road_center, self.rsu_position);
        if dot2(p, to_road) >= T::zero() {
            p
        } else {
            [-p[0], -p[1]]
        }
    }

    /// Axis-aligned region covered by the top-down occupancy grid: the road
    /// box expanded to include every scatterer. Fixed per scene.
    pub fn grid_region(&self) -> ([T; 2], [T; 2]) {
        let mut x0 = T::zero();
        let mut x1 = self.lane_length;
        let mut y0 = T::zero();
        let mut y1 = self.road_width();
        for s in &self.scatterers {
            x0 = x0.min(s.x - s.radius);
            x1 = x1.max(s.x + s.radius);
            y0 = y0.min(s.y - s.radius);
            y1 = y1.max(s.y + s.radius);
        }
        ([x0, y0], [x1, y1])
    }
}

/// Instantaneous vehicle kinematics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VehicleState<T> {
    /// Along-road position, metres.
    pub x: T,
    /// Lateral position, metres.
    pub y: T,
    /// Speed, m/s (constant within a trajectory).
    pub v: T,
    /// Lane index.
    pub lane: usize,
}

/// One vehicle pass over the scene.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<T> {
    pub states: Vec<VehicleState<T>>,
    pub slot_duration: T,
}

impl<T: Real> Trajectory<T> {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// Slots whose lateral position differs from the previous slot, i.e.
    /// the slots where a lane change lands.
    pub fn drift_slots(&self) -> Vec<usize> {
        (1..self.states.len())
            .filter(|&i| self.states[i].lane != self.states[i - 1].lane)
            .collect()
    }
}

/// One slot's worth of non-RF sensing.
#[derive(Debug, Clone, PartialEq)]
pub struct SensingFrame<T> {
    /// Top-down occupancy, entries in {0, 1}.
    pub grid: Mat<T>,
    /// Ray-cast range image, metres.
    pub depth: Mat<T>,
    /// Variance of the Gaussian noise the preprocessing stage will add.
    pub noise_var: T,
}

/// Generate a drifting trajectory.
///
/// Speed is drawn once from `cfg.speed_range`; each subsequent slot advances
/// `x` by `v * slot_duration`. With probability `drift_probability` the
/// vehicle jumps to an adjacent lane (direction uniform over the lanes that
/// exist, so a single-lane road never drifts), landing exactly on the lane
/// centre. Seeded by `cfg.seed`, so equal configs reproduce bit-identical
/// trajectories.
pub fn generate_trajectory<T: Real>(cfg: &SceneConfig<T>, n_slots: usize) -> Result<Trajectory<T>> {
    cfg.validate()?;
    if n_slots < 2 {
        return Err(Error::InvalidArgument(format!(
            "trajectory needs at least 2 slots, got {n_slots}"
        )));
    }
    let mut rng = derive_rng(cfg.seed, Purpose::Trajectory, 0);
    let v = sample_uniform(&mut rng, cfg.speed_range.0, cfg.speed_range.1);
    let mut lane = rng.gen_range(0..cfg.n_lanes);
    let mut x = T::zero();
    let mut states = Vec::with_capacity(n_slots);
    states.push(VehicleState { x, y: cfg.lane_center(lane), v, lane });
    let p = cfg.drift_probability.to_f64_lossy();
    for _ in 1..n_slots {
        x += v * cfg.slot_duration;
        let drift: f64 = rng.gen();
        if drift < p {
            let mut neighbors = Vec::with_capacity(2);
            if lane > 0 {
                neighbors.push(lane - 1);
            }
            if lane + 1 < cfg.n_lanes {
                neighbors.push(lane + 1);
            }
            if !neighbors.is_empty() {
                lane = neighbors[rng.gen_range(0..neighbors.len())];
            }
        }
        states.push(VehicleState { x, y: cfg.lane_center(lane), v, lane });
    }
    Ok(Trajectory { states, slot_duration: cfg.slot_duration })
}

/// Angle between the RSU array axis and the RSU-to-point direction,
/// clamped into the open interval (0, pi).
pub fn angle_from_axis<T: Real>(cfg: &SceneConfig<T>, point: [T; 2]) -> Result<T> {
    let r = sub2(point, cfg.rsu_position);
    let d = norm2(r);
    if d.to_f64_lossy() < 1e-9 {
        return Err(Error::DegenerateGeometry(
            "point coincides with the RSU position".into(),
        ));
    }
    let c = dot2(normalize2(cfg.rsu_array_axis), r) / d;
    let c = c.min(T::one()).max(-T::one());
    let theta = c.acos();
    let lo = T::cast(ANGLE_CLAMP);
    let hi = T::cast(std::f64::consts::PI) - lo;
    Ok(theta.max(lo).min(hi))
}

/// Ground-truth beamforming angle of a vehicle state.
pub fn true_angle<T: Real>(state: &VehicleState<T>, cfg: &SceneConfig<T>) -> Result<T> {
    angle_from_axis(cfg, [state.x, state.y])
}

/// Distance from the RSU to the vehicle.
pub fn distance<T: Real>(state: &VehicleState<T>, cfg: &SceneConfig<T>) -> T {
    norm2(sub2([state.x, state.y], cfg.rsu_position))
}

// ── Ray casting ─────────────────────────────────────────────────────────────

/// First-hit distance along `origin + t * dir` against a disk, if any.
fn ray_disk<T: Real>(origin: [T; 2], dir: [T; 2], s: &Scatterer<T>) -> Option<T> {
    let oc = sub2(origin, [s.x, s.y]);
    // |oc + t dir|^2 = r^2 with |dir| = 1
    let b = dot2(oc, dir);
    let c = dot2(oc, oc) - s.radius * s.radius;
    let disc = b * b - c;
    if disc < T::zero() {
        return None;
    }
    let sq = disc.sqrt();
    let t0 = -b - sq;
    let t1 = -b + sq;
    if t0 >= T::zero() {
        Some(t0)
    } else if t1 >= T::zero() {
        Some(T::zero()) // origin inside the disk
    } else {
        None
    }
}

/// First-hit distance against an axis-aligned box via the slab method.
fn ray_box<T: Real>(origin: [T; 2], dir: [T; 2], lo: [T; 2], hi: [T; 2]) -> Option<T> {
    let mut t_min = T::neg_infinity();
    let mut t_max = T::infinity();
    for axis in 0..2 {
        if dir[axis].abs().to_f64_lossy() < 1e-15 {
            if origin[axis] < lo[axis] || origin[axis] > hi[axis] {
                return None;
            }
        } else {
            let inv = T::one() / dir[axis];
            let mut t0 = (lo[axis] - origin[axis]) * inv;
            let mut t1 = (hi[axis] - origin[axis]) * inv;
            if t0 > t1 {
                std::mem::swap(&mut t0, &mut t1);
            }
            t_min = t_min.max(t0);
            t_max = t_max.min(t1);
            if t_min > t_max {
                return None;
            }
        }
    }
    if t_max < T::zero() {
        None
    } else {
        Some(t_min.max(T::zero()))
    }
}

/// Vehicle footprint as an axis-aligned box.
fn vehicle_box<T: Real>(cfg: &SceneConfig<T>, state: &VehicleState<T>) -> ([T; 2], [T; 2]) {
    let half = T::cast(0.5);
    let (len, wid) = cfg.vehicle_size;
    (
        [state.x - len * half, state.y - wid * half],
        [state.x + len * half, state.y + wid * half],
    )
}

/// Azimuth (from the array axis) of the `idx`-th ray of the depth raster.
///
/// The raster folds a single azimuth sweep row-major into H x W entries:
/// entry (i, j) is ray `i * w + j`, so a full row covers a contiguous slice
/// of the field of view. Ray centres sit mid-bin.
pub fn ray_azimuth<T: Real>(cfg: &SceneConfig<T>, idx: usize) -> T {
    let n = cfg.raster.h * cfg.raster.w;
    let (lo, hi) = cfg.raster.fov;
    let frac = (T::cast(idx as f64) + T::cast(0.5)) / T::cast(n as f64);
    lo + (hi - lo) * frac
}

/// Direction of a ray at azimuth `az` from the array axis, sweeping through
/// the road-side half-plane.
pub fn ray_direction<T: Real>(cfg: &SceneConfig<T>, az: T) -> [T; 2] {
    let u = normalize2(cfg.rsu_array_axis);
    let n = cfg.road_normal();
    let (s, c) = az.sin_cos();
    [c * u[0] + s * n[0], c * u[1] + s * n[1]]
}

/// First-hit distance of one ray against the vehicle box and all scatterers,
/// capped at `max_range`.
fn cast_ray<T: Real>(cfg: &SceneConfig<T>, state: &VehicleState<T>, az: T) -> T {
    let dir = ray_direction(cfg, az);
    let origin = cfg.rsu_position;
    let mut best = cfg.raster.max_range;
    let (lo, hi) = vehicle_box(cfg, state);
    if let Some(t) = ray_box(origin, dir, lo, hi) {
        best = best.min(t);
    }
    for s in &cfg.scatterers {
        if let Some(t) = ray_disk(origin, dir, s) {
            best = best.min(t);
        }
    }
    best
}

/// Render the RSU depth map: entry (i, j) is the range to the first object
/// hit by ray `i * w + j`, else `max_range`. Deterministic.
pub fn render_depth<T: Real>(cfg: &SceneConfig<T>, state: &VehicleState<T>) -> Mat<T> {
    let w = cfg.raster.w;
    Mat::from_fn(cfg.raster.h, w, |i, j| cast_ray(cfg, state, ray_azimuth(cfg, i * w + j)))
}

/// Render the top-down occupancy grid over [`SceneConfig::grid_region`]:
/// a cell is 1 when its centre lies inside the vehicle box or a scatterer
/// disk, 0 otherwise. Rows index y, columns index x. Deterministic.
pub fn render_grid<T: Real>(cfg: &SceneConfig<T>, state: &VehicleState<T>) -> Mat<T> {
    let ([x0, y0], [x1, y1]) = cfg.grid_region();
    let (h, w) = (cfg.raster.h, cfg.raster.w);
    let dx = (x1 - x0) / T::cast(w as f64);
    let dy = (y1 - y0) / T::cast(h as f64);
    let (blo, bhi) = vehicle_box(cfg, state);
    let half = T::cast(0.5);
    Mat::from_fn(h, w, |i, j| {
        let cx = x0 + (T::cast(j as f64) + half) * dx;
        let cy = y0 + (T::cast(i as f64) + half) * dy;
        let in_vehicle = cx >= blo[0] && cx <= bhi[0] && cy >= blo[1] && cy <= bhi[1];
        let in_scatterer = cfg.scatterers.iter().any(|s| {
            let rx = cx - s.x;
            let ry = cy - s.y;
            rx * rx + ry * ry <= s.radius * s.radius
        });
        if in_vehicle || in_scatterer {
            T::one()
        } else {
            T::zero()
        }
    })
}

/// Both sensing modalities for one slot.
pub fn sense<T: Real>(cfg: &SceneConfig<T>, state: &VehicleState<T>) -> SensingFrame<T> {
    SensingFrame {
        grid: render_grid(cfg, state),
        depth: render_depth(cfg, state),
        noise_var: cfg.depth_noise_var,
    }
}
