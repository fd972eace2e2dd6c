//! Sensor readings generated from world ground truth.
//!
//! Every function here is pure in `(world, pose, configuration, seed)`.

mod camera;

pub use camera::{
    decode_frame_payload, encode_frame_payload, render_frame, CameraConfig, CameraFrame,
    FrameFormat, FramePayloadError, PtzState,
};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::Vec2;
use crate::world::{Pose2D, WorldModel};

pub const SONAR_MIN_RANGE: f64 = 0.04;
pub const SONAR_MAX_RANGE: f64 = 4.0;
pub const LASER_MIN_RANGE: f64 = 0.04;
pub const LASER_MAX_RANGE: f64 = 80.0;
pub const LASER_FOV_DEG: f64 = 100.0;
pub const SONAR_COUNT: usize = 8;
/// Equirectangular scale used for the GPS tangent plane.
pub const METERS_PER_DEGREE: f64 = 111_320.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SensorError {
    #[error("laser resolution must be 0.25, 0.5 or 1 degree, got {0}")]
    InvalidResolution(f64),
}

/// A range reading; `None` means no echo within the sensor's range.
pub type Range = Option<f64>;

fn clamp_range(hit: Option<f64>, min: f64, max: f64) -> Range {
    match hit {
        Some(t) if t <= max => Some(t.max(min)),
        _ => None,
    }
}

fn noise_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

// ---------------------------------------------------------------------------
// Sonar

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SonarMount {
    /// Bearing relative to the robot heading, radians.
    pub angle: f64,
    /// Distance of the transducer from the robot centre.
    pub radius: f64,
}

/// Eight transducers in four pairs, one pair per side of the robot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SonarLayout {
    pub mounts: [SonarMount; SONAR_COUNT],
    /// Half-width of each beam, radians. The reported range is the nearest
    /// return across the beam.
    pub cone_half_angle: f64,
    pub rays_per_beam: usize,
}

impl SonarLayout {
    pub const FRONT_LEFT: usize = 0;
    pub const FRONT_RIGHT: usize = 1;
    pub const RIGHT_FRONT: usize = 2;
    pub const RIGHT_REAR: usize = 3;
    pub const REAR_RIGHT: usize = 4;
    pub const REAR_LEFT: usize = 5;
    pub const LEFT_REAR: usize = 6;
    pub const LEFT_FRONT: usize = 7;

    pub fn with_radius(radius: f64) -> Self {
        let deg = [10.0, -10.0, -80.0, -100.0, -170.0, 170.0, 100.0, 80.0_f64];
        let mounts = deg.map(|d| SonarMount {
            angle: d.to_radians(),
            radius,
        });
        Self {
            mounts,
            cone_half_angle: 15f64.to_radians(),
            rays_per_beam: 7,
        }
    }

    /// Bearings (relative to the mount direction) of the rays making up one beam.
    pub fn beam_offsets(&self) -> Vec<f64> {
        if self.rays_per_beam <= 1 || self.cone_half_angle == 0.0 {
            return vec![0.0];
        }
        let n = self.rays_per_beam;
        (0..n)
            .map(|i| -self.cone_half_angle + 2.0 * self.cone_half_angle * i as f64 / (n - 1) as f64)
            .collect()
    }
}

impl Default for SonarLayout {
    fn default() -> Self {
        Self::with_radius(0.3)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SonarArray {
    pub ranges: [Range; SONAR_COUNT],
}

fn min_range(values: impl IntoIterator<Item = Range>) -> Range {
    values.into_iter().flatten().min_by(f64::total_cmp)
}

impl SonarArray {
    pub fn clear() -> Self {
        Self::default()
    }

    /// Nearest return of the front pair.
    pub fn front(&self) -> Range {
        min_range([
            self.ranges[SonarLayout::FRONT_LEFT],
            self.ranges[SonarLayout::FRONT_RIGHT],
        ])
    }

    pub fn rear(&self) -> Range {
        min_range([
            self.ranges[SonarLayout::REAR_LEFT],
            self.ranges[SonarLayout::REAR_RIGHT],
        ])
    }

    /// Nearest return on the left: the left pair plus the front-left transducer.
    pub fn left(&self) -> Range {
        min_range([
            self.ranges[SonarLayout::FRONT_LEFT],
            self.ranges[SonarLayout::LEFT_FRONT],
            self.ranges[SonarLayout::LEFT_REAR],
        ])
    }

    pub fn right(&self) -> Range {
        min_range([
            self.ranges[SonarLayout::FRONT_RIGHT],
            self.ranges[SonarLayout::RIGHT_FRONT],
            self.ranges[SonarLayout::RIGHT_REAR],
        ])
    }

    pub fn is_valid(&self) -> bool {
        self.ranges
            .iter()
            .flatten()
            .all(|r| (SONAR_MIN_RANGE..=SONAR_MAX_RANGE).contains(r))
    }
}

pub fn cast_sonar(world: &WorldModel, pose: &Pose2D) -> SonarArray {
    cast_sonar_with(world, pose, &SonarLayout::default())
}

/// Casts a single transducer of `layout`.
pub fn cast_sonar_beam(world: &WorldModel, pose: &Pose2D, layout: &SonarLayout, index: usize) -> Range {
    let mount = layout.mounts[index];
    let bearing = pose.theta + mount.angle;
    let origin = pose.position() + Vec2::from_angle(bearing) * mount.radius;
    let nearest = layout
        .beam_offsets()
        .into_iter()
        .filter_map(|off| world.ray_distance(origin, Vec2::from_angle(bearing + off)))
        .min_by(f64::total_cmp);
    clamp_range(nearest, SONAR_MIN_RANGE, SONAR_MAX_RANGE)
}

pub fn cast_sonar_with(world: &WorldModel, pose: &Pose2D, layout: &SonarLayout) -> SonarArray {
    let mut ranges = [None; SONAR_COUNT];
    for (i, r) in ranges.iter_mut().enumerate() {
        *r = cast_sonar_beam(world, pose, layout, i);
    }
    SonarArray { ranges }
}

// ---------------------------------------------------------------------------
// Laser

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LaserResolution {
    Quarter,
    Half,
    One,
}

impl LaserResolution {
    pub fn from_degrees(deg: f64) -> Result<Self, SensorError> {
        match deg {
            0.25 => Ok(Self::Quarter),
            0.5 => Ok(Self::Half),
            1.0 => Ok(Self::One),
            d => Err(SensorError::InvalidResolution(d)),
        }
    }

    pub fn degrees(self) -> f64 {
        match self {
            Self::Quarter => 0.25,
            Self::Half => 0.5,
            Self::One => 1.0,
        }
    }

    pub fn beam_count(self) -> usize {
        (LASER_FOV_DEG / self.degrees()).round() as usize + 1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LaserMount {
    /// Scanner position ahead of the robot centre.
    pub forward_offset: f64,
}

impl Default for LaserMount {
    fn default() -> Self {
        Self { forward_offset: 0.3 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LaserScan {
    pub resolution: LaserResolution,
    pub ranges: Vec<Range>,
}

impl LaserScan {
    /// Bearing of beam `i` relative to the heading, degrees; beams sweep right to left.
    pub fn beam_angle_deg(&self, i: usize) -> f64 {
        -LASER_FOV_DEG / 2.0 + i as f64 * self.resolution.degrees()
    }

    /// Every beam falling on a whole-degree bearing (101 values).
    pub fn subsample_one_degree(&self) -> Vec<Range> {
        let step = (1.0 / self.resolution.degrees()).round() as usize;
        self.ranges.iter().step_by(step).copied().collect()
    }
}

pub fn cast_laser(world: &WorldModel, pose: &Pose2D, resolution_deg: f64) -> Result<LaserScan, SensorError> {
    cast_laser_with(world, pose, resolution_deg, &LaserMount::default())
}

pub fn cast_laser_with(
    world: &WorldModel,
    pose: &Pose2D,
    resolution_deg: f64,
    mount: &LaserMount,
) -> Result<LaserScan, SensorError> {
    let resolution = LaserResolution::from_degrees(resolution_deg)?;
    let origin = pose.transform(mount.forward_offset, 0.0);
    let ranges = (0..resolution.beam_count())
        .map(|i| {
            let rel = (-LASER_FOV_DEG / 2.0 + i as f64 * resolution.degrees()).to_radians();
            let hit = world.ray_distance(origin, Vec2::from_angle(pose.theta + rel));
            clamp_range(hit, LASER_MIN_RANGE, LASER_MAX_RANGE)
        })
        .collect();
    Ok(LaserScan { resolution, ranges })
}

// ---------------------------------------------------------------------------
// Compass

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum CompassConvention {
    /// 0° along world +x, counter-clockwise positive (matches `theta`).
    #[default]
    WorldX,
    /// 0° along world +y, clockwise positive.
    NorthUp,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompassReading {
    /// Heading in [0, 360), a multiple of 0.1°.
    pub heading_deg: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CompassModel {
    pub sigma_deg: f64,
    pub convention: CompassConvention,
}

/// Rounds a heading to the 0.1° resolution and wraps into [0, 360).
pub fn quantize_heading(deg: f64) -> f64 {
    let tenths = (deg.rem_euclid(360.0) * 10.0).round();
    let tenths = if tenths >= 3600.0 { tenths - 3600.0 } else { tenths };
    tenths / 10.0
}

impl CompassModel {
    pub fn read(&self, pose: &Pose2D, noise_seed: u64) -> CompassReading {
        let mut deg = match self.convention {
            CompassConvention::WorldX => pose.theta.to_degrees(),
            CompassConvention::NorthUp => 90.0 - pose.theta.to_degrees(),
        };
        if self.sigma_deg > 0.0 {
            let normal = Normal::new(0.0, self.sigma_deg).expect("positive sigma");
            deg += normal.sample(&mut noise_rng(noise_seed));
        }
        CompassReading {
            heading_deg: quantize_heading(deg),
        }
    }
}

pub fn read_compass(pose: &Pose2D, noise_seed: u64) -> CompassReading {
    CompassModel::default().read(pose, noise_seed)
}

// ---------------------------------------------------------------------------
// GPS

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeoPoint {
    pub latitude: f64,
    pub longitude: f64,
}

impl Default for GeoPoint {
    /// A campus in Hanoi.
    fn default() -> Self {
        Self {
            latitude: 21.038,
            longitude: 105.7827,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GpsReading {
    pub latitude: f64,
    pub longitude: f64,
    pub fix_valid: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GpsModel {
    pub origin: GeoPoint,
    /// Horizontal noise per axis, metres.
    pub sigma_m: f64,
}

impl Default for GpsModel {
    fn default() -> Self {
        Self {
            origin: GeoPoint::default(),
            sigma_m: 2.0,
        }
    }
}

/// Local tangent-plane metres to latitude/longitude around `origin`.
pub fn local_to_geo(p: Vec2, origin: &GeoPoint) -> GeoPoint {
    let lat = origin.latitude + p.y / METERS_PER_DEGREE;
    let lon = origin.longitude + p.x / (METERS_PER_DEGREE * origin.latitude.to_radians().cos());
    GeoPoint {
        latitude: lat,
        longitude: lon,
    }
}

pub fn geo_to_local(g: &GeoPoint, origin: &GeoPoint) -> Vec2 {
    Vec2::new(
        (g.longitude - origin.longitude) * METERS_PER_DEGREE * origin.latitude.to_radians().cos(),
        (g.latitude - origin.latitude) * METERS_PER_DEGREE,
    )
}

impl GpsModel {
    pub fn read(&self, pose: &Pose2D, noise_seed: u64) -> GpsReading {
        let mut p = pose.position();
        if self.sigma_m > 0.0 {
            let normal = Normal::new(0.0, self.sigma_m).expect("positive sigma");
            let mut rng = noise_rng(noise_seed);
            p = p + Vec2::new(normal.sample(&mut rng), normal.sample(&mut rng));
        }
        let g = local_to_geo(p, &self.origin);
        GpsReading {
            latitude: g.latitude,
            longitude: g.longitude,
            fix_valid: true,
        }
    }
}

pub fn read_gps(pose: &Pose2D, origin: &GeoPoint, noise_seed: u64) -> GpsReading {
    GpsModel {
        origin: *origin,
        ..GpsModel::default()
    }
    .read(pose, noise_seed)
}

// ---------------------------------------------------------------------------
// Battery

/// Linear discharge with time and distance driven.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BatteryModel {
    pub full_v: f64,
    pub empty_v: f64,
    pub idle_drain_v_per_s: f64,
    pub motion_drain_v_per_m: f64,
}

impl Default for BatteryModel {
    fn default() -> Self {
        Self {
            full_v: 12.6,
            empty_v: 10.5,
            idle_drain_v_per_s: 1.0e-4,
            motion_drain_v_per_m: 2.0e-3,
        }
    }
}

impl BatteryModel {
    pub fn voltage(&self, elapsed_s: f64, odometer_m: f64) -> f64 {
        let v = self.full_v - self.idle_drain_v_per_s * elapsed_s - self.motion_drain_v_per_m * odometer_m;
        v.max(self.empty_v)
    }
}
