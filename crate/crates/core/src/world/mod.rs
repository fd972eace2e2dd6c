//! Deterministic 2D world and differential-drive robot physics.
//!
//! The world is a bounded rectangle holding convex polygon and line-segment
//! obstacles. The robot body is a circle. Everything advances on a fixed
//! 10 ms physics tick.

pub mod generate;
mod kinematics;
mod pid;
mod scenario;

pub use kinematics::{
    dead_reckon, integrate_arc, step_world, EncoderReading, RobotState, StepOutcome, WheelSpeeds,
};
pub use pid::{pid_step, Drivetrain, PidGains, PidState, TwistLimiter, WheelMotor};
pub use scenario::{parse_scenario, Scenario};

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{normalize_angle, Obstacle, Rect, Vec2};

/// Fixed physics tick in milliseconds.
pub const TICK_MS: u64 = 10;
/// Fixed physics tick in seconds.
pub const TICK_S: f64 = TICK_MS as f64 / 1000.0;
/// Top forward speed of the platform, m/s.
pub const V_MAX: f64 = 1.5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WorldError {
    #[error("invalid drive parameters: {0}")]
    InvalidParams(String),
    #[error("invalid world: {0}")]
    InvalidWorld(String),
    #[error("scenario line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// Robot position and heading. `theta` is kept in (-π, π].
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Pose2D {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

impl Pose2D {
    pub fn new(x: f64, y: f64, theta: f64) -> Self {
        Self {
            x,
            y,
            theta: normalize_angle(theta),
        }
    }

    pub fn position(&self) -> Vec2 {
        Vec2::new(self.x, self.y)
    }

    pub fn heading(&self) -> Vec2 {
        Vec2::from_angle(self.theta)
    }

    pub fn distance(&self, other: &Pose2D) -> f64 {
        self.position().distance(other.position())
    }

    /// Point at `forward` metres ahead and `left` metres to the side, in world frame.
    pub fn transform(&self, forward: f64, left: f64) -> Vec2 {
        let (s, c) = self.theta.sin_cos();
        Vec2::new(self.x + c * forward - s * left, self.y + s * forward + c * left)
    }
}

/// Commanded body velocities.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Twist {
    pub v: f64,
    pub w: f64,
}

impl Twist {
    pub const ZERO: Twist = Twist { v: 0.0, w: 0.0 };

    pub fn new(v: f64, w: f64) -> Self {
        Self { v, w }
    }

    pub fn clamped(self, v_max: f64, w_max: f64) -> Self {
        let fin = |x: f64| if x.is_finite() { x } else { 0.0 };
        Self {
            v: fin(self.v).clamp(-v_max, v_max),
            w: fin(self.w).clamp(-w_max, w_max),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.v == 0.0 && self.w == 0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriveParams {
    pub wheel_radius: f64,
    pub wheel_base: f64,
    pub ticks_per_rev: u32,
}

impl Default for DriveParams {
    fn default() -> Self {
        Self {
            wheel_radius: 0.1,
            wheel_base: 0.4,
            ticks_per_rev: 500,
        }
    }
}

impl DriveParams {
    pub fn validate(&self) -> Result<(), WorldError> {
        if !(self.wheel_radius > 0.0 && self.wheel_radius.is_finite()) {
            return Err(WorldError::InvalidParams("wheel_radius must be > 0".into()));
        }
        if !(self.wheel_base > 0.0 && self.wheel_base.is_finite()) {
            return Err(WorldError::InvalidParams("wheel_base must be > 0".into()));
        }
        if self.ticks_per_rev == 0 {
            return Err(WorldError::InvalidParams("ticks_per_rev must be > 0".into()));
        }
        Ok(())
    }

    /// Wheel travel per encoder tick, metres.
    pub fn distance_per_tick(&self) -> f64 {
        2.0 * PI * self.wheel_radius / self.ticks_per_rev as f64
    }

    /// Splits a body twist into left/right wheel surface speeds.
    pub fn wheel_speeds(&self, twist: Twist) -> WheelSpeeds {
        let half = 0.5 * self.wheel_base * twist.w;
        WheelSpeeds {
            left: twist.v - half,
            right: twist.v + half,
        }
    }

    pub fn body_twist(&self, wheels: WheelSpeeds) -> Twist {
        Twist {
            v: 0.5 * (wheels.left + wheels.right),
            w: (wheels.right - wheels.left) / self.wheel_base,
        }
    }
}

/// Physical description of the simulated robot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RobotParams {
    pub drive: DriveParams,
    /// Collision footprint radius.
    pub body_radius: f64,
    pub v_max: f64,
    pub w_max: f64,
    /// Linear acceleration clamp, m/s².
    pub max_accel: f64,
    /// Angular acceleration clamp, rad/s².
    pub max_angular_accel: f64,
    /// Motor saturation, wheel surface speed in m/s.
    pub max_wheel_speed: f64,
}

impl Default for RobotParams {
    fn default() -> Self {
        Self {
            drive: DriveParams::default(),
            body_radius: 0.3,
            v_max: V_MAX,
            w_max: 1.0,
            max_accel: 1.0,
            max_angular_accel: 3.0,
            max_wheel_speed: 2.0,
        }
    }
}

impl RobotParams {
    pub fn validate(&self) -> Result<(), WorldError> {
        self.drive.validate()?;
        let positive = [
            ("body_radius", self.body_radius),
            ("v_max", self.v_max),
            ("w_max", self.w_max),
            ("max_accel", self.max_accel),
            ("max_angular_accel", self.max_angular_accel),
            ("max_wheel_speed", self.max_wheel_speed),
        ];
        for (name, value) in positive {
            if !(value > 0.0 && value.is_finite()) {
                return Err(WorldError::InvalidParams(format!("{name} must be > 0")));
            }
        }
        Ok(())
    }
}

/// What a ray cast against the world struck.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HitKind {
    Boundary,
    Obstacle(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct WorldModel {
    pub bounds: Rect,
    pub obstacles: Vec<Obstacle>,
    pub safe_point: Pose2D,
}

impl WorldModel {
    pub fn new(bounds: Rect, obstacles: Vec<Obstacle>, safe_point: Pose2D) -> Result<Self, WorldError> {
        let world = Self {
            bounds,
            obstacles,
            safe_point,
        };
        world.validate()?;
        Ok(world)
    }

    /// Empty rectangular room with the safe point at its centre.
    pub fn empty_room(width: f64, height: f64) -> Self {
        let bounds = Rect::new(Vec2::ZERO, Vec2::new(width, height)).expect("positive room size");
        Self {
            bounds,
            obstacles: Vec::new(),
            safe_point: Pose2D::new(width / 2.0, height / 2.0, 0.0),
        }
    }

    pub fn validate(&self) -> Result<(), WorldError> {
        let sp = self.safe_point.position();
        if !self.bounds.contains(sp) {
            return Err(WorldError::InvalidWorld("safe point outside bounds".into()));
        }
        if self.obstacles.iter().any(|o| o.distance_to(sp) == 0.0) {
            return Err(WorldError::InvalidWorld("safe point inside an obstacle".into()));
        }
        Ok(())
    }

    /// Nearest hit along a unit-direction ray, including the boundary walls.
    pub fn ray_cast(&self, origin: Vec2, dir: Vec2) -> Option<(f64, HitKind)> {
        let walls = self
            .bounds
            .walls()
            .into_iter()
            .filter_map(|w| w.ray_hit(origin, dir).map(|t| (t, HitKind::Boundary)));
        let obstacles = self
            .obstacles
            .iter()
            .enumerate()
            .filter_map(|(i, o)| o.ray_hit(origin, dir).map(|t| (t, HitKind::Obstacle(i))));
        walls.chain(obstacles).min_by(|a, b| a.0.total_cmp(&b.0))
    }

    pub fn ray_distance(&self, origin: Vec2, dir: Vec2) -> Option<f64> {
        self.ray_cast(origin, dir).map(|(t, _)| t)
    }

    /// Distance from `p` to the nearest obstacle surface or wall (0 inside).
    pub fn clearance(&self, p: Vec2) -> f64 {
        let wall = if self.bounds.contains(p) {
            self.bounds.inner_clearance(p)
        } else {
            0.0
        };
        self.obstacles
            .iter()
            .map(|o| o.distance_to(p))
            .fold(wall, f64::min)
    }

    /// True when a circle of `radius` centred at `p` overlaps an obstacle or leaves the bounds.
    pub fn circle_collides(&self, p: Vec2, radius: f64) -> bool {
        self.clearance(p) < radius - 1e-9
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Polygon;

    #[test]
    fn pose_normalizes_heading() {
        let p = Pose2D::new(0.0, 0.0, 3.0 * PI);
        assert!((p.theta - PI).abs() < 1e-12);
        let q = Pose2D::new(0.0, 0.0, -PI);
        assert_eq!(q.theta, PI);
    }

    #[test]
    fn world_rejects_blocked_safe_point() {
        let bounds = Rect::new(Vec2::ZERO, Vec2::new(10.0, 10.0)).unwrap();
        let block = Polygon::rectangle(Vec2::new(4.0, 4.0), Vec2::new(6.0, 6.0)).unwrap();
        let err = WorldModel::new(bounds, vec![Obstacle::Polygon(block)], Pose2D::new(5.0, 5.0, 0.0));
        assert!(matches!(err, Err(WorldError::InvalidWorld(_))));
        let outside = WorldModel::new(bounds, vec![], Pose2D::new(11.0, 5.0, 0.0));
        assert!(outside.is_err());
    }

    #[test]
    fn drive_params_reject_non_positive() {
        let mut p = DriveParams::default();
        assert!(p.validate().is_ok());
        p.wheel_base = 0.0;
        assert!(p.validate().is_err());
        let r = RobotParams {
            body_radius: -1.0,
            ..RobotParams::default()
        };
        assert!(r.validate().is_err());
    }

    #[test]
    fn wheel_speed_split_round_trips() {
        let d = DriveParams::default();
        let t = Twist::new(0.7, -0.4);
        let back = d.body_twist(d.wheel_speeds(t));
        assert!((back.v - t.v).abs() < 1e-12 && (back.w - t.w).abs() < 1e-12);
    }

    #[test]
    fn clearance_sees_walls_and_obstacles() {
        let mut w = WorldModel::empty_room(10.0, 10.0);
        assert!((w.clearance(Vec2::new(1.0, 5.0)) - 1.0).abs() < 1e-12);
        w.obstacles.push(Obstacle::Polygon(
            Polygon::rectangle(Vec2::new(5.5, 4.0), Vec2::new(6.0, 6.0)).unwrap(),
        ));
        assert!((w.clearance(Vec2::new(5.0, 5.0)) - 0.5).abs() < 1e-12);
        assert!(w.circle_collides(Vec2::new(5.0, 5.0), 0.6));
        assert!(!w.circle_collides(Vec2::new(5.0, 5.0), 0.4));
    }
}
