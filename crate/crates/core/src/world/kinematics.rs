use serde::{Deserialize, Serialize};

use super::{DriveParams, Pose2D, RobotParams, WorldModel};
use crate::geometry::normalize_angle;

/// Per-wheel surface speeds in m/s.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct WheelSpeeds {
    pub left: f64,
    pub right: f64,
}

impl WheelSpeeds {
    pub const ZERO: WheelSpeeds = WheelSpeeds { left: 0.0, right: 0.0 };

    pub fn new(left: f64, right: f64) -> Self {
        Self { left, right }
    }
}

/// Signed encoder ticks accumulated since the previous read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct EncoderReading {
    pub left_ticks: i64,
    pub right_ticks: i64,
}

/// Ground-truth robot state owned by the simulation.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RobotState {
    pub pose: Pose2D,
    /// Fractional ticks not yet emitted, per wheel. Always in (-1, 1).
    pub tick_residual: [f64; 2],
}

impl RobotState {
    pub fn at(pose: Pose2D) -> Self {
        Self {
            pose,
            tick_residual: [0.0; 2],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub state: RobotState,
    pub encoders: EncoderReading,
    pub collision: bool,
    /// Wheel travel actually executed this step, metres.
    pub travel: WheelSpeeds,
}

/// Advances a pose along the exact circular arc produced by wheel travels
/// `left` and `right`.
pub fn integrate_arc(pose: Pose2D, left: f64, right: f64, wheel_base: f64) -> Pose2D {
    let d = 0.5 * (left + right);
    let dtheta = (right - left) / wheel_base;
    let (x, y) = if dtheta.abs() < 1e-12 {
        let (s, c) = pose.theta.sin_cos();
        (pose.x + d * c, pose.y + d * s)
    } else {
        let r = d / dtheta;
        let end = pose.theta + dtheta;
        (
            pose.x + r * (end.sin() - pose.theta.sin()),
            pose.y - r * (end.cos() - pose.theta.cos()),
        )
    };
    Pose2D {
        x,
        y,
        theta: normalize_angle(pose.theta + dtheta),
    }
}

/// Splits an accumulated tick count into the emitted integer part and the carried remainder.
fn quantize_ticks(accumulated: f64) -> (i64, f64) {
    let nearest = accumulated.round();
    // travel that is an exact tick multiple must not lose a tick to rounding noise
    let whole = if (accumulated - nearest).abs() < 1e-9 {
        nearest
    } else {
        accumulated.trunc()
    };
    (whole as i64, accumulated - whole)
}

/// Advances the robot by one physics step.
///
/// Wheels run at `wheels` for `dt` seconds along the exact differential-drive
/// arc. If the body circle would overlap an obstacle, the motion is cut at the
/// contact point found by bisection and `collision` is raised. Encoder ticks
/// reflect the travel actually executed.
pub fn step_world(
    world: &WorldModel,
    robot: &RobotParams,
    state: &RobotState,
    wheels: WheelSpeeds,
    dt: f64,
) -> StepOutcome {
    let mut travel = WheelSpeeds::new(wheels.left * dt, wheels.right * dt);
    if dt <= 0.0 || !travel.left.is_finite() || !travel.right.is_finite() {
        travel = WheelSpeeds::ZERO;
    }
    let base = robot.drive.wheel_base;
    let radius = robot.body_radius;
    let mut pose = integrate_arc(state.pose, travel.left, travel.right, base);
    let mut collision = false;

    let moving = travel.left != 0.0 || travel.right != 0.0;
    let start_clear = world.clearance(state.pose.position());
    let full = travel;
    let at = |f: f64| integrate_arc(state.pose, full.left * f, full.right * f, base);
    if moving {
        if start_clear < radius - 1e-9 {
            // already touching: only moves that do not dig deeper are allowed
            if world.clearance(pose.position()) < start_clear {
                collision = true;
                travel = WheelSpeeds::ZERO;
                pose = state.pose;
            }
        } else {
            // probe the swept arc finely enough that nothing is tunnelled through
            let reach = travel.left.abs().max(travel.right.abs());
            let samples = ((reach / (0.25 * radius)).ceil() as usize).max(1);
            let hit = (1..=samples)
                .map(|i| i as f64 / samples as f64)
                .find(|&f| world.circle_collides(at(f).position(), radius));
            if let Some(mut blocked) = hit {
                collision = true;
                let mut free = blocked - 1.0 / samples as f64;
                for _ in 0..48 {
                    let mid = 0.5 * (free + blocked);
                    if world.circle_collides(at(mid).position(), radius) {
                        blocked = mid;
                    } else {
                        free = mid;
                    }
                }
                travel = WheelSpeeds::new(full.left * free, full.right * free);
                pose = at(free);
            }
        }
    }

    let per_tick = robot.drive.distance_per_tick();
    let (left_ticks, left_rest) = quantize_ticks(state.tick_residual[0] + travel.left / per_tick);
    let (right_ticks, right_rest) = quantize_ticks(state.tick_residual[1] + travel.right / per_tick);

    StepOutcome {
        state: RobotState {
            pose,
            tick_residual: [left_rest, right_rest],
        },
        encoders: EncoderReading {
            left_ticks,
            right_ticks,
        },
        collision,
        travel,
    }
}

/// Integrates one encoder reading into a pose estimate.
pub fn dead_reckon(pose: Pose2D, reading: EncoderReading, params: &DriveParams) -> Pose2D {
    let per_tick = params.distance_per_tick();
    integrate_arc(
        pose,
        reading.left_ticks as f64 * per_tick,
        reading.right_ticks as f64 * per_tick,
        params.wheel_base,
    )
}
