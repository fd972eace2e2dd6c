use serde::{Deserialize, Serialize};

use super::{RobotParams, Twist, WheelSpeeds};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PidGains {
    pub kp: f64,
    pub ki: f64,
    pub kd: f64,
    /// Anti-windup bound on the accumulated error integral.
    pub integral_limit: f64,
    /// Actuation saturation, symmetric.
    pub output_limit: f64,
}

impl Default for PidGains {
    fn default() -> Self {
        Self {
            kp: 1.2,
            ki: 12.0,
            kd: 0.0,
            integral_limit: 0.5,
            output_limit: 2.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PidState {
    pub gains: PidGains,
    pub integral: f64,
    pub prev_error: f64,
}

impl PidState {
    pub fn new(gains: PidGains) -> Self {
        Self {
            gains,
            integral: 0.0,
            prev_error: 0.0,
        }
    }

    pub fn step(&mut self, target: f64, measured: f64, dt: f64) -> f64 {
        let (u, next) = pid_step(target, measured, self, dt);
        *self = next;
        u
    }

    pub fn reset(&mut self) {
        self.integral = 0.0;
        self.prev_error = 0.0;
    }
}

/// Positional PID with a clamped integral and saturated output.
pub fn pid_step(target: f64, measured: f64, state: &PidState, dt: f64) -> (f64, PidState) {
    let g = state.gains;
    let error = target - measured;
    if dt <= 0.0 {
        return (0.0, *state);
    }
    let integral = (state.integral + error * dt).clamp(-g.integral_limit, g.integral_limit);
    let derivative = (error - state.prev_error) / dt;
    let u = g.kp * error + g.ki * integral + g.kd * derivative;
    let u = u.clamp(-g.output_limit, g.output_limit);
    (
        u,
        PidState {
            gains: g,
            integral,
            prev_error: error,
        },
    )
}

/// First-order wheel motor: surface speed relaxes toward the actuation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WheelMotor {
    pub velocity: f64,
    pub time_constant: f64,
    pub max_speed: f64,
}

impl WheelMotor {
    pub fn new(time_constant: f64, max_speed: f64) -> Self {
        Self {
            velocity: 0.0,
            time_constant,
            max_speed,
        }
    }

    pub fn update(&mut self, actuation: f64, dt: f64) -> f64 {
        let drive = actuation.clamp(-self.max_speed, self.max_speed);
        let alpha = (dt / self.time_constant).min(1.0);
        self.velocity += (drive - self.velocity) * alpha;
        self.velocity
    }
}

/// Two PID-regulated wheel motors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Drivetrain {
    pub left: (PidState, WheelMotor),
    pub right: (PidState, WheelMotor),
}

impl Drivetrain {
    pub const MOTOR_TIME_CONSTANT: f64 = 0.05;

    pub fn new(gains: PidGains, robot: &RobotParams) -> Self {
        let motor = WheelMotor::new(Self::MOTOR_TIME_CONSTANT, robot.max_wheel_speed);
        Self {
            left: (PidState::new(gains), motor),
            right: (PidState::new(gains), motor),
        }
    }

    pub fn measured(&self) -> WheelSpeeds {
        WheelSpeeds::new(self.left.1.velocity, self.right.1.velocity)
    }

    /// One control period: PID on each wheel, then the motor response.
    pub fn update(&mut self, targets: WheelSpeeds, dt: f64) -> WheelSpeeds {
        let run = |(pid, motor): &mut (PidState, WheelMotor), target: f64| {
            let u = pid.step(target, motor.velocity, dt);
            motor.update(u, dt)
        };
        let left = run(&mut self.left, targets.left);
        let right = run(&mut self.right, targets.right);
        WheelSpeeds::new(left, right)
    }

    /// Wheels stalled against an obstacle.
    pub fn halt(&mut self) {
        for (pid, motor) in [&mut self.left, &mut self.right] {
            pid.reset();
            motor.velocity = 0.0;
        }
    }
}

/// Rate limiter applying the acceleration clamps to commanded twists.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TwistLimiter {
    pub last: Twist,
}

impl TwistLimiter {
    pub fn apply(&mut self, target: Twist, robot: &RobotParams, dt: f64) -> Twist {
        let target = target.clamped(robot.v_max, robot.w_max);
        let dv = robot.max_accel * dt;
        let dw = robot.max_angular_accel * dt;
        self.last = Twist {
            v: self.last.v + (target.v - self.last.v).clamp(-dv, dv),
            w: self.last.w + (target.w - self.last.w).clamp(-dw, dw),
        };
        self.last
    }

    pub fn reset(&mut self) {
        self.last = Twist::ZERO;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::TICK_S;

    #[test]
    fn zero_error_zero_actuation() {
        let s = PidState::new(PidGains::default());
        let (u, _) = pid_step(0.7, 0.7, &s, 0.01);
        assert_eq!(u, 0.0);
    }

    #[test]
    fn pure_proportional() {
        let gains = PidGains {
            kp: 1.0,
            ki: 0.0,
            kd: 0.0,
            ..PidGains::default()
        };
        let (u, _) = pid_step(1.0, 0.5, &PidState::new(gains), 0.01);
        assert!((u - 0.5).abs() < 1e-15);
    }

    #[test]
    fn integral_is_clamped() {
        let gains = PidGains {
            kp: 0.0,
            ki: 1.0,
            kd: 0.0,
            integral_limit: 0.1,
            output_limit: 10.0,
        };
        let mut s = PidState::new(gains);
        for _ in 0..1000 {
            s.step(5.0, 0.0, 0.01);
        }
        assert!((s.integral - 0.1).abs() < 1e-12);
    }

    #[test]
    fn step_target_settles_within_two_seconds() {
        // closed-loop simulation against the motor model
        for target in [0.05, 0.3, 0.75, 1.0, 1.5, -0.6] {
            let mut pid = PidState::new(PidGains::default());
            let mut motor = WheelMotor::new(Drivetrain::MOTOR_TIME_CONSTANT, 2.0);
            let mut settled_at = None;
            for k in 1..=400 {
                let u = pid.step(target, motor.velocity, TICK_S);
                motor.update(u, TICK_S);
                let ok = (motor.velocity - target).abs() < 0.01 * target.abs();
                match (ok, settled_at) {
                    (true, None) => settled_at = Some(k),
                    (false, _) => settled_at = None,
                    _ => {}
                }
            }
            let k = settled_at.expect("never settled");
            assert!(k as f64 * TICK_S <= 2.0, "target {target} settled at {k}");
        }
    }

    #[test]
    fn limiter_bounds_acceleration() {
        let robot = RobotParams::default();
        let mut lim = TwistLimiter::default();
        let t = lim.apply(Twist::new(1.0, 0.0), &robot, 0.01);
        assert!((t.v - 0.01).abs() < 1e-12);
        let t = lim.apply(Twist::new(5.0, 0.0), &robot, 10.0);
        assert_eq!(t.v, robot.v_max);
    }
}
