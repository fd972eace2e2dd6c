//! Fuzzy inference and the three on-board controllers: link-adaptive speed
//! limit, sonar obstacle avoidance and safe-point homing.
//!
//! The shipped rulebases live in `rulebases/*.fuzzy` and are compiled in;
//! each controller can also be built from a user-supplied file.

mod engine;
mod rulebase;

pub use engine::{
    defuzzify_centroid, Clause, FuzzySet, MembershipFunction, Rule, RuleBase, Term, Variable, CENTROID_GRID,
};
pub use rulebase::parse_rulebase;

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::normalize_angle;
use crate::sensors::{SonarArray, SonarLayout, SONAR_MAX_RANGE};
use crate::world::{Pose2D, Twist, V_MAX};

pub const SPEED_RULEBASE: &str = include_str!("../../rulebases/speed.fuzzy");
pub const AVOID_RULEBASE: &str = include_str!("../../rulebases/avoid.fuzzy");
pub const HOMING_RULEBASE: &str = include_str!("../../rulebases/homing.fuzzy");

/// Default minimum front clearance below which forward motion is refused.
pub const STOP_DISTANCE: f64 = 0.3;
/// Goal radius for safe-point homing.
pub const ARRIVAL_RADIUS: f64 = 0.1;
/// Pursuit keeps creeping until this close, well inside the arrival radius.
pub const STOP_RADIUS: f64 = 0.04;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FuzzyError {
    #[error("undeclared variable {0:?}")]
    UndeclaredVariable(String),
    #[error("no value given for input {0:?}")]
    MissingInput(String),
    #[error("input {0:?} is not finite")]
    NonFinite(String),
    #[error("rulebase configuration: {0}")]
    Config(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct NetworkCondition {
    pub delay_ms: f64,
    pub jitter_ms: f64,
}

fn output(rb: &RuleBase, name: &str) -> Result<usize, FuzzyError> {
    rb.output_index(name)
        .ok_or_else(|| FuzzyError::Config(format!("rulebase lacks output {name:?}")))
}

fn require_inputs(rb: &RuleBase, names: &[&str]) -> Result<(), FuzzyError> {
    for n in names {
        if rb.input_index(n).is_none() {
            return Err(FuzzyError::Config(format!("rulebase lacks input {n:?}")));
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------

/// Maps link quality to a forward speed limit.
#[derive(Debug, Clone, PartialEq)]
pub struct SpeedAdapter {
    rules: RuleBase,
    speed: usize,
    pub v_max: f64,
}

impl SpeedAdapter {
    pub fn from_text(text: &str) -> Result<Self, FuzzyError> {
        let rules = parse_rulebase(text)?;
        require_inputs(&rules, &["delay", "jitter"])?;
        let speed = output(&rules, "speed")?;
        Ok(Self {
            rules,
            speed,
            v_max: V_MAX,
        })
    }

    pub fn rules(&self) -> &RuleBase {
        &self.rules
    }

    pub fn adapt(&self, condition: NetworkCondition) -> f64 {
        let sets = match self.rules.infer(&[
            ("delay", condition.delay_ms.max(0.0)),
            ("jitter", condition.jitter_ms.max(0.0)),
        ]) {
            Ok(s) => s,
            Err(_) => return 0.0,
        };
        sets[self.speed].centroid().unwrap_or(0.0).clamp(0.0, self.v_max)
    }
}

impl Default for SpeedAdapter {
    fn default() -> Self {
        Self::from_text(SPEED_RULEBASE).expect("shipped speed rulebase is valid")
    }
}

// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AvoidParams {
    pub stop_distance: f64,
    /// Deceleration assumed by the braking envelope, m/s².
    pub brake_decel: f64,
    /// Extra clearance the braking envelope keeps beyond the stop distance.
    pub brake_margin: f64,
    /// Forward speed at which the steering correction reaches full weight.
    pub steer_full_speed: f64,
    pub v_max: f64,
    pub w_max: f64,
}

impl Default for AvoidParams {
    fn default() -> Self {
        Self {
            stop_distance: STOP_DISTANCE,
            brake_decel: 0.5,
            brake_margin: 0.1,
            steer_full_speed: 0.5,
            v_max: V_MAX,
            w_max: 1.0,
        }
    }
}

/// Sonar-driven speed scaling and steering with a crisp hard stop.
#[derive(Debug, Clone, PartialEq)]
pub struct ObstacleAvoider {
    rules: RuleBase,
    factor: usize,
    steer: usize,
    pub params: AvoidParams,
}

fn or_max(r: Option<f64>) -> f64 {
    r.unwrap_or(SONAR_MAX_RANGE).min(SONAR_MAX_RANGE)
}

impl ObstacleAvoider {
    pub fn from_text(text: &str) -> Result<Self, FuzzyError> {
        let rules = parse_rulebase(text)?;
        require_inputs(&rules, &["front", "left", "right"])?;
        Ok(Self {
            factor: output(&rules, "factor")?,
            steer: output(&rules, "steer")?,
            rules,
            params: AvoidParams::default(),
        })
    }

    pub fn rules(&self) -> &RuleBase {
        &self.rules
    }

    /// Speed allowed with `clearance` metres of free space ahead.
    fn envelope(&self, clearance: f64) -> f64 {
        let p = &self.params;
        if clearance <= p.stop_distance {
            return 0.0;
        }
        let room = (clearance - p.stop_distance - p.brake_margin).max(0.0);
        (2.0 * p.brake_decel * room).sqrt()
    }

    pub fn avoid(&self, sonar: &SonarArray, desired: Twist) -> Twist {
        let p = &self.params;
        let desired = desired.clamped(p.v_max, p.w_max);
        let front = or_max(sonar.front());
        let rear = or_max(sonar.rear());
        let left = or_max(
            [sonar.ranges[SonarLayout::FRONT_LEFT], sonar.ranges[SonarLayout::LEFT_FRONT]]
                .into_iter()
                .flatten()
                .min_by(f64::total_cmp),
        );
        let right = or_max(
            [sonar.ranges[SonarLayout::FRONT_RIGHT], sonar.ranges[SonarLayout::RIGHT_FRONT]]
                .into_iter()
                .flatten()
                .min_by(f64::total_cmp),
        );

        let (factor, steer) = match self.rules.infer(&[("front", front), ("left", left), ("right", right)]) {
            Ok(sets) => (
                sets[self.factor].centroid().unwrap_or(0.0).clamp(0.0, 1.0),
                // empty steering set: keep the requested turn rate
                sets[self.steer].centroid().unwrap_or(0.0),
            ),
            Err(_) => (0.0, 0.0),
        };

        let v = if desired.v > 0.0 {
            (desired.v * factor).min(self.envelope(front))
        } else if desired.v < 0.0 {
            -(-desired.v).min(self.envelope(rear))
        } else {
            0.0
        };
        let weight = (desired.v.max(0.0) / p.steer_full_speed).min(1.0);
        let w = (desired.w + steer * weight).clamp(-p.w_max, p.w_max);
        // crisp override, independent of the rulebase
        let v = if front <= p.stop_distance { v.min(0.0) } else { v };
        Twist { v, w }
    }
}

impl Default for ObstacleAvoider {
    fn default() -> Self {
        Self::from_text(AVOID_RULEBASE).expect("shipped avoid rulebase is valid")
    }
}

// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub struct SafePointHoming {
    rules: RuleBase,
    speed: usize,
    turn: usize,
    pub arrival_radius: f64,
    pub stop_radius: f64,
    pub v_max: f64,
    pub w_max: f64,
}

impl SafePointHoming {
    pub fn from_text(text: &str) -> Result<Self, FuzzyError> {
        let rules = parse_rulebase(text)?;
        require_inputs(&rules, &["heading_error", "distance"])?;
        Ok(Self {
            speed: output(&rules, "speed")?,
            turn: output(&rules, "turn")?,
            rules,
            arrival_radius: ARRIVAL_RADIUS,
            stop_radius: STOP_RADIUS,
            v_max: 0.5,
            w_max: 1.0,
        })
    }

    pub fn rules(&self) -> &RuleBase {
        &self.rules
    }

    /// Pursuit twist before obstacle avoidance; zero inside the stop radius.
    pub fn pursue(&self, pose: &Pose2D, safe_point: &Pose2D) -> Twist {
        let to_goal = safe_point.position() - pose.position();
        let distance = to_goal.norm();
        if distance <= self.stop_radius {
            return Twist::ZERO;
        }
        let error = normalize_angle(to_goal.y.atan2(to_goal.x) - pose.theta);
        match self.rules.infer(&[("heading_error", error), ("distance", distance)]) {
            Ok(sets) => Twist {
                v: sets[self.speed].centroid().unwrap_or(0.0).clamp(0.0, self.v_max),
                w: sets[self.turn].centroid().unwrap_or(0.0).clamp(-self.w_max, self.w_max),
            },
            Err(_) => Twist::ZERO,
        }
    }

    pub fn home(&self, pose: &Pose2D, safe_point: &Pose2D, sonar: &SonarArray, avoider: &ObstacleAvoider) -> Twist {
        let t = self.pursue(pose, safe_point);
        if t.is_zero() {
            return t;
        }
        avoider.avoid(sonar, t)
    }
}

impl Default for SafePointHoming {
    fn default() -> Self {
        Self::from_text(HOMING_RULEBASE).expect("shipped homing rulebase is valid")
    }
}

// ---------------------------------------------------------------------------

fn shipped_speed() -> &'static SpeedAdapter {
    static S: OnceLock<SpeedAdapter> = OnceLock::new();
    S.get_or_init(SpeedAdapter::default)
}

fn shipped_avoid() -> &'static ObstacleAvoider {
    static S: OnceLock<ObstacleAvoider> = OnceLock::new();
    S.get_or_init(ObstacleAvoider::default)
}

fn shipped_homing() -> &'static SafePointHoming {
    static S: OnceLock<SafePointHoming> = OnceLock::new();
    S.get_or_init(SafePointHoming::default)
}

/// Speed limit in m/s for the given link condition, shipped rulebase.
pub fn adapt_speed(condition: NetworkCondition) -> f64 {
    shipped_speed().adapt(condition)
}

pub fn avoid_obstacles(sonar: &SonarArray, desired: Twist) -> Twist {
    shipped_avoid().avoid(sonar, desired)
}

pub fn home_to_safe_point(pose: &Pose2D, safe_point: &Pose2D, sonar: &SonarArray) -> Twist {
    shipped_homing().home(pose, safe_point, sonar, shipped_avoid())
}
