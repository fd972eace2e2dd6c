//! Structured server log records, one JSON object per line.

use serde::{Deserialize, Serialize};

use crate::wire::{DriveMode, RejectCode, SessionRole};
use crate::world::Pose2D;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum EventKind {
    Connected { session: u32, role: SessionRole },
    Rejected { session: u32, code: RejectCode, reason: String },
    Disconnected { session: u32 },
    /// An accepted control command, in its wire form.
    Command { session: u32, command: String },
    Ignored { session: u32, command: String, reason: String },
    ModeChanged { from: DriveMode, to: DriveMode, reason: String },
    WatchdogFired { last_heartbeat_ms: u64 },
    LinkRecovered { session: u32 },
    SafePointReached { x: f64, y: f64 },
    Collision { x: f64, y: f64, mode: DriveMode },
    TelemetrySent { seq: u32, bytes: usize, stamp_ms: u64 },
    TelemetrySkipped { seq: u32, error: String },
    FrameSent { seq: u32, bytes: usize, pan: f64, tilt: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ServerEvent {
    pub t_ms: u64,
    #[serde(flatten)]
    pub kind: EventKind,
}

impl ServerEvent {
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("events serialize")
    }
}

/// Ground truth and the robot's own estimate at one tick.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruthSample {
    pub t_ms: u64,
    pub truth: Pose2D,
    pub reckoned: Pose2D,
    pub mode: DriveMode,
}
