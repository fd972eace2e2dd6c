//! Operator side, free of I/O: session handshake, commands and heartbeats,
//! the network estimate, the virtual represent and the path logs.
//!
//! A [`Client`] is fed server messages, telemetry datagrams and media packets
//! by its transport, ticked on a clock, and drained for outbound commands.
//! [`gateway`] bridges it to the browser console; [`live`] runs it over real
//! sockets.

mod estimator;
pub mod gateway;
mod joystick;
pub mod live;
mod paths;
mod represent;

pub use estimator::{
    estimate_network, EstimatorConfig, LinkState, NetworkEstimate, NetworkEstimator, DELAY_GAIN, JITTER_GAIN,
};
pub use joystick::{axis_unit, map_joystick, AXIS_CENTER, AXIS_DEADZONE};
pub use paths::{interpolate, lag_report, lag_report_within, record_paths, DisplaySample, LagReport, PathPoint, PathReport};
pub use represent::{
    trace_cells, Cell, CellIndex, CellUpdate, RepresentConfig, Snapshot, TrajectoryPoint, VirtualRepresent,
};

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sensors::CameraFrame;
use crate::wire::{
    classify_command, decode_media, decode_telemetry, ChannelClass, Command, DecodeError, DriveMode, FreshestSlot,
    Heartbeat, JoystickAxes, MediaHeader, RejectCode, SeqUnwrapper, ServerMessage, SessionRole, TelemetryFrame,
};
use crate::world::V_MAX;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ClientError {
    #[error("not connected")]
    NotConnected,
    #[error("already connected or connecting")]
    AlreadyConnected,
    #[error("joystick axis {0} outside 0..=1023")]
    AxisRange(u16),
    #[error("non-finite argument")]
    NonFinite,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClientConfig {
    pub token: String,
    pub heartbeat_period_ms: u64,
    pub render_period_ms: u64,
    /// Ports announced in CONNECT for the datagram channels.
    pub telemetry_port: u16,
    pub media_port: u16,
    pub estimator: EstimatorConfig,
    pub represent: RepresentConfig,
}

impl Default for ClientConfig {
    fn default() -> Self {
        Self {
            token: "teleop".to_string(),
            heartbeat_period_ms: 500,
            render_period_ms: 100,
            telemetry_port: 0,
            media_port: 0,
            estimator: EstimatorConfig::default(),
            represent: RepresentConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "state", rename_all = "snake_case")]
pub enum ConnState {
    Disconnected,
    Connecting,
    Connected { session: u32, role: SessionRole },
}

/// A command for the transport and the channel it belongs on.
#[derive(Debug, Clone, PartialEq)]
pub struct Outbound {
    pub class: ChannelClass,
    pub command: Command,
}

/// One render tick that applied a new telemetry frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RenderRecord {
    pub render_ms: u64,
    pub seq: u32,
    pub stamp_ms: u64,
}

impl RenderRecord {
    pub fn latency_ms(&self) -> u64 {
        self.render_ms - self.stamp_ms
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReceivedFrame {
    pub header: MediaHeader,
    pub frame: CameraFrame,
    pub seq: u64,
    pub arrival_ms: u64,
}

pub struct Client {
    pub config: ClientConfig,
    now_ms: u64,
    state: ConnState,
    mode: Option<DriveMode>,
    outbox: VecDeque<Outbound>,
    estimator: NetworkEstimator,
    represent: VirtualRepresent,
    inbox: FreshestSlot<TelemetryFrame>,
    latest_telemetry: Option<TelemetryFrame>,
    heartbeat_seq: u32,
    joystick_seq: u32,
    last_heartbeat_ms: Option<u64>,
    last_render_ms: Option<u64>,
    renders: Vec<RenderRecord>,
    displays: Vec<DisplaySample>,
    snapshots: VecDeque<Snapshot>,
    sent: Vec<(u64, Command)>,
    rejects: Vec<(RejectCode, String)>,
    decode_errors: Vec<DecodeError>,
    media_seq: SeqUnwrapper,
    latest_frame: Option<ReceivedFrame>,
    frame_latencies: Vec<u64>,
    mode_changes: Vec<(u64, DriveMode)>,
}

impl Client {
    pub fn new(config: ClientConfig) -> Self {
        Self {
            estimator: NetworkEstimator::new(config.estimator),
            represent: VirtualRepresent::new(config.represent),
            config,
            now_ms: 0,
            state: ConnState::Disconnected,
            mode: None,
            outbox: VecDeque::new(),
            inbox: FreshestSlot::new(),
            latest_telemetry: None,
            heartbeat_seq: 0,
            joystick_seq: 0,
            last_heartbeat_ms: None,
            last_render_ms: None,
            renders: Vec::new(),
            displays: Vec::new(),
            snapshots: VecDeque::new(),
            sent: Vec::new(),
            rejects: Vec::new(),
            decode_errors: Vec::new(),
            media_seq: SeqUnwrapper::default(),
            latest_frame: None,
            frame_latencies: Vec::new(),
            mode_changes: Vec::new(),
        }
    }

    // -- accessors ----------------------------------------------------------

    pub fn now_ms(&self) -> u64 {
        self.now_ms
    }

    pub fn state(&self) -> ConnState {
        self.state
    }

    pub fn session(&self) -> Option<u32> {
        match self.state {
            ConnState::Connected { session, .. } => Some(session),
            _ => None,
        }
    }

    pub fn is_connected(&self) -> bool {
        self.session().is_some()
    }

    /// Mode last reported by the server.
    pub fn mode(&self) -> Option<DriveMode> {
        self.mode
    }

    pub fn mode_changes(&self) -> &[(u64, DriveMode)] {
        &self.mode_changes
    }

    pub fn estimate(&self) -> NetworkEstimate {
        self.estimator.estimate(self.now_ms)
    }

    pub fn represent(&self) -> &VirtualRepresent {
        &self.represent
    }

    pub fn latest_telemetry(&self) -> Option<&TelemetryFrame> {
        self.latest_telemetry.as_ref()
    }

    pub fn renders(&self) -> &[RenderRecord] {
        &self.renders
    }

    pub fn displays(&self) -> &[DisplaySample] {
        &self.displays
    }

    /// Commands issued, with the local time they were queued.
    pub fn sent(&self) -> &[(u64, Command)] {
        &self.sent
    }

    pub fn rejects(&self) -> &[(RejectCode, String)] {
        &self.rejects
    }

    pub fn decode_errors(&self) -> &[DecodeError] {
        &self.decode_errors
    }

    pub fn latest_frame(&self) -> Option<&ReceivedFrame> {
        self.latest_frame.as_ref()
    }

    /// Arrival time minus capture timestamp for every media frame received.
    pub fn frame_latencies(&self) -> &[u64] {
        &self.frame_latencies
    }

    pub fn drain_outbox(&mut self) -> Vec<Outbound> {
        self.outbox.drain(..).collect()
    }

    pub fn drain_snapshots(&mut self) -> Vec<Snapshot> {
        self.snapshots.drain(..).collect()
    }

    // -- commands -----------------------------------------------------------

    fn queue(&mut self, command: Command) {
        self.sent.push((self.now_ms, command.clone()));
        self.outbox.push_back(Outbound {
            class: classify_command(&command),
            command,
        });
    }

    pub fn connect(&mut self) -> Result<(), ClientError> {
        if self.state != ConnState::Disconnected {
            return Err(ClientError::AlreadyConnected);
        }
        self.state = ConnState::Connecting;
        self.queue(Command::Connect {
            token: self.config.token.clone(),
            telemetry_port: self.config.telemetry_port,
            media_port: self.config.media_port,
        });
        Ok(())
    }

    pub fn disconnect(&mut self) -> Result<(), ClientError> {
        if self.state == ConnState::Disconnected {
            return Err(ClientError::NotConnected);
        }
        self.queue(Command::Disconnect);
        self.state = ConnState::Disconnected;
        Ok(())
    }

    fn require_connected(&self) -> Result<u32, ClientError> {
        self.session().ok_or(ClientError::NotConnected)
    }

    pub fn send_drive(&mut self, v: f64, w: f64) -> Result<(), ClientError> {
        self.require_connected()?;
        if !(v.is_finite() && w.is_finite()) {
            return Err(ClientError::NonFinite);
        }
        self.queue(Command::SetTwist { v, w });
        Ok(())
    }

    pub fn send_stop(&mut self) -> Result<(), ClientError> {
        self.require_connected()?;
        self.queue(Command::Stop);
        Ok(())
    }

    pub fn send_ptz(&mut self, pan: f64, tilt: f64, zoom: f64) -> Result<(), ClientError> {
        self.require_connected()?;
        if !(pan.is_finite() && tilt.is_finite() && zoom.is_finite()) {
            return Err(ClientError::NonFinite);
        }
        self.queue(Command::SetPtz { pan, tilt, zoom });
        Ok(())
    }

    pub fn send_mode(&mut self, mode: DriveMode) -> Result<(), ClientError> {
        self.require_connected()?;
        self.queue(Command::SetMode(mode));
        Ok(())
    }

    /// Raw axes go to the server, which maps them with its own speed limit.
    pub fn send_joystick(&mut self, horizontal: u16, vertical: u16, buttons: u16) -> Result<(), ClientError> {
        let session = self.require_connected()?;
        for axis in [horizontal, vertical] {
            if axis > crate::wire::JOYSTICK_MAX {
                return Err(ClientError::AxisRange(axis));
            }
        }
        self.joystick_seq += 1;
        self.queue(Command::JoystickAxes(JoystickAxes {
            session,
            seq: self.joystick_seq,
            horizontal,
            vertical,
            buttons,
        }));
        Ok(())
    }

    // -- inbound ------------------------------------------------------------

    pub fn handle_server(&mut self, message: ServerMessage) {
        match message {
            ServerMessage::ConnectAck { session, role } => {
                self.state = ConnState::Connected { session, role };
            }
            ServerMessage::Reject { code, reason } => {
                if self.state == ConnState::Connecting {
                    self.state = ConnState::Disconnected;
                }
                self.rejects.push((code, reason));
            }
            ServerMessage::HeartbeatEcho { client_stamp_ms, .. } => {
                if client_stamp_ms <= self.now_ms {
                    self.estimator.add_sample((self.now_ms - client_stamp_ms) as f64);
                }
            }
            ServerMessage::Mode(m) => {
                if self.mode != Some(m) {
                    self.mode_changes.push((self.now_ms, m));
                }
                self.mode = Some(m);
            }
        }
    }

    /// A telemetry datagram. Corrupt packets are counted and dropped.
    pub fn handle_telemetry(&mut self, bytes: &[u8]) -> Result<(), DecodeError> {
        match decode_telemetry(bytes) {
            Ok(frame) => {
                self.estimator.telemetry_seen(self.now_ms);
                let seq = u64::from(frame.seq);
                if self.latest_telemetry.as_ref().is_none_or(|f| frame.seq > f.seq) {
                    self.latest_telemetry = Some(frame.clone());
                }
                self.inbox.offer(seq, frame);
                Ok(())
            }
            Err(e) => {
                self.decode_errors.push(e.clone());
                Err(e)
            }
        }
    }

    pub fn handle_media(&mut self, bytes: &[u8]) -> Result<(), crate::wire::MediaError> {
        let (header, frame) = decode_media(bytes)?;
        let seq = self.media_seq.unwrap(header.seq);
        // media timestamps are the low 32 bits of the server clock
        let age = (self.now_ms as u32).wrapping_sub(header.timestamp_ms);
        self.frame_latencies.push(u64::from(age));
        if self.latest_frame.as_ref().is_none_or(|f| seq > f.seq) {
            self.latest_frame = Some(ReceivedFrame {
                header,
                frame,
                seq,
                arrival_ms: self.now_ms,
            });
        }
        Ok(())
    }

    // -- clock --------------------------------------------------------------

    /// Sets the clock without running periodic work.
    pub fn set_time(&mut self, now_ms: u64) {
        self.now_ms = self.now_ms.max(now_ms);
    }

    /// Advances the clock to `now_ms` and runs whatever is due: the heartbeat
    /// and the render tick.
    pub fn tick(&mut self, now_ms: u64) {
        self.set_time(now_ms);
        if let Some(session) = self.session() {
            let due = self
                .last_heartbeat_ms
                .is_none_or(|t| self.now_ms >= t + self.config.heartbeat_period_ms);
            if due {
                self.last_heartbeat_ms = Some(self.now_ms);
                self.heartbeat_seq += 1;
                let beat = Heartbeat {
                    session,
                    seq: self.heartbeat_seq,
                    client_stamp_ms: self.now_ms,
                    delay_ms: self.estimator.delay_ms(),
                    jitter_ms: self.estimator.jitter_ms(),
                };
                self.outbox.push_back(Outbound {
                    class: ChannelClass::Telemetry,
                    command: Command::Heartbeat(beat),
                });
            }
        }
        let render_due = self
            .last_render_ms
            .is_none_or(|t| self.now_ms >= t + self.config.render_period_ms);
        if render_due {
            self.render();
        }
    }

    fn render(&mut self) {
        let now = self.now_ms;
        self.last_render_ms = Some(now - now % self.config.render_period_ms);
        if let Some((_, frame)) = self.inbox.take() {
            if self.represent.update(&frame) {
                self.renders.push(RenderRecord {
                    render_ms: now,
                    seq: frame.seq,
                    stamp_ms: frame.stamp_ms,
                });
            }
        }
        if let Some(last) = self.represent.trajectory().last() {
            self.displays.push(DisplaySample {
                render_ms: now,
                shown: *last,
            });
        }
        let snap = self.represent.snapshot(now);
        self.snapshots.push_back(snap);
    }
}

/// Default joystick scaling when no server limit is known.
pub const DEFAULT_V_LIMIT: f64 = V_MAX;
