//! The robot-side central server, free of I/O.
//!
//! A [`Server`] owns the simulated robot and is driven from outside: the
//! transport layer (or the virtual-clock loopback in [`crate::sim`]) hands it
//! command lines and datagrams, calls [`Server::step`] once per 10 ms control
//! tick and drains [`Server::drain_outbox`] onto the wire.
//!
//! Per tick the server runs the watchdog, the control loop (mode twist,
//! acceleration clamp, wheel PID, physics, dead reckoning), then the
//! telemetry and camera publishers.

mod events;
pub mod live;

pub use events::{EventKind, ServerEvent, TruthSample};

use std::collections::{BTreeMap, VecDeque};

use log::{info, warn};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::client::map_joystick;
use crate::fuzzy::{FuzzyError, NetworkCondition, ObstacleAvoider, SafePointHoming, SpeedAdapter};
use crate::sensors::{
    cast_laser, cast_sonar_with, render_frame, BatteryModel, CameraConfig, CompassModel,
    GeoPoint, GpsModel, PtzState, SensorError, SonarArray, SonarLayout, SONAR_COUNT,
};
use crate::wire::{
    classify, encode_media, encode_telemetry, ChannelClass, Command, DriveMode, Heartbeat, JoystickAxes, Message,
    RejectCode, ServerMessage, SessionRole, TelemetryFrame,
};
use crate::world::{
    dead_reckon, step_world, Drivetrain, PidGains, Pose2D, RobotParams, RobotState, Twist, TwistLimiter,
    WorldError, WorldModel, TICK_MS, TICK_S,
};

#[derive(Debug, Error)]
pub enum ServerError {
    #[error("server configuration: {0}")]
    Config(String),
    #[error(transparent)]
    World(#[from] WorldError),
    #[error(transparent)]
    Sensor(#[from] SensorError),
    #[error(transparent)]
    Fuzzy(#[from] FuzzyError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WatchdogConfig {
    pub timeout_ms: u64,
    pub heartbeat_period_ms: u64,
}

impl Default for WatchdogConfig {
    fn default() -> Self {
        Self {
            timeout_ms: 5000,
            heartbeat_period_ms: 500,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ServerConfig {
    /// Shared secret expected in CONNECT.
    pub token: String,
    pub watchdog: WatchdogConfig,
    pub telemetry_period_ms: u64,
    /// Spacing of the round-robin sonar firing inside one telemetry cycle.
    pub sonar_slot_ms: u64,
    /// Camera frame period; `None` disables the media stream.
    pub frame_period_ms: Option<u64>,
    pub laser_resolution_deg: f64,
    pub camera: CameraConfig,
    pub robot: RobotParams,
    pub pid: PidGains,
    pub gps: GpsModel,
    pub compass: CompassModel,
    pub battery: BatteryModel,
    pub noise_seed: u64,
    /// Keep a per-tick ground-truth trace.
    pub record_truth: bool,
}

impl Default for ServerConfig {
    fn default() -> Self {
        Self {
            token: "teleop".to_string(),
            watchdog: WatchdogConfig::default(),
            telemetry_period_ms: 200,
            sonar_slot_ms: 25,
            frame_period_ms: Some(100),
            laser_resolution_deg: 0.5,
            camera: CameraConfig::default(),
            robot: RobotParams::default(),
            pid: PidGains::default(),
            gps: GpsModel::default(),
            compass: CompassModel::default(),
            battery: BatteryModel::default(),
            noise_seed: 1,
            record_truth: true,
        }
    }
}

impl ServerConfig {
    pub fn validate(&self) -> Result<(), ServerError> {
        let bad = |m: &str| Err(ServerError::Config(m.to_string()));
        self.robot.validate()?;
        let w = self.watchdog;
        if w.heartbeat_period_ms == 0 || w.timeout_ms <= 2 * w.heartbeat_period_ms {
            return bad("watchdog timeout must exceed twice the heartbeat period");
        }
        let tick_multiple = |p: u64| p > 0 && p.is_multiple_of(TICK_MS);
        if !tick_multiple(self.telemetry_period_ms) {
            return bad("telemetry period must be a positive multiple of the 10 ms tick");
        }
        if let Some(p) = self.frame_period_ms {
            if !tick_multiple(p) {
                return bad("frame period must be a positive multiple of the 10 ms tick");
            }
        }
        if self.sonar_slot_ms == 0 || self.sonar_slot_ms * (SONAR_COUNT as u64 - 1) >= self.telemetry_period_ms {
            return bad("all sonar slots must fit inside one telemetry period");
        }
        crate::sensors::LaserResolution::from_degrees(self.laser_resolution_deg)?;
        Ok(())
    }
}

/// The controlling operator's session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionState {
    pub session_id: u32,
    pub authenticated: bool,
    pub last_heartbeat_ms: u64,
    pub mode: DriveMode,
    pub active_twist: Twist,
    pub v_limit: f64,
    last_heartbeat_seq: Option<u32>,
    last_joystick_seq: Option<u32>,
    /// Heartbeats came back after the watchdog fired.
    link_recovered: bool,
    at_safe_point: bool,
}

impl SessionState {
    fn new(session_id: u32, now_ms: u64, v_limit: f64) -> Self {
        Self {
            session_id,
            authenticated: true,
            last_heartbeat_ms: now_ms,
            mode: DriveMode::Manual,
            active_twist: Twist::ZERO,
            v_limit,
            last_heartbeat_seq: None,
            last_joystick_seq: None,
            link_recovered: false,
            at_safe_point: false,
        }
    }

    pub fn link_recovered(&self) -> bool {
        self.link_recovered
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Payload {
    Message(ServerMessage),
    Telemetry { seq: u32, bytes: Vec<u8> },
    Media { seq: u32, bytes: Vec<u8> },
}

/// One message for one session.
#[derive(Debug, Clone, PartialEq)]
pub struct Outgoing {
    pub session: u32,
    pub class: ChannelClass,
    pub payload: Payload,
}

impl Outgoing {
    /// Bytes on the wire, used for link delay.
    pub fn size_bytes(&self) -> usize {
        match &self.payload {
            Payload::Message(m) => m.to_string().len() + 1,
            Payload::Telemetry { bytes, .. } | Payload::Media { bytes, .. } => bytes.len(),
        }
    }
}

/// Telemetry frame being filled during one acquisition cycle.
#[derive(Debug, Clone)]
struct Acquisition {
    frame: TelemetryFrame,
    fired: [bool; SONAR_COUNT],
}

pub struct Server {
    config: ServerConfig,
    world: WorldModel,
    now_ms: u64,
    state: RobotState,
    reckoned: Pose2D,
    drivetrain: Drivetrain,
    limiter: TwistLimiter,
    sonar_layout: SonarLayout,
    sonar: SonarArray,
    speed: SpeedAdapter,
    avoider: ObstacleAvoider,
    homing: SafePointHoming,
    ptz: PtzState,
    peers: BTreeMap<u32, SessionRole>,
    session: Option<SessionState>,
    commanded: Twist,
    acquisition: Option<Acquisition>,
    telemetry_seq: u32,
    frame_seq: u32,
    odometer: f64,
    in_contact: bool,
    collisions: u64,
    events: Vec<ServerEvent>,
    outbox: VecDeque<Outgoing>,
    truth: Vec<TruthSample>,
}

impl Server {
    pub fn new(config: ServerConfig, world: WorldModel, start: Pose2D) -> Result<Self, ServerError> {
        config.validate()?;
        world.validate()?;
        let sonar_layout = SonarLayout::with_radius(config.robot.body_radius);
        let sonar = cast_sonar_with(&world, &start, &sonar_layout);
        let mut avoider = ObstacleAvoider::default();
        avoider.params.v_max = config.robot.v_max;
        avoider.params.w_max = config.robot.w_max;
        let mut speed = SpeedAdapter::default();
        speed.v_max = config.robot.v_max;
        let drivetrain = Drivetrain::new(config.pid, &config.robot);
        let mut server = Self {
            world,
            now_ms: 0,
            state: RobotState::at(start),
            reckoned: start,
            drivetrain,
            limiter: TwistLimiter::default(),
            sonar_layout,
            sonar,
            speed,
            avoider,
            homing: SafePointHoming::default(),
            ptz: PtzState::default(),
            peers: BTreeMap::new(),
            session: None,
            commanded: Twist::ZERO,
            acquisition: None,
            telemetry_seq: 0,
            frame_seq: 0,
            odometer: 0.0,
            in_contact: false,
            collisions: 0,
            events: Vec::new(),
            outbox: VecDeque::new(),
            truth: Vec::new(),
            config,
        };
        server.begin_acquisition();
        server.record_truth();
        Ok(server)
    }

    // -- accessors ----------------------------------------------------------

    pub fn config(&self) -> &ServerConfig {
        &self.config
    }

    pub fn world(&self) -> &WorldModel {
        &self.world
    }

    pub fn now_ms(&self) -> u64 {
        self.now_ms
    }

    /// Ground-truth pose.
    pub fn pose(&self) -> Pose2D {
        self.state.pose
    }

    /// Dead-reckoned pose, the one reported in telemetry.
    pub fn reckoned_pose(&self) -> Pose2D {
        self.reckoned
    }

    /// Body twist measured at the wheels.
    pub fn measured_twist(&self) -> Twist {
        self.config.robot.drive.body_twist(self.drivetrain.measured())
    }

    /// Twist handed to the acceleration clamp on the last tick.
    pub fn commanded_twist(&self) -> Twist {
        self.commanded
    }

    pub fn mode(&self) -> DriveMode {
        self.session.as_ref().map_or(DriveMode::Manual, |s| s.mode)
    }

    pub fn session(&self) -> Option<&SessionState> {
        self.session.as_ref()
    }

    pub fn sonar(&self) -> &SonarArray {
        &self.sonar
    }

    pub fn ptz(&self) -> PtzState {
        self.ptz
    }

    pub fn collisions(&self) -> u64 {
        self.collisions
    }

    pub fn telemetry_seq(&self) -> u32 {
        self.telemetry_seq
    }

    pub fn events(&self) -> &[ServerEvent] {
        &self.events
    }

    pub fn take_events(&mut self) -> Vec<ServerEvent> {
        std::mem::take(&mut self.events)
    }

    pub fn truth(&self) -> &[TruthSample] {
        &self.truth
    }

    pub fn drain_outbox(&mut self) -> Vec<Outgoing> {
        self.outbox.drain(..).collect()
    }

    // -- inbound ------------------------------------------------------------

    fn log(&mut self, kind: EventKind) {
        self.events.push(ServerEvent { t_ms: self.now_ms, kind });
    }

    fn send(&mut self, session: u32, message: ServerMessage) {
        let class = classify(&Message::Server(message.clone()));
        self.outbox.push_back(Outgoing {
            session,
            class,
            payload: Payload::Message(message),
        });
    }

    fn reject(&mut self, conn: u32, code: RejectCode, reason: &str) {
        warn!("session {conn}: rejected ({}): {reason}", code.as_str());
        self.log(EventKind::Rejected {
            session: conn,
            code,
            reason: reason.to_string(),
        });
        self.send(
            conn,
            ServerMessage::Reject {
                code,
                reason: reason.to_string(),
            },
        );
    }

    fn ignore(&mut self, conn: u32, command: &Command, reason: &str) {
        warn!("session {conn}: {} ignored: {reason}", command.kind());
        self.log(EventKind::Ignored {
            session: conn,
            command: command.to_string(),
            reason: reason.to_string(),
        });
    }

    /// One line from a command stream connection.
    pub fn handle_stream_line(&mut self, conn: u32, line: &str) {
        match line.trim().parse::<Command>() {
            Ok(cmd) => self.handle_command(conn, cmd),
            Err(e) => self.reject(conn, RejectCode::Protocol, &e.to_string()),
        }
    }

    /// One datagram from the telemetry socket. Only heartbeats and joystick
    /// axes are accepted there; they name their session inside.
    pub fn handle_datagram(&mut self, bytes: &[u8]) {
        let parsed = std::str::from_utf8(bytes)
            .ok()
            .and_then(|s| s.trim().parse::<Command>().ok());
        match parsed {
            Some(Command::Heartbeat(h)) => self.on_heartbeat(h.session, h),
            Some(Command::JoystickAxes(j)) => self.on_joystick(j.session, j),
            Some(other) => self.log(EventKind::Ignored {
                session: 0,
                command: other.to_string(),
                reason: "not a datagram message".to_string(),
            }),
            None => self.log(EventKind::Ignored {
                session: 0,
                command: String::from_utf8_lossy(bytes).into_owned(),
                reason: "malformed datagram".to_string(),
            }),
        }
    }

    /// A typed command from stream connection `conn`.
    pub fn handle_command(&mut self, conn: u32, cmd: Command) {
        if let Command::Connect { token, .. } = &cmd {
            self.on_connect(conn, token.clone());
            return;
        }
        let Some(role) = self.peers.get(&conn).copied() else {
            self.reject(conn, RejectCode::Auth, "not connected");
            return;
        };
        match cmd {
            Command::Connect { .. } => unreachable!(),
            Command::Disconnect => self.connection_closed(conn),
            Command::Heartbeat(h) => self.on_heartbeat(conn, h),
            Command::JoystickAxes(j) => self.on_joystick(conn, j),
            _ if role != SessionRole::Controller => {
                self.reject(conn, RejectCode::NotController, "session is an observer")
            }
            cmd => self.on_control(conn, cmd),
        }
    }

    fn on_connect(&mut self, conn: u32, token: String) {
        if self.peers.contains_key(&conn) {
            self.reject(conn, RejectCode::Protocol, "already connected");
            return;
        }
        if token != self.config.token {
            self.reject(conn, RejectCode::Auth, "bad token");
            return;
        }
        let role = if self.session.is_none() {
            let v_limit = self.speed.adapt(NetworkCondition::default());
            self.session = Some(SessionState::new(conn, self.now_ms, v_limit));
            SessionRole::Controller
        } else {
            SessionRole::Observer
        };
        self.peers.insert(conn, role);
        info!("session {conn} connected as {}", role.as_str());
        self.log(EventKind::Connected { session: conn, role });
        self.send(conn, ServerMessage::ConnectAck { session: conn, role });
        let mode = self.mode();
        self.send(conn, ServerMessage::Mode(mode));
    }

    /// Transport-level close or DISCONNECT. A departing controller leaves
    /// the robot stopped in MANUAL; the next CONNECT takes control.
    pub fn connection_closed(&mut self, conn: u32) {
        if self.peers.remove(&conn).is_none() {
            return;
        }
        self.log(EventKind::Disconnected { session: conn });
        if self.session.as_ref().is_some_and(|s| s.session_id == conn) {
            self.session = None;
        }
    }

    fn controller(&mut self, conn: u32) -> Option<&mut SessionState> {
        self.session.as_mut().filter(|s| s.session_id == conn)
    }

    fn set_mode(&mut self, to: DriveMode, reason: &str) {
        let Some(s) = self.session.as_mut() else { return };
        let from = s.mode;
        if from == to {
            return;
        }
        s.mode = to;
        if from == DriveMode::AutonomySafepoint {
            s.active_twist = Twist::ZERO;
            s.link_recovered = false;
            s.at_safe_point = false;
        }
        info!("mode {from} -> {to}: {reason}");
        self.log(EventKind::ModeChanged {
            from,
            to,
            reason: reason.to_string(),
        });
        let peers: Vec<u32> = self.peers.keys().copied().collect();
        for p in peers {
            self.send(p, ServerMessage::Mode(to));
        }
    }

    fn on_control(&mut self, conn: u32, cmd: Command) {
        let w_max = self.config.robot.w_max;
        let Some(s) = self.session.as_ref() else { return };
        let autonomous = s.mode == DriveMode::AutonomySafepoint;
        let recovered = s.link_recovered;
        match cmd {
            Command::SetTwist { v, w } => {
                if !(v.is_finite() && w.is_finite()) {
                    self.reject(conn, RejectCode::Protocol, "non-finite twist");
                    return;
                }
                if autonomous {
                    self.ignore(conn, &cmd, "autonomy active");
                    return;
                }
                let s = self.controller(conn).expect("controller");
                s.active_twist = Twist::new(v, w).clamped(s.v_limit, w_max);
            }
            Command::Stop => {
                if autonomous && !recovered {
                    self.ignore(conn, &cmd, "autonomy active, link not recovered");
                    return;
                }
                if autonomous {
                    self.set_mode(DriveMode::Manual, "stop after link recovery");
                }
                self.controller(conn).expect("controller").active_twist = Twist::ZERO;
            }
            Command::SetPtz { pan, tilt, zoom } => self.ptz.set(pan, tilt, zoom),
            Command::SetMode(mode) => {
                if autonomous && !recovered {
                    self.ignore(conn, &cmd, "autonomy active, link not recovered");
                    return;
                }
                self.set_mode(mode, "operator request");
            }
            _ => return,
        }
        self.log(EventKind::Command {
            session: conn,
            command: cmd.to_string(),
        });
    }

    fn on_heartbeat(&mut self, conn: u32, h: Heartbeat) {
        if !self.peers.contains_key(&conn) {
            return;
        }
        let now = self.now_ms;
        let condition = NetworkCondition {
            delay_ms: h.delay_ms.max(0.0),
            jitter_ms: h.jitter_ms.max(0.0),
        };
        let v_limit = self.speed.adapt(condition);
        let w_max = self.config.robot.w_max;
        let mut recovered_now = false;
        if let Some(s) = self.controller(conn) {
            if s.last_heartbeat_seq.is_some_and(|last| h.seq <= last) {
                return;
            }
            s.last_heartbeat_seq = Some(h.seq);
            s.last_heartbeat_ms = now;
            s.v_limit = v_limit;
            s.active_twist = s.active_twist.clamped(v_limit, w_max);
            if s.mode == DriveMode::AutonomySafepoint && !s.link_recovered {
                s.link_recovered = true;
                recovered_now = true;
            }
        }
        if recovered_now {
            info!("session {conn}: heartbeats resumed");
            self.log(EventKind::LinkRecovered { session: conn });
        }
        self.send(
            conn,
            ServerMessage::HeartbeatEcho {
                seq: h.seq,
                client_stamp_ms: h.client_stamp_ms,
            },
        );
    }

    fn on_joystick(&mut self, conn: u32, j: JoystickAxes) {
        let w_max = self.config.robot.w_max;
        if !self.peers.contains_key(&conn) {
            return;
        }
        let Some(s) = self.controller(conn) else {
            self.reject(conn, RejectCode::NotController, "session is an observer");
            return;
        };
        if s.last_joystick_seq.is_some_and(|last| j.seq <= last) || s.mode == DriveMode::AutonomySafepoint {
            return;
        }
        s.last_joystick_seq = Some(j.seq);
        s.active_twist = map_joystick(&j, s.v_limit, w_max);
    }

    // -- per tick -----------------------------------------------------------

    /// Advances the simulation by one control tick.
    pub fn step(&mut self) {
        self.now_ms += TICK_MS;
        self.watchdog_tick();
        self.control_loop_tick();
        self.publish_telemetry();
        self.publish_frames();
        self.record_truth();
    }

    /// Runs ticks until the clock reaches `t_ms`.
    pub fn advance_to(&mut self, t_ms: u64) {
        while self.now_ms + TICK_MS <= t_ms {
            self.step();
        }
    }

    fn watchdog_tick(&mut self) {
        let now = self.now_ms;
        let timeout = self.config.watchdog.timeout_ms;
        let Some(s) = self.session.as_ref() else { return };
        if s.mode != DriveMode::AutonomySafepoint && now.saturating_sub(s.last_heartbeat_ms) > timeout {
            let last = s.last_heartbeat_ms;
            warn!("no heartbeat since {last} ms, switching to autonomy");
            self.log(EventKind::WatchdogFired { last_heartbeat_ms: last });
            self.set_mode(DriveMode::AutonomySafepoint, "heartbeat timeout");
            if let Some(s) = self.session.as_mut() {
                s.link_recovered = false;
                s.at_safe_point = false;
            }
            return;
        }
        if s.mode == DriveMode::AutonomySafepoint {
            let arrived = self.state.pose.distance(&self.world.safe_point) <= self.homing.arrival_radius;
            let measured = self.measured_twist();
            let idle = measured.v.abs() < 1e-3 && measured.w.abs() < 1e-3;
            let recovered = s.link_recovered;
            let first_arrival = arrived && !s.at_safe_point;
            if first_arrival {
                let p = self.state.pose;
                self.log(EventKind::SafePointReached { x: p.x, y: p.y });
                if let Some(s) = self.session.as_mut() {
                    s.at_safe_point = true;
                }
            }
            if arrived && idle && recovered {
                self.set_mode(DriveMode::Manual, "idle at safe point after link recovery");
            }
        }
    }

    fn mode_twist(&self) -> Twist {
        let robot = &self.config.robot;
        let Some(s) = self.session.as_ref() else {
            return Twist::ZERO;
        };
        let v_cap = s.v_limit.min(robot.v_max);
        let requested = s.active_twist.clamped(v_cap, robot.w_max);
        match s.mode {
            DriveMode::Manual => requested,
            DriveMode::Assisted => self.avoider.avoid(&self.sonar, requested),
            // the last known network limit holds for autonomy too
            DriveMode::AutonomySafepoint => self
                .homing
                .home(&self.reckoned, &self.world.safe_point, &self.sonar, &self.avoider)
                .clamped(v_cap, robot.w_max),
        }
    }

    fn control_loop_tick(&mut self) {
        let robot = self.config.robot;
        self.commanded = self.mode_twist();
        let target = self.limiter.apply(self.commanded, &robot, TICK_S);
        let wheels = robot.drive.wheel_speeds(target);
        let actual = self.drivetrain.update(wheels, TICK_S);
        let out = step_world(&self.world, &robot, &self.state, actual, TICK_S);
        if out.collision {
            self.drivetrain.halt();
            self.limiter.reset();
            self.collisions += 1;
            if !self.in_contact {
                let p = out.state.pose;
                warn!("collision at ({:.3}, {:.3})", p.x, p.y);
                self.log(EventKind::Collision {
                    x: p.x,
                    y: p.y,
                    mode: self.mode(),
                });
            }
        }
        self.in_contact = out.collision;
        self.state = out.state;
        self.reckoned = dead_reckon(self.reckoned, out.encoders, &robot.drive);
        self.odometer += 0.5 * (out.travel.left.abs() + out.travel.right.abs());
        self.sonar = cast_sonar_with(&self.world, &self.state.pose, &self.sonar_layout);
    }

    fn record_truth(&mut self) {
        if self.config.record_truth {
            self.truth.push(TruthSample {
                t_ms: self.now_ms,
                truth: self.state.pose,
                reckoned: self.reckoned,
                mode: self.mode(),
            });
        }
    }

    /// Latches everything but the sonar at the start of a cycle.
    fn begin_acquisition(&mut self) {
        let seq = self.telemetry_seq + 1;
        let pose = self.state.pose;
        let seed = self.config.noise_seed ^ u64::from(seq).wrapping_mul(0x9E37_79B9_7F4A_7C15);
        let laser = cast_laser(&self.world, &pose, self.config.laser_resolution_deg)
            .map(|scan| scan.subsample_one_degree())
            .unwrap_or_default();
        let gps = self.config.gps.read(&pose, seed);
        let frame = TelemetryFrame {
            seq,
            stamp_ms: self.now_ms,
            battery_v: self.config.battery.voltage(self.now_ms as f64 / 1000.0, self.odometer),
            pose: self.reckoned,
            speed: self.measured_twist(),
            sonar: SonarArray::default(),
            laser,
            compass_deg: self.config.compass.read(&pose, seed.rotate_left(17)).heading_deg,
            gps: GeoPoint {
                latitude: gps.latitude,
                longitude: gps.longitude,
            },
        };
        self.acquisition = Some(Acquisition {
            frame,
            fired: [false; SONAR_COUNT],
        });
        self.fire_sonar_slots();
    }

    fn fire_sonar_slots(&mut self) {
        let now = self.now_ms;
        let slot = self.config.sonar_slot_ms;
        let sonar = self.sonar;
        if let Some(acq) = self.acquisition.as_mut() {
            let elapsed = now - acq.frame.stamp_ms;
            for i in 0..SONAR_COUNT {
                if !acq.fired[i] && elapsed >= i as u64 * slot {
                    acq.frame.sonar.ranges[i] = sonar.ranges[i];
                    acq.fired[i] = true;
                }
            }
        }
    }

    fn publish_telemetry(&mut self) {
        self.fire_sonar_slots();
        if !self.now_ms.is_multiple_of(self.config.telemetry_period_ms) {
            return;
        }
        if let Some(acq) = self.acquisition.take() {
            self.telemetry_seq = acq.frame.seq;
            let seq = acq.frame.seq;
            let stamp_ms = acq.frame.stamp_ms;
            match encode_telemetry(&acq.frame.quantized()) {
                Ok(bytes) => {
                    self.log(EventKind::TelemetrySent {
                        seq,
                        bytes: bytes.len(),
                        stamp_ms,
                    });
                    let peers: Vec<u32> = self.peers.keys().copied().collect();
                    for p in peers {
                        self.outbox.push_back(Outgoing {
                            session: p,
                            class: ChannelClass::Telemetry,
                            payload: Payload::Telemetry {
                                seq,
                                bytes: bytes.clone(),
                            },
                        });
                    }
                }
                Err(e) => {
                    warn!("telemetry {seq} skipped: {e}");
                    self.log(EventKind::TelemetrySkipped {
                        seq,
                        error: e.to_string(),
                    });
                }
            }
        }
        self.begin_acquisition();
    }

    fn publish_frames(&mut self) {
        let Some(period) = self.config.frame_period_ms else {
            return;
        };
        if !self.now_ms.is_multiple_of(period) || self.peers.is_empty() {
            return;
        }
        self.frame_seq += 1;
        let frame = render_frame(&self.world, &self.state.pose, &self.ptz, &self.config.camera)
            .with_header(self.frame_seq, self.now_ms);
        match encode_media(&frame, self.config.camera.format) {
            Ok(bytes) => {
                self.log(EventKind::FrameSent {
                    seq: self.frame_seq,
                    bytes: bytes.len(),
                    pan: self.ptz.pan(),
                    tilt: self.ptz.tilt(),
                });
                let peers: Vec<u32> = self.peers.keys().copied().collect();
                for p in peers {
                    self.outbox.push_back(Outgoing {
                        session: p,
                        class: ChannelClass::Media,
                        payload: Payload::Media {
                            seq: self.frame_seq,
                            bytes: bytes.clone(),
                        },
                    });
                }
            }
            Err(e) => warn!("frame {} skipped: {e}", self.frame_seq),
        }
    }
}
