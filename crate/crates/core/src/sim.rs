//! Server and client wired together through simulated links on one virtual
//! clock. Fully deterministic for a given seed.
//!
//! Scripts drive the operator side, one action per line:
//!
//! ```text
//! # t_ms  action  args
//! 0       connect
//! 1000    mode ASSISTED
//! 1000    drive 0.5 0
//! 12000   blackout 10000      # both directions, duration_ms
//! 30000   stop
//! ```

use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

use crate::client::{Client, ClientConfig, ClientError, Outbound, RenderRecord};
use crate::netsim::{DelayProfile, NetsimError, Pipe, PipeStats};
use crate::server::{Outgoing, Payload, Server, ServerConfig, ServerError, ServerEvent, TruthSample};
use crate::wire::{Command, DriveMode};
use crate::world::{Pose2D, WorldModel, TICK_MS};

/// The client's connection id on the server side.
pub const SIM_CONN: u32 = 1;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("script line {line}: {message}")]
    Script { line: usize, message: String },
    #[error(transparent)]
    Server(#[from] ServerError),
    #[error(transparent)]
    Netsim(#[from] NetsimError),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "action", rename_all = "snake_case")]
pub enum Action {
    Connect,
    Disconnect,
    Drive { v: f64, w: f64 },
    Stop,
    Ptz { pan: f64, tilt: f64, zoom: f64 },
    Mode { mode: DriveMode },
    Joystick { horizontal: u16, vertical: u16, buttons: u16 },
    Blackout { duration_ms: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScriptStep {
    pub t_ms: u64,
    #[serde(flatten)]
    pub action: Action,
}

pub fn parse_script(text: &str) -> Result<Vec<ScriptStep>, SimError> {
    let mut steps = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let f: Vec<&str> = body.split_whitespace().collect();
        let err = |message: String| SimError::Script { line, message };
        let num = |s: &str| -> Result<f64, SimError> {
            s.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| err(format!("bad number {s:?}")))
        };
        let int = |s: &str| -> Result<u64, SimError> { s.parse().map_err(|_| err(format!("bad integer {s:?}"))) };
        let t_ms = int(f[0])?;
        let Some(&verb) = f.get(1) else {
            return Err(err("missing action".into()));
        };
        let args = &f[2..];
        let arity = |n: usize| {
            if args.len() == n {
                Ok(())
            } else {
                Err(err(format!("{verb} takes {n} arguments")))
            }
        };
        let action = match verb {
            "connect" => arity(0).map(|_| Action::Connect)?,
            "disconnect" => arity(0).map(|_| Action::Disconnect)?,
            "stop" => arity(0).map(|_| Action::Stop)?,
            "drive" => {
                arity(2)?;
                Action::Drive {
                    v: num(args[0])?,
                    w: num(args[1])?,
                }
            }
            "ptz" => {
                arity(3)?;
                Action::Ptz {
                    pan: num(args[0])?,
                    tilt: num(args[1])?,
                    zoom: num(args[2])?,
                }
            }
            "mode" => {
                arity(1)?;
                Action::Mode {
                    mode: DriveMode::from_str(args[0]).map_err(|e| err(e.to_string()))?,
                }
            }
            "joystick" => {
                arity(3)?;
                let axis = |s: &str| -> Result<u16, SimError> { s.parse().map_err(|_| err(format!("bad axis {s:?}"))) };
                Action::Joystick {
                    horizontal: axis(args[0])?,
                    vertical: axis(args[1])?,
                    buttons: axis(args[2])?,
                }
            }
            "blackout" => {
                arity(1)?;
                Action::Blackout {
                    duration_ms: int(args[0])?,
                }
            }
            other => return Err(err(format!("unknown action {other:?}"))),
        };
        steps.push(ScriptStep { t_ms, action });
    }
    steps.sort_by_key(|s| s.t_ms);
    Ok(steps)
}

#[derive(Debug, Clone, Default)]
pub struct SimConfig {
    pub server: ServerConfig,
    pub client: ClientConfig,
    /// Used for both directions; the downlink gets `seed + 1`.
    pub profile: DelayProfile,
    /// `(start_ms, duration_ms)` blackouts applied to both directions.
    pub interruptions: Vec<(u64, u64)>,
}

/// Everything a run produced.
#[derive(Debug, Clone, Serialize)]
pub struct SimReport {
    pub end_ms: u64,
    pub events: Vec<ServerEvent>,
    pub truth: Vec<TruthSample>,
    pub renders: Vec<RenderRecord>,
    pub collisions: u64,
    pub uplink: PipeStats,
    pub downlink: PipeStats,
    pub client_errors: Vec<(u64, String)>,
}

pub struct Simulation {
    server: Server,
    client: Client,
    up: Pipe<Outbound>,
    down: Pipe<Outgoing>,
    script: Vec<ScriptStep>,
    next_step: usize,
    client_errors: Vec<(u64, String)>,
}

impl Simulation {
    pub fn new(config: SimConfig, world: WorldModel, start: Pose2D) -> Result<Self, SimError> {
        let server = Server::new(config.server, world, start)?;
        let seed = config.profile.seed;
        let mut up = Pipe::new(config.profile.clone())?;
        let mut down = Pipe::new(config.profile.with_seed(seed.wrapping_add(1)))?;
        for &(start, duration) in &config.interruptions {
            up.schedule_interruption(start, duration)?;
            down.schedule_interruption(start, duration)?;
        }
        Ok(Self {
            server,
            client: Client::new(config.client),
            up,
            down,
            script: Vec::new(),
            next_step: 0,
            client_errors: Vec::new(),
        })
    }

    pub fn with_script(mut self, script: Vec<ScriptStep>) -> Self {
        self.script = script;
        self.script.sort_by_key(|s| s.t_ms);
        self.next_step = 0;
        self
    }

    pub fn now_ms(&self) -> u64 {
        self.server.now_ms()
    }

    pub fn server(&self) -> &Server {
        &self.server
    }

    pub fn client(&self) -> &Client {
        &self.client
    }

    pub fn client_mut(&mut self) -> &mut Client {
        &mut self.client
    }

    pub fn uplink(&self) -> &Pipe<Outbound> {
        &self.up
    }

    pub fn downlink(&self) -> &Pipe<Outgoing> {
        &self.down
    }

    /// Cuts both directions from `start_ms` for `duration_ms`.
    pub fn schedule_blackout(&mut self, start_ms: u64, duration_ms: u64) -> Result<(), SimError> {
        self.up.schedule_interruption(start_ms, duration_ms)?;
        self.down.schedule_interruption(start_ms, duration_ms)?;
        Ok(())
    }

    /// Runs a script action now. Client refusals are recorded, not fatal.
    pub fn act(&mut self, action: &Action) -> Result<(), SimError> {
        let now = self.now_ms();
        let r: Result<(), ClientError> = match *action {
            Action::Connect => self.client.connect(),
            Action::Disconnect => self.client.disconnect(),
            Action::Drive { v, w } => self.client.send_drive(v, w),
            Action::Stop => self.client.send_stop(),
            Action::Ptz { pan, tilt, zoom } => self.client.send_ptz(pan, tilt, zoom),
            Action::Mode { mode } => self.client.send_mode(mode),
            Action::Joystick {
                horizontal,
                vertical,
                buttons,
            } => self.client.send_joystick(horizontal, vertical, buttons),
            Action::Blackout { duration_ms } => return self.schedule_blackout(now, duration_ms),
        };
        if let Err(e) = r {
            self.client_errors.push((now, format!("{action:?}: {e}")));
        }
        Ok(())
    }

    /// One 10 ms tick: the client side runs at the current instant, then the
    /// server handles what has arrived and steps its control loop.
    pub fn step(&mut self) -> Result<(), SimError> {
        let now = self.now_ms();
        self.client.set_time(now);
        for item in self.down.poll(now) {
            match item.payload {
                Payload::Message(m) => self.client.handle_server(m),
                Payload::Telemetry { bytes, .. } => {
                    let _ = self.client.handle_telemetry(&bytes);
                }
                Payload::Media { bytes, .. } => {
                    let _ = self.client.handle_media(&bytes);
                }
            }
        }
        while let Some(step) = self.script.get(self.next_step).filter(|s| s.t_ms <= now).cloned() {
            self.next_step += 1;
            self.act(&step.action)?;
        }
        self.client.tick(now);
        for out in self.client.drain_outbox() {
            let size = out.command.to_string().len() + 1;
            self.up.transmit(now, out.class, size, out);
        }

        for out in self.up.poll(now) {
            match out.command {
                Command::Heartbeat(_) | Command::JoystickAxes(_) => {
                    self.server.handle_datagram(out.command.to_string().as_bytes())
                }
                cmd => self.server.handle_command(SIM_CONN, cmd),
            }
        }
        self.server.step();
        let sent = self.server.now_ms();
        for out in self.server.drain_outbox() {
            let size = out.size_bytes();
            self.down.transmit(sent, out.class, size, out);
        }
        Ok(())
    }

    pub fn run_until(&mut self, t_ms: u64) -> Result<(), SimError> {
        while self.now_ms() + TICK_MS <= t_ms {
            self.step()?;
        }
        Ok(())
    }

    /// Steps until `done` holds or `limit_ms` is reached; returns whether it held.
    pub fn run_while(&mut self, limit_ms: u64, mut done: impl FnMut(&Self) -> bool) -> Result<bool, SimError> {
        while self.now_ms() < limit_ms {
            if done(self) {
                return Ok(true);
            }
            self.step()?;
        }
        Ok(done(self))
    }

    pub fn report(&self) -> SimReport {
        SimReport {
            end_ms: self.now_ms(),
            events: self.server.events().to_vec(),
            truth: self.server.truth().to_vec(),
            renders: self.client.renders().to_vec(),
            collisions: self.server.collisions(),
            uplink: self.up.stats(),
            downlink: self.down.stats(),
            client_errors: self.client_errors.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::server::EventKind;
    use crate::world::WorldModel;

    fn open_world() -> WorldModel {
        "bounds 0 0 20 20\nstart 2 10 0\nsafe_point 2 10 0\n"
            .parse::<crate::world::Scenario>()
            .unwrap()
            .world
    }

    fn quiet_config(profile: DelayProfile) -> SimConfig {
        let mut config = SimConfig {
            profile,
            ..SimConfig::default()
        };
        config.server.frame_period_ms = None;
        config
    }

    #[test]
    fn script_parses_and_rejects_garbage() {
        let s = parse_script("0 connect\n100 drive 0.5 0 # go\n\n200 mode ASSISTED\n").unwrap();
        assert_eq!(s.len(), 3);
        assert_eq!(s[1].action, Action::Drive { v: 0.5, w: 0.0 });
        assert!(parse_script("10 fly 3").is_err());
        assert!(parse_script("10 drive 1").is_err());
        assert!(parse_script("x connect").is_err());
    }

    #[test]
    fn connect_and_drive_over_a_constant_link() {
        let script = parse_script("0 connect\n500 drive 0.5 0\n").unwrap();
        let mut sim = Simulation::new(
            quiet_config(DelayProfile::constant(50.0)),
            open_world(),
            Pose2D::new(2.0, 10.0, 0.0),
        )
        .unwrap()
        .with_script(script);
        sim.run_until(5000).unwrap();
        assert!(sim.client().is_connected());
        assert!(sim.server().pose().x > 3.0, "moved to {:?}", sim.server().pose());
        assert!(!sim.client().renders().is_empty());
        assert!(sim
            .server()
            .events()
            .iter()
            .any(|e| matches!(e.kind, EventKind::Connected { .. })));
    }
}
