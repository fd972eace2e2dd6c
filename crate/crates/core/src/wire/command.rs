//! Line-oriented text messages for the command stream and the small
//! datagrams (heartbeats, joystick axes) that share the telemetry socket.
//!
//! Client to server:
//!
//! ```text
//! CONNECT <token> <telemetry_port> <media_port>
//! DISCONNECT
//! SET_TWIST <v> <w>
//! STOP
//! SET_PTZ <pan> <tilt> <zoom>
//! SET_MODE MANUAL|ASSISTED|AUTONOMY_SAFEPOINT
//! HEARTBEAT <session> <seq> <client_stamp_ms> <delay_ms> <jitter_ms>
//! JOYSTICK_AXES <session> <seq> <horizontal> <vertical> <buttons>
//! ```
//!
//! Server to client:
//!
//! ```text
//! CONNECT_ACK <session> CONTROLLER|OBSERVER
//! REJECT <code> <reason...>
//! HEARTBEAT_ECHO <seq> <client_stamp_ms>
//! MODE <mode>
//! ```
//!
//! Requested values travel unclamped; the server applies its own limits.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const JOYSTICK_MAX: u16 = 1023;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum DriveMode {
    #[default]
    Manual,
    Assisted,
    AutonomySafepoint,
}

impl DriveMode {
    pub fn as_str(self) -> &'static str {
        match self {
            DriveMode::Manual => "MANUAL",
            DriveMode::Assisted => "ASSISTED",
            DriveMode::AutonomySafepoint => "AUTONOMY_SAFEPOINT",
        }
    }
}

impl fmt::Display for DriveMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DriveMode {
    type Err = CommandError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "MANUAL" => Ok(DriveMode::Manual),
            "ASSISTED" => Ok(DriveMode::Assisted),
            "AUTONOMY_SAFEPOINT" => Ok(DriveMode::AutonomySafepoint),
            other => Err(CommandError::BadArgument {
                kind: "SET_MODE",
                value: other.to_string(),
            }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum SessionRole {
    Controller,
    Observer,
}

impl SessionRole {
    pub fn as_str(self) -> &'static str {
        match self {
            SessionRole::Controller => "CONTROLLER",
            SessionRole::Observer => "OBSERVER",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum RejectCode {
    Auth,
    Protocol,
    NotController,
}

impl RejectCode {
    pub fn as_str(self) -> &'static str {
        match self {
            RejectCode::Auth => "AUTH",
            RejectCode::Protocol => "PROTOCOL",
            RejectCode::NotController => "NOT_CONTROLLER",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Heartbeat {
    pub session: u32,
    pub seq: u32,
    pub client_stamp_ms: u64,
    /// The client's current smoothed round-trip estimate.
    pub delay_ms: f64,
    pub jitter_ms: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct JoystickAxes {
    pub session: u32,
    pub seq: u32,
    pub horizontal: u16,
    pub vertical: u16,
    pub buttons: u16,
}

/// Everything the client sends.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Command {
    Connect {
        token: String,
        telemetry_port: u16,
        media_port: u16,
    },
    Disconnect,
    SetTwist { v: f64, w: f64 },
    Stop,
    SetPtz { pan: f64, tilt: f64, zoom: f64 },
    SetMode(DriveMode),
    Heartbeat(Heartbeat),
    JoystickAxes(JoystickAxes),
}

impl Command {
    pub fn kind(&self) -> &'static str {
        match self {
            Command::Connect { .. } => "CONNECT",
            Command::Disconnect => "DISCONNECT",
            Command::SetTwist { .. } => "SET_TWIST",
            Command::Stop => "STOP",
            Command::SetPtz { .. } => "SET_PTZ",
            Command::SetMode(_) => "SET_MODE",
            Command::Heartbeat(_) => "HEARTBEAT",
            Command::JoystickAxes(_) => "JOYSTICK_AXES",
        }
    }
}

/// Everything the server sends besides telemetry and media.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ServerMessage {
    ConnectAck { session: u32, role: SessionRole },
    Reject { code: RejectCode, reason: String },
    HeartbeatEcho { seq: u32, client_stamp_ms: u64 },
    Mode(DriveMode),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CommandError {
    #[error("empty message")]
    Empty,
    #[error("unknown message kind {0:?}")]
    UnknownKind(String),
    #[error("{kind} expects {expected} arguments, got {got}")]
    Arity {
        kind: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("{kind}: bad argument {value:?}")]
    BadArgument { kind: &'static str, value: String },
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Command::Connect {
                token,
                telemetry_port,
                media_port,
            } => write!(f, "CONNECT {token} {telemetry_port} {media_port}"),
            Command::Disconnect => f.write_str("DISCONNECT"),
            Command::SetTwist { v, w } => write!(f, "SET_TWIST {v} {w}"),
            Command::Stop => f.write_str("STOP"),
            Command::SetPtz { pan, tilt, zoom } => write!(f, "SET_PTZ {pan} {tilt} {zoom}"),
            Command::SetMode(m) => write!(f, "SET_MODE {m}"),
            Command::Heartbeat(h) => write!(
                f,
                "HEARTBEAT {} {} {} {} {}",
                h.session, h.seq, h.client_stamp_ms, h.delay_ms, h.jitter_ms
            ),
            Command::JoystickAxes(j) => write!(
                f,
                "JOYSTICK_AXES {} {} {} {} {}",
                j.session, j.seq, j.horizontal, j.vertical, j.buttons
            ),
        }
    }
}

impl fmt::Display for ServerMessage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ServerMessage::ConnectAck { session, role } => write!(f, "CONNECT_ACK {session} {}", role.as_str()),
            ServerMessage::Reject { code, reason } => write!(f, "REJECT {} {reason}", code.as_str()),
            ServerMessage::HeartbeatEcho { seq, client_stamp_ms } => {
                write!(f, "HEARTBEAT_ECHO {seq} {client_stamp_ms}")
            }
            ServerMessage::Mode(m) => write!(f, "MODE {m}"),
        }
    }
}

struct Args<'a> {
    kind: &'static str,
    rest: Vec<&'a str>,
}

impl<'a> Args<'a> {
    fn expect(&self, n: usize) -> Result<(), CommandError> {
        if self.rest.len() != n {
            return Err(CommandError::Arity {
                kind: self.kind,
                expected: n,
                got: self.rest.len(),
            });
        }
        Ok(())
    }

    fn bad(&self, i: usize) -> CommandError {
        CommandError::BadArgument {
            kind: self.kind,
            value: self.rest[i].to_string(),
        }
    }

    fn parse<T: FromStr>(&self, i: usize) -> Result<T, CommandError> {
        self.rest[i].parse().map_err(|_| self.bad(i))
    }

    fn real(&self, i: usize) -> Result<f64, CommandError> {
        let v: f64 = self.parse(i)?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(self.bad(i))
        }
    }

    fn axis(&self, i: usize) -> Result<u16, CommandError> {
        let v: u16 = self.parse(i)?;
        if v <= JOYSTICK_MAX {
            Ok(v)
        } else {
            Err(self.bad(i))
        }
    }
}

fn kind_name(word: &str) -> Option<&'static str> {
    const KINDS: [&str; 12] = [
        "CONNECT",
        "DISCONNECT",
        "SET_TWIST",
        "STOP",
        "SET_PTZ",
        "SET_MODE",
        "HEARTBEAT",
        "JOYSTICK_AXES",
        "CONNECT_ACK",
        "REJECT",
        "HEARTBEAT_ECHO",
        "MODE",
    ];
    KINDS.iter().copied().find(|k| *k == word)
}

fn split(line: &str) -> Result<Args<'_>, CommandError> {
    let mut words = line.split_whitespace();
    let first = words.next().ok_or(CommandError::Empty)?;
    let kind = kind_name(first).ok_or_else(|| CommandError::UnknownKind(first.to_string()))?;
    Ok(Args {
        kind,
        rest: words.collect(),
    })
}

impl FromStr for Command {
    type Err = CommandError;

    fn from_str(line: &str) -> Result<Self, Self::Err> {
        let a = split(line)?;
        let cmd = match a.kind {
            "CONNECT" => {
                a.expect(3)?;
                Command::Connect {
                    token: a.rest[0].to_string(),
                    telemetry_port: a.parse(1)?,
                    media_port: a.parse(2)?,
                }
            }
            "DISCONNECT" => {
                a.expect(0)?;
                Command::Disconnect
            }
            "SET_TWIST" => {
                a.expect(2)?;
                Command::SetTwist {
                    v: a.real(0)?,
                    w: a.real(1)?,
                }
            }
            "STOP" => {
                a.expect(0)?;
                Command::Stop
            }
            "SET_PTZ" => {
                a.expect(3)?;
                Command::SetPtz {
                    pan: a.real(0)?,
                    tilt: a.real(1)?,
                    zoom: a.real(2)?,
                }
            }
            "SET_MODE" => {
                a.expect(1)?;
                Command::SetMode(a.rest[0].parse()?)
            }
            "HEARTBEAT" => {
                a.expect(5)?;
                let h = Heartbeat {
                    session: a.parse(0)?,
                    seq: a.parse(1)?,
                    client_stamp_ms: a.parse(2)?,
                    delay_ms: a.real(3)?,
                    jitter_ms: a.real(4)?,
                };
                if h.delay_ms < 0.0 {
                    return Err(a.bad(3));
                }
                if h.jitter_ms < 0.0 {
                    return Err(a.bad(4));
                }
                Command::Heartbeat(h)
            }
            "JOYSTICK_AXES" => {
                a.expect(5)?;
                Command::JoystickAxes(JoystickAxes {
                    session: a.parse(0)?,
                    seq: a.parse(1)?,
                    horizontal: a.axis(2)?,
                    vertical: a.axis(3)?,
                    buttons: a.parse(4)?,
                })
            }
            other => return Err(CommandError::UnknownKind(other.to_string())),
        };
        Ok(cmd)
    }
}

impl FromStr for ServerMessage {
    type Err = CommandError;

    fn from_str(line: &str) -> Result<Self, Self::Err> {
        let a = split(line)?;
        let msg = match a.kind {
            "CONNECT_ACK" => {
                a.expect(2)?;
                let role = match a.rest[1] {
                    "CONTROLLER" => SessionRole::Controller,
                    "OBSERVER" => SessionRole::Observer,
                    _ => return Err(a.bad(1)),
                };
                ServerMessage::ConnectAck {
                    session: a.parse(0)?,
                    role,
                }
            }
            "REJECT" => {
                if a.rest.is_empty() {
                    return Err(CommandError::Arity {
                        kind: a.kind,
                        expected: 1,
                        got: 0,
                    });
                }
                let code = match a.rest[0] {
                    "AUTH" => RejectCode::Auth,
                    "PROTOCOL" => RejectCode::Protocol,
                    "NOT_CONTROLLER" => RejectCode::NotController,
                    _ => return Err(a.bad(0)),
                };
                ServerMessage::Reject {
                    code,
                    reason: a.rest[1..].join(" "),
                }
            }
            "HEARTBEAT_ECHO" => {
                a.expect(2)?;
                ServerMessage::HeartbeatEcho {
                    seq: a.parse(0)?,
                    client_stamp_ms: a.parse(1)?,
                }
            }
            "MODE" => {
                a.expect(1)?;
                ServerMessage::Mode(a.rest[0].parse()?)
            }
            other => return Err(CommandError::UnknownKind(other.to_string())),
        };
        Ok(msg)
    }
}
