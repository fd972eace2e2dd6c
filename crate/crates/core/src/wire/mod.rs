//! Message formats and their channel disciplines.
//!
//! | class           | transport          | discipline                |
//! |-----------------|--------------------|---------------------------|
//! | `AdminCommand`  | TCP, one line each | reliable, ordered         |
//! | `Telemetry`     | UDP datagrams      | best effort, freshest wins|
//! | `Media`         | UDP datagrams      | seq + timestamp header    |

mod checksum;
mod command;
mod freshest;
mod media;
pub(crate) mod telemetry;

pub use checksum::checksum_16;
pub use command::{
    Command, CommandError, DriveMode, Heartbeat, JoystickAxes, RejectCode, ServerMessage, SessionRole,
    JOYSTICK_MAX,
};
pub use freshest::FreshestSlot;
pub use media::{decode_media, encode_media, MediaError, MediaHeader, SeqUnwrapper, MEDIA_HEADER_LEN};
pub use telemetry::{
    decode_telemetry, decode_telemetry_with, encode_telemetry, DecodeError, DecodeErrorKind, EncodeError,
    TelemetryFrame, TelemetryLimits, HEADER_LEN, MAX_PAYLOAD_LEN,
};

use serde::{Deserialize, Serialize};

use crate::sensors::CameraFrame;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ChannelClass {
    AdminCommand,
    Telemetry,
    Media,
}

/// Any message that crosses the link.
#[derive(Debug, Clone, PartialEq)]
pub enum Message {
    Command(Command),
    Server(ServerMessage),
    Telemetry(Box<TelemetryFrame>),
    Camera(Box<CameraFrame>),
}

pub fn classify(message: &Message) -> ChannelClass {
    match message {
        Message::Command(c) => classify_command(c),
        Message::Server(ServerMessage::HeartbeatEcho { .. }) => ChannelClass::Telemetry,
        Message::Server(_) => ChannelClass::AdminCommand,
        Message::Telemetry(_) => ChannelClass::Telemetry,
        Message::Camera(_) => ChannelClass::Media,
    }
}

pub fn classify_command(command: &Command) -> ChannelClass {
    match command {
        Command::Connect { .. }
        | Command::Disconnect
        | Command::SetTwist { .. }
        | Command::Stop
        | Command::SetPtz { .. }
        | Command::SetMode(_) => ChannelClass::AdminCommand,
        Command::Heartbeat(_) | Command::JoystickAxes(_) => ChannelClass::Telemetry,
    }
}
