//! WebSocket JSON gateway between the client and a browser console.
//!
//! Text frames carry JSON objects tagged by `"type"`. The console sends
//! [`UiRequest`]s and receives [`UiEvent`]s. Camera frames go out as binary
//! WebSocket messages holding the media packet unchanged (11-byte header then
//! payload).
//!
//! ```text
//! -> {"type":"drive","v":0.5,"w":0.0}
//! <- {"type":"ack","request":"drive"}
//! <- {"type":"snapshot","t_ms":1200,"resolution":0.1,...}
//! <- {"type":"network","delay_ms":212.0,"jitter_ms":8.5,"link_state":"UP"}
//! ```

use std::io::ErrorKind;
use std::net::{TcpListener, TcpStream};
use std::sync::mpsc::{self, Receiver, Sender};
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::Duration;

use log::{debug, info, warn};
use serde::{Deserialize, Serialize};
use thiserror::Error;
use tungstenite::{Message as WsMessage, WebSocket};

use super::{Client, ClientError, ConnState, NetworkEstimate, Snapshot};
use crate::wire::{DriveMode, TelemetryFrame};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum UiRequest {
    Connect,
    Disconnect,
    Drive { v: f64, w: f64 },
    Stop,
    Ptz { pan: f64, tilt: f64, zoom: f64 },
    Mode { mode: DriveMode },
    Joystick {
        horizontal: u16,
        vertical: u16,
        #[serde(default)]
        buttons: u16,
    },
}

impl UiRequest {
    pub fn name(&self) -> &'static str {
        match self {
            UiRequest::Connect => "connect",
            UiRequest::Disconnect => "disconnect",
            UiRequest::Drive { .. } => "drive",
            UiRequest::Stop => "stop",
            UiRequest::Ptz { .. } => "ptz",
            UiRequest::Mode { .. } => "mode",
            UiRequest::Joystick { .. } => "joystick",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum UiEvent {
    Ack { request: String },
    Error { message: String },
    Session(ConnState),
    Mode { mode: DriveMode },
    Network(NetworkEstimate),
    Telemetry(Box<TelemetryFrame>),
    Snapshot(Box<Snapshot>),
}

impl UiEvent {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("gateway events serialize")
    }
}

#[derive(Debug, Error)]
pub enum GatewayError {
    #[error("malformed request: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Client(#[from] ClientError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("websocket: {0}")]
    WebSocket(Box<tungstenite::Error>),
}

impl From<tungstenite::Error> for GatewayError {
    fn from(e: tungstenite::Error) -> Self {
        GatewayError::WebSocket(Box::new(e))
    }
}

pub fn parse_request(text: &str) -> Result<UiRequest, GatewayError> {
    Ok(serde_json::from_str(text)?)
}

pub fn apply_request(client: &mut Client, request: &UiRequest) -> Result<(), ClientError> {
    match *request {
        UiRequest::Connect => client.connect(),
        UiRequest::Disconnect => client.disconnect(),
        UiRequest::Drive { v, w } => client.send_drive(v, w),
        UiRequest::Stop => client.send_stop(),
        UiRequest::Ptz { pan, tilt, zoom } => client.send_ptz(pan, tilt, zoom),
        UiRequest::Mode { mode } => client.send_mode(mode),
        UiRequest::Joystick {
            horizontal,
            vertical,
            buttons,
        } => client.send_joystick(horizontal, vertical, buttons),
    }
}

/// Handles one text frame and returns the reply: an ack or an error.
/// Errors never tear down the session.
pub fn handle_text(client: &mut Client, text: &str) -> UiEvent {
    let request = match parse_request(text) {
        Ok(r) => r,
        Err(e) => {
            return UiEvent::Error {
                message: e.to_string(),
            }
        }
    };
    match apply_request(client, &request) {
        Ok(()) => UiEvent::Ack {
            request: request.name().to_string(),
        },
        Err(e) => UiEvent::Error {
            message: format!("{}: {e}", request.name()),
        },
    }
}

/// Tracks what the console has already been told so only changes and fresh
/// snapshots go out.
#[derive(Debug, Default)]
pub struct Publisher {
    state: Option<ConnState>,
    mode: Option<DriveMode>,
    telemetry_seq: Option<u32>,
    last_network_ms: Option<u64>,
}

impl Publisher {
    /// Network estimates go out at most this often.
    pub const NETWORK_PERIOD_MS: u64 = 500;

    pub fn collect(&mut self, client: &mut Client) -> Vec<UiEvent> {
        let mut out = Vec::new();
        if self.state != Some(client.state()) {
            self.state = Some(client.state());
            out.push(UiEvent::Session(client.state()));
        }
        if let Some(m) = client.mode() {
            if self.mode != Some(m) {
                self.mode = Some(m);
                out.push(UiEvent::Mode { mode: m });
            }
        }
        if let Some(frame) = client.latest_telemetry() {
            if self.telemetry_seq != Some(frame.seq) {
                self.telemetry_seq = Some(frame.seq);
                out.push(UiEvent::Telemetry(Box::new(frame.clone())));
            }
        }
        let now = client.now_ms();
        if self.last_network_ms.is_none_or(|t| now >= t + Self::NETWORK_PERIOD_MS) {
            self.last_network_ms = Some(now);
            out.push(UiEvent::Network(client.estimate()));
        }
        out.extend(client.drain_snapshots().into_iter().map(|s| UiEvent::Snapshot(Box::new(s))));
        out
    }
}

/// What the gateway pushes to each console.
#[derive(Debug, Clone)]
pub enum Push {
    Event(UiEvent),
    Frame(Vec<u8>),
}

/// Fan-out to every connected console.
#[derive(Debug, Clone, Default)]
pub struct Hub {
    subscribers: Arc<Mutex<Vec<Sender<Push>>>>,
}

impl Hub {
    pub fn subscribe(&self) -> Receiver<Push> {
        let (tx, rx) = mpsc::channel();
        self.subscribers.lock().expect("hub lock").push(tx);
        rx
    }

    pub fn publish(&self, push: Push) {
        self.subscribers
            .lock()
            .expect("hub lock")
            .retain(|tx| tx.send(push.clone()).is_ok());
    }

    pub fn subscriber_count(&self) -> usize {
        self.subscribers.lock().expect("hub lock").len()
    }
}

/// Accepts console connections forever, one thread each.
pub fn serve(listener: TcpListener, client: Arc<Mutex<Client>>, hub: Hub) -> Result<(), GatewayError> {
    info!("gateway listening on {}", listener.local_addr()?);
    for stream in listener.incoming() {
        let stream = match stream {
            Ok(s) => s,
            Err(e) => {
                warn!("gateway accept: {e}");
                continue;
            }
        };
        let client = Arc::clone(&client);
        let rx = hub.subscribe();
        thread::spawn(move || {
            if let Err(e) = run_console(stream, client, rx) {
                debug!("console closed: {e}");
            }
        });
    }
    Ok(())
}

fn run_console(stream: TcpStream, client: Arc<Mutex<Client>>, rx: Receiver<Push>) -> Result<(), GatewayError> {
    let peer = stream.peer_addr()?;
    let mut ws: WebSocket<TcpStream> = tungstenite::accept(stream).map_err(|e| match e {
        tungstenite::HandshakeError::Failure(e) => e.into(),
        tungstenite::HandshakeError::Interrupted(_) => {
            GatewayError::Io(std::io::Error::new(ErrorKind::WouldBlock, "handshake interrupted"))
        }
    })?;
    ws.get_mut().set_read_timeout(Some(Duration::from_millis(20)))?;
    info!("console connected from {peer}");
    loop {
        match ws.read() {
            Ok(WsMessage::Text(text)) => {
                let reply = handle_text(&mut client.lock().expect("client lock"), text.as_str());
                ws.send(WsMessage::text(reply.to_json()))?;
            }
            Ok(WsMessage::Close(_)) => return Ok(()),
            Ok(_) => {}
            Err(tungstenite::Error::Io(e)) if matches!(e.kind(), ErrorKind::WouldBlock | ErrorKind::TimedOut) => {}
            Err(e) => return Err(e.into()),
        }
        while let Ok(push) = rx.try_recv() {
            let msg = match push {
                Push::Event(ev) => WsMessage::text(ev.to_json()),
                Push::Frame(bytes) => WsMessage::binary(bytes),
            };
            ws.send(msg)?;
        }
    }
}
