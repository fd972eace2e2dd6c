//! Runs a [`Client`] over real sockets: a TCP command stream, a UDP socket
//! for telemetry and heartbeat echoes, and a UDP socket for media.

use std::io::{BufRead, BufReader, Write};
use std::net::{SocketAddr, TcpListener, TcpStream, UdpSocket};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::mpsc::{self, Receiver, Sender};
use std::sync::{Arc, Mutex};
use std::thread::{self, JoinHandle};
use std::time::{Duration, Instant};

use log::{debug, info, warn};

use super::gateway::{self, Hub, Publisher, Push};
use super::{Client, ClientConfig};
use crate::wire::{ChannelClass, ServerMessage, HEADER_LEN};

#[derive(Debug, Clone)]
pub struct LiveOptions {
    /// Server command stream.
    pub server: SocketAddr,
    /// Server datagram socket for heartbeats and joystick axes.
    pub server_datagram: SocketAddr,
    /// Where to serve the console gateway, if anywhere.
    pub gateway: Option<SocketAddr>,
    pub tick: Duration,
}

enum Inbound {
    Server(ServerMessage),
    Telemetry(Vec<u8>),
    Media(Vec<u8>),
    Closed,
}

/// True if a datagram is a telemetry packet rather than a text echo: its
/// length field matches its size.
pub fn looks_like_telemetry(bytes: &[u8]) -> bool {
    bytes.len() >= HEADER_LEN && usize::from(u16::from_be_bytes([bytes[0], bytes[1]])) == bytes.len()
}

pub struct LiveClient {
    pub client: Arc<Mutex<Client>>,
    pub hub: Hub,
    stop: Arc<AtomicBool>,
    driver: Option<JoinHandle<()>>,
}

impl LiveClient {
    /// Connects the sockets, queues CONNECT and starts the driver thread.
    pub fn start(mut config: ClientConfig, options: LiveOptions) -> std::io::Result<Self> {
        let stream = TcpStream::connect(options.server)?;
        stream.set_nodelay(true)?;
        let local_ip = stream.local_addr()?.ip();
        let telemetry = UdpSocket::bind((local_ip, 0))?;
        let media = UdpSocket::bind((local_ip, 0))?;
        config.telemetry_port = telemetry.local_addr()?.port();
        config.media_port = media.local_addr()?.port();
        info!(
            "connected to {}; telemetry on {}, media on {}",
            options.server,
            telemetry.local_addr()?,
            media.local_addr()?
        );

        let stop = Arc::new(AtomicBool::new(false));
        let (tx, rx) = mpsc::channel();
        spawn_stream_reader(stream.try_clone()?, tx.clone());
        spawn_datagram_reader(telemetry.try_clone()?, tx.clone(), Arc::clone(&stop), false);
        spawn_datagram_reader(media, tx, Arc::clone(&stop), true);

        let mut client = Client::new(config);
        client.connect().map_err(std::io::Error::other)?;
        let client = Arc::new(Mutex::new(client));
        let hub = Hub::default();

        if let Some(addr) = options.gateway {
            let listener = TcpListener::bind(addr)?;
            let (c, h) = (Arc::clone(&client), hub.clone());
            thread::spawn(move || {
                if let Err(e) = gateway::serve(listener, c, h) {
                    warn!("gateway stopped: {e}");
                }
            });
        }

        let driver = {
            let client = Arc::clone(&client);
            let hub = hub.clone();
            let stop = Arc::clone(&stop);
            thread::spawn(move || drive(client, hub, stream, telemetry, options, rx, stop))
        };
        Ok(Self {
            client,
            hub,
            stop,
            driver: Some(driver),
        })
    }

    pub fn shutdown(mut self) {
        self.stop.store(true, Ordering::SeqCst);
        if let Some(h) = self.driver.take() {
            let _ = h.join();
        }
    }
}

fn spawn_stream_reader(stream: TcpStream, tx: Sender<Inbound>) {
    thread::spawn(move || {
        for line in BufReader::new(stream).lines() {
            let Ok(line) = line else { break };
            match line.parse::<ServerMessage>() {
                Ok(m) => {
                    if tx.send(Inbound::Server(m)).is_err() {
                        return;
                    }
                }
                Err(e) => warn!("unparseable server line {line:?}: {e}"),
            }
        }
        let _ = tx.send(Inbound::Closed);
    });
}

fn spawn_datagram_reader(socket: UdpSocket, tx: Sender<Inbound>, stop: Arc<AtomicBool>, media: bool) {
    thread::spawn(move || {
        let _ = socket.set_read_timeout(Some(Duration::from_millis(50)));
        let mut buf = vec![0u8; 65536];
        while !stop.load(Ordering::SeqCst) {
            let Ok(n) = socket.recv(&mut buf) else { continue };
            let bytes = buf[..n].to_vec();
            let msg = if media {
                Inbound::Media(bytes)
            } else if looks_like_telemetry(&bytes) {
                Inbound::Telemetry(bytes)
            } else {
                match std::str::from_utf8(&bytes).ok().and_then(|s| s.trim().parse().ok()) {
                    Some(m) => Inbound::Server(m),
                    None => Inbound::Telemetry(bytes),
                }
            };
            if tx.send(msg).is_err() {
                return;
            }
        }
    });
}

fn drive(
    client: Arc<Mutex<Client>>,
    hub: Hub,
    mut stream: TcpStream,
    datagrams: UdpSocket,
    options: LiveOptions,
    rx: Receiver<Inbound>,
    stop: Arc<AtomicBool>,
) {
    let start = Instant::now();
    let mut publisher = Publisher::default();
    while !stop.load(Ordering::SeqCst) {
        let now = start.elapsed().as_millis() as u64;
        let (outbox, events) = {
            let mut c = client.lock().expect("client lock");
            c.set_time(now);
            while let Ok(msg) = rx.try_recv() {
                match msg {
                    Inbound::Server(m) => c.handle_server(m),
                    Inbound::Telemetry(b) => {
                        if let Err(e) = c.handle_telemetry(&b) {
                            debug!("dropped telemetry: {e}");
                        }
                    }
                    Inbound::Media(b) => {
                        if let Err(e) = c.handle_media(&b) {
                            debug!("dropped media: {e}");
                        } else {
                            hub.publish(Push::Frame(b));
                        }
                    }
                    Inbound::Closed => {
                        warn!("server closed the command stream");
                        stop.store(true, Ordering::SeqCst);
                    }
                }
            }
            c.tick(now);
            (c.drain_outbox(), publisher.collect(&mut c))
        };
        for ev in events {
            hub.publish(Push::Event(ev));
        }
        for out in outbox {
            let line = format!("{}\n", out.command);
            let sent = match out.class {
                ChannelClass::AdminCommand => stream.write_all(line.as_bytes()),
                _ => datagrams.send_to(line.as_bytes(), options.server_datagram).map(|_| ()),
            };
            if let Err(e) = sent {
                warn!("send {}: {e}", out.command.kind());
            }
        }
        thread::sleep(options.tick);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn echo_is_not_mistaken_for_telemetry() {
        let echo = ServerMessage::HeartbeatEcho {
            seq: 3,
            client_stamp_ms: 1500,
        }
        .to_string();
        assert!(!looks_like_telemetry(echo.as_bytes()));
        let frame = crate::wire::telemetry::tests::frame_f0();
        let bytes = crate::wire::encode_telemetry(&frame).unwrap();
        assert!(looks_like_telemetry(&bytes));
    }
}
