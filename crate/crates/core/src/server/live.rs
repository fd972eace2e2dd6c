//! Runs a [`Server`] on real sockets against the wall clock.
//!
//! One TCP listener carries command streams (a line each way per message).
//! One UDP socket receives heartbeats and joystick axes and sends telemetry,
//! heartbeat echoes and media to the ports each client announced in CONNECT.

use std::collections::HashMap;
use std::io::{BufRead, BufReader, Write};
use std::net::{IpAddr, SocketAddr, TcpListener, TcpStream, UdpSocket};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::mpsc::{self, Receiver, Sender};
use std::sync::Arc;
use std::thread;
use std::time::{Duration, Instant};

use log::{info, warn};

use super::{Outgoing, Payload, Server};
use crate::wire::Command;
use crate::world::TICK_MS;

enum Inbound {
    Opened { conn: u32, stream: TcpStream },
    Line { conn: u32, line: String },
    Closed { conn: u32 },
    Datagram(Vec<u8>),
}

struct Peer {
    stream: TcpStream,
    ip: IpAddr,
    telemetry_port: u16,
    media_port: u16,
}

pub struct LiveServer {
    pub stream_addr: SocketAddr,
    pub datagram_addr: SocketAddr,
    listener: TcpListener,
    datagrams: UdpSocket,
}

impl LiveServer {
    pub fn bind(stream_addr: SocketAddr, datagram_addr: SocketAddr) -> std::io::Result<Self> {
        let listener = TcpListener::bind(stream_addr)?;
        let datagrams = UdpSocket::bind(datagram_addr)?;
        Ok(Self {
            stream_addr: listener.local_addr()?,
            datagram_addr: datagrams.local_addr()?,
            listener,
            datagrams,
        })
    }

    /// Runs until `stop` is set. `on_tick` sees the server after every
    /// control tick, for logging.
    pub fn run(self, mut server: Server, stop: Arc<AtomicBool>, mut on_tick: impl FnMut(&mut Server)) {
        info!("command stream on {}, datagrams on {}", self.stream_addr, self.datagram_addr);
        let (tx, rx) = mpsc::channel();
        spawn_acceptor(self.listener, tx.clone());
        spawn_datagram_reader(self.datagrams.try_clone().expect("clone udp socket"), tx, Arc::clone(&stop));

        let mut peers: HashMap<u32, Peer> = HashMap::new();
        let start = Instant::now();
        let origin = server.now_ms();
        while !stop.load(Ordering::SeqCst) {
            drain_inbound(&rx, &mut server, &mut peers);
            let wall = origin + start.elapsed().as_millis() as u64;
            while server.now_ms() + TICK_MS <= wall {
                server.step();
                on_tick(&mut server);
                for out in server.drain_outbox() {
                    route(&self.datagrams, &mut peers, out);
                }
            }
            thread::sleep(Duration::from_millis(2));
        }
    }
}

fn drain_inbound(rx: &Receiver<Inbound>, server: &mut Server, peers: &mut HashMap<u32, Peer>) {
    while let Ok(msg) = rx.try_recv() {
        match msg {
            Inbound::Opened { conn, stream } => {
                let ip = stream.peer_addr().map(|a| a.ip()).unwrap_or(IpAddr::from([127, 0, 0, 1]));
                peers.insert(
                    conn,
                    Peer {
                        stream,
                        ip,
                        telemetry_port: 0,
                        media_port: 0,
                    },
                );
            }
            Inbound::Line { conn, line } => {
                if let Ok(Command::Connect {
                    telemetry_port,
                    media_port,
                    ..
                }) = line.trim().parse::<Command>()
                {
                    if let Some(p) = peers.get_mut(&conn) {
                        p.telemetry_port = telemetry_port;
                        p.media_port = media_port;
                    }
                }
                server.handle_stream_line(conn, &line);
            }
            Inbound::Closed { conn } => {
                peers.remove(&conn);
                server.connection_closed(conn);
            }
            Inbound::Datagram(bytes) => server.handle_datagram(&bytes),
        }
    }
}

fn route(socket: &UdpSocket, peers: &mut HashMap<u32, Peer>, out: Outgoing) {
    let Some(peer) = peers.get_mut(&out.session) else {
        return;
    };
    let result = match &out.payload {
        Payload::Message(m) if out.class == crate::wire::ChannelClass::AdminCommand => {
            peer.stream.write_all(format!("{m}\n").as_bytes())
        }
        Payload::Message(m) => send_to(socket, peer.ip, peer.telemetry_port, m.to_string().as_bytes()),
        Payload::Telemetry { bytes, .. } => send_to(socket, peer.ip, peer.telemetry_port, bytes),
        Payload::Media { bytes, .. } => send_to(socket, peer.ip, peer.media_port, bytes),
    };
    if let Err(e) = result {
        warn!("session {}: send failed: {e}", out.session);
    }
}

fn send_to(socket: &UdpSocket, ip: IpAddr, port: u16, bytes: &[u8]) -> std::io::Result<()> {
    if port == 0 {
        return Ok(());
    }
    socket.send_to(bytes, (ip, port)).map(|_| ())
}

fn spawn_acceptor(listener: TcpListener, tx: Sender<Inbound>) {
    thread::spawn(move || {
        let mut next = 1u32;
        for stream in listener.incoming() {
            let Ok(stream) = stream else { continue };
            let _ = stream.set_nodelay(true);
            let conn = next;
            next += 1;
            let Ok(reader) = stream.try_clone() else { continue };
            if tx.send(Inbound::Opened { conn, stream }).is_err() {
                return;
            }
            let tx = tx.clone();
            thread::spawn(move || {
                for line in BufReader::new(reader).lines() {
                    let Ok(line) = line else { break };
                    if tx.send(Inbound::Line { conn, line }).is_err() {
                        return;
                    }
                }
                let _ = tx.send(Inbound::Closed { conn });
            });
        }
    });
}

fn spawn_datagram_reader(socket: UdpSocket, tx: Sender<Inbound>, stop: Arc<AtomicBool>) {
    thread::spawn(move || {
        let _ = socket.set_read_timeout(Some(Duration::from_millis(50)));
        let mut buf = vec![0u8; 65536];
        while !stop.load(Ordering::SeqCst) {
            if let Ok((n, _)) = socket.recv_from(&mut buf) {
                if tx.send(Inbound::Datagram(buf[..n].to_vec())).is_err() {
                    return;
                }
            }
        }
    });
}
