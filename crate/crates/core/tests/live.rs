//! Loopback sockets: server, client and a console on the gateway.

use std::net::{SocketAddr, TcpListener};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::{Duration, Instant};

use tungstenite::Message;

use teleop_core::client::live::{LiveClient, LiveOptions};
use teleop_core::client::ClientConfig;
use teleop_core::server::live::LiveServer;
use teleop_core::server::{EventKind, Server, ServerConfig};
use teleop_core::world::{Pose2D, WorldModel};

fn free_port() -> SocketAddr {
    TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap()
}

#[test]
fn console_drive_over_real_sockets() {
    let live = LiveServer::bind("127.0.0.1:0".parse().unwrap(), "127.0.0.1:0".parse().unwrap()).unwrap();
    let (stream_addr, datagram_addr) = (live.stream_addr, live.datagram_addr);
    let server = Server::new(
        ServerConfig::default(),
        WorldModel::empty_room(40.0, 40.0),
        Pose2D::new(5.0, 20.0, 0.0),
    )
    .unwrap();
    let stop = Arc::new(AtomicBool::new(false));
    let commands = Arc::new(Mutex::new(Vec::new()));
    let server_thread = {
        let (stop, commands) = (Arc::clone(&stop), Arc::clone(&commands));
        thread::spawn(move || {
            live.run(server, stop, |s| {
                for e in s.take_events() {
                    if let EventKind::Command { command, .. } = e.kind {
                        commands.lock().unwrap().push(command);
                    }
                }
            })
        })
    };

    let gateway = free_port();
    let client = LiveClient::start(
        ClientConfig::default(),
        LiveOptions {
            server: stream_addr,
            server_datagram: datagram_addr,
            gateway: Some(gateway),
            tick: Duration::from_millis(10),
        },
    )
    .unwrap();

    let deadline = Instant::now() + Duration::from_secs(5);
    let mut ws = loop {
        match tungstenite::connect(format!("ws://{gateway}")) {
            Ok((ws, _)) => break ws,
            Err(_) if Instant::now() < deadline => thread::sleep(Duration::from_millis(20)),
            Err(e) => panic!("gateway unreachable: {e}"),
        }
    };
    while !client.client.lock().unwrap().is_connected() {
        assert!(Instant::now() < deadline, "no session");
        thread::sleep(Duration::from_millis(10));
    }

    ws.send(Message::text(r#"{"type":"drive","v":0.3,"w":0.0}"#)).unwrap();
    let (mut acked, mut telemetry, mut frames) = (false, false, false);
    while !(acked && telemetry && frames) {
        assert!(Instant::now() < deadline, "ack {acked}, telemetry {telemetry}, frames {frames}");
        match ws.read().unwrap() {
            Message::Text(t) => {
                let v: serde_json::Value = serde_json::from_str(t.as_str()).unwrap();
                match v["type"].as_str().unwrap() {
                    "ack" => acked = v["request"] == "drive",
                    "telemetry" => telemetry = true,
                    _ => {}
                }
            }
            Message::Binary(b) => frames |= b.len() > 11,
            _ => {}
        }
    }
    while !commands.lock().unwrap().iter().any(|c| c == "SET_TWIST 0.3 0") {
        assert!(Instant::now() < deadline, "drive never reached the server");
        thread::sleep(Duration::from_millis(10));
    }

    let _ = ws.close(None);
    client.shutdown();
    stop.store(true, Ordering::SeqCst);
    server_thread.join().unwrap();
}
