mod common;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use teleop_core::client::gateway::{handle_text, parse_request, Publisher, UiEvent, UiRequest};
use teleop_core::client::{
    estimate_network, map_joystick, Client, ClientConfig, ClientError, ConnState, LinkState, DELAY_GAIN, JITTER_GAIN,
};
use teleop_core::netsim::{DelayProfile, DelayRow};
use teleop_core::server::EventKind;
use teleop_core::sim::{parse_script, SimConfig, Simulation};
use teleop_core::wire::{encode_telemetry, Command, DriveMode, JoystickAxes, ServerMessage, SessionRole};
use teleop_core::world::{Pose2D, WorldModel};

fn open_sim(config: SimConfig) -> Simulation {
    Simulation::new(config, WorldModel::empty_room(40.0, 40.0), Pose2D::new(5.0, 20.0, 0.0)).unwrap()
}

fn zero_delay() -> SimConfig {
    let mut c = common::field_trial_sim(1);
    c.profile = DelayProfile {
        rows: vec![DelayRow::new(100, 0.0, 0.0, 0.0), DelayRow::new(2000, 0.0, 0.0, 0.0)],
        ..c.profile
    };
    c
}

fn connected(config: SimConfig) -> Simulation {
    let mut sim = open_sim(config).with_script(parse_script("0 connect").unwrap());
    assert!(sim.run_while(2000, |s| s.client().is_connected()).unwrap());
    sim
}

/// Accepted commands in the server log, by wire prefix.
fn accepted(sim: &Simulation, prefix: &str) -> Vec<(u64, String)> {
    sim.server()
        .events()
        .iter()
        .filter_map(|e| match &e.kind {
            EventKind::Command { command, .. } if command.starts_with(prefix) => Some((e.t_ms, command.clone())),
            _ => None,
        })
        .collect()
}

#[test]
fn drive_reaches_the_server_exactly_once() {
    let mut sim = connected(common::field_trial_sim(3));
    sim.client_mut().send_drive(0.4, -0.2).unwrap();
    let now = sim.now_ms();
    sim.run_until(now + 3000).unwrap();
    assert_eq!(accepted(&sim, "SET_TWIST"), vec![(accepted(&sim, "SET_TWIST")[0].0, "SET_TWIST 0.4 -0.2".into())]);
}

#[test]
fn commands_need_a_session() {
    let mut c = Client::new(ClientConfig::default());
    assert_eq!(c.send_drive(0.1, 0.0), Err(ClientError::NotConnected));
    assert_eq!(c.send_stop(), Err(ClientError::NotConnected));
    c.connect().unwrap();
    assert_eq!(c.connect(), Err(ClientError::AlreadyConnected));
    c.handle_server(ServerMessage::ConnectAck {
        session: 4,
        role: SessionRole::Controller,
    });
    assert_eq!(c.send_joystick(1024, 0, 0), Err(ClientError::AxisRange(1024)));
    assert_eq!(c.send_drive(f64::NAN, 0.0), Err(ClientError::NonFinite));
}

#[test]
fn stop_during_a_blackout_lands_after_it_in_order() {
    let mut sim = connected(common::field_trial_sim(4));
    let t0 = sim.now_ms();
    sim.schedule_blackout(t0 + 500, 3000).unwrap();
    sim.run_until(t0 + 1000).unwrap();
    sim.client_mut().send_drive(0.3, 0.0).unwrap();
    sim.run_until(t0 + 1100).unwrap();
    sim.client_mut().send_stop().unwrap();
    sim.run_until(t0 + 6000).unwrap();

    let twist = accepted(&sim, "SET_TWIST");
    let stop = accepted(&sim, "STOP");
    assert_eq!(twist.len(), 1);
    assert_eq!(stop.len(), 1);
    assert!(twist[0].0 >= t0 + 3500, "{twist:?}");
    assert!(stop[0].0 >= twist[0].0);
    assert_eq!(sim.server().commanded_twist().v, 0.0);
}

#[test]
fn ptz_out_of_range_is_clamped_by_the_server() {
    let mut sim = connected(common::field_trial_sim(5));
    sim.client_mut().send_ptz(150.0, 0.0, 1.0).unwrap();
    let now = sim.now_ms();
    sim.run_until(now + 2000).unwrap();
    let ptz = sim.server().ptz();
    assert_eq!(ptz, teleop_core::sensors::PtzState::new(100.0, 0.0, 1.0));
}

/// The smoothing recurrence written out longhand.
fn recurrence(samples: &[f64]) -> (f64, f64) {
    let mut delay = samples[0];
    let mut jitter = 0.0;
    for &s in &samples[1..] {
        let before = delay;
        delay = before + (s - before) / 8.0;
        jitter = jitter + ((s - before).abs() - jitter) / 4.0;
    }
    (delay, jitter)
}

#[test]
fn estimator_follows_the_smoothing_recurrence() {
    assert_eq!((DELAY_GAIN, JITTER_GAIN), (0.125, 0.25));
    let samples: Vec<f64> = (0..200).map(|i| if i % 2 == 0 { 80.0 } else { 120.0 }).collect();
    let (d, j) = estimate_network(&samples);
    let (od, oj) = recurrence(&samples);
    assert!((d - od).abs() < 1e-9 && (j - oj).abs() < 1e-9);
    // settles around the mean with a jitter near the half swing
    assert!((d - 100.0).abs() < 3.0, "{d}");
    assert!((j - 20.0).abs() < 3.0, "{j}");
}

#[test]
fn link_goes_down_without_telemetry() {
    let mut sim = connected(common::field_trial_sim(6));
    let now = sim.now_ms();
    sim.run_until(now + 2000).unwrap();
    assert_eq!(sim.client().estimate().link_state, LinkState::Up);
    let now = sim.now_ms();
    sim.schedule_blackout(now, 2000).unwrap();
    sim.run_until(now + 1000).unwrap();
    assert_eq!(sim.client().estimate().link_state, LinkState::Down);
    assert_eq!(Client::new(ClientConfig::default()).estimate().link_state, LinkState::Down);
}

#[test]
fn joystick_three_quarters_forward() {
    let axes = JoystickAxes {
        session: 1,
        seq: 1,
        horizontal: 512,
        vertical: 767,
        buttons: 0,
    };
    let t = map_joystick(&axes, 1.5, 1.0);
    assert!((t.v - 0.724).abs() < 1e-3, "{}", t.v);
    assert_eq!(t.w, 0.0);

    // and end to end, mapped with the server's own limit
    let mut sim = connected(zero_delay());
    sim.client_mut().send_joystick(512, 767, 0).unwrap();
    let now = sim.now_ms();
    sim.run_until(now + 100).unwrap();
    let v = sim.server().session().unwrap().active_twist.v;
    assert!((v - 0.724).abs() < 1e-3, "{v}");
}

#[test]
fn zero_delay_remote_path_matches_the_robot_estimate() {
    let mut sim = open_sim(zero_delay()).with_script(parse_script("0 connect\n500 drive 0.5 0.2\n").unwrap());
    sim.run_until(20_000).unwrap();
    let reckoned: std::collections::HashMap<u64, Pose2D> =
        sim.server().truth().iter().map(|t| (t.t_ms, t.reckoned)).collect();
    let trajectory = sim.client().represent().trajectory();
    assert!(trajectory.len() > 90);
    for p in trajectory {
        let r = reckoned[&p.t_ms];
        // telemetry carries millimetres
        assert!((p.pose.x - r.x).abs() <= 5e-4 + 1e-12 && (p.pose.y - r.y).abs() <= 5e-4 + 1e-12);
    }
}

#[test]
fn snapshots_come_every_render_period() {
    let mut sim = connected(common::field_trial_sim(7));
    sim.client_mut().drain_snapshots();
    let now = sim.now_ms();
    sim.run_until(now + 5000).unwrap();
    let snaps = sim.client_mut().drain_snapshots();
    assert!(snaps.len() >= 49);
    assert!(snaps.windows(2).all(|w| w[1].t_ms - w[0].t_ms == 100));
    assert!(snaps.iter().all(|s| s.t_ms % 100 == 0));
}

#[test]
fn console_drive_matches_a_direct_drive() {
    let run = |via_gateway: bool| {
        let mut sim = connected(common::field_trial_sim(8));
        if via_gateway {
            let reply = handle_text(sim.client_mut(), r#"{"type":"drive","v":0.5,"w":0.1}"#);
            assert_eq!(reply, UiEvent::Ack { request: "drive".into() });
        } else {
            sim.client_mut().send_drive(0.5, 0.1).unwrap();
        }
        let now = sim.now_ms();
        sim.run_until(now + 2000).unwrap();
        accepted(&sim, "SET_TWIST")
    };
    let direct = run(false);
    assert_eq!(direct.len(), 1);
    assert_eq!(run(true), direct);
}

#[test]
fn gateway_json_schema() {
    assert_eq!(
        parse_request(r#"{"type":"mode","mode":"ASSISTED"}"#).unwrap(),
        UiRequest::Mode { mode: DriveMode::Assisted }
    );
    assert_eq!(
        parse_request(r#"{"type":"joystick","horizontal":512,"vertical":767}"#).unwrap(),
        UiRequest::Joystick {
            horizontal: 512,
            vertical: 767,
            buttons: 0
        }
    );
    assert!(parse_request(r#"{"type":"fly"}"#).is_err());

    let mut client = Client::new(ClientConfig::default());
    let err = handle_text(&mut client, r#"{"type":"stop"}"#);
    assert!(matches!(err, UiEvent::Error { ref message } if message.starts_with("stop")));
    let bad = handle_text(&mut client, "not json");
    assert!(matches!(bad, UiEvent::Error { .. }));

    let ack: serde_json::Value = serde_json::from_str(&UiEvent::Ack { request: "drive".into() }.to_json()).unwrap();
    assert_eq!(ack, serde_json::json!({"type": "ack", "request": "drive"}));

    let mut sim = connected(common::field_trial_sim(9));
    let now = sim.now_ms();
    sim.run_until(now + 1000).unwrap();
    let events = Publisher::default().collect(sim.client_mut());
    let types: Vec<serde_json::Value> = events
        .iter()
        .map(|e| serde_json::from_str::<serde_json::Value>(&e.to_json()).unwrap())
        .collect();
    let kinds: Vec<&str> = types.iter().map(|v| v["type"].as_str().unwrap()).collect();
    for k in ["session", "telemetry", "network", "snapshot"] {
        assert!(kinds.contains(&k), "{kinds:?}");
    }
    let session = &types[kinds.iter().position(|k| *k == "session").unwrap()];
    assert_eq!(session["state"], "connected");
    assert_eq!(session["role"], "CONTROLLER");
    let network = &types[kinds.iter().position(|k| *k == "network").unwrap()];
    assert_eq!(network["link_state"], "UP");
    assert!(network["delay_ms"].as_f64().unwrap() > 0.0);
    let snap = &types[kinds.iter().position(|k| *k == "snapshot").unwrap()];
    for field in ["t_ms", "resolution", "seq", "pose", "delta", "trajectory_tail", "trajectory_len"] {
        assert!(snap.get(field).is_some(), "snapshot lacks {field}");
    }
    assert!(matches!(sim.client().state(), ConnState::Connected { .. }));
}

proptest! {
    #[test]
    fn applied_sequence_never_goes_back(seed in any::<u64>(), order in prop::collection::vec(1u32..60, 1..120)) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut client = Client::new(ClientConfig::default());
        let mut last = None;
        for (k, seq) in order.into_iter().enumerate() {
            let mut frame = common::random_frame(&mut rng);
            frame.seq = seq;
            client.set_time(k as u64 * 37);
            client.handle_telemetry(&encode_telemetry(&frame).unwrap()).unwrap();
            client.tick(k as u64 * 37);
            let applied = client.represent().applied_seq();
            prop_assert!(applied >= last);
            last = applied;
        }
        prop_assert!(client.renders().windows(2).all(|w| w[0].seq < w[1].seq));
    }
}

#[test]
fn sent_log_keeps_command_order() {
    let mut sim = connected(zero_delay());
    sim.client_mut().send_drive(0.2, 0.0).unwrap();
    sim.client_mut().send_stop().unwrap();
    let sent: Vec<String> = sim
        .client()
        .sent()
        .iter()
        .map(|(_, c)| c.to_string())
        .filter(|c| !c.starts_with("CONNECT"))
        .collect();
    assert_eq!(sent, vec!["SET_TWIST 0.2 0".to_string(), Command::Stop.to_string()]);
}
