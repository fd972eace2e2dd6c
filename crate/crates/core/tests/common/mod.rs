#![allow(dead_code)]

use rand::Rng;
use teleop_core::netsim::DelayProfile;
use teleop_core::sensors::{GeoPoint, SonarArray};
use teleop_core::sim::SimConfig;
use teleop_core::wire::TelemetryFrame;
use teleop_core::{Pose2D, Twist};

/// The canonical frame behind the golden vector in `vectors/f0.hex`.
// heading is the four-decimal wire value, not a constant
#[allow(clippy::approx_constant)]
pub fn frame_f0() -> TelemetryFrame {
    let sonar = SonarArray {
        ranges: [Some(1.25), Some(1.3), None, Some(0.04), None, Some(4.0), Some(2.5), None],
    };
    TelemetryFrame {
        seq: 42,
        stamp_ms: 8400,
        battery_v: 12.47,
        pose: Pose2D {
            x: 3.125,
            y: -1.5,
            theta: 0.7854,
        },
        speed: Twist::new(0.5, -0.1),
        sonar,
        laser: vec![Some(1.5), None, Some(12.34), Some(0.04)],
        compass_deg: 45.0,
        gps: GeoPoint {
            latitude: 21.038011,
            longitude: 105.782734,
        },
    }
}

pub fn f0_golden() -> Vec<u8> {
    let hex = include_str!("../vectors/f0.hex").trim();
    (0..hex.len())
        .step_by(2)
        .map(|i| u8::from_str_radix(&hex[i..i + 2], 16).expect("hex digit"))
        .collect()
}

fn maybe<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> Option<f64> {
    rng.random_bool(0.8).then(|| rng.random_range(lo..=hi))
}

/// A random frame inside the decoder's accepted ranges.
pub fn random_frame<R: Rng>(rng: &mut R) -> TelemetryFrame {
    let mut sonar = SonarArray::default();
    for r in sonar.ranges.iter_mut() {
        *r = maybe(rng, 0.04, 4.0);
    }
    let beams = rng.random_range(0..=181);
    TelemetryFrame {
        seq: rng.random(),
        stamp_ms: rng.random_range(0..1u64 << 40),
        battery_v: rng.random_range(0.0..=48.0),
        pose: Pose2D::new(
            rng.random_range(-500.0..500.0),
            rng.random_range(-500.0..500.0),
            rng.random_range(-std::f64::consts::PI..std::f64::consts::PI),
        ),
        speed: Twist::new(rng.random_range(-1.5..=1.5), rng.random_range(-1.0..=1.0)),
        sonar,
        laser: (0..beams).map(|_| maybe(rng, 0.04, 80.0)).collect(),
        compass_deg: rng.random_range(0.0..359.9),
        gps: GeoPoint {
            latitude: rng.random_range(-90.0..=90.0),
            longitude: rng.random_range(-180.0..=180.0),
        },
    }
    .quantized()
}

/// Loopback settings used by the batch scenarios: field-trial delays, no video.
pub fn field_trial_sim(seed: u64) -> SimConfig {
    let mut c = SimConfig {
        profile: DelayProfile::field_trial().with_seed(seed),
        ..SimConfig::default()
    };
    c.server.frame_period_ms = None;
    c
}
