//! Telemetry packets: a 4-byte header followed by colon-separated text.
//!
//! ```text
//!  0               2               4
//! +---------------+---------------+-------------------------------+
//! | total length  |   checksum    | seq:stamp:battery:x:y:theta:  |
//! |  (u16, BE)    |  (u16, BE)    | v:w:compass:lat:lon:s0..s7:   |
//! |               |               | l0..lN                        |
//! +---------------+---------------+-------------------------------+
//! ```
//!
//! `total length` counts the header. The checksum covers the payload only.
//! Number formats are fixed: battery 2 decimals, x/y 3, theta 4, v/w 3,
//! compass 1, lat/lon 6, sonar metres with 3 decimals, laser whole
//! centimetres. A missing echo is written as `-`.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::checksum::checksum_16;
use crate::sensors::{
    GeoPoint, Range, SonarArray, LASER_MAX_RANGE, LASER_MIN_RANGE, SONAR_COUNT, SONAR_MAX_RANGE,
    SONAR_MIN_RANGE,
};
use crate::world::{Pose2D, Twist};

pub const HEADER_LEN: usize = 4;
pub const MAX_PAYLOAD_LEN: usize = u16::MAX as usize - HEADER_LEN;
const FIXED_FIELDS: usize = 11;
const NO_ECHO: &str = "-";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TelemetryFrame {
    pub seq: u32,
    /// Milliseconds since server start at which this frame's acquisition cycle began.
    pub stamp_ms: u64,
    pub battery_v: f64,
    pub pose: Pose2D,
    pub speed: Twist,
    pub sonar: SonarArray,
    /// Laser ranges, one per degree across the field of view.
    pub laser: Vec<Range>,
    pub compass_deg: f64,
    pub gps: GeoPoint,
}

/// Bounds enforced on decode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TelemetryLimits {
    pub v_max: f64,
    pub w_max: f64,
    pub battery_max: f64,
}

impl Default for TelemetryLimits {
    fn default() -> Self {
        Self {
            v_max: crate::world::V_MAX,
            w_max: 1.0,
            battery_max: 48.0,
        }
    }
}

fn round_to(x: f64, decimals: i32) -> f64 {
    let scale = 10f64.powi(decimals);
    (x * scale).round() / scale
}

fn quantize_range(r: Range, decimals: i32) -> Range {
    r.map(|v| round_to(v, decimals))
}

impl TelemetryFrame {
    /// Snaps every field onto the wire grid so that encoding is lossless.
    pub fn quantized(mut self) -> Self {
        self.battery_v = round_to(self.battery_v, 2);
        self.pose = Pose2D {
            x: round_to(self.pose.x, 3),
            y: round_to(self.pose.y, 3),
            theta: round_to(self.pose.theta, 4),
        };
        self.speed = Twist::new(round_to(self.speed.v, 3), round_to(self.speed.w, 3));
        self.compass_deg = crate::sensors::quantize_heading(self.compass_deg);
        self.gps = GeoPoint {
            latitude: round_to(self.gps.latitude, 6),
            longitude: round_to(self.gps.longitude, 6),
        };
        for r in self.sonar.ranges.iter_mut() {
            *r = quantize_range(*r, 3);
        }
        for r in self.laser.iter_mut() {
            *r = quantize_range(*r, 2);
        }
        self
    }

    pub fn validate(&self, limits: &TelemetryLimits) -> Result<(), DecodeError> {
        let range = |field: &str, value: f64, ok: bool| {
            if ok && value.is_finite() {
                Ok(())
            } else {
                Err(DecodeError::FieldRange {
                    field: field.to_string(),
                    value: value.to_string(),
                })
            }
        };
        range("battery", self.battery_v, (0.0..=limits.battery_max).contains(&self.battery_v))?;
        range("x", self.pose.x, true)?;
        range("y", self.pose.y, true)?;
        // π rounded to the four wire decimals
        #[allow(clippy::approx_constant)]
        let theta_max = 3.1416 + 1e-12;
        range("theta", self.pose.theta, self.pose.theta.abs() <= theta_max)?;
        range("v", self.speed.v, self.speed.v.abs() <= limits.v_max + 1e-9)?;
        range("w", self.speed.w, self.speed.w.abs() <= limits.w_max + 1e-9)?;
        range("compass", self.compass_deg, (0.0..360.0).contains(&self.compass_deg))?;
        range("lat", self.gps.latitude, self.gps.latitude.abs() <= 90.0)?;
        range("lon", self.gps.longitude, self.gps.longitude.abs() <= 180.0)?;
        for (i, r) in self.sonar.ranges.iter().enumerate() {
            if let Some(v) = r {
                range(&format!("sonar{i}"), *v, (SONAR_MIN_RANGE..=SONAR_MAX_RANGE).contains(v))?;
            }
        }
        for (i, r) in self.laser.iter().enumerate() {
            if let Some(v) = r {
                range(&format!("laser{i}"), *v, (LASER_MIN_RANGE..=LASER_MAX_RANGE).contains(v))?;
            }
        }
        Ok(())
    }

    /// The colon-separated payload text.
    pub fn payload_text(&self) -> String {
        let mut s = String::with_capacity(560);
        let _ = write!(
            s,
            "{}:{}:{:.2}:{:.3}:{:.3}:{:.4}:{:.3}:{:.3}:{:.1}:{:.6}:{:.6}",
            self.seq,
            self.stamp_ms,
            self.battery_v,
            self.pose.x,
            self.pose.y,
            self.pose.theta,
            self.speed.v,
            self.speed.w,
            self.compass_deg,
            self.gps.latitude,
            self.gps.longitude,
        );
        for r in &self.sonar.ranges {
            match r {
                Some(v) => {
                    let _ = write!(s, ":{v:.3}");
                }
                None => s.push_str(":-"),
            }
        }
        for r in &self.laser {
            match r {
                Some(v) => {
                    let _ = write!(s, ":{}", (v * 100.0).round() as u64);
                }
                None => s.push_str(":-"),
            }
        }
        s
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EncodeError {
    #[error("payload of {0} bytes overflows the 16-bit length field")]
    PayloadTooLarge(usize),
}

/// Stable classification of decode failures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DecodeErrorKind {
    ChecksumMismatch,
    Framing,
    FieldParse,
    FieldRange,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DecodeError {
    #[error("checksum mismatch: header {header:#06x}, computed {computed:#06x}")]
    ChecksumMismatch { header: u16, computed: u16 },
    #[error("framing: {0}")]
    Framing(String),
    #[error("field {field}: cannot parse {value:?}")]
    FieldParse { field: String, value: String },
    #[error("field {field}: value {value} out of range")]
    FieldRange { field: String, value: String },
}

impl DecodeError {
    pub fn kind(&self) -> DecodeErrorKind {
        match self {
            DecodeError::ChecksumMismatch { .. } => DecodeErrorKind::ChecksumMismatch,
            DecodeError::Framing(_) => DecodeErrorKind::Framing,
            DecodeError::FieldParse { .. } => DecodeErrorKind::FieldParse,
            DecodeError::FieldRange { .. } => DecodeErrorKind::FieldRange,
        }
    }
}

pub fn encode_telemetry(frame: &TelemetryFrame) -> Result<Vec<u8>, EncodeError> {
    let payload = frame.payload_text();
    if payload.len() > MAX_PAYLOAD_LEN {
        return Err(EncodeError::PayloadTooLarge(payload.len()));
    }
    let total = (HEADER_LEN + payload.len()) as u16;
    let mut out = Vec::with_capacity(total as usize);
    out.extend_from_slice(&total.to_be_bytes());
    out.extend_from_slice(&checksum_16(payload.as_bytes()).to_be_bytes());
    out.extend_from_slice(payload.as_bytes());
    Ok(out)
}

pub fn decode_telemetry(bytes: &[u8]) -> Result<TelemetryFrame, DecodeError> {
    decode_telemetry_with(bytes, &TelemetryLimits::default())
}

fn parse_field<T: std::str::FromStr>(name: &str, raw: &str) -> Result<T, DecodeError> {
    raw.parse::<T>().map_err(|_| DecodeError::FieldParse {
        field: name.to_string(),
        value: raw.to_string(),
    })
}

fn parse_f64(name: &str, raw: &str) -> Result<f64, DecodeError> {
    let v: f64 = parse_field(name, raw)?;
    // reject "inf", "NaN" and friends: the encoder never writes them
    if !v.is_finite() || raw.bytes().any(|b| b.is_ascii_alphabetic()) {
        return Err(DecodeError::FieldParse {
            field: name.to_string(),
            value: raw.to_string(),
        });
    }
    Ok(v)
}

pub fn decode_telemetry_with(bytes: &[u8], limits: &TelemetryLimits) -> Result<TelemetryFrame, DecodeError> {
    if bytes.len() < HEADER_LEN {
        return Err(DecodeError::Framing(format!(
            "{} bytes is shorter than the header",
            bytes.len()
        )));
    }
    let declared = u16::from_be_bytes([bytes[0], bytes[1]]) as usize;
    if declared != bytes.len() {
        return Err(DecodeError::Framing(format!(
            "declared length {declared}, received {}",
            bytes.len()
        )));
    }
    let header = u16::from_be_bytes([bytes[2], bytes[3]]);
    let payload = &bytes[HEADER_LEN..];
    let computed = checksum_16(payload);
    if header != computed {
        return Err(DecodeError::ChecksumMismatch { header, computed });
    }
    let text = std::str::from_utf8(payload).map_err(|_| DecodeError::FieldParse {
        field: "payload".into(),
        value: "<non-utf8>".into(),
    })?;
    let fields: Vec<&str> = text.split(':').collect();
    if fields.len() < FIXED_FIELDS + SONAR_COUNT {
        return Err(DecodeError::FieldParse {
            field: "field count".into(),
            value: fields.len().to_string(),
        });
    }

    let mut sonar = SonarArray::default();
    for (i, raw) in fields[FIXED_FIELDS..FIXED_FIELDS + SONAR_COUNT].iter().enumerate() {
        sonar.ranges[i] = match *raw {
            NO_ECHO => None,
            r => Some(parse_f64(&format!("sonar{i}"), r)?),
        };
    }
    let laser = fields[FIXED_FIELDS + SONAR_COUNT..]
        .iter()
        .enumerate()
        .map(|(i, raw)| match *raw {
            NO_ECHO => Ok(None),
            r => parse_field::<u32>(&format!("laser{i}"), r).map(|cm| Some(cm as f64 / 100.0)),
        })
        .collect::<Result<Vec<_>, _>>()?;

    let frame = TelemetryFrame {
        seq: parse_field("seq", fields[0])?,
        stamp_ms: parse_field("stamp", fields[1])?,
        battery_v: parse_f64("battery", fields[2])?,
        pose: Pose2D {
            x: parse_f64("x", fields[3])?,
            y: parse_f64("y", fields[4])?,
            theta: parse_f64("theta", fields[5])?,
        },
        speed: Twist::new(parse_f64("v", fields[6])?, parse_f64("w", fields[7])?),
        compass_deg: parse_f64("compass", fields[8])?,
        gps: GeoPoint {
            latitude: parse_f64("lat", fields[9])?,
            longitude: parse_f64("lon", fields[10])?,
        },
        sonar,
        laser,
    };
    frame.validate(limits)?;
    Ok(frame)
}
