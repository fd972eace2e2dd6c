//! Pan-tilt-zoom camera stand-in: a deterministic first-person ray-cast render.
//!
//! Each image column casts one ray from the robot centre. Walls are drawn as
//! vertical strips whose height follows the pinhole model
//! `rows = focal * wall_height / perpendicular_distance`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::Vec2;
use crate::world::{HitKind, Pose2D, WorldModel};

pub const PAN_LIMIT_DEG: f64 = 100.0;
pub const TILT_LIMIT_DEG: f64 = 25.0;
pub const ZOOM_MAX: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PtzState {
    pan: f64,
    tilt: f64,
    zoom: f64,
}

impl Default for PtzState {
    fn default() -> Self {
        Self {
            pan: 0.0,
            tilt: 0.0,
            zoom: 1.0,
        }
    }
}

impl PtzState {
    /// Builds a state with every axis clamped to its mechanical range.
    pub fn new(pan: f64, tilt: f64, zoom: f64) -> Self {
        let mut s = Self::default();
        s.set(pan, tilt, zoom);
        s
    }

    pub fn set(&mut self, pan: f64, tilt: f64, zoom: f64) {
        let finite_or = |v: f64, keep: f64| if v.is_finite() { v } else { keep };
        self.pan = finite_or(pan, self.pan).clamp(-PAN_LIMIT_DEG, PAN_LIMIT_DEG);
        self.tilt = finite_or(tilt, self.tilt).clamp(-TILT_LIMIT_DEG, TILT_LIMIT_DEG);
        self.zoom = finite_or(zoom, self.zoom).clamp(1.0, ZOOM_MAX);
    }

    pub fn pan(&self) -> f64 {
        self.pan
    }

    pub fn tilt(&self) -> f64 {
        self.tilt
    }

    pub fn zoom(&self) -> f64 {
        self.zoom
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum FrameFormat {
    #[default]
    RawRgb,
    Png,
}

impl FrameFormat {
    pub fn code(self) -> u8 {
        match self {
            FrameFormat::RawRgb => 0,
            FrameFormat::Png => 1,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(FrameFormat::RawRgb),
            1 => Some(FrameFormat::Png),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraConfig {
    pub width: u16,
    pub height: u16,
    /// Horizontal field of view at zoom 1.
    pub hfov_deg: f64,
    pub wall_height: f64,
    pub camera_height: f64,
    pub format: FrameFormat,
}

impl Default for CameraConfig {
    fn default() -> Self {
        Self {
            width: 160,
            height: 120,
            hfov_deg: 60.0,
            wall_height: 0.5,
            camera_height: 0.25,
            format: FrameFormat::RawRgb,
        }
    }
}

impl CameraConfig {
    pub fn focal_px(&self, zoom: f64) -> f64 {
        let half = (self.hfov_deg / zoom).to_radians() / 2.0;
        (self.width as f64 / 2.0) / half.tan()
    }
}

/// One rendered image. `pixels` is row-major RGB8.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CameraFrame {
    pub frame_seq: u32,
    pub timestamp_ms: u64,
    pub width: u16,
    pub height: u16,
    pub pixels: Vec<u8>,
}

impl CameraFrame {
    pub fn with_header(mut self, frame_seq: u32, timestamp_ms: u64) -> Self {
        self.frame_seq = frame_seq;
        self.timestamp_ms = timestamp_ms;
        self
    }

    pub fn pixel(&self, col: usize, row: usize) -> [u8; 3] {
        let i = (row * self.width as usize + col) * 3;
        [self.pixels[i], self.pixels[i + 1], self.pixels[i + 2]]
    }
}

const SKY: [u8; 3] = [170, 190, 215];
const FLOOR: [u8; 3] = [120, 100, 80];
const BOUNDARY: [u8; 3] = [215, 215, 205];
const OBSTACLE: [u8; 3] = [200, 70, 50];

fn shade(base: [u8; 3], distance: f64) -> [u8; 3] {
    let k = 1.0 / (1.0 + 0.15 * distance);
    base.map(|c| (c as f64 * (0.35 + 0.65 * k)).round() as u8)
}

/// Renders the view from the robot through the PTZ head.
///
/// Rows above the horizon that are not wall are sky, rows below are floor.
/// Tilting up moves the horizon down the image.
pub fn render_frame(world: &WorldModel, pose: &Pose2D, ptz: &PtzState, config: &CameraConfig) -> CameraFrame {
    let w = config.width as usize;
    let h = config.height as usize;
    let focal = config.focal_px(ptz.zoom());
    let yaw = pose.theta + ptz.pan().to_radians();
    let horizon = h as f64 / 2.0 + focal * ptz.tilt().to_radians().tan();
    let mut pixels = vec![0u8; w * h * 3];

    for col in 0..w {
        // image x grows to the right, which is clockwise in the world
        let offset = ((col as f64 + 0.5 - w as f64 / 2.0) / focal).atan();
        let hit = world.ray_cast(pose.position(), Vec2::from_angle(yaw - offset));
        let (top, bottom, colour) = match hit {
            Some((dist, kind)) => {
                let perp = (dist * offset.cos()).max(1e-6);
                let top = horizon - focal * (config.wall_height - config.camera_height) / perp;
                let bottom = horizon + focal * config.camera_height / perp;
                let base = match kind {
                    HitKind::Boundary => BOUNDARY,
                    HitKind::Obstacle(_) => OBSTACLE,
                };
                (top, bottom, shade(base, perp))
            }
            None => (horizon, horizon, SKY),
        };
        for row in 0..h {
            let y = row as f64 + 0.5;
            let px = if y >= top && y < bottom {
                colour
            } else if y < horizon {
                SKY
            } else {
                FLOOR
            };
            let i = (row * w + col) * 3;
            pixels[i..i + 3].copy_from_slice(&px);
        }
    }

    CameraFrame {
        frame_seq: 0,
        timestamp_ms: 0,
        width: config.width,
        height: config.height,
        pixels,
    }
}

#[derive(Debug, Error)]
pub enum FramePayloadError {
    #[error("png encoding failed: {0}")]
    Encode(#[from] png::EncodingError),
    #[error("png decoding failed: {0}")]
    Decode(#[from] png::DecodingError),
    #[error("payload size {got} does not match {width}x{height} RGB")]
    Size { got: usize, width: u16, height: u16 },
    #[error("unsupported png layout")]
    Layout,
}

/// Image bytes for the media channel in the requested format.
pub fn encode_frame_payload(frame: &CameraFrame, format: FrameFormat) -> Result<Vec<u8>, FramePayloadError> {
    match format {
        FrameFormat::RawRgb => Ok(frame.pixels.clone()),
        FrameFormat::Png => {
            let mut out = Vec::new();
            {
                let mut enc = png::Encoder::new(&mut out, frame.width as u32, frame.height as u32);
                enc.set_color(png::ColorType::Rgb);
                enc.set_depth(png::BitDepth::Eight);
                let mut writer = enc.write_header()?;
                writer.write_image_data(&frame.pixels)?;
            }
            Ok(out)
        }
    }
}

/// Inverse of [`encode_frame_payload`]; returns RGB8 pixels.
pub fn decode_frame_payload(
    payload: &[u8],
    format: FrameFormat,
    width: u16,
    height: u16,
) -> Result<Vec<u8>, FramePayloadError> {
    let want = width as usize * height as usize * 3;
    let pixels = match format {
        FrameFormat::RawRgb => payload.to_vec(),
        FrameFormat::Png => {
            let decoder = png::Decoder::new(std::io::Cursor::new(payload));
            let mut reader = decoder.read_info()?;
            let mut buf = vec![0; reader.output_buffer_size()];
            let info = reader.next_frame(&mut buf)?;
            if info.color_type != png::ColorType::Rgb || info.bit_depth != png::BitDepth::Eight {
                return Err(FramePayloadError::Layout);
            }
            buf.truncate(info.buffer_size());
            buf
        }
    };
    if pixels.len() != want {
        return Err(FramePayloadError::Size {
            got: pixels.len(),
            width,
            height,
        });
    }
    Ok(pixels)
}
