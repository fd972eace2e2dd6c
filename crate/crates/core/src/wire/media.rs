//! Camera frames on the media channel.
//!
//! ```text
//!  0       2               6       8       10  11
//! +-------+---------------+-------+-------+---+-----------
//! |  seq  |  timestamp ms | width |height |fmt| image ...
//! | u16BE |     u32BE     | u16BE | u16BE | u8|
//! +-------+---------------+-------+-------+---+-----------
//! ```
//!
//! Sequence and timestamp wrap like their RTP counterparts; the receiver
//! recovers the full values with [`SeqUnwrapper`].

use thiserror::Error;

use crate::sensors::{decode_frame_payload, encode_frame_payload, CameraFrame, FrameFormat};

pub const MEDIA_HEADER_LEN: usize = 11;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MediaHeader {
    pub seq: u16,
    pub timestamp_ms: u32,
    pub width: u16,
    pub height: u16,
    pub format: FrameFormat,
}

#[derive(Debug, Error)]
pub enum MediaError {
    #[error("media packet of {0} bytes is shorter than the header")]
    Short(usize),
    #[error("unknown image format code {0}")]
    Format(u8),
    #[error(transparent)]
    Payload(#[from] crate::sensors::FramePayloadError),
}

impl MediaHeader {
    pub fn write(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.seq.to_be_bytes());
        out.extend_from_slice(&self.timestamp_ms.to_be_bytes());
        out.extend_from_slice(&self.width.to_be_bytes());
        out.extend_from_slice(&self.height.to_be_bytes());
        out.push(self.format.code());
    }

    pub fn read(bytes: &[u8]) -> Result<Self, MediaError> {
        if bytes.len() < MEDIA_HEADER_LEN {
            return Err(MediaError::Short(bytes.len()));
        }
        let u16_at = |i: usize| u16::from_be_bytes([bytes[i], bytes[i + 1]]);
        Ok(Self {
            seq: u16_at(0),
            timestamp_ms: u32::from_be_bytes([bytes[2], bytes[3], bytes[4], bytes[5]]),
            width: u16_at(6),
            height: u16_at(8),
            format: FrameFormat::from_code(bytes[10]).ok_or(MediaError::Format(bytes[10]))?,
        })
    }
}

pub fn encode_media(frame: &CameraFrame, format: FrameFormat) -> Result<Vec<u8>, MediaError> {
    let payload = encode_frame_payload(frame, format)?;
    let header = MediaHeader {
        seq: frame.frame_seq as u16,
        timestamp_ms: frame.timestamp_ms as u32,
        width: frame.width,
        height: frame.height,
        format,
    };
    let mut out = Vec::with_capacity(MEDIA_HEADER_LEN + payload.len());
    header.write(&mut out);
    out.extend_from_slice(&payload);
    Ok(out)
}

/// Parses a media packet. Sequence and timestamp come back truncated to the
/// header widths; see [`SeqUnwrapper`].
pub fn decode_media(bytes: &[u8]) -> Result<(MediaHeader, CameraFrame), MediaError> {
    let header = MediaHeader::read(bytes)?;
    let pixels = decode_frame_payload(&bytes[MEDIA_HEADER_LEN..], header.format, header.width, header.height)?;
    let frame = CameraFrame {
        frame_seq: header.seq as u32,
        timestamp_ms: header.timestamp_ms as u64,
        width: header.width,
        height: header.height,
        pixels,
    };
    Ok((header, frame))
}

/// Extends a wrapping 16-bit sequence number to 64 bits, assuming no two
/// consecutive arrivals are more than half the ring apart.
#[derive(Debug, Clone, Copy, Default)]
pub struct SeqUnwrapper {
    last: Option<u64>,
}

impl SeqUnwrapper {
    pub fn unwrap(&mut self, seq: u16) -> u64 {
        let ext = match self.last {
            None => seq as u64,
            Some(last) => {
                let delta = seq.wrapping_sub(last as u16) as i16 as i64;
                (last as i64 + delta).max(0) as u64
            }
        };
        self.last = Some(self.last.map_or(ext, |l| l.max(ext)));
        ext
    }
}
