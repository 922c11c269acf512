//! Byte-level frame format shared by both ends of the link.
//!
//! Every frame is an 18-byte header followed by the payload:
//! magic "SCM1", version u8, frame type u8, timestamp u64 (microseconds),
//! payload length u32, integers little-endian.

use crate::error::{CoreError, Result};
use std::io::Read;

pub const MAGIC: [u8; 4] = *b"SCM1";
pub const VERSION: u8 = 1;
pub const HEADER_LEN: usize = 18;
/// Upper bound on a single payload; corrupt length fields must not
/// translate into huge allocations.
pub const MAX_PAYLOAD: usize = 256 << 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrameType {
    Semantic = 0,
    Depth = 1,
    CodebookSync = 2,
    EndOfStream = 3,
}

impl FrameType {
    fn from_u8(v: u8) -> Result<Self> {
        match v {
            0 => Ok(Self::Semantic),
            1 => Ok(Self::Depth),
            2 => Ok(Self::CodebookSync),
            3 => Ok(Self::EndOfStream),
            other => Err(CoreError::Wire(format!("unknown frame type {other}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WireFrame {
    pub frame_type: FrameType,
    pub timestamp_us: u64,
    pub payload: Vec<u8>,
}

impl WireFrame {
    pub fn new(frame_type: FrameType, timestamp_us: u64, payload: Vec<u8>) -> Self {
        Self {
            frame_type,
            timestamp_us,
            payload,
        }
    }

    /// Seconds-to-wire timestamp conversion used by both sessions.
    pub fn timestamp_us_from_seconds(ts: f64) -> Result<u64> {
        if !ts.is_finite() || ts < 0.0 {
            return Err(CoreError::InvalidInput(format!(
                "frame timestamp {ts} not representable on the wire"
            )));
        }
        Ok((ts * 1e6).round() as u64)
    }

    pub fn timestamp_seconds(&self) -> f64 {
        self.timestamp_us as f64 / 1e6
    }

    pub fn encoded_len(&self) -> usize {
        HEADER_LEN + self.payload.len()
    }
}

pub fn frame_encode(frame: &WireFrame) -> Result<Vec<u8>> {
    if frame.payload.len() > u32::MAX as usize {
        return Err(CoreError::Wire(format!(
            "payload of {} bytes exceeds the u32 length field",
            frame.payload.len()
        )));
    }
    let mut out = Vec::with_capacity(HEADER_LEN + frame.payload.len());
    out.extend_from_slice(&MAGIC);
    out.push(VERSION);
    out.push(frame.frame_type as u8);
    out.extend_from_slice(&frame.timestamp_us.to_le_bytes());
    out.extend_from_slice(&(frame.payload.len() as u32).to_le_bytes());
    out.extend_from_slice(&frame.payload);
    Ok(out)
}

fn parse_header(h: &[u8; HEADER_LEN]) -> Result<(FrameType, u64, usize)> {
    if h[..4] != MAGIC {
        return Err(CoreError::Wire("not a SCM stream (bad magic)".into()));
    }
    if h[4] != VERSION {
        return Err(CoreError::Wire(format!(
            "unsupported protocol version {}",
            h[4]
        )));
    }
    let frame_type = FrameType::from_u8(h[5])?;
    let timestamp_us = u64::from_le_bytes(h[6..14].try_into().expect("8 header bytes"));
    let len = u32::from_le_bytes(h[14..18].try_into().expect("4 header bytes")) as usize;
    if len > MAX_PAYLOAD {
        return Err(CoreError::Wire(format!(
            "payload length {len} exceeds the {MAX_PAYLOAD}-byte limit"
        )));
    }
    Ok((frame_type, timestamp_us, len))
}

/// Decodes one frame from a byte slice, requiring exact consumption.
pub fn frame_decode(bytes: &[u8]) -> Result<WireFrame> {
    if bytes.len() < HEADER_LEN {
        return Err(CoreError::Wire("incomplete frame header".into()));
    }
    let header: &[u8; HEADER_LEN] = bytes[..HEADER_LEN].try_into().expect("checked length");
    let (frame_type, timestamp_us, len) = parse_header(header)?;
    let body = &bytes[HEADER_LEN..];
    if body.len() != len {
        return Err(CoreError::Wire(format!(
            "incomplete frame: header promises {len} payload bytes, slice has {}",
            body.len()
        )));
    }
    Ok(WireFrame {
        frame_type,
        timestamp_us,
        payload: body.to_vec(),
    })
}

/// Reads one frame from a stream. Returns None on a clean end of
/// stream (EOF exactly at a frame boundary); EOF anywhere inside a
/// frame is an error.
pub fn read_frame<R: Read>(r: &mut R) -> Result<Option<WireFrame>> {
    let mut header = [0u8; HEADER_LEN];
    let mut filled = 0;
    while filled < HEADER_LEN {
        let n = r.read(&mut header[filled..])?;
        if n == 0 {
            if filled == 0 {
                return Ok(None);
            }
            return Err(CoreError::Wire(format!(
                "incomplete frame: stream ended {filled} bytes into the header"
            )));
        }
        filled += n;
    }
    let (frame_type, timestamp_us, len) = parse_header(&header)?;
    let mut payload = vec![0u8; len];
    r.read_exact(&mut payload)
        .map_err(|e| CoreError::Wire(format!("incomplete frame payload: {e}")))?;
    Ok(Some(WireFrame {
        frame_type,
        timestamp_us,
        payload,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn empty_end_of_stream_frame_is_exactly_the_header() {
        let frame = WireFrame::new(FrameType::EndOfStream, 42, vec![]);
        let bytes = frame_encode(&frame).unwrap();
        assert_eq!(bytes.len(), 18);
        assert_eq!(frame_decode(&bytes).unwrap(), frame);
    }

    #[test]
    fn corrupted_magic_is_a_clean_error() {
        let mut bytes = frame_encode(&WireFrame::new(FrameType::Depth, 1, vec![7; 4])).unwrap();
        bytes[0] = b'X';
        let err = frame_decode(&bytes).unwrap_err().to_string();
        assert!(err.contains("not a SCM stream"), "{err}");
    }

    #[test]
    fn unknown_type_and_version_are_rejected() {
        let mut bytes = frame_encode(&WireFrame::new(FrameType::Semantic, 0, vec![])).unwrap();
        bytes[5] = 9;
        assert!(frame_decode(&bytes).is_err());
        bytes[5] = 0;
        bytes[4] = 2;
        assert!(frame_decode(&bytes).is_err());
    }

    #[test]
    fn truncated_payload_is_incomplete_not_a_panic() {
        let bytes = frame_encode(&WireFrame::new(FrameType::Depth, 5, vec![1, 2, 3, 4])).unwrap();
        let err = frame_decode(&bytes[..bytes.len() - 1]).unwrap_err().to_string();
        assert!(err.contains("incomplete"), "{err}");
        let err2 = frame_decode(&bytes[..10]).unwrap_err().to_string();
        assert!(err2.contains("incomplete"), "{err2}");
    }

    #[test]
    fn stream_reader_sees_frames_then_clean_eof() {
        let a = WireFrame::new(FrameType::Semantic, 10, vec![1, 2, 3]);
        let b = WireFrame::new(FrameType::EndOfStream, 20, vec![]);
        let mut bytes = frame_encode(&a).unwrap();
        bytes.extend(frame_encode(&b).unwrap());
        let mut cur = std::io::Cursor::new(bytes);
        assert_eq!(read_frame(&mut cur).unwrap().unwrap(), a);
        assert_eq!(read_frame(&mut cur).unwrap().unwrap(), b);
        assert!(read_frame(&mut cur).unwrap().is_none());
    }

    #[test]
    fn eof_inside_a_frame_is_an_error() {
        let bytes = frame_encode(&WireFrame::new(FrameType::Depth, 3, vec![9; 10])).unwrap();
        let mut cur = std::io::Cursor::new(&bytes[..20]);
        assert!(read_frame(&mut cur).is_err());
        let mut cur = std::io::Cursor::new(&bytes[..7]);
        assert!(read_frame(&mut cur).is_err());
    }

    #[test]
    fn timestamp_conversion_round_trips_microseconds() {
        let us = WireFrame::timestamp_us_from_seconds(1305031102.175304).unwrap();
        assert_eq!(us, 1305031102175304);
        assert!(WireFrame::timestamp_us_from_seconds(-1.0).is_err());
        assert!(WireFrame::timestamp_us_from_seconds(f64::NAN).is_err());
    }

    proptest! {
        #[test]
        fn round_trips_random_frames(
            type_byte in 0u8..4,
            ts in any::<u64>(),
            payload in proptest::collection::vec(any::<u8>(), 0..1024),
        ) {
            let frame = WireFrame::new(
                FrameType::from_u8(type_byte).unwrap(),
                ts,
                payload,
            );
            let bytes = frame_encode(&frame).unwrap();
            prop_assert_eq!(frame_decode(&bytes).unwrap(), frame);
        }
    }
}
