//! Payload codecs for the three carrying frame types.

use super::bitpack;
use crate::codec::{AnalogLatent, DigitalLatent};
use crate::error::{CoreError, Result};
use crate::types::DepthFrame;

/// Semantic payload body: a quantized index grid (digital) or a block
/// of channel symbols (analog), plus the SNR the sender coded for.
#[derive(Debug, Clone, PartialEq)]
pub enum SemanticContent {
    Digital(DigitalLatent),
    Analog(AnalogLatent),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SemanticPayload {
    pub snr_db: f64,
    pub content: SemanticContent,
}

fn dim_u16(v: usize, what: &str) -> Result<u16> {
    u16::try_from(v)
        .map_err(|_| CoreError::Wire(format!("{what} {v} exceeds the u16 wire field")))
}

/// Layout: mode u8 (0 digital, 1 analog), h u16, w u16, snr f32, then
/// mode-specific body. Digital: bits u8 + packed indices. Analog:
/// channel count u16 + f32 symbols. All little-endian.
pub fn encode_semantic(p: &SemanticPayload) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    let (h, w) = match &p.content {
        SemanticContent::Digital(d) => (d.h, d.w),
        SemanticContent::Analog(a) => (a.h, a.w),
    };
    if h == 0 || w == 0 {
        return Err(CoreError::InvalidInput("empty latent grid".into()));
    }
    out.push(match &p.content {
        SemanticContent::Digital(_) => 0,
        SemanticContent::Analog(_) => 1,
    });
    out.extend_from_slice(&dim_u16(h, "latent height")?.to_le_bytes());
    out.extend_from_slice(&dim_u16(w, "latent width")?.to_le_bytes());
    out.extend_from_slice(&(p.snr_db as f32).to_le_bytes());
    match &p.content {
        SemanticContent::Digital(d) => {
            if d.indices.len() != h * w {
                return Err(CoreError::InvalidInput(format!(
                    "digital latent carries {} indices for a {}x{} grid",
                    d.indices.len(),
                    h,
                    w
                )));
            }
            out.push(d.bits_per_index);
            out.extend_from_slice(&bitpack::pack_indices(&d.indices, d.bits_per_index)?);
        }
        SemanticContent::Analog(a) => {
            if a.symbols.len() != a.channels * h * w {
                return Err(CoreError::InvalidInput(format!(
                    "analog latent carries {} symbols for {}x{}x{}",
                    a.symbols.len(),
                    a.channels,
                    h,
                    w
                )));
            }
            out.extend_from_slice(&dim_u16(a.channels, "channel count")?.to_le_bytes());
            for &s in &a.symbols {
                out.extend_from_slice(&(s as f32).to_le_bytes());
            }
        }
    }
    Ok(out)
}

pub fn decode_semantic(bytes: &[u8]) -> Result<SemanticPayload> {
    let short = || CoreError::Wire("semantic payload truncated".into());
    if bytes.len() < 9 {
        return Err(short());
    }
    let mode = bytes[0];
    let h = u16::from_le_bytes([bytes[1], bytes[2]]) as usize;
    let w = u16::from_le_bytes([bytes[3], bytes[4]]) as usize;
    let snr_db = f32::from_le_bytes(bytes[5..9].try_into().expect("4 bytes")) as f64;
    if h == 0 || w == 0 {
        return Err(CoreError::Wire("semantic payload has empty grid".into()));
    }
    let body = &bytes[9..];
    let content = match mode {
        0 => {
            let (&bits, packed) = body.split_first().ok_or_else(short)?;
            let indices = bitpack::unpack_indices(packed, bits, h * w)?;
            SemanticContent::Digital(DigitalLatent {
                h,
                w,
                bits_per_index: bits,
                indices,
            })
        }
        1 => {
            if body.len() < 2 {
                return Err(short());
            }
            let channels = u16::from_le_bytes([body[0], body[1]]) as usize;
            let raw = &body[2..];
            let expect = channels
                .checked_mul(h * w)
                .ok_or_else(|| CoreError::Wire("symbol count overflow".into()))?;
            if raw.len() != expect * 4 {
                return Err(CoreError::Wire(format!(
                    "analog body is {} bytes, expected {}",
                    raw.len(),
                    expect * 4
                )));
            }
            let symbols = raw
                .chunks_exact(4)
                .map(|b| f32::from_le_bytes(b.try_into().expect("4 bytes")) as f64)
                .collect();
            SemanticContent::Analog(AnalogLatent {
                channels,
                h,
                w,
                symbols,
            })
        }
        other => {
            return Err(CoreError::Wire(format!("unknown semantic mode {other}")));
        }
    };
    Ok(SemanticPayload { snr_db, content })
}

/// Layout: h u16, w u16, depth scale f32, then row-major u16 raw values.
pub fn encode_depth(frame: &DepthFrame) -> Result<Vec<u8>> {
    let mut out = Vec::with_capacity(8 + frame.raw.len() * 2);
    out.extend_from_slice(&dim_u16(frame.height, "depth height")?.to_le_bytes());
    out.extend_from_slice(&dim_u16(frame.width, "depth width")?.to_le_bytes());
    out.extend_from_slice(&(frame.scale as f32).to_le_bytes());
    for &v in &frame.raw {
        out.extend_from_slice(&v.to_le_bytes());
    }
    Ok(out)
}

pub fn decode_depth(bytes: &[u8], timestamp: f64) -> Result<DepthFrame> {
    if bytes.len() < 8 {
        return Err(CoreError::Wire("depth payload truncated".into()));
    }
    let h = u16::from_le_bytes([bytes[0], bytes[1]]) as usize;
    let w = u16::from_le_bytes([bytes[2], bytes[3]]) as usize;
    let scale = f32::from_le_bytes(bytes[4..8].try_into().expect("4 bytes")) as f64;
    let raw_bytes = &bytes[8..];
    if raw_bytes.len() != w * h * 2 {
        return Err(CoreError::Wire(format!(
            "depth body is {} bytes for a {w}x{h} image",
            raw_bytes.len()
        )));
    }
    let raw = raw_bytes
        .chunks_exact(2)
        .map(|b| u16::from_le_bytes([b[0], b[1]]))
        .collect();
    DepthFrame::new(timestamp, w, h, scale, raw)
}

/// The codebook-sync payload is the 32-byte checkpoint digest.
pub fn encode_sync(hash: &[u8; 32]) -> Vec<u8> {
    hash.to_vec()
}

pub fn decode_sync(bytes: &[u8]) -> Result<[u8; 32]> {
    bytes.try_into().map_err(|_| {
        CoreError::Wire(format!(
            "codebook sync payload is {} bytes, expected 32",
            bytes.len()
        ))
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digital_payload_round_trips_and_has_fixed_prefix() {
        let latent = DigitalLatent {
            h: 2,
            w: 3,
            bits_per_index: 9,
            indices: vec![0, 511, 300, 7, 255, 1],
        };
        let p = SemanticPayload {
            snr_db: 12.5,
            content: SemanticContent::Digital(latent),
        };
        let bytes = encode_semantic(&p).unwrap();
        // mode + h + w + snr + bits prefix, then ceil(6*9/8) packed bytes.
        assert_eq!(bytes.len(), 10 + 7);
        assert_eq!(decode_semantic(&bytes).unwrap(), p);
    }

    #[test]
    fn analog_payload_round_trips_through_f32() {
        let symbols: Vec<f64> = (0..12).map(|i| (i as f64 - 6.0) / 3.0).collect();
        let p = SemanticPayload {
            snr_db: 0.0,
            content: SemanticContent::Analog(AnalogLatent {
                channels: 3,
                h: 2,
                w: 2,
                symbols: symbols.clone(),
            }),
        };
        let bytes = encode_semantic(&p).unwrap();
        assert_eq!(bytes.len(), 9 + 2 + 12 * 4);
        let back = decode_semantic(&bytes).unwrap();
        let SemanticContent::Analog(a) = back.content else {
            panic!("mode flipped");
        };
        for (got, want) in a.symbols.iter().zip(&symbols) {
            assert_eq!(*got, *want as f32 as f64);
        }
    }

    #[test]
    fn inconsistent_counts_are_rejected() {
        let p = SemanticPayload {
            snr_db: 0.0,
            content: SemanticContent::Digital(DigitalLatent {
                h: 2,
                w: 2,
                bits_per_index: 4,
                indices: vec![1, 2, 3],
            }),
        };
        assert!(encode_semantic(&p).is_err());
        let good = SemanticPayload {
            snr_db: 0.0,
            content: SemanticContent::Digital(DigitalLatent {
                h: 1,
                w: 2,
                bits_per_index: 4,
                indices: vec![1, 2],
            }),
        };
        let mut bytes = encode_semantic(&good).unwrap();
        bytes.truncate(bytes.len() - 1);
        assert!(decode_semantic(&bytes).is_err());
        assert!(decode_semantic(&[2, 1, 0, 1, 0, 0, 0, 0, 0]).is_err());
    }

    #[test]
    fn depth_payload_round_trips() {
        let frame = DepthFrame::new(3.25, 3, 2, 5000.0, vec![0, 1, 65535, 42, 9, 7]).unwrap();
        let bytes = encode_depth(&frame).unwrap();
        assert_eq!(bytes.len(), 8 + 12);
        let back = decode_depth(&bytes, 3.25).unwrap();
        assert_eq!(back, frame);
        assert!(decode_depth(&bytes[..9], 0.0).is_err());
    }

    #[test]
    fn sync_payload_is_the_digest() {
        let hash = [7u8; 32];
        let bytes = encode_sync(&hash);
        assert_eq!(decode_sync(&bytes).unwrap(), hash);
        assert!(decode_sync(&bytes[..31]).is_err());
    }
}
