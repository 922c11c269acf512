//! Binary netpbm readers and writers: P6 for 8-bit RGB, P5 with a
//! 16-bit maxval for depth. These are the canonical on-disk image
//! formats for this project; anything else must be pre-converted.

use crate::error::{CoreError, Result};
use crate::types::{DepthFrame, RgbFrame};
use std::io::{Read, Write};
use std::path::Path;

fn unsupported(path: &Path, magic: &[u8]) -> CoreError {
    CoreError::InvalidInput(format!(
        "{}: unsupported format (magic {:?}), convert to PPM/PGM",
        path.display(),
        String::from_utf8_lossy(magic)
    ))
}

/// Reads netpbm header tokens: magic, then integers separated by
/// whitespace, with '#' comments running to end of line. Returns the
/// integers and the offset of the first raster byte.
fn parse_header(bytes: &[u8], n_fields: usize) -> Result<(Vec<usize>, usize)> {
    let mut fields = Vec::with_capacity(n_fields);
    let mut pos = 2; // past the 2-byte magic
    while fields.len() < n_fields {
        while pos < bytes.len() {
            match bytes[pos] {
                b' ' | b'\t' | b'\r' | b'\n' => pos += 1,
                b'#' => {
                    while pos < bytes.len() && bytes[pos] != b'\n' {
                        pos += 1;
                    }
                }
                _ => break,
            }
        }
        let start = pos;
        while pos < bytes.len() && bytes[pos].is_ascii_digit() {
            pos += 1;
        }
        if pos == start {
            return Err(CoreError::InvalidInput(
                "truncated or malformed netpbm header".into(),
            ));
        }
        let text = std::str::from_utf8(&bytes[start..pos]).expect("digits are ascii");
        fields.push(
            text.parse()
                .map_err(|_| CoreError::InvalidInput(format!("header field '{text}' overflows")))?,
        );
    }
    // Exactly one whitespace byte separates the header from the raster.
    if pos >= bytes.len() {
        return Err(CoreError::InvalidInput(
            "netpbm file ends inside the header".into(),
        ));
    }
    pos += 1;
    Ok((fields, pos))
}

/// Loads an 8-bit binary PPM as a normalized RGB frame.
pub fn read_ppm(path: &Path, timestamp: f64) -> Result<RgbFrame> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut bytes)?;
    if bytes.len() < 2 || &bytes[..2] != b"P6" {
        return Err(unsupported(path, bytes.get(..2).unwrap_or(&bytes)));
    }
    let (fields, raster) = parse_header(&bytes, 3)?;
    let (w, h, maxval) = (fields[0], fields[1], fields[2]);
    if maxval != 255 {
        return Err(CoreError::InvalidInput(format!(
            "{}: only 8-bit PPM supported, maxval {maxval}",
            path.display()
        )));
    }
    let need = w * h * 3;
    let raster = bytes.get(raster..raster + need).ok_or_else(|| {
        CoreError::InvalidInput(format!(
            "{}: raster truncated, need {need} bytes",
            path.display()
        ))
    })?;
    // Interleaved RGB on disk, planar in memory.
    let mut data = vec![0.0; need];
    let plane = w * h;
    for (i, px) in raster.chunks_exact(3).enumerate() {
        for c in 0..3 {
            data[c * plane + i] = px[c] as f64 / 255.0;
        }
    }
    RgbFrame::new(timestamp, w, h, data)
}

/// Writes a frame as binary PPM, requantizing [0, 1] to 8 bits.
pub fn write_ppm(path: &Path, frame: &RgbFrame) -> Result<()> {
    let mut out = Vec::with_capacity(frame.width * frame.height * 3 + 32);
    out.extend_from_slice(format!("P6\n{} {}\n255\n", frame.width, frame.height).as_bytes());
    for v in 0..frame.height {
        for u in 0..frame.width {
            for ch in frame.pixel(u, v) {
                out.push((ch.clamp(0.0, 1.0) * 255.0).round() as u8);
            }
        }
    }
    let mut file = std::fs::File::create(path)?;
    file.write_all(&out)?;
    Ok(())
}

/// Loads a 16-bit binary PGM (big-endian samples) as a raw depth frame.
pub fn read_pgm16(path: &Path, timestamp: f64, depth_scale: f64) -> Result<DepthFrame> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut bytes)?;
    if bytes.len() < 2 || &bytes[..2] != b"P5" {
        return Err(unsupported(path, bytes.get(..2).unwrap_or(&bytes)));
    }
    let (fields, raster) = parse_header(&bytes, 3)?;
    let (w, h, maxval) = (fields[0], fields[1], fields[2]);
    if !(256..=65535).contains(&maxval) {
        return Err(CoreError::InvalidInput(format!(
            "{}: need 16-bit PGM depth (maxval 256..65535), got {maxval}",
            path.display()
        )));
    }
    let need = w * h * 2;
    let raster = bytes.get(raster..raster + need).ok_or_else(|| {
        CoreError::InvalidInput(format!(
            "{}: raster truncated, need {need} bytes",
            path.display()
        ))
    })?;
    let raw: Vec<u16> = raster
        .chunks_exact(2)
        .map(|b| u16::from_be_bytes([b[0], b[1]]))
        .collect();
    DepthFrame::new(timestamp, w, h, depth_scale, raw)
}

/// Writes raw depth as 16-bit binary PGM with big-endian samples.
pub fn write_pgm16(path: &Path, frame: &DepthFrame) -> Result<()> {
    let mut out = Vec::with_capacity(frame.width * frame.height * 2 + 32);
    out.extend_from_slice(format!("P5\n{} {}\n65535\n", frame.width, frame.height).as_bytes());
    for v in 0..frame.height {
        for u in 0..frame.width {
            out.extend_from_slice(&frame.raw_at(u, v).to_be_bytes());
        }
    }
    let mut file = std::fs::File::create(path)?;
    file.write_all(&out)?;
    Ok(())
}
