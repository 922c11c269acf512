//! Edge-side transmit loop.
//!
//! Streams one session onto an ordered byte sink: a codebook-sync frame
//! announcing the sender's checkpoint, then semantic and depth frames
//! merged in capture order, then end-of-stream. Semantic frames carry
//! the codec output for the configured mode; in analog mode the channel
//! can be simulated here so the serialized symbols are the noisy ones.

use std::io::Write;
use std::time::Instant;

use super::payload::{encode_depth, encode_semantic, encode_sync, SemanticContent, SemanticPayload};
use super::wire::{frame_encode, FrameType, WireFrame};
use crate::channel::awgn_apply;
use crate::codec::CodecModel;
use crate::error::Result;
use crate::metrics::StageTimings;
use crate::types::{DepthFrame, RgbFrame};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TransmitMode {
    Digital,
    Analog,
}

#[derive(Debug, Clone)]
pub struct EdgeConfig {
    pub mode: TransmitMode,
    pub snr_db: f64,
    /// Add AWGN to analog symbols before serialization, simulating the
    /// physical channel at the sender. Digital payloads are always
    /// carried reliably; this flag does not affect them.
    pub apply_noise: bool,
    /// Base seed for the simulated channel; each semantic frame uses
    /// base + frame ordinal so noise is independent but replayable.
    pub noise_seed: u64,
}

impl Default for EdgeConfig {
    fn default() -> Self {
        EdgeConfig {
            mode: TransmitMode::Digital,
            snr_db: 20.0,
            apply_noise: false,
            noise_seed: 0,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct EdgeStats {
    /// Semantic + depth + end-of-stream frames delivered. The sync
    /// frame is session setup and counted separately.
    pub frames_sent: usize,
    pub sync_frames: usize,
    pub semantic_frames: usize,
    pub depth_frames: usize,
    /// Every byte that reached the sink, sync frame included.
    pub bytes_sent: usize,
    pub timings: StageTimings,
    /// Sink failure that ended the session early; the counts above
    /// cover only what was delivered before it.
    pub error: Option<String>,
}

/// Serializes and writes one frame. Ok(true) on success, Ok(false) when
/// the sink failed (recorded in stats; the session should stop), Err for
/// frames that cannot be serialized at all.
fn deliver<W: Write>(sink: &mut W, frame: &WireFrame, stats: &mut EdgeStats) -> Result<bool> {
    let bytes = frame_encode(frame)?;
    let t0 = Instant::now();
    let outcome = sink.write_all(&bytes);
    stats.timings.record("write", t0.elapsed());
    match outcome {
        Ok(()) => {
            stats.bytes_sent += bytes.len();
            Ok(true)
        }
        Err(e) => {
            stats.error = Some(format!("sink write failed: {e}"));
            Ok(false)
        }
    }
}

/// Runs one transmit session over pre-captured frames. Both slices are
/// expected in nondecreasing timestamp order; on equal timestamps the
/// RGB frame is sent first. A sink failure ends the session early with
/// partial stats rather than an error so the caller still sees what
/// was delivered.
pub fn edge_session<W: Write>(
    model: &CodecModel,
    checkpoint_hash: [u8; 32],
    rgb: &[RgbFrame],
    depth: &[DepthFrame],
    cfg: &EdgeConfig,
    sink: &mut W,
) -> Result<EdgeStats> {
    let mut stats = EdgeStats::default();

    let first_ts = match (rgb.first(), depth.first()) {
        (Some(r), Some(d)) => r.timestamp.min(d.timestamp),
        (Some(r), None) => r.timestamp,
        (None, Some(d)) => d.timestamp,
        (None, None) => 0.0,
    };
    let last_ts = match (rgb.last(), depth.last()) {
        (Some(r), Some(d)) => r.timestamp.max(d.timestamp),
        (Some(r), None) => r.timestamp,
        (None, Some(d)) => d.timestamp,
        (None, None) => 0.0,
    };

    let sync = WireFrame::new(
        FrameType::CodebookSync,
        WireFrame::timestamp_us_from_seconds(first_ts)?,
        encode_sync(&checkpoint_hash),
    );
    if !deliver(sink, &sync, &mut stats)? {
        return Ok(stats);
    }
    stats.sync_frames += 1;

    let (mut i, mut j) = (0usize, 0usize);
    while i < rgb.len() || j < depth.len() {
        let take_rgb = match (rgb.get(i), depth.get(j)) {
            (Some(r), Some(d)) => r.timestamp <= d.timestamp,
            (Some(_), None) => true,
            (None, _) => false,
        };
        if take_rgb {
            let frame = &rgb[i];
            i += 1;
            let t0 = Instant::now();
            let img = frame.to_tensor();
            let content = match cfg.mode {
                TransmitMode::Digital => {
                    SemanticContent::Digital(model.encode_digital(&img, cfg.snr_db)?)
                }
                TransmitMode::Analog => {
                    let mut latent = model.encode_analog(&img, cfg.snr_db)?;
                    if cfg.apply_noise {
                        let seed = cfg.noise_seed.wrapping_add(stats.semantic_frames as u64);
                        latent.symbols = awgn_apply(&latent.symbols, cfg.snr_db, seed);
                    }
                    SemanticContent::Analog(latent)
                }
            };
            let payload = encode_semantic(&SemanticPayload {
                snr_db: cfg.snr_db,
                content,
            })?;
            stats.timings.record("encode", t0.elapsed());
            let wire = WireFrame::new(
                FrameType::Semantic,
                WireFrame::timestamp_us_from_seconds(frame.timestamp)?,
                payload,
            );
            if !deliver(sink, &wire, &mut stats)? {
                return Ok(stats);
            }
            stats.semantic_frames += 1;
        } else {
            let frame = &depth[j];
            j += 1;
            let wire = WireFrame::new(
                FrameType::Depth,
                WireFrame::timestamp_us_from_seconds(frame.timestamp)?,
                encode_depth(frame)?,
            );
            if !deliver(sink, &wire, &mut stats)? {
                return Ok(stats);
            }
            stats.depth_frames += 1;
        }
        stats.frames_sent += 1;
    }

    let eos = WireFrame::new(
        FrameType::EndOfStream,
        WireFrame::timestamp_us_from_seconds(last_ts)?,
        Vec::new(),
    );
    if !deliver(sink, &eos, &mut stats)? {
        return Ok(stats);
    }
    stats.frames_sent += 1;

    if let Err(e) = sink.flush() {
        stats.error = Some(format!("sink flush failed: {e}"));
    }
    Ok(stats)
}
