//! Cloud-side receive loop.
//!
//! Three pipelined stages joined by bounded queues: (1) read and decode
//! wire frames into images, (2) align RGB with depth by timestamp,
//! (3) segment and fuse aligned pairs into the semantic map. Each queue
//! has one producer and one consumer; the map is touched only by the
//! final stage.
//!
//! A codebook hash that does not match the local checkpoint aborts the
//! whole session: decoding with a different codebook would silently
//! produce garbage. Every other stream fault ends the session cleanly,
//! keeping the map and reconstructions built so far.

use std::io::Read;
use std::time::Instant;

use super::align::StreamAligner;
use super::payload::{decode_depth, decode_semantic, decode_sync, SemanticContent};
use super::queue::{bounded, BoundedReceiver, BoundedSender};
use super::wire::{read_frame, FrameType};
use crate::codec::CodecModel;
use crate::error::{CoreError, Result};
use crate::mapping::{integrate_pair, CameraIntrinsics, LabelPalette, SemanticOctree};
use crate::metrics::{StageTimings, Trajectory};
use crate::types::{DepthFrame, RgbFrame};

#[derive(Debug, Clone)]
pub struct CloudConfig {
    /// RGB/depth pairing tolerance in seconds.
    pub tol_s: f64,
    pub map_resolution: f64,
    /// Pixel stride for back-projection.
    pub stride: usize,
    /// Bayesian weight given to each observed label.
    pub hit_prob: f64,
    pub queue_capacity: usize,
    pub intrinsics: CameraIntrinsics,
    pub palette: LabelPalette,
    /// How far an aligned pair may sit from its nearest pose.
    pub pose_tol_s: f64,
}

impl Default for CloudConfig {
    fn default() -> Self {
        CloudConfig {
            tol_s: 0.02,
            map_resolution: 0.05,
            stride: 4,
            hit_prob: 0.9,
            queue_capacity: 8,
            intrinsics: CameraIntrinsics::tum_default(),
            palette: LabelPalette::standard(6).expect("standard palette"),
            pose_tol_s: 0.02,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct CloudStats {
    pub semantic_frames: usize,
    pub depth_frames: usize,
    pub pairs_mapped: usize,
    /// Aligned pairs with no pose within tolerance.
    pub pairs_skipped_no_pose: usize,
    pub dropped_rgb: usize,
    pub dropped_depth: usize,
    pub bytes_received: usize,
    /// First stream or mapping fault; the session still returns what it
    /// built before the fault.
    pub protocol_error: Option<String>,
    pub timings: StageTimings,
    /// Deepest either inter-stage queue got; bounded by capacity.
    pub queue_high_water: usize,
}

#[derive(Debug)]
pub struct CloudOutput {
    pub map: SemanticOctree,
    /// Decoded RGB frames in arrival order.
    pub reconstructions: Vec<RgbFrame>,
    pub stats: CloudStats,
}

enum Item {
    Rgb(RgbFrame),
    Depth(DepthFrame),
}

fn hex(bytes: &[u8; 32]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

struct DecodeOut {
    reconstructions: Vec<RgbFrame>,
    bytes: usize,
    semantic: usize,
    depth: usize,
    error: Option<String>,
    timings: StageTimings,
}

/// Stage 1: frames off the wire, images onto the queue.
fn run_decode<R: Read>(
    model: &CodecModel,
    expected_hash: [u8; 32],
    source: &mut R,
    tx: BoundedSender<Item>,
) -> Result<DecodeOut> {
    let mut out = DecodeOut {
        reconstructions: Vec::new(),
        bytes: 0,
        semantic: 0,
        depth: 0,
        error: None,
        timings: StageTimings::new(),
    };
    let mut synced = false;
    loop {
        let frame = match read_frame(source) {
            Ok(Some(f)) => f,
            Ok(None) => {
                out.error = Some("stream ended without end-of-stream frame".into());
                break;
            }
            Err(e) => {
                out.error = Some(e.to_string());
                break;
            }
        };
        out.bytes += frame.encoded_len();
        match frame.frame_type {
            FrameType::CodebookSync => {
                let got = match decode_sync(&frame.payload) {
                    Ok(h) => h,
                    Err(e) => {
                        out.error = Some(e.to_string());
                        break;
                    }
                };
                if got != expected_hash {
                    return Err(CoreError::CodebookMismatch {
                        sender: hex(&got),
                        receiver: hex(&expected_hash),
                    });
                }
                synced = true;
            }
            FrameType::Semantic => {
                if !synced {
                    out.error = Some("semantic frame before codebook sync".into());
                    break;
                }
                let t0 = Instant::now();
                let decoded = decode_semantic(&frame.payload).and_then(|p| {
                    match p.content {
                        SemanticContent::Digital(d) => model.decode_digital(&d, p.snr_db),
                        SemanticContent::Analog(a) => model.decode_analog(&a, p.snr_db),
                    }
                });
                let img = match decoded {
                    Ok(t) => t,
                    Err(e) => {
                        out.error = Some(e.to_string());
                        break;
                    }
                };
                out.timings.record("decode", t0.elapsed());
                let rgb = match RgbFrame::from_tensor(frame.timestamp_seconds(), &img) {
                    Ok(f) => f,
                    Err(e) => {
                        out.error = Some(e.to_string());
                        break;
                    }
                };
                out.reconstructions.push(rgb.clone());
                out.semantic += 1;
                if !tx.send(Item::Rgb(rgb)) {
                    break;
                }
            }
            FrameType::Depth => {
                let d = match decode_depth(&frame.payload, frame.timestamp_seconds()) {
                    Ok(f) => f,
                    Err(e) => {
                        out.error = Some(e.to_string());
                        break;
                    }
                };
                out.depth += 1;
                if !tx.send(Item::Depth(d)) {
                    break;
                }
            }
            FrameType::EndOfStream => break,
        }
    }
    Ok(out)
}

/// Stage 2: pair RGB with depth; forward pairs in timestamp order.
fn run_align(
    mut aligner: StreamAligner,
    rx: BoundedReceiver<Item>,
    tx: BoundedSender<super::align::AlignedPair>,
) -> (usize, usize, usize) {
    'feed: while let Some(item) = rx.recv() {
        let ready = match item {
            Item::Rgb(f) => aligner.push_rgb(f),
            Item::Depth(f) => aligner.push_depth(f),
        };
        for pair in ready {
            if !tx.send(pair) {
                break 'feed;
            }
        }
    }
    let q1_high = rx.high_water();
    let (pairs, drops) = aligner.finish();
    for pair in pairs {
        if !tx.send(pair) {
            break;
        }
    }
    (drops.rgb.len(), drops.depth.len(), q1_high)
}

struct MapOut {
    map: SemanticOctree,
    mapped: usize,
    skipped_no_pose: usize,
    timings: StageTimings,
    q2_high: usize,
    error: Option<String>,
}

/// Stage 3: segment, back-project, fuse. Sole writer of the map.
fn run_map(
    map: SemanticOctree,
    rx: BoundedReceiver<super::align::AlignedPair>,
    poses: &Trajectory,
    cfg: &CloudConfig,
) -> MapOut {
    let mut out = MapOut {
        map,
        mapped: 0,
        skipped_no_pose: 0,
        timings: StageTimings::new(),
        q2_high: 0,
        error: None,
    };
    while let Some(pair) = rx.recv() {
        let Some(pose) = poses.nearest_within(pair.timestamp(), cfg.pose_tol_s) else {
            out.skipped_no_pose += 1;
            continue;
        };
        let labels = cfg.palette.segment(&pair.rgb);
        match integrate_pair(
            &mut out.map,
            &pair.depth,
            &labels,
            pose,
            &cfg.intrinsics,
            cfg.stride,
            cfg.hit_prob,
        ) {
            Ok(st) => {
                out.timings.record_seconds("map_update", st.duration_s);
                out.mapped += 1;
            }
            Err(e) => {
                out.error = Some(format!("mapping failed: {e}"));
                break;
            }
        }
    }
    out.q2_high = rx.high_water();
    out
}

/// Runs one receive session to completion. Returns an error only when
/// the session cannot legitimately produce output (bad configuration,
/// or a sender whose codebook differs from ours); stream faults end
/// the session early with whatever was built.
pub fn cloud_session<R: Read + Send>(
    model: &CodecModel,
    expected_hash: [u8; 32],
    poses: &Trajectory,
    cfg: &CloudConfig,
    source: &mut R,
) -> Result<CloudOutput> {
    if cfg.queue_capacity == 0 {
        return Err(CoreError::InvalidInput(
            "queue capacity must be at least 1".into(),
        ));
    }
    let aligner = StreamAligner::new(cfg.tol_s)?;
    let map = SemanticOctree::new(cfg.map_resolution, cfg.palette.label_count())?;

    let (tx1, rx1) = bounded::<Item>(cfg.queue_capacity);
    let (tx2, rx2) = bounded::<super::align::AlignedPair>(cfg.queue_capacity);

    let (decode_out, align_out, map_out) = std::thread::scope(|s| {
        let decode = s.spawn(move || run_decode(model, expected_hash, source, tx1));
        let align = s.spawn(move || run_align(aligner, rx1, tx2));
        let mapper = s.spawn(move || run_map(map, rx2, poses, cfg));
        (
            decode.join().expect("decode stage panicked"),
            align.join().expect("align stage panicked"),
            mapper.join().expect("map stage panicked"),
        )
    });

    let decode_out = decode_out?;
    let (dropped_rgb, dropped_depth, q1_high) = align_out;

    let mut timings = decode_out.timings;
    timings.merge(&map_out.timings);
    let protocol_error = decode_out.error.or(map_out.error);

    Ok(CloudOutput {
        map: map_out.map,
        reconstructions: decode_out.reconstructions,
        stats: CloudStats {
            semantic_frames: decode_out.semantic,
            depth_frames: decode_out.depth,
            pairs_mapped: map_out.mapped,
            pairs_skipped_no_pose: map_out.skipped_no_pose,
            dropped_rgb,
            dropped_depth,
            bytes_received: decode_out.bytes,
            protocol_error,
            timings,
            queue_high_water: q1_high.max(map_out.q2_high),
        },
    })
}
