//! Pieces shared by the session commands: flag parsing for the two
//! session configs, output writing, and the metric blocks that appear
//! in more than one report.

use std::path::Path;

use scmap_core::codec::{CodecModel, CodecConfig};
use scmap_core::dataio::{write_ppm, OracleMap};
use scmap_core::mapping::{map_export, LabelPalette, SemanticOctree};
use scmap_core::metrics::{compression_ratio, psnr_between};
use scmap_core::transport::{CloudStats, EdgeStats, TransmitMode};
use scmap_core::types::RgbFrame;
use serde_json::{json, Value};

use crate::error::{CliError, CliResult};
use crate::report::{f64_or_null, timing_value};

pub fn parse_mode(s: &str) -> CliResult<TransmitMode> {
    match s {
        "digital" => Ok(TransmitMode::Digital),
        "analog" => Ok(TransmitMode::Analog),
        other => Err(CliError::Config(format!(
            "--mode must be 'digital' or 'analog', got '{other}'"
        ))),
    }
}

/// Loads the shared checkpoint, treating a missing or unreadable file
/// as a configuration error.
pub fn load_model(path: &Path) -> CliResult<(CodecModel, [u8; 32])> {
    if !path.is_file() {
        return Err(CliError::Config(format!(
            "checkpoint {} does not exist",
            path.display()
        )));
    }
    scmap_core::codec::checkpoint::load_file(path)
        .map_err(|e| CliError::Config(format!("checkpoint {}: {e}", path.display())))
}

/// Map PLY (+ label sidecar) and one PPM per reconstructed frame, named
/// by arrival order so independent runs produce comparable trees.
pub fn write_session_outputs(
    out_dir: &Path,
    map: &SemanticOctree,
    palette: &LabelPalette,
    reconstructions: &[RgbFrame],
) -> CliResult<()> {
    std::fs::create_dir_all(out_dir)
        .map_err(|e| CliError::Config(format!("cannot create {}: {e}", out_dir.display())))?;
    map_export(map, palette, &out_dir.join("map.ply"))?;
    for (i, frame) in reconstructions.iter().enumerate() {
        write_ppm(&out_dir.join(format!("recon_{i:04}.ppm")), frame)?;
    }
    Ok(())
}

/// PSNR of each reconstruction against its source frame, paired by
/// arrival order.
pub fn per_frame_psnr(reconstructions: &[RgbFrame], sources: &[RgbFrame]) -> Vec<f64> {
    reconstructions
        .iter()
        .zip(sources)
        .map(|(r, s)| psnr_between(&r.data, &s.data, 1.0))
        .collect()
}

pub fn psnr_block(per_frame: &[f64]) -> Value {
    let finite: Vec<f64> = per_frame.iter().copied().filter(|v| v.is_finite()).collect();
    let mean = if per_frame.is_empty() {
        Value::Null
    } else if finite.len() < per_frame.len() {
        // Any infinite frame PSNR makes the mean infinite too.
        Value::Null
    } else {
        f64_or_null(finite.iter().sum::<f64>() / finite.len() as f64)
    };
    json!({
        "per_frame": per_frame.iter().map(|&v| f64_or_null(v)).collect::<Vec<_>>(),
        "mean": mean,
    })
}

/// Payload bits for one frame of the given size in the given mode,
/// from the codec configuration alone.
pub fn frame_payload_bits(cfg: &CodecConfig, mode: TransmitMode, width: usize, height: usize) -> usize {
    let gh = height / CodecConfig::DOWNSAMPLE;
    let gw = width / CodecConfig::DOWNSAMPLE;
    let cells = gh * gw;
    match mode {
        TransmitMode::Digital => {
            let bits = usize::BITS as usize - (cfg.codebook_size - 1).leading_zeros() as usize;
            cells * bits
        }
        TransmitMode::Analog => 32 * cells * cfg.latent_dim(),
    }
}

pub fn compression_block(
    cfg: &CodecConfig,
    mode: TransmitMode,
    width: usize,
    height: usize,
) -> Value {
    let payload_bits = frame_payload_bits(cfg, mode, width, height);
    json!({
        "payload_bits_per_frame": payload_bits,
        "ratio": f64_or_null(compression_ratio(width, height, payload_bits)),
    })
}

pub fn edge_stats_value(stats: &EdgeStats) -> Value {
    json!({
        "frames_sent": stats.frames_sent,
        "sync_frames": stats.sync_frames,
        "semantic_frames": stats.semantic_frames,
        "depth_frames": stats.depth_frames,
        "bytes_sent": stats.bytes_sent,
        "timing": timing_value(&stats.timings),
        "error": stats.error,
    })
}

pub fn cloud_stats_value(stats: &CloudStats) -> Value {
    json!({
        "semantic_frames": stats.semantic_frames,
        "depth_frames": stats.depth_frames,
        "pairs_mapped": stats.pairs_mapped,
        "pairs_skipped_no_pose": stats.pairs_skipped_no_pose,
        "dropped_rgb": stats.dropped_rgb,
        "dropped_depth": stats.dropped_depth,
        "bytes_received": stats.bytes_received,
        "queue_high_water": stats.queue_high_water,
        "timing": timing_value(&stats.timings),
        "protocol_error": stats.protocol_error,
    })
}

pub fn map_block(map: &SemanticOctree) -> Value {
    let mut max_err = 0.0f64;
    for (_, probs) in map.iter_sorted() {
        let sum: f64 = probs.iter().sum();
        max_err = max_err.max((sum - 1.0).abs());
    }
    json!({
        "voxels": map.len(),
        "prob_sum_max_abs_err": f64_or_null(max_err),
        "ply": "map.ply",
    })
}

pub fn oracle_block(oracle: &OracleMap, map: &SemanticOctree) -> Value {
    let (matched, total) = oracle.agreement(map);
    let fraction = if total == 0 {
        Value::Null
    } else {
        f64_or_null(matched as f64 / total as f64)
    };
    json!({
        "matched": matched,
        "total": total,
        "fraction": fraction,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digital_payload_bits_match_hand_arithmetic() {
        let cfg = CodecConfig::default();
        // 640x480 -> 40x30 grid of 9-bit indices.
        assert_eq!(frame_payload_bits(&cfg, TransmitMode::Digital, 640, 480), 1200 * 9);
        // 32x32 -> 2x2 grid.
        assert_eq!(frame_payload_bits(&cfg, TransmitMode::Digital, 32, 32), 4 * 9);
    }

    #[test]
    fn analog_payload_counts_f32_symbols() {
        let cfg = CodecConfig::default();
        assert_eq!(
            frame_payload_bits(&cfg, TransmitMode::Analog, 32, 32),
            32 * 4 * 64
        );
    }

    #[test]
    fn psnr_block_mean_goes_null_on_perfect_frames() {
        let v = psnr_block(&[f64::INFINITY, 30.0]);
        assert_eq!(v["mean"], Value::Null);
        let v = psnr_block(&[20.0, 30.0]);
        assert!((v["mean"].as_f64().unwrap() - 25.0).abs() < 1e-12);
    }
}
