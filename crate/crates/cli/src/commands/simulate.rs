//! `scmap simulate`: edge and cloud sessions connected by an in-memory
//! pipe inside one process. Writes the map, per-frame reconstructions,
//! and a metrics report.

use std::path::PathBuf;

use clap::Args as ClapArgs;
use serde::Deserialize;

use scmap_core::transport::{cloud_session, edge_session, pipe, CloudConfig, EdgeConfig};
use serde_json::json;

use crate::config::{load_overrides, pick, require};
use crate::error::{CliError, CliResult};
use crate::input::{load_input, parse_input};
use crate::report::write_json;

use super::session_io::{
    cloud_stats_value, compression_block, edge_stats_value, load_model, map_block, oracle_block,
    parse_mode, per_frame_psnr, psnr_block, write_session_outputs,
};

#[derive(Debug, ClapArgs)]
pub struct Args {
    /// JSON file holding these same keys; flags win.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Codec checkpoint shared by both ends.
    #[arg(long)]
    model: Option<PathBuf>,
    /// Frame source: tum:<dir>, synth:<WxHxN>, or const:<WxH[xN]>.
    #[arg(long)]
    input: Option<String>,
    /// Output directory for map.ply, recon_*.ppm, metrics.json.
    #[arg(long)]
    out: Option<PathBuf>,
    /// "digital" or "analog".
    #[arg(long)]
    mode: Option<String>,
    #[arg(long)]
    snr: Option<f64>,
    /// Add channel noise to analog symbols ("on"/"off").
    #[arg(long)]
    noise: Option<String>,
    #[arg(long)]
    noise_seed: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    resolution: Option<f64>,
    #[arg(long)]
    stride: Option<usize>,
    #[arg(long)]
    hit_prob: Option<f64>,
    /// RGB/depth pairing tolerance in seconds.
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    pose_tol: Option<f64>,
    #[arg(long)]
    queue_capacity: Option<usize>,
    #[arg(long)]
    max_frames: Option<usize>,
    #[arg(long)]
    depth_scale: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileCfg {
    model: Option<PathBuf>,
    input: Option<String>,
    out: Option<PathBuf>,
    mode: Option<String>,
    snr: Option<f64>,
    noise: Option<String>,
    noise_seed: Option<u64>,
    seed: Option<u64>,
    resolution: Option<f64>,
    stride: Option<usize>,
    hit_prob: Option<f64>,
    tol: Option<f64>,
    pose_tol: Option<f64>,
    queue_capacity: Option<usize>,
    max_frames: Option<usize>,
    depth_scale: Option<f64>,
}

pub fn run(args: Args) -> CliResult<()> {
    let file: FileCfg = load_overrides(args.config.as_ref())?;

    let model_path = require(args.model, file.model, "model")?;
    let input = parse_input(&require(args.input, file.input, "input")?)?;
    let out_dir = require(args.out, file.out, "out")?;
    let mode = parse_mode(&pick(args.mode, file.mode, "digital".into()))?;
    let snr_db = pick(args.snr, file.snr, 20.0);
    let noise = crate::config::parse_on_off(&pick(args.noise, file.noise, "on".into()), "noise")?;
    let noise_seed = pick(args.noise_seed, file.noise_seed, 0);
    let seed = pick(args.seed, file.seed, 0);
    let max_frames = args.max_frames.or(file.max_frames);
    let depth_scale = pick(args.depth_scale, file.depth_scale, 5000.0);

    let (model, hash) = load_model(&model_path)?;
    let loaded = load_input(&input, seed, max_frames, depth_scale)?;

    let edge_cfg = EdgeConfig {
        mode,
        snr_db,
        apply_noise: noise,
        noise_seed,
    };
    let cloud_cfg = CloudConfig {
        tol_s: pick(args.tol, file.tol, 0.02),
        map_resolution: pick(args.resolution, file.resolution, 0.05),
        stride: pick(args.stride, file.stride, 4),
        hit_prob: pick(args.hit_prob, file.hit_prob, 0.9),
        queue_capacity: pick(args.queue_capacity, file.queue_capacity, 8),
        intrinsics: loaded.intrinsics.clone(),
        palette: loaded.palette.clone(),
        pose_tol_s: pick(args.pose_tol, file.pose_tol, 0.02),
    };

    let (mut pw, mut pr) = pipe(1 << 16);
    let (edge_stats, cloud_out) = std::thread::scope(|s| {
        let edge = s.spawn(|| {
            let stats =
                edge_session(&model, hash, &loaded.rgb, &loaded.depth, &edge_cfg, &mut pw)?;
            drop(pw);
            Ok::<_, scmap_core::CoreError>(stats)
        });
        let cloud = cloud_session(&model, hash, &loaded.trajectory, &cloud_cfg, &mut pr);
        (edge.join().expect("edge thread panicked"), cloud)
    });
    let edge_stats = edge_stats?;
    let cloud_out = cloud_out?;

    write_session_outputs(&out_dir, &cloud_out.map, &loaded.palette, &cloud_out.reconstructions)?;

    let psnr = per_frame_psnr(&cloud_out.reconstructions, &loaded.rgb);
    let (width, height) = loaded
        .rgb
        .first()
        .map(|f| (f.width, f.height))
        .unwrap_or((0, 0));

    let mut metrics = json!({
        "mode": match mode {
            scmap_core::transport::TransmitMode::Digital => "digital",
            scmap_core::transport::TransmitMode::Analog => "analog",
        },
        "snr_db": snr_db,
        "seed": seed,
        "edge": edge_stats_value(&edge_stats),
        "cloud": cloud_stats_value(&cloud_out.stats),
        "psnr_db": psnr_block(&psnr),
        "compression": compression_block(&model.config, mode, width, height),
        "map": map_block(&cloud_out.map),
    });
    if let Some(oracle) = &loaded.oracle {
        metrics["oracle"] = oracle_block(oracle, &cloud_out.map);
    }
    write_json(&out_dir.join("metrics.json"), &metrics)?;

    if let Some(err) = &cloud_out.stats.protocol_error {
        return Err(CliError::Runtime(format!("session fault: {err}")));
    }
    if let Some(err) = &edge_stats.error {
        return Err(CliError::Runtime(format!("edge fault: {err}")));
    }
    println!("map {} voxels, outputs in {}", cloud_out.map.len(), out_dir.display());
    Ok(())
}
