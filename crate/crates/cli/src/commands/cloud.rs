//! `scmap cloud`: receive a wire stream from a TCP peer, a capture
//! file, or stdin, and write the reconstructions and semantic map.

use std::io::{Read, Write};
use std::net::{TcpListener, TcpStream};
use std::path::PathBuf;
use std::time::{Duration, Instant};

use clap::Args as ClapArgs;
use serde::Deserialize;
use serde_json::json;

use scmap_core::mapping::{CameraIntrinsics, LabelPalette};
use scmap_core::metrics::Trajectory;
use scmap_core::transport::{cloud_session, CloudConfig};

use crate::config::{load_overrides, pick, require};
use crate::error::{CliError, CliResult};
use crate::input::{load_input, parse_input, LoadedInput};
use crate::report::write_json;

use super::session_io::{cloud_stats_value, load_model, map_block, oracle_block, write_session_outputs};

#[derive(Debug, ClapArgs)]
pub struct Args {
    /// JSON file holding these same keys; flags win.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Codec checkpoint; must match the sender's.
    #[arg(long)]
    model: Option<PathBuf>,
    /// Wire source: tcp://host:port, file:path, or "-" for stdin.
    #[arg(long)]
    listen: Option<String>,
    /// Input spec supplying poses, intrinsics, palette, and (synthetic
    /// only) the oracle map. Alternative to --poses.
    #[arg(long)]
    input: Option<String>,
    /// Camera trajectory file in TUM format. Overrides the poses from
    /// --input when both are given.
    #[arg(long)]
    poses: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Voxel edge length in meters.
    #[arg(long)]
    resolution: Option<f64>,
    /// Pixel subsampling step during map updates.
    #[arg(long)]
    stride: Option<usize>,
    /// Confidence of an observed label.
    #[arg(long)]
    hit_prob: Option<f64>,
    /// RGB/depth pairing tolerance in seconds.
    #[arg(long)]
    tol: Option<f64>,
    /// Pose lookup tolerance in seconds.
    #[arg(long)]
    pose_tol: Option<f64>,
    #[arg(long)]
    queue_capacity: Option<usize>,
    /// Seconds to wait for a TCP connection.
    #[arg(long)]
    timeout_s: Option<f64>,
    /// Write the actual bound address here once listening. Lets a
    /// launcher bind port 0 and discover the port.
    #[arg(long)]
    port_file: Option<PathBuf>,
    /// Synthetic input generation seed (must match the sender's).
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    max_frames: Option<usize>,
    #[arg(long)]
    depth_scale: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileCfg {
    model: Option<PathBuf>,
    listen: Option<String>,
    input: Option<String>,
    poses: Option<PathBuf>,
    out: Option<PathBuf>,
    resolution: Option<f64>,
    stride: Option<usize>,
    hit_prob: Option<f64>,
    tol: Option<f64>,
    pose_tol: Option<f64>,
    queue_capacity: Option<usize>,
    timeout_s: Option<f64>,
    port_file: Option<PathBuf>,
    seed: Option<u64>,
    max_frames: Option<usize>,
    depth_scale: Option<f64>,
}

fn accept_with_timeout(
    addr: &str,
    timeout: Duration,
    port_file: Option<&PathBuf>,
) -> CliResult<TcpStream> {
    let listener = TcpListener::bind(addr)
        .map_err(|e| CliError::Runtime(format!("cannot listen on {addr}: {e}")))?;
    let local = listener.local_addr().map_err(|e| CliError::Runtime(e.to_string()))?;
    if let Some(path) = port_file {
        std::fs::write(path, format!("{local}\n"))
            .map_err(|e| CliError::Config(format!("cannot write {}: {e}", path.display())))?;
    }
    log::info!("listening on {local}");
    listener
        .set_nonblocking(true)
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    let deadline = Instant::now() + timeout;
    loop {
        match listener.accept() {
            Ok((stream, peer)) => {
                log::info!("edge connected from {peer}");
                stream
                    .set_nonblocking(false)
                    .map_err(|e| CliError::Runtime(e.to_string()))?;
                return Ok(stream);
            }
            Err(e) if e.kind() == std::io::ErrorKind::WouldBlock => {
                if Instant::now() >= deadline {
                    return Err(CliError::Runtime(format!(
                        "no connection on {local} within {:.1} s",
                        timeout.as_secs_f64()
                    )));
                }
                std::thread::sleep(Duration::from_millis(25));
            }
            Err(e) => return Err(CliError::Runtime(format!("accept failed: {e}"))),
        }
    }
}

fn open_source(
    spec: &str,
    timeout: Duration,
    port_file: Option<&PathBuf>,
) -> CliResult<Box<dyn Read + Send>> {
    if spec == "-" {
        return Ok(Box::new(std::io::stdin()));
    }
    if let Some(addr) = spec.strip_prefix("tcp://") {
        return Ok(Box::new(accept_with_timeout(addr, timeout, port_file)?));
    }
    if let Some(path) = spec.strip_prefix("file:") {
        let file = std::fs::File::open(path)
            .map_err(|e| CliError::Config(format!("cannot open {path}: {e}")))?;
        return Ok(Box::new(file));
    }
    Err(CliError::Config(format!(
        "bad source '{spec}': expected tcp://host:port, file:path, or -"
    )))
}

struct SceneContext {
    trajectory: Trajectory,
    intrinsics: CameraIntrinsics,
    palette: LabelPalette,
    loaded: Option<LoadedInput>,
}

fn scene_context(
    input: Option<String>,
    poses: Option<PathBuf>,
    seed: u64,
    max_frames: Option<usize>,
    depth_scale: f64,
) -> CliResult<SceneContext> {
    let loaded = match input {
        Some(spec) => Some(load_input(&parse_input(&spec)?, seed, max_frames, depth_scale)?),
        None => None,
    };
    let from_file = match poses {
        Some(path) => {
            let text = std::fs::read_to_string(&path)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
            Some(
                Trajectory::parse_tum(&text, &path.display().to_string())
                    .map_err(|e| CliError::Runtime(e.to_string()))?,
            )
        }
        None => None,
    };
    match (loaded, from_file) {
        (Some(l), poses) => Ok(SceneContext {
            trajectory: poses.unwrap_or_else(|| l.trajectory.clone()),
            intrinsics: l.intrinsics.clone(),
            palette: l.palette.clone(),
            loaded: Some(l),
        }),
        (None, Some(t)) => Ok(SceneContext {
            trajectory: t,
            intrinsics: CameraIntrinsics::tum_default(),
            palette: LabelPalette::standard(6)
                .map_err(|e| CliError::Runtime(e.to_string()))?,
            loaded: None,
        }),
        (None, None) => Err(CliError::Config(
            "poses are required: pass --input or --poses".into(),
        )),
    }
}

pub fn run(args: Args) -> CliResult<()> {
    let file: FileCfg = load_overrides(args.config.as_ref())?;

    let model_path = require(args.model, file.model, "model")?;
    let listen = require(args.listen, file.listen, "listen")?;
    let out_dir = require(args.out, file.out, "out")?;
    let timeout = Duration::from_secs_f64(pick(args.timeout_s, file.timeout_s, 10.0).max(0.0));
    let port_file = args.port_file.or(file.port_file);
    let seed = pick(args.seed, file.seed, 0);
    let max_frames = args.max_frames.or(file.max_frames);
    let depth_scale = pick(args.depth_scale, file.depth_scale, 5000.0);

    let (model, hash) = load_model(&model_path)?;
    let ctx = scene_context(
        args.input.or(file.input),
        args.poses.or(file.poses),
        seed,
        max_frames,
        depth_scale,
    )?;

    let cfg = CloudConfig {
        tol_s: pick(args.tol, file.tol, 0.02),
        map_resolution: pick(args.resolution, file.resolution, 0.05),
        stride: pick(args.stride, file.stride, 4),
        hit_prob: pick(args.hit_prob, file.hit_prob, 0.9),
        queue_capacity: pick(args.queue_capacity, file.queue_capacity, 8),
        intrinsics: ctx.intrinsics.clone(),
        palette: ctx.palette.clone(),
        pose_tol_s: pick(args.pose_tol, file.pose_tol, 0.02),
    };

    let mut source = open_source(&listen, timeout, port_file.as_ref())?;
    let output = cloud_session(&model, hash, &ctx.trajectory, &cfg, &mut source)?;
    drop(source);

    write_session_outputs(&out_dir, &output.map, &ctx.palette, &output.reconstructions)?;
    let mut report = json!({
        "listen": listen,
        "cloud": cloud_stats_value(&output.stats),
        "map": map_block(&output.map),
    });
    if let Some(oracle) = ctx.loaded.as_ref().and_then(|l| l.oracle.as_ref()) {
        report["oracle"] = oracle_block(oracle, &output.map);
    }
    write_json(&out_dir.join("cloud_stats.json"), &report)?;

    let mut stdout = std::io::stdout().lock();
    writeln!(
        stdout,
        "map {} voxels, outputs in {}",
        output.map.len(),
        out_dir.display()
    )?;

    if let Some(err) = output.stats.protocol_error {
        return Err(CliError::Runtime(format!("stream fault: {err}")));
    }
    Ok(())
}
