//! `scmap train`: fit the codec on an input set and write the shared
//! checkpoint plus a per-epoch CSV log.

use std::path::PathBuf;

use clap::Args as ClapArgs;
use serde::Deserialize;

use scmap_core::codec::{checkpoint, train, CodecConfig, CodecModel, TrainConfig};

use crate::config::{load_overrides, parse_on_off, parse_snr_range, pick, require};
use crate::error::{CliError, CliResult};
use crate::input::{frames_to_tensors, load_input, parse_input};

#[derive(Debug, ClapArgs)]
pub struct Args {
    /// JSON file holding these same keys; flags win.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Frame source: tum:<dir>, synth:<WxHxN>, or const:<WxH[xN]>.
    #[arg(long)]
    input: Option<String>,
    /// Output directory for codec.slnn and train_log.csv.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    /// Frames per optimizer step.
    #[arg(long)]
    batch: Option<usize>,
    /// Training SNR in dB: a single value or "lo:hi" sampled per step.
    #[arg(long)]
    snr: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// "on" trains the SNR-gated model, "off" the ablation.
    #[arg(long)]
    attention: Option<String>,
    /// Model size: "full" or "tiny".
    #[arg(long)]
    preset: Option<String>,
    #[arg(long)]
    codebook_size: Option<usize>,
    #[arg(long)]
    max_frames: Option<usize>,
    /// Raw depth units per meter when reading TUM data.
    #[arg(long)]
    depth_scale: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileCfg {
    input: Option<String>,
    out: Option<PathBuf>,
    epochs: Option<usize>,
    lr: Option<f64>,
    batch: Option<usize>,
    snr: Option<String>,
    seed: Option<u64>,
    attention: Option<String>,
    preset: Option<String>,
    codebook_size: Option<usize>,
    max_frames: Option<usize>,
    depth_scale: Option<f64>,
}

pub fn run(args: Args) -> CliResult<()> {
    let file: FileCfg = load_overrides(args.config.as_ref())?;

    let input = parse_input(&require(args.input, file.input, "input")?)?;
    let out_dir = require(args.out, file.out, "out")?;
    let epochs = pick(args.epochs, file.epochs, 100);
    let lr = pick(args.lr, file.lr, 2e-4);
    let batch_size = pick(args.batch, file.batch, 8);
    let snr = pick(args.snr, file.snr, "20".to_string());
    let (snr_min_db, snr_max_db) = parse_snr_range(&snr)?;
    let seed = pick(args.seed, file.seed, 0);
    let attention = parse_on_off(&pick(args.attention, file.attention, "on".into()), "attention")?;
    let preset = pick(args.preset, file.preset, "full".to_string());
    let max_frames = args.max_frames.or(file.max_frames);
    let depth_scale = pick(args.depth_scale, file.depth_scale, 5000.0);

    let mut codec_cfg = match preset.as_str() {
        "full" => CodecConfig::default(),
        "tiny" => CodecConfig::tiny(pick(args.codebook_size, file.codebook_size, 64)),
        other => {
            return Err(CliError::Config(format!(
                "--preset must be 'full' or 'tiny', got '{other}'"
            )))
        }
    };
    if preset == "full" {
        if let Some(k) = args.codebook_size.or(file.codebook_size) {
            codec_cfg.codebook_size = k;
        }
    }
    codec_cfg.attention = attention;

    let loaded = load_input(&input, seed, max_frames, depth_scale)?;
    let frames = frames_to_tensors(&loaded.rgb);
    if frames.is_empty() {
        return Err(CliError::Config("input produced no RGB frames".into()));
    }

    std::fs::create_dir_all(&out_dir)
        .map_err(|e| CliError::Config(format!("cannot create {}: {e}", out_dir.display())))?;
    let log_path = out_dir.join("train_log.csv");
    let mut log = std::fs::File::create(&log_path)?;

    let mut model = CodecModel::new(codec_cfg, seed)?;
    let train_cfg = TrainConfig {
        epochs,
        lr,
        snr_min_db,
        snr_max_db,
        batch_size,
        seed,
    };
    log::info!(
        "training {} epochs on {} frames, snr [{snr_min_db}, {snr_max_db}] dB",
        epochs,
        frames.len()
    );
    let report = train::train(&mut model, &frames, &train_cfg, Some(&mut log))?;

    let last = report.rows.last().expect("epochs >= 1 produced rows");
    if !last.loss.is_finite() {
        return Err(CliError::Runtime(format!(
            "training diverged: epoch {} loss {}; see {}",
            last.epoch,
            last.loss,
            log_path.display()
        )));
    }

    let ckpt_path = out_dir.join("codec.slnn");
    let hash = checkpoint::save_file(&model, &ckpt_path)?;
    let hash_hex: String = hash.iter().map(|b| format!("{b:02x}")).collect();

    println!("checkpoint {}", ckpt_path.display());
    println!("sha256 {hash_hex}");
    println!("final_psnr_db {:.4}", report.final_psnr());
    Ok(())
}
