//! `scmap ablate-snr`: reconstruction quality of the SNR-gated model
//! and its gateless ablation across the evaluation SNR grid, written as
//! a plotting-ready CSV.

use std::io::Write;
use std::path::PathBuf;

use clap::Args as ClapArgs;
use serde::Deserialize;

use scmap_core::codec::{train::eval_analog_psnr, CodecModel};

use crate::config::{load_overrides, pick, require};
use crate::error::{CliError, CliResult};
use crate::input::{frames_to_tensors, load_input, parse_input};

use super::session_io::load_model;

pub const CSV_HEADER: &str = "variant,snr_db,psnr_mean,psnr_std";

#[derive(Debug, ClapArgs)]
pub struct Args {
    /// JSON file holding these same keys; flags win.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Checkpoint of the SNR-gated model.
    #[arg(long)]
    model: Option<PathBuf>,
    /// Checkpoint of the gateless ablation.
    #[arg(long)]
    model_no_attention: Option<PathBuf>,
    /// Evaluation frame source.
    #[arg(long)]
    input: Option<String>,
    /// Output CSV path.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Noise draws averaged per frame and SNR.
    #[arg(long)]
    seeds: Option<u64>,
    /// Comma-separated evaluation SNRs in dB.
    #[arg(long)]
    snrs: Option<String>,
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
    model_no_attention: Option<PathBuf>,
    input: Option<String>,
    out: Option<PathBuf>,
    seeds: Option<u64>,
    snrs: Option<String>,
    seed: Option<u64>,
    max_frames: Option<usize>,
    depth_scale: Option<f64>,
}

fn parse_snr_grid(s: &str) -> CliResult<Vec<f64>> {
    let grid: Result<Vec<f64>, _> = s.split(',').map(|p| p.trim().parse::<f64>()).collect();
    let grid = grid.map_err(|_| CliError::Config(format!("bad SNR grid '{s}'")))?;
    if grid.is_empty() {
        return Err(CliError::Config("SNR grid is empty".into()));
    }
    Ok(grid)
}

/// Mean PSNR per (frame, noise draw) sample plus the sample standard
/// deviation (0 when only one sample exists).
fn evaluate(
    model: &CodecModel,
    frames: &[scmap_nn::Tensor],
    snr_db: f64,
    seeds: u64,
) -> CliResult<(f64, f64)> {
    let mut samples = Vec::with_capacity(frames.len() * seeds as usize);
    for (fi, frame) in frames.iter().enumerate() {
        for s in 0..seeds {
            // Same noise seeds for both variants so the comparison is paired.
            let noise_seed = (fi as u64) * 1_000_003 + s;
            samples.push(eval_analog_psnr(model, frame, snr_db, noise_seed)?);
        }
    }
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let std = if samples.len() > 1 {
        (samples.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    Ok((mean, std))
}

pub fn run(args: Args) -> CliResult<()> {
    let file: FileCfg = load_overrides(args.config.as_ref())?;

    let model_path = require(args.model, file.model, "model")?;
    let ablation_path = require(args.model_no_attention, file.model_no_attention, "model-no-attention")?;
    let input = parse_input(&require(args.input, file.input, "input")?)?;
    let out_path = require(args.out, file.out, "out")?;
    let seeds = pick(args.seeds, file.seeds, 3).max(1);
    let grid = parse_snr_grid(&pick(args.snrs, file.snrs, "0,5,10,15,20".into()))?;
    let seed = pick(args.seed, file.seed, 0);
    let max_frames = args.max_frames.or(file.max_frames);
    let depth_scale = pick(args.depth_scale, file.depth_scale, 5000.0);

    let (attention_model, _) = load_model(&model_path)?;
    let (ablation_model, _) = load_model(&ablation_path)?;
    if !attention_model.config.attention {
        return Err(CliError::Config(format!(
            "--model {} was trained without the SNR gate; pass it as --model-no-attention",
            model_path.display()
        )));
    }
    if ablation_model.config.attention {
        return Err(CliError::Config(format!(
            "--model-no-attention {} was trained with the SNR gate enabled",
            ablation_path.display()
        )));
    }

    let loaded = load_input(&input, seed, max_frames, depth_scale)?;
    let frames = frames_to_tensors(&loaded.rgb);
    if frames.is_empty() {
        return Err(CliError::Config("input produced no RGB frames".into()));
    }

    if let Some(dir) = out_path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)
            .map_err(|e| CliError::Config(format!("cannot create {}: {e}", dir.display())))?;
    }
    let mut out = std::fs::File::create(&out_path)?;
    writeln!(out, "{CSV_HEADER}")?;
    for (name, model) in [("attention", &attention_model), ("no-attention", &ablation_model)] {
        for &snr in &grid {
            let (mean, std) = evaluate(model, &frames, snr, seeds)?;
            writeln!(out, "{name},{snr},{mean:.6},{std:.6}")?;
            log::info!("{name} @ {snr} dB: {mean:.3} +/- {std:.3} dB");
        }
    }
    println!("wrote {}", out_path.display());
    Ok(())
}
