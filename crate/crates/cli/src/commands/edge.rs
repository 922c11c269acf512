//! `scmap edge`: encode an input sequence and stream it to a sink,
//! either a TCP peer, a capture file, or stdout for piping.

use std::io::Write;
use std::net::TcpStream;
use std::path::PathBuf;
use std::time::Duration;

use clap::Args as ClapArgs;
use serde::Deserialize;
use serde_json::json;

use scmap_core::transport::{edge_session, EdgeConfig};

use crate::config::{load_overrides, parse_on_off, pick, require};
use crate::error::{CliError, CliResult};
use crate::input::{load_input, parse_input};
use crate::report::write_json;

use super::session_io::{edge_stats_value, parse_mode};

#[derive(Debug, ClapArgs)]
pub struct Args {
    /// JSON file holding these same keys; flags win.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Codec checkpoint.
    #[arg(long)]
    model: Option<PathBuf>,
    /// Frame source.
    #[arg(long)]
    input: Option<String>,
    /// Wire sink: tcp://host:port, file:path, or "-" for stdout.
    #[arg(long)]
    connect: Option<String>,
    /// digital or analog.
    #[arg(long)]
    mode: Option<String>,
    /// Channel quality announced to the receiver, in dB.
    #[arg(long)]
    snr: Option<f64>,
    /// Apply channel noise to analog symbols before framing (on/off).
    #[arg(long)]
    noise: Option<String>,
    #[arg(long)]
    noise_seed: Option<u64>,
    /// Synthetic input generation seed.
    #[arg(long)]
    seed: Option<u64>,
    /// TCP connection attempts before giving up.
    #[arg(long)]
    retries: Option<u32>,
    #[arg(long)]
    retry_delay_ms: Option<u64>,
    /// Stats JSON path; defaults to stdout (stderr when the wire goes
    /// to stdout).
    #[arg(long)]
    out: Option<PathBuf>,
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
    connect: Option<String>,
    mode: Option<String>,
    snr: Option<f64>,
    noise: Option<String>,
    noise_seed: Option<u64>,
    seed: Option<u64>,
    retries: Option<u32>,
    retry_delay_ms: Option<u64>,
    out: Option<PathBuf>,
    max_frames: Option<usize>,
    depth_scale: Option<f64>,
}

enum Sink {
    Stream(Box<dyn Write>),
    Stdout,
}

fn connect_tcp(addr: &str, retries: u32, delay: Duration) -> CliResult<TcpStream> {
    let mut last = None;
    for attempt in 0..retries.max(1) {
        if attempt > 0 {
            std::thread::sleep(delay);
        }
        match TcpStream::connect(addr) {
            Ok(s) => return Ok(s),
            Err(e) => last = Some(e),
        }
    }
    Err(CliError::Runtime(format!(
        "cannot connect to {addr} after {} attempts: {}",
        retries.max(1),
        last.expect("at least one attempt"),
    )))
}

fn open_sink(spec: &str, retries: u32, delay: Duration) -> CliResult<Sink> {
    if spec == "-" {
        return Ok(Sink::Stdout);
    }
    if let Some(addr) = spec.strip_prefix("tcp://") {
        let stream = connect_tcp(addr, retries, delay)?;
        return Ok(Sink::Stream(Box::new(stream)));
    }
    if let Some(path) = spec.strip_prefix("file:") {
        let file = std::fs::File::create(path)
            .map_err(|e| CliError::Config(format!("cannot create {path}: {e}")))?;
        return Ok(Sink::Stream(Box::new(file)));
    }
    Err(CliError::Config(format!(
        "bad sink '{spec}': expected tcp://host:port, file:path, or -"
    )))
}

pub fn run(args: Args) -> CliResult<()> {
    let file: FileCfg = load_overrides(args.config.as_ref())?;

    let model_path = require(args.model, file.model, "model")?;
    let input = parse_input(&require(args.input, file.input, "input")?)?;
    let connect = require(args.connect, file.connect, "connect")?;
    let mode = parse_mode(&pick(args.mode, file.mode, "digital".into()))?;
    let snr_db = pick(args.snr, file.snr, 20.0);
    let noise = parse_on_off(&pick(args.noise, file.noise, "on".into()), "noise")?;
    let noise_seed = pick(args.noise_seed, file.noise_seed, 0);
    let seed = pick(args.seed, file.seed, 0);
    let retries = pick(args.retries, file.retries, 10);
    let delay = Duration::from_millis(pick(args.retry_delay_ms, file.retry_delay_ms, 300));
    let out = args.out.or(file.out);
    let max_frames = args.max_frames.or(file.max_frames);
    let depth_scale = pick(args.depth_scale, file.depth_scale, 5000.0);

    let (model, hash) = super::session_io::load_model(&model_path)?;
    let loaded = load_input(&input, seed, max_frames, depth_scale)?;

    let cfg = EdgeConfig {
        mode,
        snr_db,
        apply_noise: noise,
        noise_seed,
    };

    let wire_is_stdout = connect == "-";
    let stats = match open_sink(&connect, retries, delay)? {
        Sink::Stream(mut w) => edge_session(&model, hash, &loaded.rgb, &loaded.depth, &cfg, &mut w)?,
        Sink::Stdout => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            edge_session(&model, hash, &loaded.rgb, &loaded.depth, &cfg, &mut lock)?
        }
    };

    let report = json!({
        "mode": format!("{mode:?}").to_lowercase(),
        "snr_db": snr_db,
        "connect": connect,
        "edge": edge_stats_value(&stats),
    });
    match &out {
        Some(path) => {
            write_json(path, &report)?;
            eprintln!("wrote {}", path.display());
        }
        None if wire_is_stdout => eprintln!("{}", serde_json::to_string_pretty(&report)?),
        None => println!("{}", serde_json::to_string_pretty(&report)?),
    }

    if let Some(err) = stats.error {
        return Err(CliError::Runtime(format!("session ended early: {err}")));
    }
    Ok(())
}
