//! `scmap eval-traj`: absolute and relative pose error between two
//! trajectory files in TUM text format.

use std::path::PathBuf;

use clap::Args as ClapArgs;
use serde::Deserialize;
use serde_json::json;

use scmap_core::metrics::{ate, rpe, Trajectory};

use crate::config::{load_overrides, pick, require};
use crate::error::{CliError, CliResult};
use crate::report::{print_json, write_json};

#[derive(Debug, ClapArgs)]
pub struct Args {
    /// JSON file holding these same keys; flags win.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Estimated trajectory (TUM format).
    #[arg(long)]
    est: Option<PathBuf>,
    /// Reference trajectory (TUM format).
    #[arg(long = "ref")]
    reference: Option<PathBuf>,
    /// Pose association tolerance in seconds.
    #[arg(long)]
    tol: Option<f64>,
    /// Frame separation for the relative error.
    #[arg(long)]
    delta: Option<usize>,
    /// Report path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileCfg {
    est: Option<PathBuf>,
    #[serde(rename = "ref")]
    reference: Option<PathBuf>,
    tol: Option<f64>,
    delta: Option<usize>,
    out: Option<PathBuf>,
}

fn load_trajectory(path: &PathBuf) -> CliResult<Trajectory> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    // Parse errors keep their line numbers; the file exists, so this is
    // bad data rather than bad invocation.
    Trajectory::parse_tum(&text, &path.display().to_string())
        .map_err(|e| CliError::Runtime(e.to_string()))
}

pub fn run(args: Args) -> CliResult<()> {
    let file: FileCfg = load_overrides(args.config.as_ref())?;

    let est_path = require(args.est, file.est, "est")?;
    let ref_path = require(args.reference, file.reference, "ref")?;
    let tol = pick(args.tol, file.tol, 0.02);
    let delta = pick(args.delta, file.delta, 1).max(1);
    let out = args.out.or(file.out);

    let estimate = load_trajectory(&est_path)?;
    let reference = load_trajectory(&ref_path)?;

    let a = ate(&reference, &estimate, tol).map_err(|e| CliError::Runtime(e.to_string()))?;
    let r = rpe(&reference, &estimate, tol, delta).map_err(|e| CliError::Runtime(e.to_string()))?;

    let report = json!({
        "ate": {
            "rmse": a.rmse,
            "mean": a.mean,
            "max": a.max,
            "pairs": a.pairs,
        },
        "rpe": {
            "rmse": r.rmse,
            "mean": r.mean,
            "max": r.max,
            "count": r.count,
        },
    });
    match out {
        Some(path) => {
            write_json(&path, &report)?;
            println!("wrote {}", path.display());
        }
        None => print_json(&report)?,
    }
    Ok(())
}
