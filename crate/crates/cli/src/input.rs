//! Frame sources behind the `--input` flag.
//!
//! Three kinds: a TUM-layout dataset directory, the synthetic box-room
//! scene, and a trivial constant-color set for training smoke runs.
//! Everything a session needs rides along: frames, poses, intrinsics,
//! palette, and (synthetic only) the oracle voxel map.

use std::path::PathBuf;
use std::str::FromStr;

use scmap_core::dataio::{synth_generate, tum_load, OracleMap, SyntheticScene};
use scmap_core::mapping::{CameraIntrinsics, LabelPalette};
use scmap_core::metrics::Trajectory;
use scmap_core::types::{DepthFrame, Pose, RgbFrame};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum InputSpec {
    Tum(PathBuf),
    Synth { width: usize, height: usize, frames: usize },
    Const { width: usize, height: usize, frames: usize },
}

fn parse_dims(s: &str, allow_default_count: bool) -> Result<(usize, usize, usize), String> {
    let parts: Vec<&str> = s.split('x').collect();
    let dim = |p: &str| -> Result<usize, String> {
        p.parse::<usize>()
            .ok()
            .filter(|&v| v > 0)
            .ok_or_else(|| format!("'{p}' is not a positive integer"))
    };
    match parts.as_slice() {
        [w, h, n] => Ok((dim(w)?, dim(h)?, dim(n)?)),
        [w, h] if allow_default_count => Ok((dim(w)?, dim(h)?, 1)),
        _ => Err(format!("expected WxHxN, got '{s}'")),
    }
}

impl FromStr for InputSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.split_once(':') {
            Some(("tum", dir)) if !dir.is_empty() => Ok(InputSpec::Tum(PathBuf::from(dir))),
            Some(("synth", dims)) => {
                let (width, height, frames) = parse_dims(dims, false)?;
                Ok(InputSpec::Synth { width, height, frames })
            }
            Some(("const", dims)) => {
                let (width, height, frames) = parse_dims(dims, true)?;
                Ok(InputSpec::Const { width, height, frames })
            }
            _ => Err(format!(
                "unknown input '{s}'; use tum:<dir>, synth:<WxHxN>, or const:<WxH[xN]>"
            )),
        }
    }
}

pub struct LoadedInput {
    pub rgb: Vec<RgbFrame>,
    pub depth: Vec<DepthFrame>,
    pub trajectory: Trajectory,
    pub intrinsics: CameraIntrinsics,
    pub palette: LabelPalette,
    pub oracle: Option<OracleMap>,
}

pub fn load_input(
    spec: &InputSpec,
    seed: u64,
    max_frames: Option<usize>,
    depth_scale: f64,
) -> CliResult<LoadedInput> {
    match spec {
        InputSpec::Synth { width, height, frames } => {
            let n = max_frames.map_or(*frames, |m| m.min(*frames));
            let scene = SyntheticScene::box_room(*width, *height, n)?;
            let data = synth_generate(&scene, n, seed)?;
            Ok(LoadedInput {
                rgb: data.rgb,
                depth: data.depth,
                trajectory: data.trajectory,
                intrinsics: scene.intrinsics.clone(),
                palette: scene.palette.clone(),
                oracle: Some(data.oracle),
            })
        }
        InputSpec::Const { width, height, frames } => {
            let n = max_frames.map_or(*frames, |m| m.min(*frames));
            let rgb = (0..n)
                .map(|i| RgbFrame {
                    timestamp: i as f64 * 0.1,
                    width: *width,
                    height: *height,
                    data: vec![0.5; 3 * width * height],
                })
                .collect();
            Ok(LoadedInput {
                rgb,
                depth: Vec::new(),
                trajectory: Trajectory::new(
                    (0..n).map(|i| Pose::identity(i as f64 * 0.1)).collect(),
                ),
                intrinsics: CameraIntrinsics::scaled_to(*width, *height),
                palette: LabelPalette::standard(6)?,
                oracle: None,
            })
        }
        InputSpec::Tum(dir) => {
            let seq = tum_load(dir, depth_scale)?;
            let n_rgb = max_frames.map_or(seq.rgb.len(), |m| m.min(seq.rgb.len()));
            let n_depth = max_frames.map_or(seq.depth.len(), |m| m.min(seq.depth.len()));
            let mut rgb = Vec::with_capacity(n_rgb);
            for i in 0..n_rgb {
                rgb.push(seq.load_rgb(i)?);
            }
            let mut depth = Vec::with_capacity(n_depth);
            for i in 0..n_depth {
                depth.push(seq.load_depth(i)?);
            }
            let intrinsics = match rgb.first() {
                Some(f) if (f.width, f.height) != (640, 480) => {
                    CameraIntrinsics::scaled_to(f.width, f.height)
                }
                _ => CameraIntrinsics::tum_default(),
            };
            Ok(LoadedInput {
                rgb,
                depth,
                trajectory: seq.groundtruth,
                intrinsics,
                palette: LabelPalette::standard(6)?,
                oracle: None,
            })
        }
    }
}

/// RGB frames as training tensors.
pub fn frames_to_tensors(rgb: &[RgbFrame]) -> Vec<scmap_nn::Tensor> {
    rgb.iter().map(|f| f.to_tensor()).collect()
}

pub fn parse_input(s: &str) -> CliResult<InputSpec> {
    InputSpec::from_str(s).map_err(CliError::Config)
}
