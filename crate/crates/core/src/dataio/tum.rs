//! TUM RGB-D sequence loading: timestamped file indices plus the
//! ground-truth trajectory, all from the standard three-file layout.

use crate::error::{CoreError, Result};
use crate::metrics::trajectory::Trajectory;
use crate::types::{DepthFrame, RgbFrame};
use std::path::{Path, PathBuf};

/// One `timestamp path` entry from rgb.txt or depth.txt.
#[derive(Debug, Clone, PartialEq)]
pub struct IndexEntry {
    pub timestamp: f64,
    pub path: PathBuf,
}

/// A loaded sequence directory. Indices are sorted by timestamp and
/// every referenced file existed when the index was built.
#[derive(Debug, Clone)]
pub struct TumSequence {
    pub base_dir: PathBuf,
    pub rgb: Vec<IndexEntry>,
    pub depth: Vec<IndexEntry>,
    pub groundtruth: Trajectory,
    pub depth_scale: f64,
}

fn parse_index(text: &str, base: &Path, source_name: &str) -> Vec<IndexEntry> {
    let mut entries = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut parts = line.split_whitespace();
        let (Some(ts), Some(rel)) = (parts.next(), parts.next()) else {
            log::warn!("{source_name}:{}: short line skipped", lineno + 1);
            continue;
        };
        let Ok(timestamp) = ts.parse::<f64>() else {
            log::warn!("{source_name}:{}: bad timestamp '{ts}' skipped", lineno + 1);
            continue;
        };
        if !timestamp.is_finite() {
            log::warn!("{source_name}:{}: non-finite timestamp skipped", lineno + 1);
            continue;
        }
        let path = base.join(rel);
        if !path.exists() {
            log::warn!(
                "{source_name}:{}: missing file {} skipped",
                lineno + 1,
                path.display()
            );
            continue;
        }
        entries.push(IndexEntry { timestamp, path });
    }
    entries.sort_by(|a, b| a.timestamp.total_cmp(&b.timestamp));
    entries
}

/// Loads a TUM layout directory (rgb.txt, depth.txt, groundtruth.txt).
/// Malformed index lines and entries whose files are absent are logged
/// and skipped; a missing index file is fatal.
pub fn tum_load(dir: &Path, depth_scale: f64) -> Result<TumSequence> {
    let read = |name: &str| -> Result<String> {
        let path = dir.join(name);
        if !path.exists() {
            return Err(CoreError::MissingFile(path.display().to_string()));
        }
        Ok(std::fs::read_to_string(&path)?)
    };
    let rgb = parse_index(&read("rgb.txt")?, dir, "rgb.txt");
    let depth = parse_index(&read("depth.txt")?, dir, "depth.txt");
    let groundtruth = Trajectory::parse_tum(&read("groundtruth.txt")?, "groundtruth.txt")?;
    Ok(TumSequence {
        base_dir: dir.to_path_buf(),
        rgb,
        depth,
        groundtruth,
        depth_scale,
    })
}

impl TumSequence {
    /// Decodes the i-th RGB image, stamped with its index timestamp.
    pub fn load_rgb(&self, i: usize) -> Result<RgbFrame> {
        let e = self
            .rgb
            .get(i)
            .ok_or_else(|| CoreError::InvalidInput(format!("rgb index {i} out of range")))?;
        super::image::read_ppm(&e.path, e.timestamp)
    }

    /// Decodes the i-th depth image, stamped with its index timestamp.
    pub fn load_depth(&self, i: usize) -> Result<DepthFrame> {
        let e = self
            .depth
            .get(i)
            .ok_or_else(|| CoreError::InvalidInput(format!("depth index {i} out of range")))?;
        super::image::read_pgm16(&e.path, e.timestamp, self.depth_scale)
    }
}
